"""Encode raw samples into the embedding JSONL interchange format.

The writer emits the format consumed by the protosarc engine: a manifest
line followed by one record object per line with keys exactly

    id, text, ancestor, y, e_ct, e_st_ep, e_st_ip, e_st_full, z_ep, z_ip, z_full

This module intentionally re-implements the format rather than importing the
engine: the two components share only the documented wire format.
"""

from __future__ import annotations

import json

from .encoders import resolve_semantic_encoder, resolve_sentiment_encoder
from .ingest import RawSample
from .lexicon import load_lexicon
from .splitter import split_explicit_implicit

ANCESTOR_SEPARATOR = "\n"


def encode_samples(samples, semantic_encoder_id: str, sentiment_encoder_id: str,
                   lexicon_id: str = "builtin", use_ancestor: bool = True):
    """Returns (manifest dict, list of record dicts)."""
    lexicon = load_lexicon(lexicon_id)
    semantic = resolve_semantic_encoder(semantic_encoder_id)
    sentiment = resolve_sentiment_encoder(sentiment_encoder_id, lexicon=lexicon)

    semantic_inputs = []
    explicit_parts, implicit_parts = [], []
    for s in samples:
        if use_ancestor and s.ancestor:
            semantic_inputs.append(f"{s.ancestor}{ANCESTOR_SEPARATOR}{s.text}")
        else:
            semantic_inputs.append(s.text)
        ep, ip = split_explicit_implicit(s.text, lexicon)
        explicit_parts.append(ep)
        implicit_parts.append(ip)

    e_ct = semantic.encode(semantic_inputs)
    e_ep = sentiment.encode(explicit_parts)
    e_ip = sentiment.encode(implicit_parts)
    e_full = sentiment.encode([s.text for s in samples])
    z_ep = sentiment.predict_polarity(explicit_parts)
    z_full = sentiment.predict_polarity([s.text for s in samples])

    records = []
    for i, s in enumerate(samples):
        zep = int(z_ep[i])
        zip_ = zep if s.y == 0 else 1 - zep  # implicit labeled oppositely for sarcasm
        records.append({
            "id": s.id,
            "text": s.text,
            "ancestor": s.ancestor,
            "y": int(s.y),
            "e_ct": [float(x) for x in e_ct[i]],
            "e_st_ep": [float(x) for x in e_ep[i]],
            "e_st_ip": [float(x) for x in e_ip[i]],
            "e_st_full": [float(x) for x in e_full[i]],
            "z_ep": zep,
            "z_ip": zip_,
            "z_full": int(z_full[i]),
        })

    manifest = {
        "d_s": int(semantic.dim),
        "d_m": int(sentiment.dim),
        "dataset": "unnamed",
        "split": "unnamed",
        "semantic_encoder": semantic.identifier,
        "sentiment_encoder": f"{sentiment.identifier}+lexicon:{lexicon.identifier}",
        "encoding": "plain",
    }
    return manifest, records


def write_embedding_file(path, manifest: dict, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(manifest) + "\n")
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def embed_to_file(samples, out_path, semantic_encoder_id: str,
                  sentiment_encoder_id: str, lexicon_id: str = "builtin",
                  use_ancestor: bool = True, dataset_name: str = "unnamed",
                  split_name: str = "unnamed") -> dict:
    manifest, records = encode_samples(samples, semantic_encoder_id,
                                       sentiment_encoder_id, lexicon_id,
                                       use_ancestor)
    manifest["dataset"] = dataset_name
    manifest["split"] = split_name
    write_embedding_file(out_path, manifest, records)
    return manifest


__all__ = ["RawSample", "encode_samples", "write_embedding_file", "embed_to_file",
           "ANCESTOR_SEPARATOR"]
