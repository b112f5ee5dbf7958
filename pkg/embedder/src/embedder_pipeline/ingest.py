"""Raw benchmark dataset readers producing normalized samples.

Supported layouts:

* twitter      one TSV file, columns id <TAB> label <TAB> text, an optional
               header row; label is 1/0 or sarcasm/not_sarcasm.
* sarcasm_v2   the published CSV with header
               "Corpus,Label,ID,Quote Text,Response Text"; the response text
               is the sample, the quote text its ancestor.
* sarc         a directory holding comments.json (id -> {"text": ...}) and a
               balanced CSV (train-balanced.csv style) with rows
               "ancestor ids|response ids|labels", ids space-separated; each
               response becomes a sample with the nearest (last) ancestor
               attached.

Malformed rows are skipped and counted; the count is reported as a warning.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

DATASETS = ("sarc", "twitter", "sarcasm_v2")

_LABELS = {"1": 1, "0": 0, "sarcasm": 1, "sarc": 1, "not_sarcasm": 0,
           "notsarc": 0, "nonsarcastic": 0, "sarcastic": 1}


@dataclass
class RawSample:
    id: str
    text: str
    ancestor: str | None
    y: int


def _parse_label(raw: str):
    return _LABELS.get(raw.strip().lower())


def _ingest_twitter(path) -> tuple:
    samples, skipped = [], 0
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if i == 0 and parts[0].strip().lower() in ("id", "tweet_id"):
                continue
            if len(parts) < 3:
                skipped += 1
                continue
            label = _parse_label(parts[1])
            text = parts[2].strip()
            if label is None or not text:
                skipped += 1
                continue
            samples.append(RawSample(id=parts[0].strip(), text=text,
                                     ancestor=None, y=label))
    return samples, skipped


def _ingest_sarcasm_v2(path) -> tuple:
    samples, skipped = [], 0
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for i, row in enumerate(reader):
            label = _parse_label(row.get("Label", "") or "")
            text = (row.get("Response Text") or "").strip()
            quote = (row.get("Quote Text") or "").strip() or None
            rid = (row.get("ID") or f"row{i}").strip()
            if label is None or not text:
                skipped += 1
                continue
            samples.append(RawSample(id=rid, text=text, ancestor=quote, y=label))
    return samples, skipped


def _ingest_sarc(path) -> tuple:
    root = Path(path)
    comments_file = root / "comments.json"
    if not comments_file.exists():
        raise FileNotFoundError(f"SARC layout needs {comments_file}")
    csv_candidates = sorted(root.glob("*balanced.csv")) or sorted(root.glob("*.csv"))
    if not csv_candidates:
        raise FileNotFoundError(f"no balanced CSV found under {root}")
    with open(comments_file, "r", encoding="utf-8") as fh:
        comments = json.load(fh)

    samples, skipped = [], 0
    with open(csv_candidates[0], "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            fields = line.split("|")
            if len(fields) != 3:
                skipped += 1
                continue
            ancestors, responses, labels = (f.split() for f in fields)
            if len(responses) != len(labels) or not ancestors:
                skipped += 1
                continue
            nearest = comments.get(ancestors[-1], {}).get("text")
            for rid, lab in zip(responses, labels):
                label = _parse_label(lab)
                text = comments.get(rid, {}).get("text", "").strip()
                if label is None or not text:
                    skipped += 1
                    continue
                samples.append(RawSample(id=rid, text=text, ancestor=nearest, y=label))
    return samples, skipped


def ingest(dataset_name: str, path) -> list:
    """Read one raw dataset into normalized samples."""
    if dataset_name not in DATASETS:
        raise ValueError(f"unknown dataset {dataset_name!r}; expected one of {DATASETS}")
    reader = {"twitter": _ingest_twitter, "sarcasm_v2": _ingest_sarcasm_v2,
              "sarc": _ingest_sarc}[dataset_name]
    samples, skipped = reader(path)
    if skipped:
        warnings.warn(f"{dataset_name}: skipped {skipped} malformed row(s)")
    if not samples:
        raise ValueError(f"{dataset_name}: no usable samples in {path}")
    return samples
