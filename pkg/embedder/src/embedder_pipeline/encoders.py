"""Encoder registry: deterministic offline encoders plus transformer-backed ones.

Offline family (no downloads, fully deterministic, used by tests/fixtures):
  hash-semantic-<dim>    seeded token-hash random projections, unit norm
  hash-sentiment-<dim>   same embedding scheme; binary polarity from the
                         lexicon opinion-word balance

Transformer family (requires the models to be resolvable locally or via hub):
  sbert:<name> | all-mpnet-base-v2      sentence-transformers embeddings
  hf-cls:<name> | roberta-large         first-position final-hidden-state vector
  hf-sentiment:<name> | siebert         fine-tuned binary sentiment model:
                                        first-position vector + predicted label

All encoders are deterministic in inference mode: identical text gives
identical vectors.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .lexicon import Lexicon, builtin_lexicon
from .splitter import tokenize

SIEBERT_MODEL = "siebert/sentiment-roberta-large-english"


class EncoderError(RuntimeError):
    pass


def _token_vector(token: str, dim: int, salt: str) -> np.ndarray:
    digest = hashlib.md5(f"{salt}:{token.lower()}".encode("utf-8")).digest()
    seed = int.from_bytes(digest[:8], "little")
    return np.random.default_rng(seed).normal(0.0, 1.0, dim)


class HashTextEncoder:
    """Average of seeded per-token Gaussian vectors, normalized to unit length.

    A stand-in for a pretrained encoder: deterministic, network-free, and
    similar texts (shared tokens) land near each other.
    """

    def __init__(self, dim: int, salt: str, lexicon: Lexicon | None = None):
        self.dim = dim
        self.salt = salt
        self.lexicon = lexicon or builtin_lexicon()
        self.identifier = f"hash-{salt}-{dim}"
        self._empty = _token_vector("", dim, salt)

    def encode(self, texts) -> np.ndarray:
        out = np.empty((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            tokens = tokenize(text)
            if tokens:
                v = np.mean([_token_vector(t, self.dim, self.salt) for t in tokens],
                            axis=0)
            else:
                v = self._empty
            norm = float(np.linalg.norm(v))
            out[i] = v / norm if norm > 0 else v
        return out

    def predict_polarity(self, texts) -> np.ndarray:
        return np.array([1 if self.lexicon.score(tokenize(t)) > 0 else 0
                         for t in texts], dtype=np.int64)


class SbertEncoder:
    def __init__(self, model_name: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as e:
            raise EncoderError("sentence-transformers is not installed; "
                               "install the [hf] extra") from e
        try:
            self._model = SentenceTransformer(model_name)
        except Exception as e:
            raise EncoderError(f"cannot resolve sentence encoder {model_name!r}: {e}") from e
        self.identifier = model_name
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts) -> np.ndarray:
        return np.asarray(self._model.encode(list(texts), convert_to_numpy=True,
                                             show_progress_bar=False),
                          dtype=np.float64)


class HFClsEncoder:
    """First-position final-hidden-state vector of a causal-free LM encoder."""

    def __init__(self, model_name: str):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as e:
            raise EncoderError("transformers/torch are not installed; "
                               "install the [hf] extra") from e
        try:
            self._tok = AutoTokenizer.from_pretrained(model_name)
            self._model = AutoModel.from_pretrained(model_name)
        except Exception as e:
            raise EncoderError(f"cannot resolve encoder {model_name!r}: {e}") from e
        self._torch = torch
        self._model.eval()
        self.identifier = model_name
        self.dim = int(self._model.config.hidden_size)
        self.truncated = 0

    def encode(self, texts) -> np.ndarray:
        torch = self._torch
        vecs = []
        with torch.no_grad():
            for i in range(0, len(texts), 16):
                chunk = list(texts[i:i + 16])
                full = self._tok(chunk, truncation=False)["input_ids"]
                enc = self._tok(chunk, truncation=True, padding=True,
                                return_tensors="pt")
                self.truncated += sum(len(ids) > enc["input_ids"].shape[1]
                                      for ids in full)
                hidden = self._model(**enc).last_hidden_state
                vecs.append(hidden[:, 0, :].numpy())
        return np.asarray(np.vstack(vecs), dtype=np.float64)


class HFSentimentEncoder:
    """Binary sentiment model: first-position embedding plus hard prediction."""

    def __init__(self, model_name: str = SIEBERT_MODEL):
        try:
            import torch
            from transformers import (AutoModelForSequenceClassification,
                                      AutoTokenizer)
        except ImportError as e:
            raise EncoderError("transformers/torch are not installed; "
                               "install the [hf] extra") from e
        try:
            self._tok = AutoTokenizer.from_pretrained(model_name)
            self._model = AutoModelForSequenceClassification.from_pretrained(
                model_name, output_hidden_states=True)
        except Exception as e:
            raise EncoderError(f"cannot resolve sentiment model {model_name!r}: {e}") from e
        self._torch = torch
        self._model.eval()
        self.identifier = model_name
        self.dim = int(self._model.config.hidden_size)
        labels = {v.upper(): k for k, v in self._model.config.id2label.items()}
        self._positive_id = labels.get("POSITIVE", 1)

    def _run(self, texts):
        torch = self._torch
        vecs, preds = [], []
        with torch.no_grad():
            for i in range(0, len(texts), 16):
                enc = self._tok(list(texts[i:i + 16]), truncation=True,
                                padding=True, return_tensors="pt")
                out = self._model(**enc)
                vecs.append(out.hidden_states[-1][:, 0, :].numpy())
                preds.append((out.logits.argmax(dim=-1) == self._positive_id)
                             .long().numpy())
        return (np.asarray(np.vstack(vecs), dtype=np.float64),
                np.concatenate(preds).astype(np.int64))

    def encode(self, texts) -> np.ndarray:
        return self._run(texts)[0]

    def predict_polarity(self, texts) -> np.ndarray:
        return self._run(texts)[1]


def resolve_semantic_encoder(identifier: str):
    if identifier.startswith("hash-semantic-"):
        return HashTextEncoder(dim=int(identifier.rsplit("-", 1)[1]), salt="semantic")
    if identifier.startswith("sbert:"):
        return SbertEncoder(identifier.split(":", 1)[1])
    if identifier == "all-mpnet-base-v2":
        return SbertEncoder("sentence-transformers/all-mpnet-base-v2")
    if identifier.startswith("hf-cls:"):
        return HFClsEncoder(identifier.split(":", 1)[1])
    if identifier == "roberta-large":
        return HFClsEncoder("roberta-large")
    raise EncoderError(f"unknown semantic encoder id {identifier!r}")


def resolve_sentiment_encoder(identifier: str, lexicon: Lexicon | None = None):
    if identifier.startswith("hash-sentiment-"):
        return HashTextEncoder(dim=int(identifier.rsplit("-", 1)[1]),
                               salt="sentiment", lexicon=lexicon)
    if identifier in ("siebert", SIEBERT_MODEL):
        return HFSentimentEncoder(SIEBERT_MODEL)
    if identifier.startswith("hf-sentiment:"):
        return HFSentimentEncoder(identifier.split(":", 1)[1])
    raise EncoderError(f"unknown sentiment encoder id {identifier!r}")
