"""Raw sarcasm datasets to embedding JSONL for the protosarc engine."""

from .encoders import (EncoderError, HashTextEncoder, resolve_semantic_encoder,
                       resolve_sentiment_encoder)
from .ingest import DATASETS, RawSample, ingest
from .lexicon import Lexicon, builtin_lexicon, load_lexicon
from .pipeline import embed_to_file, encode_samples, write_embedding_file
from .splitter import split_explicit_implicit, tokenize

__all__ = [
    "EncoderError", "HashTextEncoder", "resolve_semantic_encoder",
    "resolve_sentiment_encoder", "DATASETS", "RawSample", "ingest",
    "Lexicon", "builtin_lexicon", "load_lexicon",
    "embed_to_file", "encode_samples", "write_embedding_file",
    "split_explicit_implicit", "tokenize",
]

__version__ = "0.1.0"
