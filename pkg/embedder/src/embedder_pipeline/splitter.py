"""Explicit/implicit text decomposition.

The explicit part collects the tokens found in the sentiment lexicon, the
implicit part keeps everything else; both preserve the original token order
and together they partition the tokenized text.
"""

from __future__ import annotations

import re

from .lexicon import Lexicon

_TOKEN_RE = re.compile(r"[A-Za-z0-9']+|[^\sA-Za-z0-9']")


def tokenize(text: str) -> list:
    return _TOKEN_RE.findall(text)


def split_explicit_implicit(text: str, lexicon: Lexicon):
    """Returns (explicit_text, implicit_text); explicit may be empty."""
    explicit, implicit = [], []
    for token in tokenize(text):
        if lexicon.contains(token):
            explicit.append(token)
        else:
            implicit.append(token)
    return " ".join(explicit), " ".join(implicit)
