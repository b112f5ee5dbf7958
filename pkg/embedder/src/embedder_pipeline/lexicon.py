"""Sentiment lexicons for explicit/implicit text splitting.

The builtin lexicon is a compact list of common opinion words; any lexicon
can be supplied as a JSON file {"positive": [...], "negative": [...]}.  The
lexicon identifier travels in the output manifest so downstream results stay
traceable to the word list that produced them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

BUILTIN_ID = "builtin-opinion-v1"

_POSITIVE = """
amazing awesome beautiful best better brilliant calm charming cheerful clean
clever comfortable cool courageous delicious delightful easy elegant enjoy
enjoyable excellent exciting fabulous fair fantastic favorite fine flawless
friendly fun funny generous genius gentle glad glorious good gorgeous grand
great happy healthy helpful honest hopeful impressive incredible inspiring
interesting joy joyful kind lovely loyal lucky magnificent marvelous nice
outstanding peaceful perfect pleasant pleased positive powerful pretty proud
quality refreshing reliable remarkable rich right safe satisfying smart
smooth solid special splendid strong stunning success successful super superb
sweet talented terrific thankful thrilled top tremendous trust trustworthy
useful valuable vibrant victorious warm welcome wholesome win winner wise
wonderful worthy love loved loves like liked likes admire adore appreciate
bliss brave bright celebrate champion charming classic cozy creative cute
dazzling dream effective efficient energetic epic exceptional exquisite
faithful famous fascinating festive fresh gifted graceful grateful
""".split()

_NEGATIVE = """
awful bad boring broken cheap clumsy cold complain corrupt crazy creepy cruel
damage dangerous dark dead deadly depressing dirty disappointing disaster
disgusting dishonest dreadful dull dumb evil fail failed failure fake fear
filthy flawed fool foolish fraud frustrating garbage gross grim guilty harsh
hate hated hates hideous horrible horrific hostile hurt idiot ignorant inferior
insane insult jealous junk lame lazy lie lies lousy mad mean mess messy
miserable mistake nasty negative noisy obnoxious offensive painful pathetic
poor problem rotten rude ruin sad scam scary selfish shabby shame shameful
sick sloppy slow sorry stink stinks stupid terrible toxic tragic trash ugly
unfair unhappy unpleasant unreliable upset useless vicious vile violent weak
weird worse worst worthless wrong annoy annoying anxious arrogant ashamed
betray bitter bland bogus brutal chaotic crude cursed damaged deceptive
defective desperate destructive disturbing dreary
""".split()


@dataclass
class Lexicon:
    identifier: str
    positive: frozenset
    negative: frozenset

    @property
    def words(self) -> frozenset:
        return self.positive | self.negative

    def contains(self, token: str) -> bool:
        return token.lower() in self.words

    def score(self, tokens) -> int:
        """Positive-minus-negative opinion word count."""
        s = 0
        for t in tokens:
            low = t.lower()
            if low in self.positive:
                s += 1
            elif low in self.negative:
                s -= 1
        return s


def builtin_lexicon() -> Lexicon:
    return Lexicon(identifier=BUILTIN_ID,
                   positive=frozenset(_POSITIVE),
                   negative=frozenset(_NEGATIVE))


def load_lexicon(identifier: str) -> Lexicon:
    """Resolve a lexicon id: the builtin name or a JSON file path."""
    if identifier in (BUILTIN_ID, "builtin", None, ""):
        return builtin_lexicon()
    with open(identifier, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict) or "positive" not in obj or "negative" not in obj:
        raise ValueError(f"lexicon file {identifier} must hold "
                         '{"positive": [...], "negative": [...]}')
    return Lexicon(identifier=identifier,
                   positive=frozenset(w.lower() for w in obj["positive"]),
                   negative=frozenset(w.lower() for w in obj["negative"]))
