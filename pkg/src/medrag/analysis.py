"""English analysis chain shared by the indexer and the query compiler.

Pipeline, in order: extract maximal alphanumeric runs (a trailing 's or
's is kept with its run so possessives occupy one position), strip the
possessive tail, lowercase, drop stopwords while still advancing the
position counter, then stem. Tokens that stem to nothing (the bare word
"s") are dropped the same way stopwords are, leaving a position gap.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from medrag.porter import stem

# Fixed list; changing it invalidates existing indexes.
STOPWORDS = frozenset(
    """a an and are as at be but by for if in into is it no not of on or
    such that the their then there these they this to was will with""".split()
)

_TOKEN_RE = re.compile(r"[A-Za-z0-9]+(?:['’][sS](?![A-Za-z0-9]))?")
_POSSESSIVE_RE = re.compile(r"['’][sS]$")


@dataclass(frozen=True)
class Token:
    """One analyzed term with its field position and surface offsets.

    ``position`` counts every raw token, including dropped ones, so
    phrase matching sees the same gaps the reference analyzer leaves.
    ``start_offset``/``end_offset`` delimit the raw surface form.
    """

    term: str
    position: int
    start_offset: int
    end_offset: int


def analyze(text: str) -> list[Token]:
    """Run the full chain over ``text`` and return surviving tokens."""
    out: list[Token] = []
    position = 0
    for match in _TOKEN_RE.finditer(text):
        raw = _POSSESSIVE_RE.sub("", match.group()).lower()
        if raw not in STOPWORDS:
            term = stem(raw)
            if term:
                out.append(Token(term, position, match.start(), match.end()))
        position += 1
    return out


def analyze_query_term(term: str) -> list[str]:
    """Analyze one query-side term; stopwords vanish to an empty list."""
    return [token.term for token in analyze(term)]
