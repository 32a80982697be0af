"""Snippet type and verbatim-span recovery.

A snippet is only ever a contiguous span of a document's title or
abstract. Candidate text is matched against the source with whitespace
runs collapsed (no case folding), and the stored text plus offsets always
come from the source field, so offsets map 1:1 onto what a reader sees.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from medrag.corpus import Document


@dataclass(frozen=True)
class Snippet:
    pmid: int
    field: str
    text: str
    start_offset: int
    end_offset: int
    rank: int | None = None

    def __post_init__(self):
        if self.field not in ("title", "abstract"):
            raise ValueError(f"bad field {self.field!r}")
        if not self.text:
            raise ValueError("empty snippet text")
        if not 0 <= self.start_offset < self.end_offset:
            raise ValueError("bad offsets")

    def with_rank(self, rank: int) -> "Snippet":
        return Snippet(
            self.pmid, self.field, self.text, self.start_offset, self.end_offset, rank
        )


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


def locate(candidate: str, source: Document) -> Snippet | None:
    """Find ``candidate`` verbatim in the document's title, then abstract.

    Returns None when the candidate is blank or appears in neither field.
    """
    words = candidate.split()
    if not words:
        return None
    pattern = re.compile(r"[ \t\r\n]+".join(re.escape(w) for w in words))
    for field, text in (("title", source.title), ("abstract", source.abstract_text)):
        match = pattern.search(text)
        if match:
            return Snippet(
                pmid=source.pmid,
                field=field,
                text=text[match.start() : match.end()],
                start_offset=match.start(),
                end_offset=match.end(),
            )
    return None
