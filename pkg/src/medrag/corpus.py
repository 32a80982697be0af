"""Line-delimited JSON corpus: ingestion, lookup, serialization.

One document per line, keys "pmid" (positive int), "title" (non-empty
string), "abstract" (string, may be empty), optional "year" (int).
Malformed lines never abort ingestion; they are collected as rejects.
Duplicate pmids: first occurrence wins, later ones are rejected.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass


class IngestError(Exception):
    """Raised when the corpus file itself cannot be read."""

    def __init__(self, path: str, cause: Exception):
        super().__init__(f"cannot read corpus file {path!r}: {cause}")
        self.path = path


@dataclass(frozen=True)
class Document:
    pmid: int
    title: str
    abstract_text: str
    year: int | None = None


@dataclass(frozen=True)
class Reject:
    line_number: int
    reason: str
    raw: str


class Corpus:
    """Immutable in-memory document collection, iterated in ascending pmid."""

    def __init__(
        self,
        documents: list[Document],
        source_path: str = "",
        ingested_at: float | None = None,
        rejects: list[Reject] | None = None,
    ):
        self.documents: tuple[Document, ...] = tuple(
            sorted(documents, key=lambda d: d.pmid)
        )
        self.source_path = source_path
        self.ingested_at = time.time() if ingested_at is None else ingested_at
        self.rejects: tuple[Reject, ...] = tuple(rejects or ())
        self._by_pmid = {d.pmid: d for d in self.documents}
        if len(self._by_pmid) != len(self.documents):
            raise ValueError("duplicate pmid in corpus")

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def __eq__(self, other) -> bool:
        # Provenance fields deliberately excluded.
        return isinstance(other, Corpus) and self.documents == other.documents

    def __hash__(self):
        return hash(self.documents)

    def get(self, pmid: int) -> Document | None:
        return self._by_pmid.get(pmid)


def _parse_line(line: str) -> Document:
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("record is not a JSON object")
    for key in ("pmid", "title", "abstract"):
        if key not in obj:
            raise ValueError(f"missing key {key!r}")
    pmid = obj["pmid"]
    if isinstance(pmid, bool) or not isinstance(pmid, int):
        raise ValueError("pmid must be an integer")
    if pmid <= 0:
        raise ValueError("pmid must be positive")
    title = obj["title"]
    if not isinstance(title, str) or not title.strip():
        raise ValueError("title must be a non-empty string")
    abstract = obj["abstract"]
    if not isinstance(abstract, str):
        raise ValueError("abstract must be a string")
    year = obj.get("year")
    if year is not None and (isinstance(year, bool) or not isinstance(year, int)):
        raise ValueError("year must be an integer when present")
    return Document(pmid=pmid, title=title, abstract_text=abstract, year=year)


def ingest(path: str) -> Corpus:
    """Read a corpus file, keeping every well-formed line.

    Per-line failures become ``Reject`` entries on the returned corpus;
    only an unreadable file raises.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise IngestError(path, exc) from exc

    documents: list[Document] = []
    seen: set[int] = set()
    rejects: list[Reject] = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            doc = _parse_line(line)
        except (ValueError, json.JSONDecodeError) as exc:
            rejects.append(Reject(number, str(exc), line.rstrip("\n")))
            continue
        if doc.pmid in seen:
            rejects.append(
                Reject(
                    number,
                    f"duplicate pmid {doc.pmid} (first occurrence kept)",
                    line.rstrip("\n"),
                )
            )
            continue
        seen.add(doc.pmid)
        documents.append(doc)
    return Corpus(documents, source_path=str(path), rejects=rejects)


def serialize(corpus: Corpus, path: str) -> None:
    """Write the corpus back out in its own ingestion format."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus:
            record: dict = {
                "pmid": doc.pmid,
                "title": doc.title,
                "abstract": doc.abstract_text,
            }
            if doc.year is not None:
                record["year"] = doc.year
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def write_rejects_report(corpus: Corpus, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for reject in corpus.rejects:
            fh.write(
                json.dumps(
                    {
                        "line": reject.line_number,
                        "reason": reject.reason,
                        "raw": reject.raw,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
