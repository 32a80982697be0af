"""Positional inverted index over title and abstract with BM25 ranking.

Scoring: BM25(t,d,f) = idf(t,f) * tf / (tf + k1*(1 - b + b*len_f(d)/avgdl_f))
with idf = ln(1 + (N - df + 0.5)/(df + 0.5)), k1 = 1.2, b = 0.75. A hit's
score is the sum over matching positive leaves; an unfielded leaf takes the
max of its per-field scores. Phrase tf counts occurrences at consecutive
analyzer positions, so stopword gaps inside a phrase must be mirrored by
the document ("quality of life" needs quality@p and life@p+2).

Boolean semantics: And intersects its positive children and subtracts its
Not children; Or unions positives and subtracts Nots; a node with no
positive children matches nothing, as does a Not outside a sibling context.
A leaf whose text analyzes away entirely (pure stopword) is a match-nothing
leaf: it logs a warning, contributes no documents, and empties any And that
requires it.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass

from medrag.analysis import analyze, analyze_query_term
from medrag.corpus import Corpus
from medrag.querylang import And, Node, Not, Or, Phrase, Term

logger = logging.getLogger(__name__)

K1 = 1.2
B = 0.75
FIELDS = ("title", "abstract")

SNAPSHOT_FORMAT = "medrag-index"
SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class SearchHit:
    pmid: int
    score: float
    matched_fields: frozenset[str]


@dataclass(frozen=True)
class IndexStats:
    doc_count: int
    avgdl: dict[str, float]
    lengths: dict[str, tuple[int, ...]]
    k1: float = K1
    b: float = B


class Index:
    """Immutable after build; every search walks only read-only state."""

    def __init__(self, pmids, postings, lengths):
        self.pmids: tuple[int, ...] = tuple(pmids)
        self.doc_count = len(self.pmids)
        # postings[(term, field)] -> {ordinal: (position, ...)}, ordinals
        # ordered ascending by construction.
        self.postings: dict[tuple[str, str], dict[int, tuple[int, ...]]] = postings
        self.lengths: dict[str, tuple[int, ...]] = {
            f: tuple(lengths[f]) for f in FIELDS
        }
        self.avgdl = {
            f: (sum(self.lengths[f]) / self.doc_count if self.doc_count else 0.0)
            for f in FIELDS
        }

    @property
    def stats(self) -> IndexStats:
        return IndexStats(self.doc_count, dict(self.avgdl), dict(self.lengths))

    def document_frequency(self, term: str, field: str) -> int:
        return len(self.postings.get((term, field), ()))

    def _idf(self, df: int) -> float:
        n = self.doc_count
        return math.log(1 + (n - df + 0.5) / (df + 0.5))

    def _tf_score(self, tf: int, field: str, ordinal: int) -> float:
        avgdl = self.avgdl[field]
        length = self.lengths[field][ordinal]
        ratio = length / avgdl if avgdl > 0 else 0.0
        return tf / (tf + K1 * (1 - B + B * ratio))

    # Leaf evaluation: ordinal -> score contribution of this leaf.

    def _eval_term_field(self, terms: list[str], field: str) -> dict[int, float]:
        scores: dict[int, float] = {}
        for term in terms:
            plist = self.postings.get((term, field))
            if not plist:
                continue
            idf = self._idf(len(plist))
            for ordinal, positions in plist.items():
                gain = idf * self._tf_score(len(positions), field, ordinal)
                scores[ordinal] = scores.get(ordinal, 0.0) + gain
        return scores

    def _phrase_occurrences(self, pattern, field: str) -> dict[int, int]:
        """pattern: [(term, relative_position)] -> ordinal -> occurrence count."""
        first_term = pattern[0][0]
        base = self.postings.get((first_term, field))
        if not base:
            return {}
        rest = []
        for term, rel in pattern[1:]:
            plist = self.postings.get((term, field))
            if not plist:
                return {}
            rest.append((_position_sets(plist), rel))
        occurrences: dict[int, int] = {}
        for ordinal, positions in base.items():
            count = 0
            for p in positions:
                if all(
                    ordinal in plist and p + rel in plist[ordinal]
                    for plist, rel in rest
                ):
                    count += 1
            if count:
                occurrences[ordinal] = count
        return occurrences

    def _eval_phrase_field(self, pattern, field: str) -> dict[int, float]:
        occurrences = self._phrase_occurrences(pattern, field)
        if not occurrences:
            return {}
        idf = self._idf(len(occurrences))
        return {
            ordinal: idf * self._tf_score(tf, field, ordinal)
            for ordinal, tf in occurrences.items()
        }

    def _eval_leaf(self, node: Term | Phrase) -> dict[int, float]:
        if isinstance(node, Term):
            terms = analyze_query_term(node.text)
            if not terms:
                logger.warning("term %r analyzes to nothing; matches nothing", node.text)
                return {}

            def per_field(f: str) -> dict[int, float]:
                return self._eval_term_field(terms, f)

        else:
            tokens = analyze(" ".join(node.words))
            if not tokens:
                logger.warning(
                    "phrase %r analyzes to nothing; matches nothing",
                    " ".join(node.words),
                )
                return {}
            origin = tokens[0].position
            pattern = [(t.term, t.position - origin) for t in tokens]

            def per_field(f: str) -> dict[int, float]:
                return self._eval_phrase_field(pattern, f)

        if node.field is not None:
            return per_field(node.field)
        merged = per_field("title")
        for ordinal, score in per_field("abstract").items():
            if ordinal not in merged or score > merged[ordinal]:
                merged[ordinal] = score
        return merged

    def _eval(self, node: Node) -> dict[int, float]:
        if isinstance(node, (Term, Phrase)):
            return self._eval_leaf(node)
        if isinstance(node, Not):
            # Reachable only at the root or under another Not; negation
            # works against siblings, so a bare Not matches nothing.
            return {}
        positives = [c for c in node.children if not isinstance(c, Not)]
        negatives = [c for c in node.children if isinstance(c, Not)]
        if not positives:
            return {}
        evaluated = [self._eval(c) for c in positives]
        excluded: set[int] = set()
        for neg in negatives:
            excluded.update(self._eval(neg.child).keys())
        if isinstance(node, And):
            docs = set(evaluated[0])
            for scores in evaluated[1:]:
                docs &= scores.keys()
        else:
            docs = set()
            for scores in evaluated:
                docs |= scores.keys()
        docs -= excluded
        # Left-fold sum in child order keeps float results reproducible.
        return {
            ordinal: _sum_contributions(evaluated, ordinal) for ordinal in docs
        }

    def _matched_fields(self, node: Node, ordinal: int) -> set[str]:
        if isinstance(node, (Term, Phrase)):
            fields = (node.field,) if node.field else FIELDS
            matched = set()
            if isinstance(node, Term):
                terms = analyze_query_term(node.text)
                for f in fields:
                    if any(
                        ordinal in self.postings.get((t, f), ()) for t in terms
                    ):
                        matched.add(f)
            else:
                tokens = analyze(" ".join(node.words))
                if tokens:
                    origin = tokens[0].position
                    pattern = [(t.term, t.position - origin) for t in tokens]
                    for f in fields:
                        if self._phrase_occurrences(pattern, f).get(ordinal):
                            matched.add(f)
            return matched
        if isinstance(node, Not):
            return set()
        out: set[str] = set()
        for child in node.children:
            out |= self._matched_fields(child, ordinal)
        return out

    def search(self, ast: Node, top_k: int) -> list[SearchHit]:
        if top_k < 1:
            raise ValueError("top_k must be >= 1")
        scores = self._eval(ast)
        ranked = sorted(scores.items(), key=lambda kv: (-kv[1], self.pmids[kv[0]]))
        hits = []
        for ordinal, score in ranked[:top_k]:
            hits.append(
                SearchHit(
                    pmid=self.pmids[ordinal],
                    score=score,
                    matched_fields=frozenset(self._matched_fields(ast, ordinal)),
                )
            )
        return hits

    def save(self, path: str) -> None:
        """Line-delimited snapshot; first line is the header, then postings."""
        with open(path, "w", encoding="utf-8") as fh:
            header = {
                "format": SNAPSHOT_FORMAT,
                "version": SNAPSHOT_VERSION,
                "k1": K1,
                "b": B,
                "pmids": list(self.pmids),
                "lengths": {f: list(self.lengths[f]) for f in FIELDS},
            }
            fh.write(json.dumps(header, ensure_ascii=False) + "\n")
            for (term, field) in sorted(self.postings):
                entries = [
                    [ordinal, list(positions)]
                    for ordinal, positions in self.postings[(term, field)].items()
                ]
                fh.write(
                    json.dumps(
                        {"term": term, "field": field, "postings": entries},
                        ensure_ascii=False,
                    )
                    + "\n"
                )


def _sum_contributions(evaluated: list[dict[int, float]], ordinal: int) -> float:
    total = 0.0
    for scores in evaluated:
        if ordinal in scores:
            total += scores[ordinal]
    return total


def _position_sets(plist: dict[int, tuple[int, ...]]) -> dict[int, frozenset[int]]:
    return {ordinal: frozenset(positions) for ordinal, positions in plist.items()}


def build(corpus: Corpus) -> Index:
    pmids = [doc.pmid for doc in corpus]
    postings: dict[tuple[str, str], dict[int, list[int]]] = {}
    lengths = {f: [] for f in FIELDS}
    for ordinal, doc in enumerate(corpus):
        for field, text in (("title", doc.title), ("abstract", doc.abstract_text)):
            tokens = analyze(text)
            lengths[field].append(len(tokens))
            for token in tokens:
                postings.setdefault((token.term, field), {}).setdefault(
                    ordinal, []
                ).append(token.position)
    frozen = {
        key: {ordinal: tuple(pos) for ordinal, pos in plist.items()}
        for key, plist in postings.items()
    }
    return Index(pmids, frozen, lengths)


def load(path: str) -> Index:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if (
            header.get("format") != SNAPSHOT_FORMAT
            or header.get("version") != SNAPSHOT_VERSION
        ):
            raise ValueError(f"not a recognized index snapshot: {path}")
        postings: dict[tuple[str, str], dict[int, tuple[int, ...]]] = {}
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            postings[(row["term"], row["field"])] = {
                int(ordinal): tuple(positions)
                for ordinal, positions in row["postings"]
            }
    return Index(header["pmids"], postings, header["lengths"])
