"""Set-based retrieval metrics.

Document scores compare pmid sets. Snippet scores compare sets of
(pmid, field, character index) triples, so overlap is insensitive to how
a span happens to be chopped into pieces.
"""

from __future__ import annotations

from collections.abc import Iterable

from medrag.snippets import Snippet


class UndefinedMetricError(ValueError):
    """Raised when a score is undefined, not merely zero."""


def _harmonic(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def doc_f1(predicted: Iterable[int], gold: Iterable[int]) -> tuple[float, float, float]:
    """Precision, recall, F1 over pmid sets; duplicates in `predicted` collapse.

    An empty gold set is a data error, not a zero score.
    """
    gold_set = set(gold)
    if not gold_set:
        raise UndefinedMetricError("gold document set is empty")
    pred_set = set(predicted)
    if not pred_set:
        return (0.0, 0.0, 0.0)
    true_positives = len(pred_set & gold_set)
    precision = true_positives / len(pred_set)
    recall = true_positives / len(gold_set)
    return (precision, recall, _harmonic(precision, recall))


def _char_set(snippets: Iterable[Snippet]) -> set[tuple[int, str, int]]:
    chars: set[tuple[int, str, int]] = set()
    for snippet in snippets:
        for i in range(snippet.start_offset, snippet.end_offset):
            chars.add((snippet.pmid, snippet.field, i))
    return chars


def snippet_f1(
    predicted: Iterable[Snippet], gold: Iterable[Snippet]
) -> tuple[float, float, float]:
    """Character-overlap precision, recall, F1. Empty sides score zero."""
    pred_chars = _char_set(predicted)
    gold_chars = _char_set(gold)
    overlap = len(pred_chars & gold_chars)
    precision = overlap / len(pred_chars) if pred_chars else 0.0
    recall = overlap / len(gold_chars) if gold_chars else 0.0
    return (precision, recall, _harmonic(precision, recall))
