"""Batch evaluation over gold question files.

The question file is a JSON array of objects with "id", "body",
"documents" (PubMed URLs or bare pmids), and "snippets" (rows carrying
"document", "beginSection", offset pair, and "text"). Predictions are
written back in the same shape, so a prediction file is itself a valid
question file, and the per-question metrics land in a tab-separated
report.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean

from medrag.metrics import doc_f1, snippet_f1
from medrag.pipeline import Pipeline, PipelineError, PipelineResult
from medrag.snippets import Snippet

logger = logging.getLogger(__name__)

PUBMED_URL_PREFIX = "https://pubmed.ncbi.nlm.nih.gov/"

SNIPPET_FIELDS = ("title", "abstract")


def pubmed_url(pmid: int) -> str:
    return f"{PUBMED_URL_PREFIX}{pmid}/"


def pmid_from_reference(reference) -> int:
    """Accept a bare pmid or a PubMed URL; the pmid is the last path
    segment."""
    if isinstance(reference, bool):
        raise ValueError(f"not a pmid: {reference!r}")
    if isinstance(reference, int):
        pmid = reference
    elif isinstance(reference, str):
        tail = reference.rstrip("/").rsplit("/", 1)[-1]
        if not tail.isdigit():
            raise ValueError(f"no pmid in document reference {reference!r}")
        pmid = int(tail)
    else:
        raise ValueError(f"not a pmid: {reference!r}")
    if pmid <= 0:
        raise ValueError(f"pmid must be positive: {pmid}")
    return pmid


@dataclass(frozen=True)
class GoldQuestion:
    id: str
    question: str
    gold_pmids: frozenset[int]
    gold_snippets: tuple[Snippet, ...]

    def __post_init__(self):
        if not self.id:
            raise ValueError("question id is empty")
        if not self.question.strip():
            raise ValueError(f"question {self.id}: body is blank")
        if not self.gold_pmids:
            raise ValueError(f"question {self.id}: gold document set is empty")


def _gold_snippet(row: dict, question_id: str) -> Snippet:
    field = row["beginSection"]
    if field not in SNIPPET_FIELDS:
        raise ValueError(f"question {question_id}: unknown section {field!r}")
    return Snippet(
        pmid=pmid_from_reference(row["document"]),
        field=field,
        text=row["text"],
        start_offset=row["offsetInBeginSection"],
        end_offset=row["offsetInEndSection"],
    )


def load_questions(path: Path | str) -> list[GoldQuestion]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise ValueError(f"{path}: expected a JSON array of questions")
    questions = []
    for entry in raw:
        question_id = str(entry["id"])
        try:
            questions.append(
                GoldQuestion(
                    id=question_id,
                    question=entry["body"],
                    gold_pmids=frozenset(
                        pmid_from_reference(ref) for ref in entry["documents"]
                    ),
                    gold_snippets=tuple(
                        _gold_snippet(row, question_id)
                        for row in entry.get("snippets", [])
                    ),
                )
            )
        except (KeyError, TypeError, ValueError) as error:
            raise ValueError(f"{path}: bad question {question_id!r}: {error}") from error
    return questions


def prediction_json(question: GoldQuestion, result: PipelineResult) -> dict:
    """The result in the question-file shape."""
    return {
        "id": question.id,
        "body": question.question,
        "documents": [pubmed_url(hit.pmid) for hit in result.hits],
        "snippets": [
            {
                "document": pubmed_url(snippet.pmid),
                "beginSection": snippet.field,
                "offsetInBeginSection": snippet.start_offset,
                "offsetInEndSection": snippet.end_offset,
                "text": snippet.text,
            }
            for snippet in result.snippets
        ],
    }


@dataclass(frozen=True)
class QuestionRow:
    id: str
    doc_precision: float = 0.0
    doc_recall: float = 0.0
    doc_f1: float = 0.0
    snippet_precision: float = 0.0
    snippet_recall: float = 0.0
    snippet_f1: float = 0.0
    error: str = ""


@dataclass(frozen=True)
class BatchReport:
    rows: tuple[QuestionRow, ...]

    @property
    def scored_rows(self) -> list[QuestionRow]:
        return [row for row in self.rows if not row.error]

    def mean_of(self, metric: str) -> float:
        scored = self.scored_rows
        if not scored:
            return 0.0
        return fmean(getattr(row, metric) for row in scored)


def run_batch(
    questions: list[GoldQuestion], pipeline: Pipeline
) -> tuple[BatchReport, list[dict]]:
    """Evaluate sequentially; a failing question becomes an errored row
    and an empty prediction rather than aborting the batch."""
    rows: list[QuestionRow] = []
    predictions: list[dict] = []
    for question in questions:
        try:
            result = pipeline.ask(question.question)
        except (PipelineError, ValueError) as error:
            logger.warning("question %s failed: %s", question.id, error)
            rows.append(QuestionRow(id=question.id, error=str(error)))
            predictions.append(
                {
                    "id": question.id,
                    "body": question.question,
                    "documents": [],
                    "snippets": [],
                }
            )
            continue
        doc_p, doc_r, doc_f = doc_f1(
            (hit.pmid for hit in result.hits), question.gold_pmids
        )
        snip_p, snip_r, snip_f = snippet_f1(result.snippets, question.gold_snippets)
        rows.append(
            QuestionRow(
                id=question.id,
                doc_precision=doc_p,
                doc_recall=doc_r,
                doc_f1=doc_f,
                snippet_precision=snip_p,
                snippet_recall=snip_r,
                snippet_f1=snip_f,
            )
        )
        predictions.append(prediction_json(question, result))
    return BatchReport(rows=tuple(rows)), predictions


_REPORT_COLUMNS = (
    "doc_precision",
    "doc_recall",
    "doc_f1",
    "snippet_precision",
    "snippet_recall",
    "snippet_f1",
)


def report_tsv(report: BatchReport) -> str:
    lines = ["\t".join(("id",) + _REPORT_COLUMNS + ("error",))]
    for row in report.rows:
        cells = [row.id]
        cells += [f"{getattr(row, column):.4f}" for column in _REPORT_COLUMNS]
        cells.append(row.error)
        lines.append("\t".join(cells))
    means = ["mean"] + [f"{report.mean_of(c):.4f}" for c in _REPORT_COLUMNS] + [""]
    lines.append("\t".join(means))
    return "\n".join(lines) + "\n"


def evaluate_to_dir(
    questions_path: Path | str, out_dir: Path | str, pipeline: Pipeline
) -> BatchReport:
    """Run the batch and write predictions.json plus report.tsv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    questions = load_questions(questions_path)
    report, predictions = run_batch(questions, pipeline)
    predictions_text = json.dumps(predictions, indent=2, sort_keys=True) + "\n"
    (out / "predictions.json").write_text(predictions_text, encoding="utf-8")
    (out / "report.tsv").write_text(report_tsv(report), encoding="utf-8")
    return report
