"""Few-shot prompt templates and output parsers for the five LLM tasks.

Templates are data, not code: each task loads from a UTF-8 text file with
a system-prompt section and a live-message section separated by a line
containing only ``---``, plus a JSON shots file. Placeholders are
``{{question}}``, ``{{title}}``, ``{{abstract}}``, ``{{snippets}}``.

A shot's ``question`` field holds the full user-message text of that
exemplar (for extraction shots that includes the document block), and
``output`` holds the assistant reply, so rendering is a plain alternation
of user/assistant messages with the live input last.
"""

from __future__ import annotations

import json
import logging
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from medrag.corpus import Document
from medrag.gateway import ChatRequest
from medrag.index import Index
from medrag.metrics import doc_f1
from medrag.querylang import ParseError, parse
from medrag.snippets import Snippet, locate

logger = logging.getLogger(__name__)

TASKS = ("expand", "extract", "rerank", "answer_plain", "answer_cited")

SECTION_SEPARATOR = "---"
NO_ABSTRACT_SENTINEL = "(no abstract)"
_PLACEHOLDER_RE = re.compile(r"\{\{(\w+)\}\}")


class RenderError(ValueError):
    """A template input is missing; .field names it."""

    def __init__(self, field: str):
        self.field = field
        super().__init__(f"missing template input: {field}")


class ExpansionParseFailure(Exception):
    """The model's expansion is not a valid query; carries the raw text."""

    def __init__(self, raw: str, error: ParseError | None = None):
        self.raw = raw
        self.error = error
        detail = f": {error}" if error is not None else ""
        super().__init__(f"unparseable expansion {raw!r}{detail}")


class RerankParseFailure(Exception):
    """The model's ranking contains no indices at all."""

    def __init__(self, raw: str):
        self.raw = raw
        super().__init__(f"no indices in rerank output {raw!r}")


@dataclass(frozen=True)
class FewShotExample:
    question: str
    output: str
    gold_pmids: frozenset[int] | None = None

    def __post_init__(self):
        if not self.question:
            raise ValueError("shot question is empty")
        if not self.output:
            raise ValueError("shot output is empty")


@dataclass(frozen=True)
class PromptTemplate:
    task: str
    system_prompt: str
    shots: tuple[FewShotExample, ...]
    live_template: str

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if not self.shots:
            raise ValueError(f"{self.task} template has no shots")
        # 3-shot expansion is part of the product's behavior, not tunable
        if self.task == "expand" and len(self.shots) != 3:
            raise ValueError(
                f"expand template needs exactly 3 shots, got {len(self.shots)}"
            )
        if not self.live_template:
            raise ValueError("empty live template")


def _substitute(template_text: str, values: dict[str, str]) -> str:
    def replace(match: re.Match) -> str:
        name = match.group(1)
        if name not in values:
            raise RenderError(name)
        return values[name]

    return _PLACEHOLDER_RE.sub(replace, template_text)


def render_snippet_block(snippets: Sequence[Snippet]) -> str:
    """Numbered snippet lines, pmid visible so answers can cite it."""
    return "\n".join(
        f"{i}. [{s.pmid}] {s.text}" for i, s in enumerate(snippets, start=1)
    )


def render(
    template: PromptTemplate,
    *,
    question: str | None = None,
    document: Document | None = None,
    snippets: Sequence[Snippet] | None = None,
) -> ChatRequest:
    """Assemble the chat request for one task invocation.

    Message order: shots as user/assistant pairs, then the live input as
    the final user message. The request_key identifies the call for the
    stub backend: "<task>:<question>" (extraction adds ":<pmid>").
    """
    if question is None:
        raise RenderError("question")
    values = {"question": question}
    request_key = f"{template.task}:{question}"
    if template.task == "extract":
        if document is None:
            raise RenderError("document")
        values["title"] = document.title
        values["abstract"] = document.abstract_text or NO_ABSTRACT_SENTINEL
        request_key = f"extract:{question}:{document.pmid}"
    elif template.task in ("rerank", "answer_plain", "answer_cited"):
        if snippets is None:
            raise RenderError("snippets")
        values["snippets"] = render_snippet_block(snippets)
    messages: list[tuple[str, str]] = []
    for shot in template.shots:
        messages.append(("user", shot.question))
        messages.append(("assistant", shot.output))
    messages.append(("user", _substitute(template.live_template, values)))
    return ChatRequest(
        system_prompt=template.system_prompt,
        messages=tuple(messages),
        request_key=request_key,
    )


def _strip_code_fences(raw: str) -> str:
    lines = raw.strip().splitlines()
    if lines and lines[0].lstrip().startswith("```"):
        lines = lines[1:]
    if lines and lines[-1].lstrip().startswith("```"):
        lines = lines[:-1]
    return "\n".join(lines).strip()


def parse_expansion(raw: str) -> str:
    """Validate a model-produced query; raises ExpansionParseFailure."""
    text = _strip_code_fences(raw)
    if "\n" in text:
        text = " ".join(text.split())
    try:
        parse(text)
    except ParseError as error:
        raise ExpansionParseFailure(raw, error) from error
    return text


def parse_snippets(raw: str, source: Document) -> list[Snippet]:
    """Recover verbatim snippets of `source` from model output.

    Accepts one snippet per line, or a JSON array of strings when the
    output is one. Lines that are not whitespace-normalized substrings of
    the title or abstract are discarded (counted in a warning).
    """
    candidates = _candidate_lines(raw)
    snippets: list[Snippet] = []
    discarded = 0
    for candidate in candidates:
        found = locate(candidate, source)
        if found is None:
            discarded += 1
        else:
            snippets.append(found)
    if discarded:
        logger.warning(
            "discarded %d non-verbatim snippet(s) for pmid %d",
            discarded,
            source.pmid,
        )
    return snippets


def _candidate_lines(raw: str) -> list[str]:
    stripped = raw.strip()
    if stripped.startswith("["):
        try:
            decoded = json.loads(stripped)
        except json.JSONDecodeError:
            decoded = None
        if isinstance(decoded, list):
            return [item.strip() for item in decoded if isinstance(item, str) and item.strip()]
    return [line.strip() for line in stripped.splitlines() if line.strip()]


def parse_rerank(raw: str, n: int) -> list[int]:
    """Read an index ordering out of model text and repair it.

    Out-of-range indices are dropped, duplicates keep their first
    occurrence, and missing indices are appended in ascending order, so
    the result is always a permutation of 1..n. Text with no digits at
    all is a failure; callers keep the original order.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    digits = re.findall(r"\d+", raw)
    if not digits:
        raise RerankParseFailure(raw)
    order: list[int] = []
    seen: set[int] = set()
    for token in digits:
        value = int(token)
        if 1 <= value <= n and value not in seen:
            order.append(value)
            seen.add(value)
    order.extend(i for i in range(1, n + 1) if i not in seen)
    return order


def rank_expansion_candidates(
    training: Iterable[FewShotExample], index: Index
) -> list[tuple[FewShotExample, float]]:
    """Score each candidate's stored query by document F1 on its gold set.

    Sorted best first; ties broken by the lexicographically smaller
    question. Candidates without gold pmids or with an unparseable stored
    query violate the contract and raise ValueError.
    """
    scored: list[tuple[FewShotExample, float]] = []
    for example in training:
        if not example.gold_pmids:
            raise ValueError(
                f"candidate {example.question!r} has no gold pmids"
            )
        try:
            ast = parse(example.output)
        except ParseError as error:
            raise ValueError(
                f"candidate {example.question!r} has an unparseable query"
            ) from error
        hits = index.search(ast, 50)
        _, _, f1 = doc_f1((hit.pmid for hit in hits), example.gold_pmids)
        scored.append((example, f1))
    scored.sort(key=lambda pair: (-pair[1], pair[0].question))
    return scored


def select_expansion_shots(
    training: Iterable[FewShotExample], index: Index, k: int = 3
) -> list[FewShotExample]:
    """Pick the k candidates whose stored queries retrieve best."""
    scored = rank_expansion_candidates(training, index)
    if len(scored) < k:
        logger.warning("only %d expansion candidates for k=%d", len(scored), k)
    return [example for example, _ in scored[:k]]


def default_templates_dir() -> Path:
    return Path(str(resources.files("medrag") / "templates"))


def load_template(task: str, template_path: Path, shots_path: Path) -> PromptTemplate:
    text = template_path.read_text(encoding="utf-8")
    parts = text.split(f"\n{SECTION_SEPARATOR}\n", 1)
    if len(parts) != 2:
        raise ValueError(
            f"{template_path}: expected a '{SECTION_SEPARATOR}' line between "
            "system prompt and live template"
        )
    system_prompt, live_template = parts[0].strip(), parts[1].strip()
    raw_shots = json.loads(shots_path.read_text(encoding="utf-8"))
    if not isinstance(raw_shots, list):
        raise ValueError(f"{shots_path}: expected a JSON array of shots")
    shots = []
    for entry in raw_shots:
        gold = entry.get("gold_pmids")
        shots.append(
            FewShotExample(
                question=entry["question"],
                output=entry["output"],
                gold_pmids=frozenset(gold) if gold is not None else None,
            )
        )
    return PromptTemplate(
        task=task,
        system_prompt=system_prompt,
        shots=tuple(shots),
        live_template=live_template,
    )


def load_templates(directory: Path | None = None) -> dict[str, PromptTemplate]:
    """Load all five task templates from a directory.

    Layout: <task>.txt and <task>_shots.json per task.
    """
    base = directory if directory is not None else default_templates_dir()
    return {
        task: load_template(task, base / f"{task}.txt", base / f"{task}_shots.json")
        for task in TASKS
    }
