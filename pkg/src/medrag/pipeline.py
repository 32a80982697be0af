"""End-to-end question answering: expand, retrieve, extract, rerank, answer.

Stage layout and failure policy:
  1. expand    LLM query expansion; unparseable output falls back to an
               OR query over the question's words; gateway failure here
               aborts the run.
  2. search    BM25 over the index, top_k hits.
  3. extract   one LLM call per hit document, fanned out through the
               gateway; a failed document contributes no snippets.
  4. rerank    single LLM call ordering the pooled snippets; parse or
               gateway failure keeps extraction order. Top snippet_cap
               snippets survive.
  5. answers   plain answer (may answer without snippets), then cited
               answer validated against the kept snippet set. No
               snippets means no cited-answer call at all: the engine
               abstains rather than cite thin air.

Answer citations are sentence-trailing markers like [12345678] or
[12345678, 23456789]; sentences citing nothing the snippets support are
dropped rather than repaired.
"""

from __future__ import annotations

import re
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass

from medrag.config import Config
from medrag.corpus import Corpus
from medrag.gateway import Gateway, GatewayError
from medrag.index import Index, SearchHit
from medrag.prompts import (
    ExpansionParseFailure,
    PromptTemplate,
    RerankParseFailure,
    parse_expansion,
    parse_rerank,
    parse_snippets,
    render,
)
from medrag.querylang import Node, ParseError, parse
from medrag.snippets import Snippet


class PipelineError(Exception):
    """A stage the run cannot proceed without has failed."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage} stage failed: {cause}")


@dataclass(frozen=True)
class CitedSentence:
    text: str
    citations: tuple[int, ...]

    def __post_init__(self):
        if not self.text:
            raise ValueError("empty sentence text")
        if not self.citations:
            raise ValueError("cited sentence needs at least one citation")
        if list(self.citations) != sorted(set(self.citations)):
            raise ValueError("citations must be sorted and unique")


@dataclass(frozen=True)
class CitedAnswer:
    sentences: tuple[CitedSentence, ...]
    abstained: bool

    def __post_init__(self):
        if self.abstained != (len(self.sentences) == 0):
            raise ValueError("abstained must mirror sentence emptiness")


@dataclass(frozen=True)
class StageTrace:
    stage: str
    seconds: float
    llm_attempts: int = 0
    note: str = ""


@dataclass(frozen=True)
class Expansion:
    expanded_query: str
    query_source: str
    ast: Node | None
    trace: StageTrace


@dataclass(frozen=True)
class PipelineResult:
    question: str
    expanded_query: str
    query_source: str
    hits: tuple[SearchHit, ...]
    snippets: tuple[Snippet, ...]
    plain_answer: str
    cited_answer: CitedAnswer
    trace: tuple[StageTrace, ...]


_WORD_RE = re.compile(r"[A-Za-z0-9]+")

# sentence terminators: . ! ? followed by whitespace or end of text
_ABBREVIATIONS = ("e.g", "i.e", "al", "Fig", "vs")
_TOKEN_BEFORE_DOT_RE = re.compile(r"[A-Za-z][A-Za-z.]*$")
_MARKER_RE = re.compile(r"\s*\[\s*\d+(?:\s*,\s*\d+)*\s*\]")
_TRAILING_MARKER_RE = re.compile(r"\s*\[\s*(\d+(?:\s*,\s*\d+)*)\s*\]\s*$")


def _is_abbreviation_dot(text: str, i: int) -> bool:
    match = _TOKEN_BEFORE_DOT_RE.search(text[:i])
    return bool(match) and match.group(0) in _ABBREVIATIONS


def split_sentences(text: str) -> list[str]:
    """Split on terminator + space/end, keeping trailing citation markers
    attached to the sentence they follow."""
    sentences: list[str] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in ".!?" and (i + 1 == n or text[i + 1].isspace()):
            if not (ch == "." and _is_abbreviation_dot(text, i)):
                end = i + 1
                while match := _MARKER_RE.match(text, end):
                    end = match.end()
                fragment = text[start:end].strip()
                if fragment:
                    sentences.append(fragment)
                start = end
                i = end
                continue
        i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def _strip_trailing_markers(sentence: str) -> tuple[str, list[int]]:
    pmids: list[int] = []
    text = sentence
    while match := _TRAILING_MARKER_RE.search(text):
        pmids[0:0] = [int(tok) for tok in re.findall(r"\d+", match.group(1))]
        text = text[: match.start()]
    return text.rstrip(), pmids


def validate_citations(raw_answer: str, snippets: Sequence[Snippet]) -> CitedAnswer:
    """Keep only sentences whose trailing markers cite kept snippets.

    Citations outside the snippet pmid set are removed; a sentence left
    with none is dropped entirely, and an answer with no surviving
    sentences is an abstention.
    """
    allowed = {snippet.pmid for snippet in snippets}
    sentences: list[CitedSentence] = []
    for fragment in split_sentences(raw_answer):
        text, pmids = _strip_trailing_markers(fragment)
        if not text:
            continue
        valid = sorted({pmid for pmid in pmids if pmid in allowed})
        if not valid:
            continue
        sentences.append(CitedSentence(text=text, citations=tuple(valid)))
    return CitedAnswer(sentences=tuple(sentences), abstained=not sentences)


def fallback_query(question: str) -> str:
    """OR together the question's words; lowercased so none collide with
    query keywords."""
    words = [word.lower() for word in _WORD_RE.findall(question)]
    return " OR ".join(words)


class Pipeline:
    """One configured engine instance; safe for concurrent ask calls."""

    def __init__(
        self,
        corpus: Corpus,
        index: Index,
        gateway: Gateway,
        templates: dict[str, PromptTemplate],
        config: Config | None = None,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.corpus = corpus
        self.index = index
        self.gateway = gateway
        self.templates = templates
        self.config = config if config is not None else Config()
        self.clock = clock

    def expand_question(self, question: str) -> Expansion:
        """Stage 1 alone, for the inspect-and-edit loop."""
        question = self._checked(question)
        start = self.clock()
        attempts = 0
        try:
            response = self.gateway.complete(
                render(self.templates["expand"], question=question)
            )
            attempts = response.attempts
            expanded = parse_expansion(response.content)
            source = "llm"
        except GatewayError as error:
            raise PipelineError("expand", error) from error
        except ExpansionParseFailure:
            expanded = fallback_query(question)
            source = "fallback"
        ast = parse(expanded) if expanded else None
        trace = StageTrace("expand", self.clock() - start, attempts)
        return Expansion(expanded, source, ast, trace)

    def ask(self, question: str) -> PipelineResult:
        question = self._checked(question)
        expansion = self.expand_question(question)
        return self._run(
            question,
            expansion.expanded_query,
            expansion.query_source,
            expansion.ast,
            [expansion.trace],
        )

    def ask_with_query(self, question: str, edited_query: str) -> PipelineResult:
        """Skip expansion and trust the caller's query.

        Raises ParseError before any LLM call when the query is invalid.
        """
        question = self._checked(question)
        ast = parse(edited_query)
        return self._run(question, edited_query, "user_edit", ast, [])

    def _checked(self, question: str) -> str:
        question = question.strip()
        if not question:
            raise ValueError("question must be non-blank")
        return question

    def _run(
        self,
        question: str,
        expanded_query: str,
        query_source: str,
        ast: Node | None,
        trace: list[StageTrace],
    ) -> PipelineResult:
        hits = self._search_stage(ast, trace)
        pooled = self._extract_stage(question, hits, trace)
        kept = self._rerank_stage(question, pooled, trace)
        plain_answer = self._plain_answer_stage(question, kept, trace)
        cited_answer = self._cited_answer_stage(question, kept, trace)
        return PipelineResult(
            question=question,
            expanded_query=expanded_query,
            query_source=query_source,
            hits=tuple(hits),
            snippets=tuple(kept),
            plain_answer=plain_answer,
            cited_answer=cited_answer,
            trace=tuple(trace),
        )

    def _search_stage(self, ast: Node | None, trace: list[StageTrace]) -> list[SearchHit]:
        start = self.clock()
        hits = self.index.search(ast, self.config.top_k) if ast is not None else []
        trace.append(StageTrace("search", self.clock() - start))
        return hits

    def _extract_stage(
        self, question: str, hits: Sequence[SearchHit], trace: list[StageTrace]
    ) -> list[Snippet]:
        start = self.clock()
        documents = [self.corpus.get(hit.pmid) for hit in hits]
        requests = [
            render(self.templates["extract"], question=question, document=document)
            for document in documents
        ]
        outcomes = self.gateway.complete_many(requests) if requests else []
        pooled: list[Snippet] = []
        attempts = 0
        failures = 0
        for document, outcome in zip(documents, outcomes):
            if isinstance(outcome, GatewayError):
                failures += 1
                continue
            attempts += outcome.attempts
            pooled.extend(parse_snippets(outcome.content, document))
        note = f"{failures} document(s) failed extraction" if failures else ""
        trace.append(StageTrace("extract", self.clock() - start, attempts, note))
        return pooled

    def _rerank_stage(
        self, question: str, pooled: list[Snippet], trace: list[StageTrace]
    ) -> list[Snippet]:
        start = self.clock()
        attempts = 0
        note = ""
        ordered = pooled
        if len(pooled) > 1:
            try:
                response = self.gateway.complete(
                    render(self.templates["rerank"], question=question, snippets=pooled)
                )
                attempts = response.attempts
                order = parse_rerank(response.content, len(pooled))
                ordered = [pooled[i - 1] for i in order]
            except RerankParseFailure:
                note = "unparseable ranking; extraction order kept"
            except GatewayError:
                note = "rerank call failed; extraction order kept"
        kept = [
            snippet.with_rank(rank)
            for rank, snippet in enumerate(ordered[: self.config.snippet_cap], start=1)
        ]
        trace.append(StageTrace("rerank", self.clock() - start, attempts, note))
        return kept

    def _plain_answer_stage(
        self, question: str, kept: Sequence[Snippet], trace: list[StageTrace]
    ) -> str:
        start = self.clock()
        attempts = 0
        note = ""
        answer = ""
        try:
            response = self.gateway.complete(
                render(self.templates["answer_plain"], question=question, snippets=kept)
            )
            attempts = response.attempts
            answer = response.content
        except GatewayError:
            note = "plain answer call failed"
        trace.append(StageTrace("answer_plain", self.clock() - start, attempts, note))
        return answer

    def _cited_answer_stage(
        self, question: str, kept: Sequence[Snippet], trace: list[StageTrace]
    ) -> CitedAnswer:
        start = self.clock()
        attempts = 0
        note = ""
        if not kept:
            answer = CitedAnswer(sentences=(), abstained=True)
            note = "no snippets; abstained without an answer call"
        else:
            try:
                response = self.gateway.complete(
                    render(
                        self.templates["answer_cited"], question=question, snippets=kept
                    )
                )
                attempts = response.attempts
                answer = validate_citations(response.content, kept)
            except GatewayError:
                answer = CitedAnswer(sentences=(), abstained=True)
                note = "cited answer call failed"
        trace.append(StageTrace("answer_cited", self.clock() - start, attempts, note))
        return answer


def result_to_dict(result: PipelineResult, corpus: Corpus) -> dict:
    """JSON-ready form of a result; hit titles joined in for display."""

    def title_of(pmid: int) -> str:
        document = corpus.get(pmid)
        return document.title if document is not None else ""

    return {
        "question": result.question,
        "expanded_query": result.expanded_query,
        "query_source": result.query_source,
        "hits": [
            {
                "pmid": hit.pmid,
                "score": hit.score,
                "title": title_of(hit.pmid),
                "matched_fields": sorted(hit.matched_fields),
            }
            for hit in result.hits
        ],
        "snippets": [
            {
                "pmid": snippet.pmid,
                "field": snippet.field,
                "text": snippet.text,
                "start_offset": snippet.start_offset,
                "end_offset": snippet.end_offset,
                "rank": snippet.rank,
            }
            for snippet in result.snippets
        ],
        "plain_answer": result.plain_answer,
        "cited_answer": {
            "sentences": [
                {"text": sentence.text, "citations": list(sentence.citations)}
                for sentence in result.cited_answer.sentences
            ],
            "abstained": result.cited_answer.abstained,
        },
        "trace": [
            {
                "stage": stage.stage,
                "seconds": stage.seconds,
                "llm_attempts": stage.llm_attempts,
                "note": stage.note,
            }
            for stage in result.trace
        ],
    }
