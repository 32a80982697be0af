import { AskController } from "./controller.js";
import type { Phase, UiState } from "./controller.js";
import type { Transport } from "./transport.js";
import type { CitedAnswerView, SnippetView } from "./types.js";

export function pubmedUrl(pmid: number): string {
  return `https://pubmed.ncbi.nlm.nih.gov/${pmid}/`;
}

const PHASE_LABEL: Record<Phase, string> = {
  idle: "",
  expanding: "Expanding question…",
  searching: "Searching…",
  answering: "Answering…",
  error: "",
};

const SOURCE_LABEL: Record<string, string> = {
  llm: "model expansion",
  fallback: "keyword fallback",
  user_edit: "user edit",
};

const SKELETON = `
<main class="app">
  <h1>medrag</h1>
  <form id="ask-form">
    <input id="question-input" type="text" autocomplete="off"
           placeholder="Ask a biomedical question" aria-label="Question">
    <button id="search-button" type="submit">Search</button>
  </form>
  <p id="status" data-phase="idle"></p>

  <section id="query-pane" hidden>
    <h2>Expanded query</h2>
    <textarea id="query-box" rows="2" spellcheck="false" aria-label="Expanded query"></textarea>
    <div class="query-controls">
      <button id="rerun-button" type="button" disabled>Re-run</button>
      <span id="query-source" class="badge"></span>
    </div>
    <pre id="query-error" hidden></pre>
  </section>

  <section id="plain-pane" hidden>
    <h2>Answer</h2>
    <p id="plain-answer"></p>
  </section>

  <section id="cited-pane" hidden>
    <h2>Grounded answer</h2>
    <div id="cited-sentences"></div>
  </section>

  <section id="snippet-pane" hidden>
    <h2>Sources</h2>
    <ul id="hit-list"></ul>
    <ol id="snippet-list"></ol>
  </section>
</main>
`;

interface Elements {
  form: HTMLFormElement;
  questionInput: HTMLInputElement;
  searchButton: HTMLButtonElement;
  status: HTMLElement;
  queryPane: HTMLElement;
  queryBox: HTMLTextAreaElement;
  rerunButton: HTMLButtonElement;
  querySource: HTMLElement;
  queryError: HTMLElement;
  plainPane: HTMLElement;
  plainAnswer: HTMLElement;
  citedPane: HTMLElement;
  citedSentences: HTMLElement;
  snippetPane: HTMLElement;
  hitList: HTMLElement;
  snippetList: HTMLElement;
}

function grab(root: HTMLElement): Elements {
  const pick = <T extends HTMLElement>(id: string): T => {
    const el = root.querySelector<T>(`#${id}`);
    if (el === null) {
      throw new Error(`missing element #${id}`);
    }
    return el;
  };
  return {
    form: pick<HTMLFormElement>("ask-form"),
    questionInput: pick<HTMLInputElement>("question-input"),
    searchButton: pick<HTMLButtonElement>("search-button"),
    status: pick("status"),
    queryPane: pick("query-pane"),
    queryBox: pick<HTMLTextAreaElement>("query-box"),
    rerunButton: pick<HTMLButtonElement>("rerun-button"),
    querySource: pick("query-source"),
    queryError: pick("query-error"),
    plainPane: pick("plain-pane"),
    plainAnswer: pick("plain-answer"),
    citedPane: pick("cited-pane"),
    citedSentences: pick("cited-sentences"),
    snippetPane: pick("snippet-pane"),
    hitList: pick("hit-list"),
    snippetList: pick("snippet-list"),
  };
}

/**
 * Builds the page inside `container`, wires events, and returns the
 * controller. Rendering is a full repaint from UiState; the one
 * exception is the query box, which is only overwritten when the state
 * side changes so in-progress edits are never clobbered.
 */
export function mountApp(container: HTMLElement, transport: Transport): AskController {
  container.innerHTML = SKELETON;
  const els = grab(container);
  let syncedQuery = "";

  const controller = new AskController(transport, (state) => {
    syncedQuery = render(els, state, syncedQuery);
  });

  els.form.addEventListener("submit", (event) => {
    event.preventDefault();
    void controller.submitQuestion(els.questionInput.value);
  });
  els.rerunButton.addEventListener("click", () => {
    void controller.rerunWithEditedQuery(els.queryBox.value);
  });
  els.queryBox.addEventListener("input", () => {
    updateButtons(els, controller.getState());
  });

  render(els, controller.getState(), syncedQuery);
  return controller;
}

function render(els: Elements, state: UiState, syncedQuery: string): string {
  const busy = state.phase !== "idle" && state.phase !== "error";

  els.status.dataset.phase = state.phase;
  if (state.phase === "error" && state.error !== null) {
    els.status.textContent =
      state.error.code === "parse_error"
        ? "The query did not parse; fix it and re-run."
        : `${state.error.code}: ${state.error.message}`;
    els.status.classList.add("error");
  } else {
    els.status.textContent = PHASE_LABEL[state.phase];
    els.status.classList.remove("error");
  }

  const showPanes = state.hasResult || state.expandedQuery !== "";
  els.queryPane.hidden = !showPanes;
  els.plainPane.hidden = !state.hasResult;
  els.citedPane.hidden = !state.hasResult;
  els.snippetPane.hidden = !state.hasResult;

  if (state.expandedQuery !== syncedQuery) {
    els.queryBox.value = state.expandedQuery;
    syncedQuery = state.expandedQuery;
  }
  els.querySource.textContent = SOURCE_LABEL[state.querySource] ?? state.querySource;

  renderQueryError(els, state);
  els.plainAnswer.textContent = state.plainAnswer !== "" ? state.plainAnswer : "(no answer)";
  renderCited(els.citedSentences, state.citedAnswer, state.snippets);
  renderHits(els, state);
  renderSnippets(els.snippetList, state.snippets);
  updateButtons(els, state, busy);
  return syncedQuery;
}

function renderQueryError(els: Elements, state: UiState): void {
  const isParseError = state.error !== null && state.error.code === "parse_error";
  els.queryError.hidden = !isParseError;
  if (!isParseError || state.error === null) {
    els.queryError.textContent = "";
    return;
  }
  const position = state.errorPosition ?? 0;
  const caretLine = " ".repeat(Math.max(0, position)) + "^ " + state.error.message;
  els.queryError.textContent = `${state.expandedQuery}\n${caretLine}`;
  els.queryBox.focus();
  els.queryBox.setSelectionRange(position, position);
}

function renderCited(
  target: HTMLElement,
  citedAnswer: CitedAnswerView | null,
  snippets: SnippetView[],
): void {
  target.innerHTML = "";
  if (citedAnswer === null) {
    return;
  }
  if (citedAnswer.abstained) {
    const notice = document.createElement("p");
    notice.className = "abstained-notice";
    notice.textContent = "No grounded answer: no relevant snippets were found.";
    target.appendChild(notice);
    return;
  }
  const shownPmids = new Set(snippets.map((s) => s.pmid));
  for (const sentence of citedAnswer.sentences) {
    const p = document.createElement("p");
    p.className = "cited-sentence";
    p.appendChild(document.createTextNode(sentence.text + " "));
    // never show a marker for a document absent from the snippet list
    for (const pmid of sentence.citations.filter((c) => shownPmids.has(c))) {
      const marker = document.createElement("a");
      marker.className = "citation";
      marker.href = pubmedUrl(pmid);
      marker.target = "_blank";
      marker.rel = "noopener";
      marker.textContent = `[${pmid}]`;
      p.appendChild(marker);
      p.appendChild(document.createTextNode(" "));
    }
    target.appendChild(p);
  }
}

function renderHits(els: Elements, state: UiState): void {
  els.hitList.innerHTML = "";
  for (const hit of state.hits) {
    const li = document.createElement("li");
    li.className = "hit-row";
    li.textContent = `${hit.title} (PMID ${hit.pmid}, score ${hit.score.toFixed(3)})`;
    els.hitList.appendChild(li);
  }
}

function renderSnippets(target: HTMLElement, snippets: SnippetView[]): void {
  target.innerHTML = "";
  if (snippets.length === 0) {
    const li = document.createElement("li");
    li.className = "placeholder";
    li.textContent = "No snippets.";
    target.appendChild(li);
    return;
  }
  for (const snippet of snippets) {
    const li = document.createElement("li");
    li.className = "snippet-row";

    const link = document.createElement("a");
    link.href = pubmedUrl(snippet.pmid);
    link.target = "_blank";
    link.rel = "noopener";
    link.textContent = `PMID ${snippet.pmid}`;
    li.appendChild(link);

    const field = document.createElement("span");
    field.className = "snippet-field";
    field.textContent = snippet.field;
    li.appendChild(field);

    const quote = document.createElement("blockquote");
    quote.textContent = snippet.text; // verbatim, never re-formatted
    li.appendChild(quote);

    target.appendChild(li);
  }
}

function updateButtons(els: Elements, state: UiState, busy?: boolean): void {
  const inFlight = busy ?? (state.phase !== "idle" && state.phase !== "error");
  els.searchButton.disabled = inFlight;
  els.rerunButton.disabled = inFlight || !state.hasResult || els.queryBox.value.trim() === "";
}
