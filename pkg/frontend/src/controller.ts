import { ApiRequestError } from "./transport.js";
import type { Transport } from "./transport.js";
import type {
  ApiErrorBody,
  AskRequestBody,
  AskResponse,
  CitedAnswerView,
  HitView,
  SnippetView,
} from "./types.js";

export type Phase = "idle" | "expanding" | "searching" | "answering" | "error";

export interface UiState {
  question: string;
  expandedQuery: string;
  querySource: string;
  hits: HitView[];
  snippets: SnippetView[];
  plainAnswer: string;
  citedAnswer: CitedAnswerView | null;
  phase: Phase;
  error: ApiErrorBody | null;
  // caret target inside the query box; set only for parse_error
  errorPosition: number | null;
  hasResult: boolean;
}

export function initialState(): UiState {
  return {
    question: "",
    expandedQuery: "",
    querySource: "",
    hits: [],
    snippets: [],
    plainAnswer: "",
    citedAnswer: null,
    phase: "idle",
    error: null,
    errorPosition: null,
    hasResult: false,
  };
}

/**
 * Drives the ask flow against the API and owns all UI state.
 *
 * One request may be in flight at a time: while the phase is expanding,
 * searching, or answering, new submissions are ignored, so double-clicks
 * never issue a second fetch. Every accepted request also gets a
 * sequence number and a response is applied only if it is still the
 * newest one, so a response that arrives after it was superseded is
 * dropped instead of clobbering fresher state.
 */
export class AskController {
  private seq = 0;
  private state: UiState = initialState();

  constructor(
    private readonly transport: Transport,
    private readonly onChange: (state: UiState) => void = () => {},
  ) {}

  getState(): UiState {
    return this.state;
  }

  async submitQuestion(question: string): Promise<void> {
    const trimmed = question.trim();
    if (trimmed === "" || this.inFlight()) {
      return;
    }
    await this.run({ question: trimmed }, "expanding");
  }

  async rerunWithEditedQuery(editedQuery: string): Promise<void> {
    const trimmed = editedQuery.trim();
    if (trimmed === "" || !this.state.hasResult || this.inFlight()) {
      return;
    }
    // expansion is skipped server-side when an override is present
    await this.run({ question: this.state.question, query_override: trimmed }, "searching");
  }

  private inFlight(): boolean {
    return this.state.phase !== "idle" && this.state.phase !== "error";
  }

  private async run(body: AskRequestBody, firstPhase: Phase): Promise<void> {
    const seq = ++this.seq;
    this.patch({ phase: firstPhase, question: body.question, error: null, errorPosition: null });

    let response: AskResponse;
    try {
      response = await this.transport.ask(body);
    } catch (error) {
      if (seq === this.seq) {
        this.fail(error, body);
      }
      return;
    }
    if (seq !== this.seq) {
      return; // superseded while waiting; a newer request owns the state now
    }

    if (firstPhase === "expanding") {
      this.patch({ phase: "searching" });
    }
    this.patch({ phase: "answering" });
    this.patch({
      phase: "idle",
      expandedQuery: response.expanded_query,
      querySource: response.query_source,
      hits: response.hits,
      snippets: response.snippets,
      plainAnswer: response.plain_answer,
      citedAnswer: response.cited_answer,
      hasResult: true,
    });
  }

  private fail(error: unknown, body: AskRequestBody): void {
    if (error instanceof ApiRequestError) {
      const position = error.code === "parse_error" ? error.position : null;
      const patch: Partial<UiState> = { phase: "error", error: error.body, errorPosition: position };
      if (body.query_override !== undefined) {
        // keep the rejected edit in the box so the caret points into it
        patch.expandedQuery = body.query_override;
      }
      this.patch(patch);
      return;
    }
    const message = error instanceof Error ? error.message : String(error);
    this.patch({
      phase: "error",
      error: { code: "network", message: `request failed: ${message}` },
      errorPosition: null,
    });
  }

  private patch(partial: Partial<UiState>): void {
    this.state = { ...this.state, ...partial };
    this.onChange(this.state);
  }
}
