// Mirrors of the JSON payloads served by the API. Field names match the
// wire format exactly; nothing here is invented client-side.

export interface AskRequestBody {
  question: string;
  query_override?: string;
}

export interface HitView {
  pmid: number;
  score: number;
  title: string;
  matched_fields: string[];
}

export interface SnippetView {
  pmid: number;
  field: string;
  text: string;
  start_offset: number;
  end_offset: number;
  rank: number | null;
}

export interface CitedSentenceView {
  text: string;
  citations: number[];
}

export interface CitedAnswerView {
  sentences: CitedSentenceView[];
  abstained: boolean;
}

export interface TraceEntryView {
  stage: string;
  seconds: number;
  llm_attempts: number;
  note: string;
}

export interface AskResponse {
  question: string;
  expanded_query: string;
  query_source: string;
  hits: HitView[];
  snippets: SnippetView[];
  plain_answer: string;
  cited_answer: CitedAnswerView;
  trace: TraceEntryView[];
}

// Every error status shares this one shape; position is set only for
// parse_error and indexes into the submitted query string.
export interface ApiErrorBody {
  code: string;
  message: string;
  position?: number | null;
}
