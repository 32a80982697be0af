import type { Transport } from "../src/transport.js";
import type { AskRequestBody, AskResponse } from "../src/types.js";

export function askResponse(overrides: Partial<AskResponse> = {}): AskResponse {
  return {
    question: "What reduces migraine frequency?",
    expanded_query: "migraine AND (frequency OR prevention)",
    query_source: "llm",
    hits: [
      {
        pmid: 201,
        score: 2.4314,
        title: "Propranolol for migraine prophylaxis",
        matched_fields: ["abstract", "title"],
      },
      {
        pmid: 206,
        score: 1.1102,
        title: "Aerobic exercise and migraine",
        matched_fields: ["abstract"],
      },
    ],
    snippets: [
      {
        pmid: 201,
        field: "abstract",
        text: "Propranolol reduces migraine attack frequency.",
        start_offset: 0,
        end_offset: 46,
        rank: 1,
      },
      {
        pmid: 206,
        field: "abstract",
        text: "Regular aerobic exercise reduces migraine frequency.",
        start_offset: 0,
        end_offset: 52,
        rank: 2,
      },
    ],
    plain_answer: "Beta blockers and regular exercise reduce migraine frequency.",
    cited_answer: {
      sentences: [
        { text: "Propranolol reduces attack frequency.", citations: [201] },
        { text: "Regular aerobic exercise also helps.", citations: [206] },
      ],
      abstained: false,
    },
    trace: [
      { stage: "expand", seconds: 0, llm_attempts: 1, note: "" },
      { stage: "search", seconds: 0, llm_attempts: 0, note: "" },
    ],
    ...overrides,
  };
}

export interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (error: unknown) => void;
}

export function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  let reject!: (error: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

/** Scripted transport: responses are consumed in FIFO order, calls recorded. */
export class FakeTransport implements Transport {
  readonly calls: AskRequestBody[] = [];
  private handlers: Array<() => Promise<AskResponse>> = [];

  enqueue(result: AskResponse): this {
    this.handlers.push(() => Promise.resolve(result));
    return this;
  }

  enqueueError(error: unknown): this {
    this.handlers.push(() => Promise.reject(error));
    return this;
  }

  enqueueDeferred(): Deferred<AskResponse> {
    const d = deferred<AskResponse>();
    this.handlers.push(() => d.promise);
    return d;
  }

  async ask(body: AskRequestBody): Promise<AskResponse> {
    this.calls.push(JSON.parse(JSON.stringify(body)) as AskRequestBody);
    const handler = this.handlers.shift();
    if (handler === undefined) {
      throw new Error(`no scripted response for ${JSON.stringify(body)}`);
    }
    return handler();
  }
}

/** Minimal stand-in for a fetch Response; only what HttpTransport touches. */
export function jsonResponse(status: number, body: unknown): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => JSON.parse(JSON.stringify(body)) as unknown,
  } as unknown as Response;
}

export function textResponse(status: number, body: string): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => JSON.parse(body) as unknown,
  } as unknown as Response;
}

/** Two macrotask turns; enough for a settled promise chain to flush. */
export async function settle(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
  await new Promise((resolve) => setTimeout(resolve, 0));
}
