import type { ApiErrorBody, AskRequestBody, AskResponse } from "./types.js";

/** Error responses decoded into the API's flat {code, message, position} shape. */
export class ApiRequestError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
  ) {
    super(body.message);
    this.name = "ApiRequestError";
  }

  get code(): string {
    return this.body.code;
  }

  get position(): number | null {
    return this.body.position ?? null;
  }
}

export interface Transport {
  ask(body: AskRequestBody): Promise<AskResponse>;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/**
 * The only network surface of the UI. Everything goes through POST
 * /api/ask; query expansion happens server-side inside that call, so the
 * client has no reason to talk to any other endpoint.
 */
export class HttpTransport implements Transport {
  constructor(
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
    private readonly base: string = "",
  ) {}

  async ask(body: AskRequestBody): Promise<AskResponse> {
    const response = await this.fetchImpl(`${this.base}/api/ask`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      throw new ApiRequestError(response.status, await readErrorBody(response));
    }
    return (await response.json()) as AskResponse;
  }
}

async function readErrorBody(response: Response): Promise<ApiErrorBody> {
  try {
    const parsed: unknown = await response.json();
    if (
      typeof parsed === "object" &&
      parsed !== null &&
      typeof (parsed as ApiErrorBody).code === "string" &&
      typeof (parsed as ApiErrorBody).message === "string"
    ) {
      return parsed as ApiErrorBody;
    }
  } catch {
    // fall through to the generic shape
  }
  return { code: "internal", message: `unexpected response (HTTP ${response.status})` };
}
