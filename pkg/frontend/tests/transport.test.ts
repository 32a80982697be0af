import { describe, expect, it } from "vitest";

import { ApiRequestError, HttpTransport } from "../src/transport.js";
import type { AskRequestBody } from "../src/types.js";
import { askResponse, jsonResponse, textResponse } from "./fixtures.js";

function recordingFetch(responses: Response[]) {
  const requests: Array<{ url: string; body: AskRequestBody }> = [];
  const impl = async (url: string, init?: RequestInit): Promise<Response> => {
    requests.push({ url, body: JSON.parse(String(init?.body)) as AskRequestBody });
    const next = responses.shift();
    if (next === undefined) {
      throw new Error("no scripted response left");
    }
    return next;
  };
  return { impl, requests };
}

describe("HttpTransport", () => {
  it("posts the body as JSON to /api/ask and decodes the response", async () => {
    const canned = askResponse();
    const { impl, requests } = recordingFetch([jsonResponse(200, canned)]);
    const transport = new HttpTransport(impl);

    const result = await transport.ask({ question: "What reduces migraine frequency?" });

    expect(requests).toHaveLength(1);
    expect(requests[0].url).toBe("/api/ask");
    expect(requests[0].body).toEqual({ question: "What reduces migraine frequency?" });
    expect(result).toEqual(canned);
  });

  it("passes query_override through untouched", async () => {
    const { impl, requests } = recordingFetch([jsonResponse(200, askResponse())]);
    await new HttpTransport(impl).ask({ question: "q", query_override: "migraine OR headache" });
    expect(requests[0].body.query_override).toBe("migraine OR headache");
  });

  it("turns a 422 into an ApiRequestError carrying code and position", async () => {
    const { impl } = recordingFetch([
      jsonResponse(422, { code: "parse_error", message: "expected a term", position: 2 }),
    ]);
    const error = await new HttpTransport(impl)
      .ask({ question: "q", query_override: "((" })
      .then(
        () => null,
        (e: unknown) => e,
      );

    expect(error).toBeInstanceOf(ApiRequestError);
    const apiError = error as ApiRequestError;
    expect(apiError.status).toBe(422);
    expect(apiError.code).toBe("parse_error");
    expect(apiError.position).toBe(2);
    expect(apiError.message).toBe("expected a term");
  });

  it("falls back to a generic error shape when the body is not JSON", async () => {
    const { impl } = recordingFetch([textResponse(500, "<html>Server Error</html>")]);
    const error = await new HttpTransport(impl).ask({ question: "q" }).then(
      () => null,
      (e: unknown) => e,
    );

    const apiError = error as ApiRequestError;
    expect(apiError.code).toBe("internal");
    expect(apiError.message).toContain("HTTP 500");
    expect(apiError.position).toBeNull();
  });

  it("falls back when the error body is JSON but the wrong shape", async () => {
    const { impl } = recordingFetch([jsonResponse(502, { detail: "boom" })]);
    const error = await new HttpTransport(impl).ask({ question: "q" }).then(
      () => null,
      (e: unknown) => e,
    );
    expect((error as ApiRequestError).code).toBe("internal");
  });
});
