import { describe, expect, it } from "vitest";

import { AskController } from "../src/controller.js";
import type { Phase, UiState } from "../src/controller.js";
import { ApiRequestError } from "../src/transport.js";
import { FakeTransport, askResponse } from "./fixtures.js";

function track(transport: FakeTransport): { controller: AskController; phases: Phase[] } {
  const phases: Phase[] = [];
  const controller = new AskController(transport, (state: UiState) => {
    phases.push(state.phase);
  });
  return { controller, phases };
}

describe("submitQuestion", () => {
  it("walks the phase machine and lands on idle with results", async () => {
    const transport = new FakeTransport().enqueue(askResponse());
    const { controller, phases } = track(transport);

    await controller.submitQuestion("What reduces migraine frequency?");

    expect(phases).toEqual(["expanding", "searching", "answering", "idle"]);
    const state = controller.getState();
    expect(state.expandedQuery).toBe("migraine AND (frequency OR prevention)");
    expect(state.querySource).toBe("llm");
    expect(state.plainAnswer).not.toBe("");
    expect(state.citedAnswer?.sentences).toHaveLength(2);
    expect(state.snippets).toHaveLength(2);
    expect(state.hits).toHaveLength(2);
    expect(state.hasResult).toBe(true);
    expect(state.error).toBeNull();
  });

  it("ignores a blank question without touching the transport", async () => {
    const transport = new FakeTransport();
    const { controller, phases } = track(transport);

    await controller.submitQuestion("");
    await controller.submitQuestion("   ");

    expect(transport.calls).toHaveLength(0);
    expect(phases).toEqual([]);
    expect(controller.getState().phase).toBe("idle");
  });

  it("trims the question before sending", async () => {
    const transport = new FakeTransport().enqueue(askResponse());
    const { controller } = track(transport);
    await controller.submitQuestion("  What reduces migraine frequency?  ");
    expect(transport.calls[0].question).toBe("What reduces migraine frequency?");
  });

  it("issues no second fetch while a request is in flight", async () => {
    const transport = new FakeTransport();
    const pending = transport.enqueueDeferred();
    const { controller } = track(transport);

    const first = controller.submitQuestion("q one");
    await controller.submitQuestion("q two"); // double-click; must be a no-op
    pending.resolve(askResponse());
    await first;

    expect(transport.calls).toHaveLength(1);
    expect(controller.getState().question).toBe("q one");
  });

  it("drops a response that is no longer the newest request", async () => {
    const transport = new FakeTransport();
    const pending = transport.enqueueDeferred();
    const { controller } = track(transport);

    const inFlight = controller.submitQuestion("q");
    // simulate supersession: a newer request claimed the sequence number
    (controller as unknown as { seq: number }).seq += 1;
    pending.resolve(askResponse());
    await inFlight;

    expect(controller.getState().hasResult).toBe(false);
    expect(controller.getState().expandedQuery).toBe("");
  });

  it("maps an upstream failure to the error phase", async () => {
    const transport = new FakeTransport().enqueueError(
      new ApiRequestError(502, { code: "upstream_llm", message: "backend unreachable" }),
    );
    const { controller, phases } = track(transport);

    await controller.submitQuestion("q");

    expect(phases).toEqual(["expanding", "error"]);
    const state = controller.getState();
    expect(state.error?.code).toBe("upstream_llm");
    expect(state.errorPosition).toBeNull();
    expect(state.hasResult).toBe(false);
  });

  it("wraps a non-API failure as a network error", async () => {
    const transport = new FakeTransport().enqueueError(new Error("connection refused"));
    const { controller } = track(transport);
    await controller.submitQuestion("q");
    const state = controller.getState();
    expect(state.error?.code).toBe("network");
    expect(state.error?.message).toContain("connection refused");
  });

  it("allows a fresh submission after an error", async () => {
    const transport = new FakeTransport()
      .enqueueError(new ApiRequestError(502, { code: "upstream_llm", message: "down" }))
      .enqueue(askResponse());
    const { controller } = track(transport);

    await controller.submitQuestion("q");
    expect(controller.getState().phase).toBe("error");
    await controller.submitQuestion("q");

    expect(transport.calls).toHaveLength(2);
    expect(controller.getState().phase).toBe("idle");
    expect(controller.getState().error).toBeNull();
  });
});

describe("rerunWithEditedQuery", () => {
  it("sends the question plus query_override", async () => {
    const transport = new FakeTransport()
      .enqueue(askResponse())
      .enqueue(askResponse({ query_source: "user_edit", expanded_query: "migraine OR headache" }));
    const { controller, phases } = track(transport);

    await controller.submitQuestion("What reduces migraine frequency?");
    phases.length = 0;
    await controller.rerunWithEditedQuery("migraine OR headache");

    expect(transport.calls[1]).toEqual({
      question: "What reduces migraine frequency?",
      query_override: "migraine OR headache",
    });
    // no expansion happens on a re-run, so the phase machine skips it
    expect(phases).toEqual(["searching", "answering", "idle"]);
    expect(controller.getState().querySource).toBe("user_edit");
  });

  it("is a no-op before any question was submitted", async () => {
    const transport = new FakeTransport();
    const { controller } = track(transport);
    await controller.rerunWithEditedQuery("migraine");
    expect(transport.calls).toHaveLength(0);
  });

  it("is a no-op for a blank edited query", async () => {
    const transport = new FakeTransport().enqueue(askResponse());
    const { controller } = track(transport);
    await controller.submitQuestion("q");
    await controller.rerunWithEditedQuery("   ");
    expect(transport.calls).toHaveLength(1);
  });

  it("re-running the unchanged query reproduces the same state", async () => {
    const canned = askResponse();
    const transport = new FakeTransport().enqueue(canned).enqueue(canned);
    const { controller } = track(transport);

    await controller.submitQuestion("What reduces migraine frequency?");
    const before = controller.getState();
    await controller.rerunWithEditedQuery(before.expandedQuery);
    const after = controller.getState();

    expect(after.hits).toEqual(before.hits);
    expect(after.snippets).toEqual(before.snippets);
    expect(after.plainAnswer).toEqual(before.plainAnswer);
    expect(after.citedAnswer).toEqual(before.citedAnswer);
  });

  it("keeps the rejected edit and caret position on a parse error", async () => {
    const transport = new FakeTransport()
      .enqueue(askResponse())
      .enqueueError(
        new ApiRequestError(422, { code: "parse_error", message: "expected a term", position: 2 }),
      );
    const { controller } = track(transport);

    await controller.submitQuestion("q");
    await controller.rerunWithEditedQuery("((");

    const state = controller.getState();
    expect(state.phase).toBe("error");
    expect(state.error?.code).toBe("parse_error");
    expect(state.errorPosition).toBe(2);
    expect(state.expandedQuery).toBe("((");
  });
});
