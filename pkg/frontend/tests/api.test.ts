/**
 * Client tests against a stubbed fetch: request shapes and error mapping.
 */

import { describe, expect, it } from "vitest";
import { ConflictError, HttpError, makeClient } from "../src/api.js";

interface Call {
  input: string;
  init?: RequestInit;
}

function stub(status: number, body: unknown): { calls: Call[]; fetch: typeof fetch } {
  const calls: Call[] = [];
  const fetchFn = async (input: string, init?: RequestInit): Promise<Response> => {
    calls.push({ input, init });
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { calls, fetch: fetchFn as typeof fetch };
}

describe("makeClient", () => {
  it("sends the revision inside the PATCH body", async () => {
    const { calls, fetch } = stub(200, { revision: 3, segment: { id: "seg-0001" } });
    const api = makeClient("http://x", fetch);
    const reply = await api.patchSegment("seg-0001", 2, { text: "改" });
    expect(reply.revision).toBe(3);
    expect(calls[0].input).toBe("http://x/api/segments/seg-0001");
    expect(calls[0].init?.method).toBe("PATCH");
    expect(JSON.parse(calls[0].init?.body as string)).toEqual({ revision: 2, text: "改" });
  });

  it("escapes segment ids in the path", async () => {
    const { calls, fetch } = stub(200, { revision: 1 });
    await makeClient("", fetch).deleteSegment("seg/odd id", 0);
    expect(calls[0].input).toBe("/api/segments/seg%2Fodd%20id?revision=0");
    expect(calls[0].init?.method).toBe("DELETE");
  });

  it("maps 409 with a revision to ConflictError", async () => {
    const { fetch } = stub(409, { error: "stale revision", revision: 12 });
    const api = makeClient("", fetch);
    const err = await api.mergeSegments(["a", "b"], 3).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ConflictError);
    expect((err as ConflictError).revision).toBe(12);
  });

  it("maps other errors to HttpError with the server message", async () => {
    const { fetch } = stub(400, { error: "segments are not consecutive" });
    const api = makeClient("", fetch);
    const err = await api.mergeSegments(["a", "c"], 3).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(HttpError);
    expect(err).not.toBeInstanceOf(ConflictError);
    expect((err as HttpError).status).toBe(400);
    expect((err as HttpError).message).toBe("segments are not consecutive");
  });

  it("survives a non-JSON error body", async () => {
    const fetchFn = (async () => new Response("boom", { status: 502 })) as typeof fetch;
    const api = makeClient("", fetchFn);
    const err = await api.getSegments().catch((e: unknown) => e);
    expect((err as HttpError).status).toBe(502);
    expect((err as HttpError).message).toMatch(/502/);
  });
});
