/**
 * Fetch client for the review service.
 *
 * Every mutation carries the revision the UI last saw. A 409 reply surfaces
 * as ConflictError with the revision that superseded us so the caller can
 * prompt for a reload instead of overwriting someone else's work.
 */

import type { ProjectInfo, SegmentCore, SegmentsPayload } from "./types.js";

export class HttpError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "HttpError";
  }
}

export class ConflictError extends HttpError {
  constructor(readonly revision: number) {
    super(409, "stale revision");
    this.name = "ConflictError";
  }
}

export interface MutationReply {
  revision: number;
  segment?: SegmentCore;
}

export interface ApiClient {
  getProject(): Promise<ProjectInfo>;
  getSegments(): Promise<SegmentsPayload>;
  patchSegment(id: string, revision: number, fields: Record<string, unknown>): Promise<MutationReply>;
  deleteSegment(id: string, revision: number): Promise<number>;
  mergeSegments(ids: string[], revision: number): Promise<MutationReply>;
  fetchFrame(tMs: number): Promise<Blob>;
  frameUrl(tMs: number): string;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

const JSON_HEADERS = { "Content-Type": "application/json" };

export function makeClient(
  baseUrl = "",
  fetchFn: FetchLike = (input, init) => fetch(input, init),
): ApiClient {
  async function request(path: string, init?: RequestInit): Promise<Response> {
    const res = await fetchFn(baseUrl + path, init);
    if (res.ok) {
      return res;
    }
    // error bodies are {"error": ...} with "revision" added on conflicts
    let message = `request failed (${res.status})`;
    let revision: number | null = null;
    try {
      const body = (await res.json()) as { error?: unknown; revision?: unknown };
      if (typeof body.error === "string") {
        message = body.error;
      }
      if (typeof body.revision === "number") {
        revision = body.revision;
      }
    } catch {
      // non-JSON body, keep the generic message
    }
    if (res.status === 409 && revision !== null) {
      throw new ConflictError(revision);
    }
    throw new HttpError(res.status, message);
  }

  return {
    async getProject(): Promise<ProjectInfo> {
      const res = await request("/api/project");
      return (await res.json()) as ProjectInfo;
    },

    async getSegments(): Promise<SegmentsPayload> {
      const res = await request("/api/segments");
      return (await res.json()) as SegmentsPayload;
    },

    async patchSegment(id, revision, fields): Promise<MutationReply> {
      const res = await request(`/api/segments/${encodeURIComponent(id)}`, {
        method: "PATCH",
        headers: JSON_HEADERS,
        body: JSON.stringify({ revision, ...fields }),
      });
      return (await res.json()) as MutationReply;
    },

    async deleteSegment(id, revision): Promise<number> {
      const res = await request(
        `/api/segments/${encodeURIComponent(id)}?revision=${revision}`,
        { method: "DELETE" },
      );
      const body = (await res.json()) as { revision: number };
      return body.revision;
    },

    async mergeSegments(ids, revision): Promise<MutationReply> {
      const res = await request("/api/segments/merge", {
        method: "POST",
        headers: JSON_HEADERS,
        body: JSON.stringify({ revision, ids }),
      });
      return (await res.json()) as MutationReply;
    },

    async fetchFrame(tMs): Promise<Blob> {
      const res = await request(`/api/frame?t_ms=${tMs}`);
      return res.blob();
    },

    frameUrl(tMs): string {
      return `${baseUrl}/api/frame?t_ms=${tMs}`;
    },
  };
}
