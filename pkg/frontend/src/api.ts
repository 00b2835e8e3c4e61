/**
 * Server client: control over HTTP, frames over the per-job stream.
 *
 * Stream messages arrive in a fixed order: one header (type: "header"),
 * then one message per frame (exactly the serialized frame document, no
 * envelope), then one terminal message (type: "end"). The WebSocket
 * transport is used in the browser; the NDJSON mirror of the same
 * sequence serves environments without WebSocket support.
 */

import { FloodFrame, parseFrame } from "./frames.js";
import { DatasetHeader } from "./form.js";

export interface StreamHeader {
  job_id: string;
  terrain: DatasetHeader;
  palette: string[];
  total_expected_frames: number;
}

export interface StreamTerminal {
  status: "finished" | "failed" | "cancelled";
  error_detail?: string;
  abort_step?: number;
  report: Record<string, unknown>;
}

export interface StreamHandlers {
  onHeader(header: StreamHeader): void;
  onFrame(frame: FloodFrame): void;
  onEnd(terminal: StreamTerminal): void;
}

export interface JobDescriptor {
  job_id: string;
  status: string;
  progress: number;
  frames_emitted: number;
  error_detail: string | null;
}

export class FieldErrorsError extends Error {
  constructor(public errors: { field: string; message: string }[]) {
    super(errors.map((e) => `${e.field}: ${e.message}`).join("; "));
  }
}

export class ApiClient {
  constructor(public baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async listDatasets(): Promise<DatasetHeader[]> {
    const resp = await fetch(this.url("/datasets"));
    return (await resp.json()) as DatasetHeader[];
  }

  async getDem(id: string, stride = 1): Promise<{ elevation: number[][]; stride: number } & DatasetHeader> {
    const resp = await fetch(this.url(`/datasets/${id}/dem?stride=${stride}`));
    if (!resp.ok) throw new Error(`dem fetch failed: ${resp.status}`);
    return await resp.json();
  }

  async submitJob(terrainRef: string, config: Record<string, unknown>): Promise<string> {
    const resp = await fetch(this.url("/jobs"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ terrain_ref: terrainRef, config }),
    });
    const body = await resp.json();
    if (resp.status === 202) return body.job_id as string;
    if (body.errors) throw new FieldErrorsError(body.errors);
    throw new Error(body.message ?? `submit failed: ${resp.status}`);
  }

  async getJob(jobId: string): Promise<JobDescriptor> {
    const resp = await fetch(this.url(`/jobs/${jobId}`));
    if (!resp.ok) throw new Error(`unknown job ${jobId}`);
    return await resp.json();
  }

  async cancelJob(jobId: string): Promise<void> {
    await fetch(this.url(`/jobs/${jobId}`), { method: "DELETE" });
  }

  /** Dispatch one raw stream message to the right handler. */
  static dispatchMessage(text: string, handlers: StreamHandlers): boolean {
    const doc = JSON.parse(text);
    if (doc.type === "header") {
      handlers.onHeader(doc as StreamHeader);
      return false;
    }
    if (doc.type === "end") {
      handlers.onEnd(doc as StreamTerminal);
      return true;
    }
    handlers.onFrame(parseFrame(doc));
    return false;
  }

  /** Browser transport: WebSocket at /jobs/{id}/frames. */
  streamFrames(jobId: string, handlers: StreamHandlers): () => void {
    const wsUrl = this.url(`/jobs/${jobId}/frames`).replace(/^http/, "ws");
    const ws = new WebSocket(wsUrl);
    ws.onmessage = (event) => ApiClient.dispatchMessage(String(event.data), handlers);
    return () => ws.close();
  }

  /** Fallback transport: the NDJSON mirror of the same byte sequence. */
  async streamFramesNdjson(jobId: string, handlers: StreamHandlers): Promise<void> {
    const resp = await fetch(this.url(`/jobs/${jobId}/frames.ndjson`));
    if (!resp.ok || resp.body === null) throw new Error(`stream failed: ${resp.status}`);
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { value, done } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let nl;
      while ((nl = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, nl).trim();
        buffer = buffer.slice(nl + 1);
        if (line && ApiClient.dispatchMessage(line, handlers)) return;
      }
    }
    const tail = buffer.trim();
    if (tail) ApiClient.dispatchMessage(tail, handlers);
  }
}
