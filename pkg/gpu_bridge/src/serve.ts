/**
 * The request loop: one JSON request per stdin line, one response per
 * stdout line. Malformed lines produce an in-band parse error and the loop
 * continues; the bridge is intentionally dumb (no retries, no statistics;
 * policy lives on the toolkit side) and serves one request at a time.
 */

import { createInterface } from "node:readline";

import type { Request, Response } from "./protocol.js";
import { errorResponse, validateRequest } from "./protocol.js";

export interface Executor {
  identify(id: number): Response;
  run(req: Extract<Request, { cmd: "run" }>): Response;
}

export function handleLine(line: string, executor: Executor): Response | null {
  const trimmed = line.trim();
  if (!trimmed) return null;

  let raw: unknown;
  try {
    raw = JSON.parse(trimmed);
  } catch (err) {
    return errorResponse(null, "bad_request",
      `line is not JSON: ${(err as Error).message}`);
  }
  const request = validateRequest(raw);
  if (typeof request === "string") {
    const id = (raw as Record<string, unknown>)?.id;
    return errorResponse(Number.isInteger(id) ? (id as number) : null,
      "bad_request", request);
  }
  try {
    return request.cmd === "identify"
      ? executor.identify(request.id)
      : executor.run(request);
  } catch (err) {
    return errorResponse(request.id, "launch_failed",
      `executor crashed: ${(err as Error).message}`);
  }
}

export function serve(executor: Executor,
                      input: NodeJS.ReadableStream = process.stdin,
                      output: NodeJS.WritableStream = process.stdout): Promise<void> {
  const lines = createInterface({ input, crlfDelay: Infinity });
  return new Promise((resolve) => {
    lines.on("line", (line) => {
      const response = handleLine(line, executor);
      if (response) output.write(JSON.stringify(response) + "\n");
    });
    lines.on("close", resolve);
  });
}
