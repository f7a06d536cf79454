/**
 * Wire protocol between the toolkit and this bridge.
 *
 * One JSON object per line on stdin, one per line on stdout. Every response
 * echoes the request id; failures travel in-band through `error` so the
 * loop never dies on a bad request.
 */

export interface BufferSpec {
  name: string;
  kind: "u32" | "u64" | "f32" | "f64";
  count: number;
  init?: { kind: string; seed?: number; elements?: number } | null;
}

export interface RunRequest {
  id: number;
  cmd: "run";
  ptx_path: string;
  entry: string;
  grid: [number, number, number];
  block: [number, number, number];
  buffer_spec: BufferSpec[];
  dyn_shared_bytes?: number;
  reps: number;
}

export interface IdentifyRequest {
  id: number;
  cmd: "identify";
}

export type Request = RunRequest | IdentifyRequest;

export type ErrorCode =
  | "bad_request"
  | "device_unavailable"
  | "load_failed"
  | "launch_failed"
  | "out_of_memory"
  | "unsupported_precision"
  | "invalid_spec";

export interface BridgeError {
  code: ErrorCode;
  message: string;
}

export interface Response {
  id: number | null;
  device?: Record<string, unknown>;
  cycles?: number[];
  wall_time_ns?: number;
  checksum?: string;
  error: BridgeError | null;
}

export function errorResponse(
  id: number | null,
  code: ErrorCode,
  message: string,
): Response {
  return { id, error: { code, message } };
}

function isTriple(v: unknown): v is [number, number, number] {
  return (
    Array.isArray(v) &&
    v.length === 3 &&
    v.every((x) => Number.isInteger(x) && x >= 1)
  );
}

/** Validate a parsed line into a Request, or explain why it is not one. */
export function validateRequest(raw: unknown): Request | string {
  if (typeof raw !== "object" || raw === null) return "request is not an object";
  const req = raw as Record<string, unknown>;
  if (!Number.isInteger(req.id)) return "missing integer id";
  if (req.cmd === "identify") return { id: req.id, cmd: "identify" } as IdentifyRequest;
  if (req.cmd !== "run") return `unknown cmd ${JSON.stringify(req.cmd)}`;

  if (typeof req.ptx_path !== "string" || !req.ptx_path) return "run needs ptx_path";
  if (typeof req.entry !== "string" || !req.entry) return "run needs entry";
  if (!isTriple(req.grid)) return "grid must be three positive integers";
  if (!isTriple(req.block)) return "block must be three positive integers";
  if (!Array.isArray(req.buffer_spec) || req.buffer_spec.length === 0) {
    return "run needs a non-empty buffer_spec";
  }
  for (const buf of req.buffer_spec as unknown[]) {
    const b = buf as Record<string, unknown>;
    if (typeof b.name !== "string" || !Number.isInteger(b.count) || (b.count as number) < 0) {
      return "buffer_spec entries need a name and a non-negative count";
    }
  }
  if (!Number.isInteger(req.reps) || (req.reps as number) < 1) {
    return "reps must be a positive integer";
  }
  return req as unknown as RunRequest;
}
