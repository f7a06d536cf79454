/**
 * Real-driver executor seam.
 *
 * Driving CUDA needs a native binding (driver API: module load from PTX,
 * launch, synchronize); this build ships without one, so the adapter probes
 * for a visible driver and otherwise answers every request with an in-band
 * device_unavailable error carrying the probe detail. A native executor
 * implementing the same two methods slots in here without touching the
 * protocol loop.
 */

import { existsSync } from "node:fs";

import type { Response, RunRequest } from "./protocol.js";
import { errorResponse } from "./protocol.js";

const DRIVER_PATHS = [
  "/usr/lib/x86_64-linux-gnu/libcuda.so.1",
  "/usr/lib/x86_64-linux-gnu/libcuda.so",
  "/usr/lib64/libcuda.so.1",
  "/usr/local/cuda/lib64/stubs/libcuda.so",
];

export function driverPresent(): string | null {
  for (const path of DRIVER_PATHS) {
    if (existsSync(path)) return path;
  }
  return null;
}

export class CudaDevice {
  private readonly reason: string;

  constructor() {
    const driver = driverPresent();
    this.reason = driver
      ? `driver found at ${driver} but this bridge build has no native ` +
        "CUDA executor linked; rebuild with the driver binding"
      : "no CUDA driver visible on this machine";
  }

  identify(id: number): Response {
    return errorResponse(id, "device_unavailable", this.reason);
  }

  run(req: RunRequest): Response {
    return errorResponse(req.id, "device_unavailable", this.reason);
  }
}
