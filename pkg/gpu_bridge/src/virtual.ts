/**
 * Deterministic virtual device.
 *
 * Stands in for real hardware so the protocol, the client, and everything
 * downstream can be exercised end to end on machines without a GPU. Cycle
 * counts come from a per-opcode cost table in the device profile; they are
 * stable across runs, not microarchitecturally faithful (replay fixtures on
 * the toolkit side own the published numbers).
 */

import { readFileSync } from "node:fs";

import { chaseWalk, pointerChain } from "./chain.js";
import { measuredOpcodes, parsePtx } from "./ptx.js";
import type { Response, RunRequest } from "./protocol.js";
import { errorResponse } from "./protocol.js";

export interface DeviceProfile {
  device: Record<string, unknown>;
  clock_overhead_cycles: number;
  clock_mhz: number;
  shared_limit_bytes: number;
  fp8: boolean;
  costs: Record<string, number>;
  gemm_runtime_s?: Record<string, number>;
  gemm_watts_by_size?: [number, number][];
}

export function loadProfile(path: string): DeviceProfile {
  const profile = JSON.parse(readFileSync(path, "utf-8")) as DeviceProfile;
  for (const key of ["device", "clock_overhead_cycles", "clock_mhz",
                     "shared_limit_bytes", "costs"] as const) {
    if (profile[key] === undefined) {
      throw new Error(`profile ${path} is missing ${key}`);
    }
  }
  return profile;
}

function opcodeCost(op: string, costs: Record<string, number>): number {
  // longest matching prefix wins, so "ld.global.nc" beats "ld.global"
  let best = costs.default ?? 1;
  let bestLen = -1;
  for (const [prefix, cost] of Object.entries(costs)) {
    if (prefix !== "default" && op.startsWith(prefix) && prefix.length > bestLen) {
      best = cost;
      bestLen = prefix.length;
    }
  }
  return best;
}

function fnv1a(text: string): string {
  let hash = 0xcbf29ce484222325n;
  for (const ch of Buffer.from(text, "utf-8")) {
    hash ^= BigInt(ch);
    hash = (hash * 0x100000001b3n) & ((1n << 64n) - 1n);
  }
  return hash.toString(16).padStart(16, "0");
}

export class VirtualDevice {
  constructor(readonly profile: DeviceProfile) {}

  identify(id: number): Response {
    return { id, device: this.profile.device, error: null };
  }

  run(req: RunRequest): Response {
    let source: string;
    try {
      source = readFileSync(req.ptx_path, "utf-8");
    } catch (err) {
      return errorResponse(req.id, "load_failed",
        `cannot read ${req.ptx_path}: ${(err as Error).message}`);
    }
    const info = parsePtx(source);
    if (info.entry !== req.entry) {
      return errorResponse(req.id, "load_failed",
        `entry ${req.entry} not found (module defines ${info.entry})`);
    }
    if (info.clockReads !== 2) {
      return errorResponse(req.id, "load_failed",
        `kernel must read the cycle counter exactly twice, found ${info.clockReads}`);
    }
    const dynShared = req.dyn_shared_bytes ?? 0;
    if (dynShared > this.profile.shared_limit_bytes) {
      return errorResponse(req.id, "launch_failed",
        `dynamic shared allocation ${dynShared} B exceeds the device window ` +
        `(${this.profile.shared_limit_bytes} B)`);
    }

    const overhead = this.profile.clock_overhead_cycles;
    const perIteration = measuredOpcodes(info).reduce(
      (sum, op) => sum + opcodeCost(op, this.profile.costs), 0);
    const perWarp = overhead + perIteration * info.loopIterations;

    const warpSlots = req.buffer_spec[0].count;
    const cycles = new Array<number>(warpSlots * req.reps).fill(perWarp);

    // checksum: chase kernels walk the regenerated cycle; everything else
    // hashes the launch identity deterministically
    let checksum: string;
    const chase = req.buffer_spec.find((b) => b.init?.kind === "pointer_chain");
    if (chase && chase.init) {
      const chain = pointerChain(chase.init.elements ?? chase.count,
                                 chase.init.seed ?? 0);
      checksum = String(chaseWalk(chain, info.loopIterations));
    } else {
      checksum = fnv1a(
        `${req.entry}|${req.grid.join("x")}|${req.block.join("x")}|${req.reps}`);
    }

    const totalCycles = perWarp * req.reps;
    const wallNs = Math.max(
      1, Math.round((totalCycles / (this.profile.clock_mhz * 1e6)) * 1e9));
    return {
      id: req.id,
      cycles,
      wall_time_ns: wallNs,
      checksum,
      error: null,
    };
  }
}
