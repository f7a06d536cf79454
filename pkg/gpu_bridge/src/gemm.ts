#!/usr/bin/env node
/**
 * Dense-GEMM case study: D = A^T * B + C with FP8 inputs, bf16 bias, FP8
 * output, timed over repeated runs inside a fixed workspace.
 *
 *   gpudissect-gemm --m 1024 --n 1024 --k 1024 --reps 100 --workspace-mb 32
 *
 * On real hardware this wraps the vendor BLAS; without a native executor it
 * reports device_unavailable. With --virtual it replays a profile's recorded
 * runtimes so the reporting path stays testable. Output: one JSON line
 * {runtime_s, tflops, power_avg_w}.
 */

import { driverPresent } from "./cuda.js";
import { loadProfile, type DeviceProfile } from "./virtual.js";

interface GemmArgs {
  m: number;
  n: number;
  k: number;
  reps: number;
  workspaceMb: number;
  virtualProfile: string | null;
}

export function parseArgs(argv: string[]): GemmArgs | string {
  const args: GemmArgs = {
    m: 0, n: 0, k: 0, reps: 100, workspaceMb: 32, virtualProfile: null,
  };
  for (let i = 0; i < argv.length; i += 1) {
    const flag = argv[i];
    const value = argv[i + 1];
    switch (flag) {
      case "--m": args.m = Number(value); i += 1; break;
      case "--n": args.n = Number(value); i += 1; break;
      case "--k": args.k = Number(value); i += 1; break;
      case "--reps": args.reps = Number(value); i += 1; break;
      case "--workspace-mb": args.workspaceMb = Number(value); i += 1; break;
      case "--virtual": args.virtualProfile = value; i += 1; break;
      default: return `unknown flag ${flag}`;
    }
  }
  for (const dim of ["m", "n", "k"] as const) {
    if (!Number.isInteger(args[dim]) || args[dim] < 1) {
      return `--${dim} must be a positive integer`;
    }
  }
  if (!Number.isInteger(args.reps) || args.reps < 1) {
    return "--reps must be a positive integer (invalid_spec)";
  }
  if (!Number.isInteger(args.workspaceMb) || args.workspaceMb < 1) {
    return "--workspace-mb must be a positive integer";
  }
  return args;
}

function interpolate(pairs: [number, number][], x: number): number {
  if (x <= pairs[0][0]) return pairs[0][1];
  if (x >= pairs[pairs.length - 1][0]) return pairs[pairs.length - 1][1];
  for (let i = 0; i < pairs.length - 1; i += 1) {
    const [x0, y0] = pairs[i];
    const [x1, y1] = pairs[i + 1];
    if (x >= x0 && x <= x1) return y0 + ((x - x0) / (x1 - x0)) * (y1 - y0);
  }
  return pairs[pairs.length - 1][1];
}

export function virtualGemm(profile: DeviceProfile, args: GemmArgs) {
  if (!profile.fp8) {
    throw Object.assign(new Error("device has no FP8 matrix path"),
                        { code: "unsupported_precision" });
  }
  const key = `${args.m}x${args.n}x${args.k}`;
  const flops = 2 * args.m * args.n * args.k;
  let runtime = profile.gemm_runtime_s?.[key];
  if (runtime === undefined) {
    // no recording for this shape: scale the nearest cubic recording by work
    const table = Object.entries(profile.gemm_runtime_s ?? {});
    if (table.length === 0) throw new Error("profile has no gemm recordings");
    const [refKey, refRuntime] = table[table.length - 1];
    const [rm, rn, rk] = refKey.split("x").map(Number);
    runtime = refRuntime * (flops / (2 * rm * rn * rk));
  }
  const tflops = flops / runtime / 1e12;
  const size = Math.cbrt(args.m * args.n * args.k);
  const power = profile.gemm_watts_by_size
    ? interpolate(profile.gemm_watts_by_size, size)
    : null;
  return { runtime_s: runtime, tflops, power_avg_w: power };
}

function main(argv: string[]): void {
  const parsed = parseArgs(argv);
  if (typeof parsed === "string") {
    process.stderr.write(JSON.stringify({ error: "invalid_spec", message: parsed }) + "\n");
    process.exit(2);
  }
  if (parsed.virtualProfile) {
    try {
      const result = virtualGemm(loadProfile(parsed.virtualProfile), parsed);
      process.stdout.write(JSON.stringify(result) + "\n");
      process.exit(0);
    } catch (err) {
      const code = (err as { code?: string }).code ?? "launch_failed";
      process.stderr.write(JSON.stringify(
        { error: code, message: (err as Error).message }) + "\n");
      process.exit(2);
    }
  }
  const driver = driverPresent();
  const message = driver
    ? `driver at ${driver} but no native BLAS executor linked in this build`
    : "no CUDA driver visible on this machine";
  process.stderr.write(JSON.stringify(
    { error: "device_unavailable", message }) + "\n");
  process.exit(2);
}

import { fileURLToPath } from "node:url";

if (process.argv[1] && process.argv[1] === fileURLToPath(import.meta.url)) {
  main(process.argv.slice(2));
}
