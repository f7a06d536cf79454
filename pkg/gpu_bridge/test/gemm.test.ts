import { describe, expect, it } from "vitest";

import { parseArgs, virtualGemm } from "../src/gemm.js";
import { loadProfile } from "../src/virtual.js";

const GB = loadProfile(new URL("../profiles/gb203.json", import.meta.url).pathname);
const PRE_FP8 = loadProfile(
  new URL("../profiles/pre_fp8.json", import.meta.url).pathname);

describe("case-study argument parsing", () => {
  it("accepts the documented flags", () => {
    const args = parseArgs(["--m", "1024", "--n", "1024", "--k", "1024",
                            "--reps", "100", "--workspace-mb", "32"]);
    expect(args).toMatchObject({ m: 1024, n: 1024, k: 1024, reps: 100,
                                 workspaceMb: 32 });
  });

  it("zero reps is an invalid spec", () => {
    const got = parseArgs(["--m", "8", "--n", "8", "--k", "8", "--reps", "0"]);
    expect(got).toMatch(/invalid_spec/);
  });

  it("dimensions must be positive integers", () => {
    expect(parseArgs(["--m", "0", "--n", "8", "--k", "8"])).toMatch(/--m/);
    expect(parseArgs(["--m", "8", "--n", "8"])).toMatch(/--k/);
  });
});

describe("virtual case study", () => {
  const args = {
    m: 8192, n: 8192, k: 8192, reps: 100, workspaceMb: 32,
    virtualProfile: null,
  };

  it("replays the recorded runtime and derives throughput", () => {
    const result = virtualGemm(GB, args);
    expect(result.runtime_s).toBeCloseTo(4.71e-3, 10);
    // 2*8192^3 / 4.710 ms / 1e12
    expect(result.tflops).toBeCloseTo(233.44, 1);
    expect(result.power_avg_w).toBeCloseTo(114.4, 5);
  });

  it("rejects pre-FP8 devices", () => {
    expect(() => virtualGemm(PRE_FP8, args)).toThrow(/FP8/);
  });

  it("scales unknown shapes by work", () => {
    const result = virtualGemm(GB, { ...args, m: 4096, n: 4096, k: 4096 });
    expect(result.runtime_s).toBeGreaterThan(0);
    expect(result.tflops).toBeGreaterThan(0);
  });
});
