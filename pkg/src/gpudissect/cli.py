"""Operator-facing command line.

Verbs: gen, run, analyze, report, verify-sass, probe, bandwidth. The
--backend flag selects live hardware (via the bridge shim) or deterministic
trace replay; bundled fixtures are addressed by name (gb203, gh100).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from gpudissect import curves as curves_mod
from gpudissect import report as report_mod
from gpudissect import sasscheck
from gpudissect import sweep as sweep_mod
from gpudissect.backend.bridge import GpuBackend
from gpudissect.backend.replay import ReplayBackend, load_fixture
from gpudissect.errors import GpuDissectError
from gpudissect.kernels import generate
from gpudissect.kernels.types import KernelSpec, Workload


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", choices=("gpu", "replay"), default="replay")
    parser.add_argument("--fixture", default="gb203",
                        help="bundled fixture name or path (replay backend)")
    parser.add_argument("--bridge", default=None,
                        help="bridge command (default: $GPUDISSECT_BRIDGE)")
    parser.add_argument("--device", type=int, default=0,
                        help="device ordinal for the live backend")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the policy seed")
    parser.add_argument("--out", default="out", help="output directory")


def _make_backend(args):
    if args.backend == "replay":
        return ReplayBackend(load_fixture(args.fixture))
    return GpuBackend(args.bridge)


def _cmd_gen(args) -> int:
    spec_fields = json.loads(args.spec)
    spec = KernelSpec.from_dict(spec_fields).validate()
    kernel = generate(spec, seed=args.seed or 0, arch=args.arch)
    ptx_path, meta_path = kernel.write(Path(args.out))
    print(ptx_path)
    print(meta_path)
    return 0


def _cmd_run(args) -> int:
    backend = _make_backend(args)
    config_path = Path(args.config)
    if args.seed is not None:
        config = sweep_mod.load_config(config_path)
        from gpudissect.backend.base import ExecutionPolicy
        from dataclasses import replace

        config = replace(config, policy=ExecutionPolicy(
            repetitions=config.policy.repetitions,
            warmup_discards=config.policy.warmup_discards,
            seed=args.seed,
        ))
        try:
            sweep_mod.execute_suite(config, backend, Path(args.out))
            return 0
        except GpuDissectError as exc:
            print(json.dumps({"error": type(exc).__name__, "message": str(exc)},
                             sort_keys=True), file=sys.stderr)
            return 1
    return sweep_mod.run_suite(config_path, backend, Path(args.out))


def _cmd_analyze(args) -> int:
    results = [sweep_mod.load_results(p) for p in args.results]
    if args.kind == "boundaries":
        rows = results[0]["rows"]
        curve = sweep_mod.curve_from_rows(
            rows, "working_set_bytes", "true_latency_cycles", curves_mod.X_BYTES
        )
        out = curves_mod.detect_boundaries(
            curve, min_jump_ratio=args.min_jump_ratio
        ).to_dict()
    elif args.kind == "saturation":
        out = sweep_mod.mma_saturation_report(results[0]["rows"])
    else:  # crossover
        if len(results) != 2:
            print("crossover needs exactly two results files", file=sys.stderr)
            return 2
        a = sweep_mod.curve_from_rows(
            results[0]["rows"], args.x_field, args.y_field, curves_mod.X_WARPS
        )
        b = sweep_mod.curve_from_rows(
            results[1]["rows"], args.x_field, args.y_field, curves_mod.X_WARPS
        )
        out = {"crossover_x": curves_mod.crossover(a, b)}
    text = json.dumps(out, indent=2, sort_keys=True)
    if args.out_file:
        Path(args.out_file).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def _cmd_report(args) -> int:
    if args.kind == "table":
        paths = report_mod.render_table(args.results, Path(args.out))
    else:
        paths = report_mod.render_plotdata(
            args.results, Path(args.out),
            x_field=args.x_field, y_field=args.y_field,
        )
    for p in paths:
        print(p)
    return 0


def _cmd_verify_sass(args) -> int:
    meta = json.loads(Path(args.kernel_meta).read_text(encoding="utf-8"))
    spec = KernelSpec.from_dict(meta["spec"]).validate()
    kernel = generate(spec, seed=0, arch=args.arch)
    listings = sasscheck.parse_listing(
        Path(args.listing).read_text(encoding="utf-8"), args.arch
    )
    try:
        listing = sasscheck.listing_for_entry(listings, kernel.entry_symbol)
    except GpuDissectError:
        if len(listings) == 1 and listings[0].entry is None:
            listing = listings[0]
        else:
            raise
    expect = None
    if spec.workload is Workload.MMA_SYNC and args.expect:
        expect = sasscheck.OpcodeExpectation(
            input_format=spec.mma,
            expected=frozenset(args.expect.split(",")),
            arch=args.arch,
        )
    report = sasscheck.verification_report(kernel, listing, expect)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out_file:
        Path(args.out_file).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0 if report["integrity"]["passed"] else 1


def _cmd_probe(args) -> int:
    backend = _make_backend(args)
    print(backend.probe_shared_limit())
    return 0


def _cmd_bandwidth(args) -> int:
    backend = _make_backend(args)
    print(backend.measure_bandwidth(args.direction, args.bytes))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpudissect",
        description="GPU microarchitecture dissection toolkit",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_gen = sub.add_parser("gen", help="emit a PTX kernel and its launch metadata")
    _add_backend_flags(p_gen)
    p_gen.add_argument("--spec", required=True,
                       help="kernel spec as JSON (see KernelSpec fields)")
    p_gen.add_argument("--arch", default="sm_120a")
    p_gen.set_defaults(func=_cmd_gen)

    p_run = sub.add_parser("run", help="run a sweep config end to end")
    _add_backend_flags(p_run)
    p_run.add_argument("config", help="TOML or JSON sweep config")
    p_run.set_defaults(func=_cmd_run)

    p_an = sub.add_parser("analyze", help="re-analyze results files")
    _add_backend_flags(p_an)
    p_an.add_argument("--kind", choices=("boundaries", "saturation", "crossover"),
                      required=True)
    p_an.add_argument("results", nargs="+")
    p_an.add_argument("--min-jump-ratio", type=float, default=1.5)
    p_an.add_argument("--x-field", default="warps")
    p_an.add_argument("--y-field", default="cycles_mean")
    p_an.add_argument("--out-file", default=None)
    p_an.set_defaults(func=_cmd_analyze)

    p_rep = sub.add_parser("report", help="render tables or plot data")
    _add_backend_flags(p_rep)
    p_rep.add_argument("--kind", choices=("table", "plotdata"), default="table")
    p_rep.add_argument("results", nargs="+")
    p_rep.add_argument("--x-field", default="working_set_bytes")
    p_rep.add_argument("--y-field", default="true_latency_cycles")
    p_rep.set_defaults(func=_cmd_report)

    p_vs = sub.add_parser("verify-sass", help="check a disassembly against a kernel")
    _add_backend_flags(p_vs)
    p_vs.add_argument("--kernel-meta", required=True,
                      help="sidecar JSON emitted by gen")
    p_vs.add_argument("--listing", required=True, help="SASS text file")
    p_vs.add_argument("--arch", default="sm_120a")
    p_vs.add_argument("--expect", default=None,
                      help="comma-separated opcode families for matrix kernels")
    p_vs.add_argument("--out-file", default=None)
    p_vs.set_defaults(func=_cmd_verify_sass)

    p_probe = sub.add_parser("probe", help="probe device limits")
    _add_backend_flags(p_probe)
    p_probe.set_defaults(func=_cmd_probe)

    p_bw = sub.add_parser("bandwidth", help="sustained global-memory bandwidth")
    _add_backend_flags(p_bw)
    p_bw.add_argument("--direction", choices=("read", "write"), default="read")
    p_bw.add_argument("--bytes", type=int, required=True)
    p_bw.set_defaults(func=_cmd_bandwidth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GpuDissectError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)},
                         sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
