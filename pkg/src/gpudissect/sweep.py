"""Sweep configs and the generation -> execution -> analysis pipeline.

A config names one workload family, the axes to sweep (cartesian product in
config order), fixed parameters, the execution policy, and which artifacts
to emit. TOML and JSON are accepted interchangeably. Chain-length sweeps
hold total instruction count roughly constant by deriving the loop iteration
count from ``params.total_instructions``.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - environment dependent
    import tomli as tomllib

from gpudissect import curves as curves_mod
from gpudissect import metrics
from gpudissect.backend.base import ExecutionPolicy
from gpudissect.backend.replay import ReplayBackend
from gpudissect.errors import ConfigInvalid, GpuDissectError, InvalidSpec, NeverSaturates
from gpudissect.kernels import generate, gen_clock_overhead
from gpudissect.kernels.types import (
    KernelSpec,
    MatrixShape,
    MixedVariant,
    Workload,
    mma_for_format,
)
from gpudissect.power import FixtureSampler, LiveSampler, average_power, sample_during

_AXES_ALLOWED = {
    Workload.INT32_MAD: ("chain_len", "ilp", "warps"),
    Workload.FP32_FMA: ("chain_len", "ilp", "warps"),
    Workload.FP64_FMA: ("chain_len", "ilp", "warps"),
    Workload.MIXED_INT_FP32: ("chain_len", "ilp", "warps"),
    Workload.MMA_SYNC: ("ilp", "warps", "mma_format"),
    Workload.POINTER_CHASE: ("working_set_bytes",),
    Workload.SHARED_STRIDE: ("stride", "warps"),
    Workload.L1_STRIDE: ("stride", "warps"),
    Workload.L2_WARP_LOADSTORE: ("warps",),
    Workload.GLOBAL_BW_READ: ("working_set_bytes",),
    Workload.GLOBAL_BW_WRITE: ("working_set_bytes",),
    Workload.CLOCK_OVERHEAD: ("warps",),
}

_PARAMS_ALLOWED = {
    "chain_len", "ilp", "iterations", "warps", "stride", "working_set_bytes",
    "accesses", "total_instructions", "mma_format", "mma_tile",
}

_OUTPUT_FORMATS = ("csv", "json", "hierarchy", "saturation", "plot")

_CHIP_ARCH = {"GB203": "sm_120a", "GH100": "sm_90"}


@dataclass(frozen=True)
class SweepConfig:
    name: str
    family: Workload
    axes: tuple[tuple[str, tuple[object, ...]], ...]
    params: tuple[tuple[str, object], ...] = ()
    variant: Optional[MixedVariant] = None
    policy: ExecutionPolicy = field(default_factory=ExecutionPolicy)
    power_enabled: bool = False
    power_period_s: float = 0.1
    formats: tuple[str, ...] = ("csv", "json")

    def to_dict(self) -> dict:
        return {
            "suite": {
                "name": self.name,
                "family": self.family.value,
                **({"variant": self.variant.value} if self.variant else {}),
            },
            "axes": {k: list(v) for k, v in self.axes},
            "params": dict(self.params),
            "policy": {
                "repetitions": self.policy.repetitions,
                "warmup_discards": self.policy.warmup_discards,
                "seed": self.policy.seed,
            },
            "power": {"enabled": self.power_enabled, "period_s": self.power_period_s},
            "output": {"formats": list(self.formats)},
        }


def parse_config(data: dict, origin: str = "<memory>") -> SweepConfig:
    suite = data.get("suite")
    if not isinstance(suite, dict) or "family" not in suite:
        raise ConfigInvalid(f"{origin}: missing suite.family", field="suite.family")
    try:
        family = Workload(suite["family"])
    except ValueError:
        raise ConfigInvalid(
            f"{origin}: unknown family {suite['family']!r}", field="suite.family"
        ) from None

    variant = None
    if "variant" in suite:
        try:
            variant = MixedVariant(suite["variant"])
        except ValueError:
            raise ConfigInvalid(
                f"{origin}: unknown variant {suite['variant']!r}",
                field="suite.variant",
            ) from None
    if family is Workload.MIXED_INT_FP32 and variant is None:
        raise ConfigInvalid(f"{origin}: mixed family needs suite.variant",
                            field="suite.variant")

    axes_in = data.get("axes")
    if not isinstance(axes_in, dict) or not axes_in:
        raise ConfigInvalid(f"{origin}: axes must be a non-empty table", field="axes")
    allowed = _AXES_ALLOWED[family]
    axes: list[tuple[str, tuple[object, ...]]] = []
    for name, values in axes_in.items():
        if name not in allowed:
            raise ConfigInvalid(
                f"{origin}: axis {name!r} does not apply to {family.value}",
                field=f"axes.{name}",
            )
        if not isinstance(values, list) or not values:
            raise ConfigInvalid(
                f"{origin}: axis {name!r} needs a non-empty value list",
                field=f"axes.{name}",
            )
        axes.append((name, tuple(values)))

    params_in = data.get("params", {}) or {}
    for name in params_in:
        if name not in _PARAMS_ALLOWED:
            raise ConfigInvalid(f"{origin}: unknown param {name!r}",
                                field=f"params.{name}")

    policy_in = data.get("policy", {}) or {}
    try:
        policy = ExecutionPolicy(
            repetitions=int(policy_in.get("repetitions", 1024)),
            warmup_discards=int(policy_in.get("warmup_discards", 1)),
            seed=int(policy_in.get("seed", 0)),
        )
    except InvalidSpec as exc:
        raise ConfigInvalid(f"{origin}: {exc}", field="policy") from exc

    power_in = data.get("power", {}) or {}
    output_in = data.get("output", {}) or {}
    formats = tuple(output_in.get("formats", ["csv", "json"]))
    for fmt in formats:
        if fmt not in _OUTPUT_FORMATS:
            raise ConfigInvalid(f"{origin}: unknown output format {fmt!r}",
                                field="output.formats")

    return SweepConfig(
        name=str(suite.get("name", family.value)),
        family=family,
        variant=variant,
        axes=tuple(axes),
        params=tuple(sorted(params_in.items())),
        policy=policy,
        power_enabled=bool(power_in.get("enabled", False)),
        power_period_s=float(power_in.get("period_s", 0.1)),
        formats=formats,
    )


def load_config(path: Path | str) -> SweepConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
        if path.suffix == ".json":
            data = json.loads(text)
        else:
            data = tomllib.loads(text)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigInvalid(f"config {path} does not parse: {exc}") from exc
    return parse_config(data, origin=str(path))


def expand(config: SweepConfig) -> list[KernelSpec]:
    """Cartesian sweep points in config-order (first axis outermost)."""
    params = dict(config.params)
    total_instructions = params.pop("total_instructions", None)
    mma_tile = MatrixShape.parse(params.pop("mma_tile", "m16n8k32"))
    default_format = params.pop("mma_format", None)

    axis_names = [name for name, _ in config.axes]
    axis_values = [values for _, values in config.axes]

    specs: list[KernelSpec] = []
    for combo in itertools.product(*axis_values):
        fields = dict(params)
        fields.update(zip(axis_names, combo))
        mma_format = fields.pop("mma_format", default_format)
        if config.family is Workload.MMA_SYNC:
            if mma_format is None:
                raise ConfigInvalid("mma sweeps need an mma_format axis or param",
                                    field="axes.mma_format")
            fields["mma"] = mma_for_format(str(mma_format), mma_tile)
        if config.family is Workload.MIXED_INT_FP32:
            fields["mixed"] = config.variant
        if total_instructions is not None:
            per_iter = int(fields.get("chain_len", 1)) * int(fields.get("ilp", 1))
            fields["iterations"] = max(1, round(int(total_instructions) / per_iter))
        try:
            spec = KernelSpec(workload=config.family, **fields).validate()
        except InvalidSpec as exc:
            raise ConfigInvalid(f"sweep point {fields}: {exc}") from exc
        specs.append(spec)
    return specs


# --- artifact writers --------------------------------------------------------

def _fmt(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results_csv(rows: list[dict], path: Path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(metrics.RESULT_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in metrics.RESULT_COLUMNS])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_results_json(payload: dict, path: Path) -> None:
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_results(path: Path | str) -> dict:
    from gpudissect.errors import ResultsUnreadable

    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ResultsUnreadable(f"cannot read results {path}: {exc}") from exc
    if "rows" not in data:
        raise ResultsUnreadable(f"results {path} carry no rows")
    return data


def curve_from_rows(
    rows: list[dict],
    x_field: str,
    y_field: str,
    x_kind: str,
    where: Optional[dict] = None,
) -> curves_mod.LatencyCurve:
    where = where or {}
    picked: dict[int, float] = {}
    for row in rows:
        if any(row.get(k) != v for k, v in where.items()):
            continue
        x, y = row.get(x_field), row.get(y_field)
        if x is None or y is None:
            continue
        picked[int(x)] = float(y)
    points = tuple(sorted(picked.items()))
    return curves_mod.LatencyCurve(x_kind=x_kind, points=points)


def mma_saturation_report(rows: list[dict]) -> dict:
    """Scan warp counts from high to low for the ILP saturation frontier.

    Reports, per warp count, the ILP at which throughput saturates (or that
    it never does), plus the largest saturating ILP and the smallest warp
    count where it appears.
    """
    warp_values = sorted({int(r["warps"]) for r in rows}, reverse=True)
    per_warps: dict[str, object] = {}
    best_ilp = None
    best_warps = None
    for warps in warp_values:
        curve = curve_from_rows(
            rows, "ilp", "throughput_ipc_sm", curves_mod.X_ILP, {"warps": warps}
        )
        if len(curve.points) < 3:
            continue
        try:
            sat = curves_mod.saturation_point(curve)
            per_warps[str(warps)] = sat
            if best_ilp is None or sat > best_ilp or (sat == best_ilp
                                                      and warps < best_warps):
                best_ilp, best_warps = sat, warps
        except NeverSaturates:
            per_warps[str(warps)] = None
    return {
        "per_warps": per_warps,
        "max_saturating_ilp": best_ilp,
        "at_warps": best_warps,
    }


def write_plot_data(rows: list[dict], config: SweepConfig, out_dir: Path) -> list[Path]:
    """Gnuplot-compatible data plus a script; no graphics dependencies."""
    plans = {
        Workload.POINTER_CHASE: ("working_set_bytes", "true_latency_cycles", None,
                                 "log x"),
        Workload.L2_WARP_LOADSTORE: ("warps", "cycles_mean", None, ""),
        Workload.SHARED_STRIDE: ("warps", "true_latency_cycles", "stride", ""),
        Workload.L1_STRIDE: ("warps", "true_latency_cycles", "stride", ""),
        Workload.MMA_SYNC: ("ilp", "throughput_ipc_sm", "warps", ""),
    }
    plan = plans.get(
        config.family, ("chain_len", "throughput_ipc_sm", None, "log x")
    )
    x_field, y_field, series_field, scale = plan

    groups: dict[object, list[tuple[float, float]]] = {}
    for row in rows:
        x, y = row.get(x_field), row.get(y_field)
        if x is None or y is None:
            continue
        key = row.get(series_field) if series_field else "all"
        groups.setdefault(key, []).append((float(x), float(y)))

    dat_path = out_dir / f"{config.name}.dat"
    gp_path = out_dir / f"{config.name}.gp"
    blocks = []
    titles = []
    for key in sorted(groups, key=str):
        label = f"{series_field}={key}" if series_field else config.name
        titles.append(label)
        lines = [f"# series: {label}"]
        for x, y in sorted(groups[key]):
            lines.append(f"{_fmt(x)} {_fmt(y)}")
        blocks.append("\n".join(lines))
    dat_path.write_text("\n\n\n".join(blocks) + "\n", encoding="utf-8")

    plot_cmds = ", \\\n    ".join(
        f"'{dat_path.name}' index {i} using 1:2 with linespoints title '{t}'"
        for i, t in enumerate(titles)
    )
    script = [
        f"# gnuplot script for suite {config.name}",
        "set datafile commentschars '#'",
        f"set xlabel '{x_field}'",
        f"set ylabel '{y_field}'",
    ]
    if "log x" in scale:
        script.append("set logscale x 2")
    script.append(f"plot {plot_cmds}")
    gp_path.write_text("\n".join(script) + "\n", encoding="utf-8")
    return [dat_path, gp_path]


# --- the suite driver ----------------------------------------------------------

def arch_for_device(chip: str) -> str:
    return _CHIP_ARCH.get(chip, "sm_120a")


def execute_suite(config: SweepConfig, backend, out_dir: Path) -> list[Path]:
    """Run the sweep and write every requested artifact. Returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    device = backend.device
    arch = arch_for_device(device.chip)
    policy = config.policy

    overhead_kernel = gen_clock_overhead(arch=arch)
    overhead_record = backend.run(
        overhead_kernel,
        overhead_kernel.spec,
        ExecutionPolicy(repetitions=8, warmup_discards=0, seed=policy.seed),
    )
    overhead = metrics.overhead_from_record(overhead_record)

    rows: list[dict] = []
    for spec in expand(config):
        kernel = generate(spec, seed=policy.seed, arch=arch)
        avg_watts = None
        if config.power_enabled:
            sampler = _sampler_for(backend, spec, config.power_period_s)
            if sampler is not None:
                record, trace = sample_during(
                    lambda: backend.run(kernel, spec, policy),
                    config.power_period_s,
                    sampler,
                )
                avg_watts = average_power(trace)
            else:
                record = backend.run(kernel, spec, policy)
        else:
            record = backend.run(kernel, spec, policy)
        rows.append(metrics.result_row(config.name, record, overhead, avg_watts))

    written: list[Path] = []
    if "csv" in config.formats:
        path = out_dir / "results.csv"
        write_results_csv(rows, path)
        written.append(path)
    if "json" in config.formats:
        path = out_dir / "results.json"
        write_results_json({
            "suite": config.name,
            "family": config.family.value,
            "device": device.to_dict(),
            "overhead_cycles": overhead,
            "policy": {
                "repetitions": policy.repetitions,
                "warmup_discards": policy.warmup_discards,
                "seed": policy.seed,
            },
            "rows": rows,
        }, path)
        written.append(path)
    if "hierarchy" in config.formats:
        curve = curve_from_rows(
            rows, "working_set_bytes", "true_latency_cycles", curves_mod.X_BYTES
        )
        report = curves_mod.detect_boundaries(curve)
        path = out_dir / "hierarchy.json"
        write_results_json(report.to_dict(), path)
        written.append(path)
    if "saturation" in config.formats:
        path = out_dir / "saturation.json"
        write_results_json(mma_saturation_report(rows), path)
        written.append(path)
    if "plot" in config.formats:
        written.extend(write_plot_data(rows, config, out_dir))

    manifest = out_dir / "manifest.json"
    write_results_json(
        {"suite": config.name, "artifacts": sorted(p.name for p in written)},
        manifest,
    )
    written.append(manifest)
    return written


def _sampler_for(backend, spec: KernelSpec, period_s: float):
    if isinstance(backend, ReplayBackend):
        watts = backend.power_watts_for(spec)
        if watts is None:
            return None  # fixture has no draw recorded for this point: report n/a
        return FixtureSampler(watts, period_s)
    return LiveSampler(period_s)


def run_suite(config_path: Path | str, backend, out_dir: Path | str) -> int:
    """CLI-facing wrapper: exit 0 on success, nonzero with a JSON error line."""
    try:
        config = load_config(config_path)
        execute_suite(config, backend, Path(out_dir))
        return 0
    except GpuDissectError as exc:
        summary = {
            "error": type(exc).__name__,
            "message": str(exc),
        }
        field_name = getattr(exc, "field", None)
        if field_name:
            summary["field"] = field_name
        key = getattr(exc, "key", None)
        if key:
            summary["spec"] = key
        print(json.dumps(summary, sort_keys=True), file=sys.stderr)
        return 1
