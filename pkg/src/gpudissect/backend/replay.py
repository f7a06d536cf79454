"""Deterministic trace-replay backend.

Fixtures are versioned JSON files holding either literal recorded cycle
tables (keyed by canonicalized spec) or parametric generators: plateau
levels with boundaries, anchor curves, and a bounded noise fraction. Replay
is bit-deterministic under a fixed policy seed, which makes every analysis
stage testable on machines without a GPU.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from importlib import resources
from pathlib import Path
from typing import Optional

from gpudissect.backend.base import (
    DeviceIdentity,
    ExecutionPolicy,
    MeasurementRecord,
)
from gpudissect.errors import FixtureMiss, FootprintTooLarge, InvalidSpec
from gpudissect.kernels.types import KernelSpec, PtxKernel, Workload

FIXTURE_VERSION = 1

_CHAIN_MODEL_KEYS = {
    Workload.INT32_MAD: "int32_mad",
    Workload.FP32_FMA: "fp32_fma",
    Workload.FP64_FMA: "fp64_fma",
}


def _stable_seed(*parts: object) -> int:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _interp(anchors: list[list[float]], x: float, *, log_x: bool = False) -> float:
    """Piecewise-linear interpolation through sorted anchors, clamped at ends."""
    if not anchors:
        raise InvalidSpec("empty anchor table")
    xs = [a[0] for a in anchors]
    ys = [a[1] for a in anchors]
    if x <= xs[0]:
        return ys[0]
    if x >= xs[-1]:
        return ys[-1]
    for i in range(len(xs) - 1):
        if xs[i] <= x <= xs[i + 1]:
            x0, x1 = xs[i], xs[i + 1]
            if log_x:
                f = (math.log2(x) - math.log2(x0)) / (math.log2(x1) - math.log2(x0))
            else:
                f = (x - x0) / (x1 - x0)
            return ys[i] + f * (ys[i + 1] - ys[i])
    return ys[-1]


class TraceFixture:
    """Parsed fixture file: device identity plus per-family generators."""

    def __init__(self, data: dict, origin: str = "<memory>"):
        version = data.get("fixture_version")
        if version != FIXTURE_VERSION:
            raise InvalidSpec(
                f"fixture {origin}: unknown fixture_version {version!r} "
                f"(loader supports {FIXTURE_VERSION})"
            )
        self.device = DeviceIdentity.from_dict(data["device"])
        self.clock_overhead_cycles = int(data["clock_overhead_cycles"])
        self.shared_limit_bytes = int(data["shared_limit_bytes"])
        self.bandwidth_bytes_per_s = {
            k: float(v) for k, v in data["bandwidth_bytes_per_s"].items()
        }
        self.models = data.get("models", {})
        self.table = data.get("table", {})
        self.power = data.get("power", {})
        self.gemm_runtime_s = data.get("gemm_runtime_s", {})
        self.origin = origin

    @classmethod
    def load(cls, path: Path | str) -> "TraceFixture":
        path = Path(path)
        return cls(json.loads(path.read_text(encoding="utf-8")), origin=str(path))


def bundled_fixture_path(name: str) -> Path:
    """Path of a fixture shipped with the package (e.g. 'gb203', 'gh100')."""
    base = resources.files("gpudissect").joinpath("data", "fixtures")
    candidate = base.joinpath(f"{name}.json")
    with resources.as_file(candidate) as p:
        if not p.exists():
            raise InvalidSpec(f"no bundled fixture named {name!r}")
        return Path(p)


def load_fixture(name_or_path: str | Path) -> TraceFixture:
    p = Path(name_or_path)
    if p.exists():
        return TraceFixture.load(p)
    return TraceFixture.load(bundled_fixture_path(str(name_or_path)))


class ReplayBackend:
    """Backend that synthesizes records from a TraceFixture, no GPU needed."""

    def __init__(self, fixture: TraceFixture):
        self.fixture = fixture

    @property
    def device(self) -> DeviceIdentity:
        return self.fixture.device

    # -- helpers ------------------------------------------------------------

    def _model(self, name: str, key: str) -> dict:
        model = self.fixture.models.get(name)
        if model is None:
            raise FixtureMiss(key)
        return model

    def _latency_per_op(self, spec: KernelSpec, key: str) -> tuple[float, float]:
        """(latency per counted operation, noise fraction) for the spec."""
        w = spec.workload
        if w in _CHAIN_MODEL_KEYS or w is Workload.MIXED_INT_FP32:
            chain = self._model("chain", key)
            model_key = (
                spec.mixed.value if w is Workload.MIXED_INT_FP32
                else _CHAIN_MODEL_KEYS[w]
            )
            entry = chain.get(model_key)
            if entry is None:
                raise FixtureMiss(key)
            if spec.ilp == 1:
                return _interp(entry["true_anchors"], spec.chain_len, log_x=True), 0.0
            return float(entry["completion"]), 0.0

        if w is Workload.MMA_SYNC:
            mma = self._model("mma", key)
            if spec.mma is None or spec.mma.a_type not in mma["formats"]:
                raise FixtureMiss(key)
            return self._mma_latency(mma, spec.ilp, spec.warps), 0.0

        if w is Workload.POINTER_CHASE:
            chase = self._model("pointer_chase", key)
            for level in chase["levels"]:
                upper = level["upper_bytes"]
                if upper is None or spec.working_set_bytes <= upper:
                    return float(level["cycles"]), float(chase.get("noise_frac", 0.0))
            raise FixtureMiss(key)

        if w in (Workload.SHARED_STRIDE, Workload.L1_STRIDE):
            stride_model = self._model("stride", key)
            space = "shared" if w is Workload.SHARED_STRIDE else "l1"
            anchors = stride_model.get(space, {}).get(str(spec.stride))
            if anchors is None:
                raise FixtureMiss(key)
            lat = _interp(anchors, spec.warps)
            return lat, float(stride_model.get("noise_frac", 0.0))

        raise FixtureMiss(key)

    @staticmethod
    def _mma_latency(model: dict, ilp: int, warps: int) -> float:
        """Completion cycles per matrix instruction at (ilp, warps).

        Saturating shape: below ``min_warps`` the curve keeps improving
        through the largest ILP (never saturates); at and above it, latency
        flattens exactly once ILP reaches the per-warp saturation level.
        """
        base = float(model["completion_base"])
        decay = float(model["ilp_decay"])
        min_warps = int(model["min_warps"])
        if warps == 1:
            return base * decay ** (ilp - 1)
        if warps < min_warps:
            top = float(model["lat_scale"]) * min_warps
            c0 = base + (top - base) * (warps - 1) / (min_warps - 1)
            return c0 * decay ** (ilp - 1)
        sat = int(model["sat_ilp"][str(warps)])
        gain = float(model["gain"])
        return float(model["lat_scale"]) * warps * (1 + gain * max(0, sat - ilp))

    # -- Backend interface ----------------------------------------------------

    def run(self, kernel: PtxKernel, spec: KernelSpec,
            policy: ExecutionPolicy) -> MeasurementRecord:
        spec.validate()
        key = spec.canonical_key()
        overhead = self.fixture.clock_overhead_cycles
        retained = policy.retained

        literal = self.fixture.table.get(key)
        if literal is not None:
            base_cycles = [int(c) for c in literal]
            cycles = tuple(
                base_cycles[(r * spec.warps + w) % len(base_cycles)]
                for r in range(retained) for w in range(spec.warps)
            )
        elif spec.workload is Workload.CLOCK_OVERHEAD:
            cycles = tuple([overhead] * (spec.warps * retained))
        elif spec.workload in (Workload.GLOBAL_BW_READ, Workload.GLOBAL_BW_WRITE):
            direction = "read" if spec.workload is Workload.GLOBAL_BW_READ else "write"
            bw = self.fixture.bandwidth_bytes_per_s[direction]
            seconds = spec.working_set_bytes / bw
            per_warp = max(1, round(seconds * self.device.clock_mhz * 1e6))
            cycles = tuple([per_warp + overhead] * (spec.warps * retained))
        elif spec.workload is Workload.L2_WARP_LOADSTORE:
            model = self._model("l2_warp", key)
            mean_total = _interp(model["anchors"], spec.warps)
            noise = float(model.get("noise_frac", 0.0))
            rng = random.Random(_stable_seed(policy.seed, key))
            out = []
            for _ in range(retained * spec.warps):
                u = rng.uniform(-noise, noise) if noise else 0.0
                out.append(max(overhead + 1, round(mean_total * (1 + u)) + overhead))
            cycles = tuple(out)
        else:
            lat, noise = self._latency_per_op(spec, key)
            ops = spec.total_instructions
            rng = random.Random(_stable_seed(policy.seed, key))
            out = []
            for _ in range(retained * spec.warps):
                u = rng.uniform(-noise, noise) if noise else 0.0
                out.append(round(lat * (1 + u) * ops) + overhead)
            cycles = tuple(out)

        total_cycles = sum(cycles) + overhead * spec.warps * policy.warmup_discards
        wall = total_cycles / (self.device.clock_mhz * 1e6)
        checksum = hashlib.sha256(f"{key}|{policy.seed}".encode()).hexdigest()[:16]
        return MeasurementRecord(
            spec=spec,
            device=self.device,
            cycles_per_warp=cycles,
            wall_time_s=max(wall, 1e-12),
            repetitions=retained,
            discarded_warmups=policy.warmup_discards,
            checksum=checksum,
        )

    def probe_shared_limit(self) -> int:
        return self.fixture.shared_limit_bytes

    def measure_bandwidth(self, direction: str, nbytes: int) -> float:
        if direction not in ("read", "write"):
            raise InvalidSpec(f"direction must be read or write, got {direction!r}")
        if nbytes <= 0:
            raise InvalidSpec("bandwidth transfer must move at least one byte")
        l2_bytes = self.device.l2_mb * 1024 * 1024
        if nbytes <= l2_bytes:
            raise InvalidSpec(
                f"footprint {nbytes} B must exceed the L2 capacity ({l2_bytes} B)"
            )
        if nbytes > self.device.global_gb * 1024**3:
            raise FootprintTooLarge(
                f"footprint {nbytes} B exceeds device memory "
                f"({self.device.global_gb} GiB)"
            )
        return self.fixture.bandwidth_bytes_per_s[direction]

    # -- extras used by the sweep driver ---------------------------------------

    def power_watts_for(self, spec: KernelSpec) -> Optional[float]:
        """Average draw the fixture recorded for this configuration, if any."""
        if spec.workload is Workload.MMA_SYNC and spec.mma is not None:
            value = self.fixture.power.get("mma_watts", {}).get(spec.mma.a_type)
            return None if value is None else float(value)
        return None

    def gemm_runtime(self, m: int, n: int, k: int) -> Optional[float]:
        value = self.fixture.gemm_runtime_s.get(f"{m}x{n}x{k}")
        return None if value is None else float(value)
