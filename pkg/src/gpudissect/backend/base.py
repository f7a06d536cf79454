"""Execution-backend contracts shared by the replay and live-GPU paths."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

from gpudissect.errors import InvalidSpec
from gpudissect.kernels.types import KernelSpec, PtxKernel


@dataclass(frozen=True)
class DeviceIdentity:
    """Reporting-only description of a device; chip is a free-form label."""

    name: str
    chip: str
    sm_count: int
    clock_mhz: int
    l1_kb: int
    l2_mb: int
    global_gb: int
    memory_kind: str

    def __post_init__(self):
        for attr in ("sm_count", "clock_mhz", "l1_kb", "l2_mb", "global_gb"):
            if getattr(self, attr) <= 0:
                raise InvalidSpec(f"device {attr} must be positive")

    def to_dict(self) -> dict:
        return {
            "name": self.name, "chip": self.chip, "sm_count": self.sm_count,
            "clock_mhz": self.clock_mhz, "l1_kb": self.l1_kb,
            "l2_mb": self.l2_mb, "global_gb": self.global_gb,
            "memory_kind": self.memory_kind,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DeviceIdentity":
        return cls(**data)


@dataclass(frozen=True)
class ExecutionPolicy:
    """How many repetitions to run and how many warm-ups to throw away.

    The warm-up runs execute but never reach the record: first-run latency
    inflation from cold caches would otherwise skew compute aggregates.
    """

    repetitions: int = 1024
    warmup_discards: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.repetitions < 1:
            raise InvalidSpec("repetitions must be >= 1")
        if self.warmup_discards < 0:
            raise InvalidSpec("warmup_discards must be >= 0")
        if self.repetitions - self.warmup_discards < 1:
            raise InvalidSpec(
                "policy must retain at least one repetition "
                f"({self.repetitions} - {self.warmup_discards} retained)"
            )

    @property
    def retained(self) -> int:
        return self.repetitions - self.warmup_discards


@dataclass(frozen=True)
class MeasurementRecord:
    """Raw output of one executed configuration.

    ``cycles_per_warp`` is repetition-major: retained repetition r occupies
    slots [r*warps, (r+1)*warps). Clock overhead has NOT been subtracted;
    the metrics layer does that so raw records stay faithful to the device.
    """

    spec: KernelSpec
    device: DeviceIdentity
    cycles_per_warp: tuple[int, ...]
    wall_time_s: float
    repetitions: int
    discarded_warmups: int
    checksum: object = None
    power_samples_w: Optional[tuple[tuple[float, float], ...]] = None

    def __post_init__(self):
        expected = self.spec.warps * self.repetitions
        if len(self.cycles_per_warp) != expected:
            raise InvalidSpec(
                f"cycles_per_warp has {len(self.cycles_per_warp)} entries; "
                f"expected warps*repetitions = {expected}"
            )
        if self.cycles_per_warp and self.wall_time_s <= 0:
            raise InvalidSpec("wall_time_s must be positive when work executed")


class Backend(Protocol):
    """Uniform device abstraction over replay fixtures and live hardware."""

    @property
    def device(self) -> DeviceIdentity: ...

    def run(self, kernel: PtxKernel, spec: KernelSpec,
            policy: ExecutionPolicy) -> MeasurementRecord: ...

    def probe_shared_limit(self) -> int: ...

    def measure_bandwidth(self, direction: str, nbytes: int) -> float: ...


def largest_accepted(lo: int, hi: int, accepts) -> int:
    """Largest value in [lo, hi] for which ``accepts`` holds (binary search).

    ``accepts`` must be monotone (accept below some threshold, reject above);
    returns lo-1 if even lo is rejected.
    """
    if lo > hi:
        raise InvalidSpec("empty search range")
    if not accepts(lo):
        return lo - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if accepts(mid):
            lo = mid
        else:
            hi = mid - 1
    return lo
