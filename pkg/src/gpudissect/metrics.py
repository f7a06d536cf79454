"""Turn raw measurement records into latency, throughput, and efficiency.

True latency is cycles per instruction of a serialized dependent chain;
completion latency is the same ratio when independent chains may overlap.
Clock overhead (measured per session with the dedicated kernel) is
subtracted here, never in the backends, so raw records stay faithful.

Aggregation defaults follow the measurement methodology: mean for compute
benchmarks, median for memory benchmarks; both are available everywhere.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Optional

from gpudissect.backend.base import DeviceIdentity, MeasurementRecord
from gpudissect.errors import (
    InvalidPower,
    InvalidRuntime,
    WrongWorkload,
    ZeroCycles,
)
from gpudissect.kernels.types import (
    CHAIN_WORKLOADS,
    MatrixShape,
    KernelSpec,
    Workload,
)

MEAN = "mean"
MEDIAN = "median"

# Memory benchmarks aggregate by median; compute benchmarks by mean.
_MEDIAN_FAMILIES = frozenset({
    Workload.POINTER_CHASE, Workload.SHARED_STRIDE, Workload.L1_STRIDE,
    Workload.L2_WARP_LOADSTORE,
})


def default_aggregation(workload: Workload) -> str:
    return MEDIAN if workload in _MEDIAN_FAMILIES else MEAN


def _aggregate(values: list[float], how: str) -> float:
    if how == MEAN:
        return statistics.fmean(values)
    if how == MEDIAN:
        return float(statistics.median(values))
    raise ValueError(f"unknown aggregation {how!r}")


@dataclass(frozen=True)
class LatencyResult:
    true_latency_cycles: Optional[float]
    completion_latency_cycles: Optional[float]
    aggregation: str
    n: int


@dataclass(frozen=True)
class ThroughputResult:
    instructions_per_cycle_per_sm: float
    tflops: Optional[float] = None
    bytes_per_second: Optional[float] = None


def overhead_from_record(record: MeasurementRecord) -> float:
    """Raw clock-read overhead measured by the dedicated kernel."""
    if record.spec.workload is not Workload.CLOCK_OVERHEAD:
        raise WrongWorkload("overhead comes from the clock-overhead kernel")
    return statistics.fmean(record.cycles_per_warp)


def _per_sample_latency(record: MeasurementRecord, overhead_cycles: float) -> list[float]:
    ops = record.spec.total_instructions
    out = []
    for cycles in record.cycles_per_warp:
        net = cycles - overhead_cycles
        if net < 0:
            raise ZeroCycles(
                f"measured cycles {cycles} below overhead {overhead_cycles}"
            )
        out.append(net / ops)
    return out


def true_latency(
    record: MeasurementRecord,
    overhead_cycles: float,
    aggregation: Optional[str] = None,
) -> LatencyResult:
    """Cycles per instruction of a serialized chain (no overlap allowed)."""
    spec = record.spec
    if spec.ilp > 1:
        raise WrongWorkload("true latency is defined for single-chain records (ilp=1)")
    how = aggregation or default_aggregation(spec.workload)
    samples = _per_sample_latency(record, overhead_cycles)
    value = _aggregate(samples, how)
    return LatencyResult(
        true_latency_cycles=value,
        completion_latency_cycles=None,
        aggregation=how,
        n=len(samples),
    )


def completion_latency(
    record: MeasurementRecord,
    overhead_cycles: float,
    aggregation: Optional[str] = None,
) -> LatencyResult:
    """Cycles per instruction with overlap permitted across ilp chains.

    At ilp=1 and warps=1 on a matrix kernel this is the single-instruction
    completion figure.
    """
    spec = record.spec
    if spec.ilp < 1:
        raise WrongWorkload("completion latency needs at least one chain")
    how = aggregation or default_aggregation(spec.workload)
    samples = _per_sample_latency(record, overhead_cycles)
    value = _aggregate(samples, how)
    return LatencyResult(
        true_latency_cycles=None,
        completion_latency_cycles=value,
        aggregation=how,
        n=len(samples),
    )


# FLOPs of one matrix instruction: 2*M*N*K multiply-adds.
def _mma_flops(spec: KernelSpec) -> Optional[int]:
    if spec.workload is Workload.MMA_SYNC and spec.mma is not None:
        t = spec.mma.tile
        return 2 * t.m * t.n * t.k
    return None


def sms_occupied(spec: KernelSpec, device: DeviceIdentity) -> int:
    if spec.workload in (Workload.GLOBAL_BW_READ, Workload.GLOBAL_BW_WRITE):
        return device.sm_count
    return 1  # single-block probes pin one SM


def throughput(record: MeasurementRecord, overhead_cycles: float) -> ThroughputResult:
    """Instructions completed per cycle, normalized per occupied SM."""
    spec = record.spec
    mean_cycles = statistics.fmean(record.cycles_per_warp)
    net = mean_cycles - overhead_cycles
    if net <= 0:
        raise ZeroCycles("measured region shorter than the clock overhead")
    issued = spec.total_instructions * spec.warps
    sms = sms_occupied(spec, record.device)
    ipc = issued / net / sms

    tflops = None
    flops = _mma_flops(spec)
    if flops is not None:
        clock_hz = record.device.clock_mhz * 1e6
        tflops = ipc * sms * clock_hz * flops / 1e12

    bps = None
    if spec.workload in (Workload.GLOBAL_BW_READ, Workload.GLOBAL_BW_WRITE):
        bps = spec.working_set_bytes * record.repetitions / record.wall_time_s

    return ThroughputResult(
        instructions_per_cycle_per_sm=ipc,
        tflops=tflops,
        bytes_per_second=bps,
    )


def gemm_tflops(shape: MatrixShape, runtime_s: float) -> float:
    """Dense-GEMM throughput: 2*M*N*K floating ops over the runtime, in 1e12/s."""
    if not runtime_s > 0:
        raise InvalidRuntime(f"runtime must be positive, got {runtime_s!r}")
    return 2 * shape.m * shape.n * shape.k / runtime_s / 1e12


def perf_per_watt(tflops: float, avg_watts: float) -> float:
    if not avg_watts > 0:
        raise InvalidPower(f"average power must be positive, got {avg_watts!r}")
    return tflops / avg_watts


# Stable column order for CSV results; one row per sweep point.
RESULT_COLUMNS = [
    "suite", "device", "chip", "workload", "variant", "mma_format",
    "chain_len", "ilp", "iterations", "warps", "stride",
    "working_set_bytes", "accesses", "repetitions",
    "cycles_mean", "cycles_median",
    "true_latency_cycles", "completion_latency_cycles",
    "throughput_ipc_sm", "tflops", "bytes_per_second",
    "avg_power_w", "wall_time_s",
]


def result_row(
    suite: str,
    record: MeasurementRecord,
    overhead_cycles: float,
    avg_power_w: Optional[float] = None,
) -> dict:
    """Flatten one record into the stable result schema."""
    spec = record.spec
    row = {c: None for c in RESULT_COLUMNS}
    row.update({
        "suite": suite,
        "device": record.device.name,
        "chip": record.device.chip,
        "workload": spec.workload.value,
        "variant": spec.mixed.value if spec.mixed else None,
        "mma_format": spec.mma.a_type if spec.mma else None,
        "chain_len": spec.chain_len,
        "ilp": spec.ilp,
        "iterations": spec.iterations,
        "warps": spec.warps,
        "stride": spec.stride,
        "working_set_bytes": spec.working_set_bytes,
        "accesses": spec.accesses,
        "repetitions": record.repetitions,
        "cycles_mean": statistics.fmean(record.cycles_per_warp),
        "cycles_median": float(statistics.median(record.cycles_per_warp)),
        "avg_power_w": avg_power_w,
        "wall_time_s": record.wall_time_s,
    })
    if spec.workload is Workload.CLOCK_OVERHEAD:
        return row

    if spec.ilp == 1 and (spec.workload in CHAIN_WORKLOADS
                          or spec.workload in _MEDIAN_FAMILIES):
        row["true_latency_cycles"] = true_latency(
            record, overhead_cycles
        ).true_latency_cycles
    row["completion_latency_cycles"] = completion_latency(
        record, overhead_cycles
    ).completion_latency_cycles
    tp = throughput(record, overhead_cycles)
    row["throughput_ipc_sm"] = tp.instructions_per_cycle_per_sm
    row["tflops"] = tp.tflops
    row["bytes_per_second"] = tp.bytes_per_second
    return row
