"""Metric arithmetic against independent oracles: exact rational arithmetic
for GEMM throughput, direct hand computation for the latency ratios."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpudissect import metrics
from gpudissect.backend import ExecutionPolicy, MeasurementRecord, ReplayBackend, TraceFixture
from gpudissect.errors import InvalidPower, InvalidRuntime, WrongWorkload, ZeroCycles
from gpudissect.kernels import generate
from gpudissect.kernels.types import (
    KernelSpec,
    MatrixShape,
    MixedVariant,
    Workload,
    mma_for_format,
)


def _record(device, spec, cycles):
    return MeasurementRecord(
        spec=spec, device=device, cycles_per_warp=tuple(cycles),
        wall_time_s=1e-3, repetitions=len(cycles) // spec.warps,
        discarded_warmups=0,
    )


class TestTrueLatency:
    def test_plain_arithmetic(self, gb203):
        spec = KernelSpec(workload=Workload.INT32_MAD, chain_len=1024,
                          iterations=1)
        record = _record(gb203.device, spec, [4097])
        result = metrics.true_latency(record, overhead_cycles=1)
        assert result.true_latency_cycles == 4.0
        assert result.n == 1

    def test_rejects_overlapped_records(self, gb203):
        spec = KernelSpec(workload=Workload.INT32_MAD, chain_len=8, ilp=2,
                          iterations=1)
        record = _record(gb203.device, spec, [100])
        with pytest.raises(WrongWorkload):
            metrics.true_latency(record, 1)

    def test_fp64_fixture_values(self, gb203, policy):
        for chain, iterations, expected in [(1024, 100, 63.57), (2, 51200, 37.5)]:
            spec = KernelSpec(workload=Workload.FP64_FMA, chain_len=chain,
                              iterations=iterations)
            record = gb203.run(generate(spec), spec, policy)
            got = metrics.true_latency(record, 1).true_latency_cycles
            assert got == pytest.approx(expected, abs=5e-3)

    def test_table_values_both_devices(self, gb203, gh100, policy):
        expectations = {
            "gb": {Workload.INT32_MAD: 4.0, Workload.FP32_FMA: 4.0,
                   Workload.FP64_FMA: 63.57},
            "gh": {Workload.INT32_MAD: 4.0, Workload.FP32_FMA: 4.0,
                   Workload.FP64_FMA: 8.04},
        }
        for tag, backend in [("gb", gb203), ("gh", gh100)]:
            overhead = backend.fixture.clock_overhead_cycles
            for workload, expected in expectations[tag].items():
                spec = KernelSpec(workload=workload, chain_len=1024,
                                  iterations=100)
                record = backend.run(generate(spec), spec, policy)
                got = metrics.true_latency(record, overhead).true_latency_cycles
                assert got == pytest.approx(expected, abs=5e-3)

    def test_mixed_table_values(self, gb203, gh100, policy):
        table = {("gb", MixedVariant.MIXED1): 15.96,
                 ("gb", MixedVariant.MIXED2): 26.28,
                 ("gh", MixedVariant.MIXED1): 31.62,
                 ("gh", MixedVariant.MIXED2): 43.54}
        for (tag, variant), expected in table.items():
            backend = gb203 if tag == "gb" else gh100
            overhead = backend.fixture.clock_overhead_cycles
            spec = KernelSpec(workload=Workload.MIXED_INT_FP32, mixed=variant,
                              chain_len=1024, iterations=100)
            record = backend.run(generate(spec), spec, policy)
            got = metrics.true_latency(record, overhead).true_latency_cycles
            assert got == pytest.approx(expected, abs=5e-3)


class TestCompletionLatency:
    def test_mma_single_instruction_exact(self, gb203, gh100, policy):
        spec = KernelSpec(workload=Workload.MMA_SYNC, iterations=100000,
                          mma=mma_for_format("e4m3"))
        kernel = generate(spec)
        gb = metrics.completion_latency(gb203.run(kernel, spec, policy), 1)
        gh = metrics.completion_latency(gh100.run(kernel, spec, policy), 2)
        assert gb.completion_latency_cycles == 1.21094
        assert gh.completion_latency_cycles == 1.65625

    def test_all_formats_share_the_value(self, gb203, policy):
        values = set()
        for fmt in ("e2m1", "e2m3", "e3m2", "e4m3", "e5m2"):
            spec = KernelSpec(workload=Workload.MMA_SYNC, iterations=100000,
                              mma=mma_for_format(fmt))
            record = gb203.run(generate(spec), spec, policy)
            values.add(metrics.completion_latency(record, 1).completion_latency_cycles)
        assert values == {1.21094}

    def test_empty_region_is_zero(self, gb203):
        spec = KernelSpec(workload=Workload.CLOCK_OVERHEAD)
        record = _record(gb203.device, spec, [1, 1])
        assert metrics.completion_latency(record, 1).completion_latency_cycles == 0.0

    def test_below_overhead_rejected(self, gb203):
        spec = KernelSpec(workload=Workload.CLOCK_OVERHEAD)
        record = _record(gb203.device, spec, [1])
        with pytest.raises(ZeroCycles):
            metrics.completion_latency(record, 2)


class TestThroughput:
    def test_plain_arithmetic(self, gb203):
        spec = KernelSpec(workload=Workload.INT32_MAD, chain_len=1024,
                          iterations=1)
        record = _record(gb203.device, spec, [1025])
        result = metrics.throughput(record, 1)
        assert result.instructions_per_cycle_per_sm == 1.0
        assert result.tflops is None

    def test_zero_cycles_rejected(self, gb203):
        spec = KernelSpec(workload=Workload.INT32_MAD, chain_len=1,
                          iterations=1)
        record = _record(gb203.device, spec, [1])
        with pytest.raises(ZeroCycles):
            metrics.throughput(record, 1)

    def test_monotone_over_short_chains(self, gb203, gh100, policy):
        """Throughput rises with chain length 1..9 at constant total work."""
        total = 98304
        for backend in (gb203, gh100):
            overhead = backend.fixture.clock_overhead_cycles
            for workload in (Workload.INT32_MAD, Workload.FP32_FMA,
                             Workload.FP64_FMA):
                previous = 0.0
                for chain in range(1, 10):
                    spec = KernelSpec(workload=workload, chain_len=chain,
                                      iterations=max(1, round(total / chain)))
                    record = backend.run(generate(spec), spec, policy)
                    ipc = metrics.throughput(
                        record, overhead).instructions_per_cycle_per_sm
                    assert ipc > previous * 0.999
                    previous = ipc

    def test_constant_total_instruction_sweep(self):
        total = 98304
        counts = []
        for chain in range(1, 10):
            spec = KernelSpec(workload=Workload.INT32_MAD, chain_len=chain,
                              iterations=max(1, round(total / chain)))
            counts.append(spec.total_instructions)
        assert max(counts) / min(counts) < 1.001

    def test_mma_reports_tflops(self, gb203, policy):
        spec = KernelSpec(workload=Workload.MMA_SYNC, ilp=6, warps=32,
                          iterations=100000, mma=mma_for_format("e4m3"))
        record = gb203.run(generate(spec), spec, policy)
        result = metrics.throughput(record, 1)
        assert result.tflops == pytest.approx(11.0, rel=0.05)


class TestGemmTflops:
    def test_unit_shape(self):
        assert metrics.gemm_tflops(MatrixShape(1, 1, 1), 2.0) == 1e-12

    def test_large_shape_against_oracle(self):
        got = metrics.gemm_tflops(MatrixShape(8192, 8192, 8192), 4.710e-3)
        oracle = Fraction(2 * 8192**3) / Fraction(4.710e-3) / Fraction(10**12)
        assert abs(got - float(oracle)) / float(oracle) <= 1e-12
        assert got == pytest.approx(233.4, rel=1e-3)

    def test_homogeneity(self):
        shape = MatrixShape(640, 320, 1280)
        assert metrics.gemm_tflops(shape, 2.0) == metrics.gemm_tflops(shape, 1.0) / 2

    def test_invalid_runtime(self):
        with pytest.raises(InvalidRuntime):
            metrics.gemm_tflops(MatrixShape(1, 1, 1), 0.0)
        with pytest.raises(InvalidRuntime):
            metrics.gemm_tflops(MatrixShape(1, 1, 1), -1.0)

    def test_ten_thousand_random_shapes(self):
        rng = random.Random(20260809)
        for _ in range(10_000):
            m = rng.randrange(1, 2**14 + 1)
            n = rng.randrange(1, 2**14 + 1)
            k = rng.randrange(1, 2**14 + 1)
            runtime = rng.uniform(1e-6, 10.0)
            got = metrics.gemm_tflops(MatrixShape(m, n, k), runtime)
            oracle = Fraction(2 * m * n * k) / Fraction(runtime) / Fraction(10**12)
            assert abs(Fraction(got) - oracle) <= oracle * Fraction(1, 10**12)


class TestPerfPerWatt:
    def test_plain(self):
        assert metrics.perf_per_watt(10.0, 50.0) == 0.2

    def test_invalid_power(self):
        with pytest.raises(InvalidPower):
            metrics.perf_per_watt(1.0, 0.0)


class TestAggregation:
    @settings(max_examples=50, deadline=None)
    @given(cycles=st.lists(st.integers(min_value=2, max_value=10**6),
                           min_size=1, max_size=40),
           rnd=st.randoms(use_true_random=False))
    def test_permutation_invariance(self, gb203, cycles, rnd):
        spec = KernelSpec(workload=Workload.INT32_MAD, chain_len=1,
                          iterations=1)
        shuffled = list(cycles)
        rnd.shuffle(shuffled)
        for how in (metrics.MEAN, metrics.MEDIAN):
            a = metrics.true_latency(_record(gb203.device, spec, cycles), 1, how)
            b = metrics.true_latency(_record(gb203.device, spec, shuffled), 1, how)
            assert a.true_latency_cycles == b.true_latency_cycles

    def test_replication_idempotence(self, gb203):
        spec = KernelSpec(workload=Workload.INT32_MAD, chain_len=1,
                          iterations=1)
        cycles = [5, 9, 13, 21]
        once = metrics.true_latency(_record(gb203.device, spec, cycles), 1)
        twice = metrics.true_latency(
            _record(gb203.device, spec, cycles + cycles), 1)
        assert once.true_latency_cycles == twice.true_latency_cycles

    def test_no_negative_latency_on_fixtures(self, gb203, gh100, policy):
        specs = [
            KernelSpec(workload=Workload.INT32_MAD, chain_len=4, iterations=64),
            KernelSpec(workload=Workload.POINTER_CHASE,
                       working_set_bytes=1 << 16, accesses=128),
            KernelSpec(workload=Workload.SHARED_STRIDE, stride=4, warps=8,
                       accesses=32, working_set_bytes=16384),
            KernelSpec(workload=Workload.CLOCK_OVERHEAD),
        ]
        for backend in (gb203, gh100):
            overhead = backend.fixture.clock_overhead_cycles
            for spec in specs:
                record = backend.run(generate(spec), spec, policy)
                result = metrics.completion_latency(record, overhead)
                assert result.completion_latency_cycles >= 0.0


class TestOrderingInvariant:
    def test_serialization_never_beats_overlap_on_synthetic(self, gb203):
        """On a sane synthetic fixture, a serialized chain is never faster
        per instruction than the overlapped version of the same op."""
        data = {
            "fixture_version": 1,
            "device": gb203.device.to_dict(),
            "clock_overhead_cycles": 1,
            "shared_limit_bytes": 1024,
            "bandwidth_bytes_per_s": {"read": 1.0, "write": 1.0},
            "models": {"chain": {"int32_mad": {
                "true_anchors": [[1, 6.0], [1024, 4.0]],
                "completion": 1.5,
            }}},
        }
        backend = ReplayBackend(TraceFixture(data))
        policy = ExecutionPolicy(9, 1, seed=0)
        serial = KernelSpec(workload=Workload.INT32_MAD, chain_len=64,
                            iterations=16)
        overlapped = KernelSpec(workload=Workload.INT32_MAD, chain_len=64,
                                ilp=4, iterations=16)
        t = metrics.true_latency(
            backend.run(generate(serial), serial, policy), 1)
        c = metrics.completion_latency(
            backend.run(generate(overlapped), overlapped, policy), 1)
        assert t.true_latency_cycles >= c.completion_latency_cycles
