"""Power sampling around a benchmark window.

A sampler runs concurrently with the benchmark: started before, stopped
after, with both sides stamped by the same host monotonic clock so the trace
can be trimmed to exactly the run interval. Live mode drives an external
sampler process (the vendor SMI tool in CSV streaming mode by default) so
the toolkit carries no management-library linkage; replay mode synthesizes
the trace a fixture recorded.
"""

from __future__ import annotations

import datetime as _dt
import shutil
import subprocess
import time
from dataclasses import dataclass
from typing import Callable, Optional

from gpudissect.errors import EmptyTrace, InvalidSpec, SamplerUnavailable

DEFAULT_SAMPLER_TEMPLATE = (
    "nvidia-smi --query-gpu=timestamp,power.draw "
    "--format=csv,noheader,nounits -lms {period_ms}"
)


@dataclass(frozen=True)
class PowerTrace:
    samples: tuple[tuple[float, float], ...]   # (timestamp_s, watts)
    source: str
    interval_s: float

    def __post_init__(self):
        ts = [s[0] for s in self.samples]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise InvalidSpec("trace timestamps must be strictly increasing")
        if any(s[1] < 0 for s in self.samples):
            raise InvalidSpec("negative power sample")

    def trimmed(self, t0: float, t1: float) -> "PowerTrace":
        kept = tuple(s for s in self.samples if t0 <= s[0] <= t1)
        return PowerTrace(samples=kept, source=self.source, interval_s=self.interval_s)


def average_power(trace: PowerTrace, idle_baseline_w: float = 0.0) -> float:
    """Time-weighted (trapezoidal) mean draw; simple mean for <= 2 samples.

    Raw draw by default, matching the published tables; pass a measured
    idle baseline to subtract it (clamped at zero).
    """
    samples = trace.samples
    if not samples:
        raise EmptyTrace("no power samples in the trace")
    if len(samples) <= 2:
        mean = sum(w for _, w in samples) / len(samples)
    else:
        area = 0.0
        for (t0, w0), (t1, w1) in zip(samples, samples[1:]):
            area += 0.5 * (w0 + w1) * (t1 - t0)
        span = samples[-1][0] - samples[0][0]
        mean = area / span
    return max(0.0, mean - idle_baseline_w)


def _parse_timestamp(text: str) -> float:
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    # vendor SMI format: 2026/08/09 12:00:00.123
    stamp = _dt.datetime.strptime(text, "%Y/%m/%d %H:%M:%S.%f")
    return stamp.timestamp()


def parse_sampler_csv(
    text: str,
    *,
    time_col: int = 0,
    power_col: int = 1,
    source: str = "sampler",
    interval_s: float = 0.0,
) -> PowerTrace:
    """Parse "timestamp, power.draw [W]" lines, tolerating units and headers."""
    samples: list[tuple[float, float]] = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        cols = [c.strip() for c in line.split(",")]
        if len(cols) <= max(time_col, power_col):
            continue
        watts_text = cols[power_col].removesuffix("W").strip()
        try:
            ts = _parse_timestamp(cols[time_col])
            watts = float(watts_text)
        except ValueError:
            continue  # header or malformed line
        samples.append((ts, watts))
    if not samples:
        raise EmptyTrace("sampler produced no parsable samples")
    # guard against duplicate timestamps from coarse clocks
    deduped: list[tuple[float, float]] = []
    for ts, watts in samples:
        if deduped and ts <= deduped[-1][0]:
            ts = deduped[-1][0] + 1e-6
        deduped.append((ts, watts))
    return PowerTrace(samples=tuple(deduped), source=source, interval_s=interval_s)


class LiveSampler:
    """External sampler child process writing CSV to stdout."""

    def __init__(self, period_s: float, command_template: str = DEFAULT_SAMPLER_TEMPLATE):
        self.period_s = period_s
        self.command = command_template.format(
            period_ms=max(1, int(period_s * 1000))
        ).split()
        self._proc: Optional[subprocess.Popen] = None
        self._t0: float = 0.0

    def start(self) -> None:
        if shutil.which(self.command[0]) is None:
            raise SamplerUnavailable(f"sampler executable {self.command[0]!r} not found")
        self._t0 = time.monotonic()
        self._wall0 = time.time()
        self._proc = subprocess.Popen(
            self.command, stdout=subprocess.PIPE, stderr=subprocess.DEVNULL, text=True
        )

    def stop(self, window: tuple[float, float]) -> PowerTrace:
        assert self._proc is not None, "sampler never started"
        self._proc.terminate()
        out, _ = self._proc.communicate(timeout=10)
        trace = parse_sampler_csv(
            out, source=" ".join(self.command), interval_s=self.period_s
        )
        # realign wall-clock stamps onto the monotonic axis used for the run
        offset = self._t0 - self._wall0
        shifted = tuple((ts + offset, w) for ts, w in trace.samples)
        return PowerTrace(samples=shifted, source=trace.source,
                          interval_s=self.period_s)


class FixtureSampler:
    """Replay-mode sampler: the trace is supplied, not measured.

    Synthesizes a constant-draw trace spanning exactly the run window, so
    replay never under-samples however short the replayed run is.
    """

    def __init__(self, watts: float, period_s: float = 0.1):
        if watts < 0:
            raise InvalidSpec("fixture power must be non-negative")
        self.watts = watts
        self.period_s = period_s

    def start(self) -> None:
        pass

    def stop(self, window: tuple[float, float]) -> PowerTrace:
        t0, t1 = window
        span = t1 - t0
        if span <= 0:
            samples: tuple[tuple[float, float], ...] = ((t0, self.watts),)
        else:
            count = max(2, int(span / self.period_s) + 1)
            step = span / (count - 1)
            samples = tuple((t0 + i * step, self.watts) for i in range(count))
        return PowerTrace(samples=samples, source="fixture", interval_s=self.period_s)


def sample_during(
    run: Callable[[], object],
    period_s: float,
    sampler,
) -> tuple[object, PowerTrace]:
    """Run a benchmark with the sampler alive around it.

    The sampler starts before the run and stops after; the returned trace is
    trimmed to [run_start, run_end]. A run shorter than one sampling period
    can leave the window empty, which raises EmptyTrace with guidance.
    """
    sampler.start()
    t0 = time.monotonic()
    try:
        result = run()
    finally:
        t1 = time.monotonic()
        trace = sampler.stop((t0, t1))
    trimmed = trace.trimmed(t0, t1)
    if not trimmed.samples:
        raise EmptyTrace(
            f"no samples inside the {t1 - t0:.6f}s run window at period "
            f"{period_s}s; raise repetitions so the run outlasts the sampler"
        )
    return result, trimmed
