"""Structural analysis of metric-vs-parameter curves.

Cache-boundary detection segments a latency-vs-bytes curve into plateaus
separated by jumps; saturation detection finds where a throughput curve
stops improving; crossover finds where two curves trade places. All
functions are pure and parallel-safe.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

from gpudissect.errors import (
    DisjointDomains,
    InvalidSpec,
    NeverSaturates,
    NoPlateauFound,
    TooFewPoints,
)

X_BYTES = "bytes"
X_WARPS = "warps"
X_ILP = "ilp"
X_CHAIN_LEN = "chain_len"
_X_KINDS = (X_BYTES, X_WARPS, X_ILP, X_CHAIN_LEN)

# Defaults for the boundary and saturation detectors. The published analysis
# identifies regions and saturation points by eye; these thresholds are ours
# and configurable.
DEFAULT_MIN_JUMP_RATIO = 1.5
DEFAULT_SATURATION_WINDOW = 3
DEFAULT_SATURATION_TOLERANCE = 0.05


@dataclass(frozen=True)
class LatencyCurve:
    """Ordered (x, cycles) series; x strictly increasing, y finite positive."""

    x_kind: str
    points: tuple[tuple[int, float], ...]

    def __post_init__(self):
        if self.x_kind not in _X_KINDS:
            raise InvalidSpec(f"unknown x kind {self.x_kind!r}")
        xs = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise InvalidSpec("x values must be strictly increasing")
        for _, y in self.points:
            if not (math.isfinite(y) and y > 0):
                raise InvalidSpec(f"curve values must be finite and positive, got {y}")

    @property
    def xs(self) -> list[int]:
        return [p[0] for p in self.points]

    @property
    def ys(self) -> list[float]:
        return [p[1] for p in self.points]

    def scaled(self, factor: float) -> "LatencyCurve":
        return LatencyCurve(
            self.x_kind, tuple((x, y * factor) for x, y in self.points)
        )


@dataclass(frozen=True)
class HierarchyLevel:
    label: str
    plateau_cycles: float
    extent_upper_bytes: int
    confidence: float


@dataclass(frozen=True)
class HierarchyReport:
    """Inferred memory levels; extents partition the sampled range."""

    levels: tuple[HierarchyLevel, ...]

    def __post_init__(self):
        uppers = [lv.extent_upper_bytes for lv in self.levels]
        if any(b <= a for a, b in zip(uppers, uppers[1:])):
            raise InvalidSpec("level extents must be strictly increasing")
        plateaus = [lv.plateau_cycles for lv in self.levels]
        if any(b < a for a, b in zip(plateaus, plateaus[1:])):
            raise InvalidSpec("deeper levels cannot be faster than shallower ones")

    def to_dict(self) -> dict:
        return {
            "levels": [
                {
                    "label": lv.label,
                    "plateau_cycles": lv.plateau_cycles,
                    "extent_upper_bytes": lv.extent_upper_bytes,
                    "confidence": lv.confidence,
                }
                for lv in self.levels
            ]
        }


def _median_filter3(ys: list[float]) -> list[float]:
    out = []
    for i in range(len(ys)):
        window = ys[max(0, i - 1): i + 2]
        out.append(float(statistics.median(window)))
    return out


def _level_labels(count: int) -> list[str]:
    if count == 1:
        return ["flat"]
    labels = [f"L{i + 1}" for i in range(count - 1)]
    return labels + ["global"]


def detect_boundaries(
    curve: LatencyCurve,
    min_jump_ratio: float = DEFAULT_MIN_JUMP_RATIO,
) -> HierarchyReport:
    """Segment a latency-vs-bytes curve into plateaus separated by jumps.

    The curve is median-filtered (window 3); a boundary is declared wherever
    the filtered latency rises by at least ``min_jump_ratio`` between
    consecutive samples. Plateau level is the median of the raw segment;
    the boundary position is the geometric mean of the last pre-jump and
    first post-jump x, matching log-spaced sampling.
    """
    if curve.x_kind != X_BYTES:
        raise InvalidSpec("boundary detection runs on byte-indexed curves")
    if len(curve.points) < 3:
        raise TooFewPoints(f"need >= 3 points, got {len(curve.points)}")
    if min_jump_ratio <= 1.0:
        raise InvalidSpec("min_jump_ratio must exceed 1")

    xs, ys = curve.xs, curve.ys
    filtered = _median_filter3(ys)

    jump_after: list[int] = []     # boundary between index i and i+1
    ratios: list[float] = []
    for i in range(len(filtered) - 1):
        ratio = filtered[i + 1] / filtered[i]
        if ratio >= min_jump_ratio:
            jump_after.append(i)
            ratios.append(ratio)

    segments: list[tuple[int, int]] = []
    start = 0
    for i in jump_after:
        segments.append((start, i))
        start = i + 1
    segments.append((start, len(xs) - 1))

    if all(end == begin for begin, end in segments) and len(segments) > 1:
        raise NoPlateauFound("every step jumps; no stable plateau in the curve")

    labels = _level_labels(len(segments))
    levels = []
    for idx, (begin, end) in enumerate(segments):
        plateau = float(statistics.median(ys[begin:end + 1]))
        if idx < len(jump_after):
            j = jump_after[idx]
            upper = int(round(math.sqrt(xs[j] * xs[j + 1])))
            conf = min(1.0, max(0.0, (ratios[idx] - 1.0)
                                / (2.0 * (min_jump_ratio - 1.0))))
        else:
            upper = xs[-1]
            conf = 1.0 if idx == 0 else min(
                1.0, max(0.0, (ratios[idx - 1] - 1.0) / (2.0 * (min_jump_ratio - 1.0)))
            )
        levels.append(HierarchyLevel(
            label=labels[idx],
            plateau_cycles=plateau,
            extent_upper_bytes=upper,
            confidence=conf,
        ))
    return HierarchyReport(levels=tuple(levels))


def saturation_point(
    curve: LatencyCurve,
    window: int = DEFAULT_SATURATION_WINDOW,
    tolerance: float = DEFAULT_SATURATION_TOLERANCE,
    *,
    kind: str = "throughput",
) -> int:
    """Smallest x past which the metric stays within tolerance of its best.

    ``kind`` is "throughput" (higher is better) or "latency" (lower is
    better). A curve still strictly improving through its final ``window``
    samples never saturates; that case raises NeverSaturates, which callers
    treat as a reported outcome rather than a failure.
    """
    if curve.x_kind not in (X_WARPS, X_ILP):
        raise InvalidSpec("saturation analysis runs on warp- or ilp-indexed curves")
    if len(curve.points) < 3:
        raise TooFewPoints(f"need >= 3 points, got {len(curve.points)}")
    if kind not in ("throughput", "latency"):
        raise InvalidSpec(f"unknown curve kind {kind!r}")

    ys = curve.ys if kind == "throughput" else [-y for y in curve.ys]
    xs = curve.xs
    n = len(ys)

    tail = ys[-window:]
    strictly_growing = all(b > a for a, b in zip(tail, tail[1:]))
    best = max(ys)
    if strictly_growing and ys[-1] == best and ys.count(best) == 1:
        raise NeverSaturates("metric still improving through the last sample")

    floor = best - tolerance * abs(best)
    for j in range(n):
        if n - j < window:
            break
        if all(ys[k] >= floor for k in range(j, n)):
            return xs[j]
    raise NeverSaturates("no stable region within tolerance of the best value")


def crossover(a: LatencyCurve, b: LatencyCurve) -> float | None:
    """First x where sign(a.y - b.y) flips, linearly interpolated.

    Returns None when the curves never trade places (identical curves
    included). Symmetric in its arguments.
    """
    if a.x_kind != b.x_kind:
        raise InvalidSpec("curves must share an x kind")
    lo = max(a.xs[0], b.xs[0])
    hi = min(a.xs[-1], b.xs[-1])
    if lo > hi:
        raise DisjointDomains(f"x ranges [{a.xs[0]},{a.xs[-1]}] and "
                              f"[{b.xs[0]},{b.xs[-1]}] do not overlap")

    xs = sorted({x for x in a.xs + b.xs if lo <= x <= hi})

    def _at(curve: LatencyCurve, x: int) -> float:
        pts = curve.points
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if x0 <= x <= x1:
                if x1 == x0:
                    return y0
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        return pts[0][1] if x <= pts[0][0] else pts[-1][1]

    last_sign = 0
    prev_x: int | None = None
    prev_d = 0.0
    for x in xs:
        d = _at(a, x) - _at(b, x)
        sign = (d > 0) - (d < 0)
        if sign == 0 and last_sign != 0:
            return float(x)
        if last_sign != 0 and sign == -last_sign:
            return prev_x + (x - prev_x) * prev_d / (prev_d - d)
        if sign != 0:
            last_sign = sign
            prev_x, prev_d = x, d
    return None
