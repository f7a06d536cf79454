"""Domain types for microbenchmark kernel generation.

A KernelSpec is a declarative description of one microbenchmark; generators
turn it into self-contained PTX text plus launch metadata. Fields a workload
family does not use must sit at their neutral value so that two specs that
mean the same benchmark compare (and hash) equal.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

from gpudissect.errors import InvalidSpec

# Launch width is warps * 32 threads in one block; single-SM probes never
# exceed one block of 32 warps.
WARP_SIZE = 32
MAX_WARPS = 32

# Per-thread register budget enforced at generation time.
REGISTER_BUDGET = 200


class Workload(enum.Enum):
    """One tag per microbenchmark family."""

    INT32_MAD = "int32_mad"
    FP32_FMA = "fp32_fma"
    FP64_FMA = "fp64_fma"
    MIXED_INT_FP32 = "mixed_int_fp32"
    MMA_SYNC = "mma_sync"
    POINTER_CHASE = "pointer_chase"
    SHARED_STRIDE = "shared_stride"
    L1_STRIDE = "l1_stride"
    L2_WARP_LOADSTORE = "l2_warp_loadstore"
    GLOBAL_BW_READ = "global_bw_read"
    GLOBAL_BW_WRITE = "global_bw_write"
    CLOCK_OVERHEAD = "clock_overhead"


class MixedVariant(enum.Enum):
    """Interleaving pattern for the mixed INT32/FP32 workload.

    MIXED1 is a strict 1:1 alternation, MIXED2 a 2:1 INT:FP pattern. The
    published tables name the variants without defining the mix; this is our
    interpretation and is swappable per config.
    """

    MIXED1 = "mixed1"
    MIXED2 = "mixed2"


CHAIN_WORKLOADS = frozenset({
    Workload.INT32_MAD,
    Workload.FP32_FMA,
    Workload.FP64_FMA,
    Workload.MIXED_INT_FP32,
})

MEMORY_WORKLOADS = frozenset({
    Workload.POINTER_CHASE,
    Workload.SHARED_STRIDE,
    Workload.L1_STRIDE,
    Workload.L2_WARP_LOADSTORE,
    Workload.GLOBAL_BW_READ,
    Workload.GLOBAL_BW_WRITE,
})


class MatrixShape(NamedTuple):
    m: int
    n: int
    k: int

    def __str__(self) -> str:
        return f"m{self.m}n{self.n}k{self.k}"

    @classmethod
    def parse(cls, text: str) -> "MatrixShape":
        import re

        match = re.fullmatch(r"m(\d+)n(\d+)k(\d+)", text)
        if not match:
            raise InvalidSpec(f"bad tile shape {text!r}; expected like m16n8k32")
        return cls(*(int(g) for g in match.groups()))


# Element types accepted by the matrix generator. The five low-precision
# formats must carry the f8f6f4 kind qualifier; f16 must not.
MMA_ELEMENT_TYPES = frozenset({
    "e2m1", "e2m3", "e3m2", "e4m3", "e5m2", "f16", "bf16", "tf32", "f64",
})
KIND_REQUIRED_TYPES = frozenset({"e2m1", "e2m3", "e3m2", "e4m3", "e5m2"})
KIND_F8F6F4 = "f8f6f4"


@dataclass(frozen=True)
class MmaDescriptor:
    """One matrix-multiply-accumulate instruction variant."""

    tile: MatrixShape = MatrixShape(16, 8, 32)
    a_type: str = "e4m3"
    b_type: str = "e4m3"
    accum_type: str = "f32"
    kind_suffix: Optional[str] = None

    def __post_init__(self):
        for t in (self.a_type, self.b_type):
            if t not in MMA_ELEMENT_TYPES:
                raise InvalidSpec(f"unknown matrix element type {t!r}")
        if self.accum_type not in ("f32", "f64"):
            raise InvalidSpec(f"unknown accumulator type {self.accum_type!r}")
        if self.kind_suffix not in (None, KIND_F8F6F4):
            raise InvalidSpec(f"unknown kind suffix {self.kind_suffix!r}")

    def key(self) -> str:
        kind = self.kind_suffix or "-"
        return f"{self.tile}:{self.a_type}:{self.b_type}:{self.accum_type}:{kind}"


def mma_for_format(fmt: str, tile: MatrixShape = MatrixShape(16, 8, 32)) -> MmaDescriptor:
    """Descriptor for a same-type A/B instruction, kind applied when needed."""
    kind = KIND_F8F6F4 if fmt in KIND_REQUIRED_TYPES else None
    return MmaDescriptor(tile=tile, a_type=fmt, b_type=fmt, accum_type="f32", kind_suffix=kind)


# Neutral values for fields a family ignores.
_NEUTRAL = {
    "chain_len": 1,
    "ilp": 1,
    "iterations": 1,
    "warps": 1,
    "stride": 1,
    "working_set_bytes": 0,
    "accesses": 0,
    "mma": None,
    "mixed": None,
}

# Fields each family is allowed to vary away from neutral.
_ACTIVE_FIELDS = {
    Workload.INT32_MAD: {"chain_len", "ilp", "iterations", "warps"},
    Workload.FP32_FMA: {"chain_len", "ilp", "iterations", "warps"},
    Workload.FP64_FMA: {"chain_len", "ilp", "iterations", "warps"},
    Workload.MIXED_INT_FP32: {"chain_len", "ilp", "iterations", "warps", "mixed"},
    Workload.MMA_SYNC: {"chain_len", "ilp", "iterations", "warps", "mma"},
    Workload.POINTER_CHASE: {"working_set_bytes", "accesses"},
    Workload.SHARED_STRIDE: {"stride", "warps", "accesses", "working_set_bytes"},
    Workload.L1_STRIDE: {"stride", "warps", "accesses", "working_set_bytes"},
    Workload.L2_WARP_LOADSTORE: {"warps", "accesses", "working_set_bytes"},
    Workload.GLOBAL_BW_READ: {"working_set_bytes"},
    Workload.GLOBAL_BW_WRITE: {"working_set_bytes"},
    Workload.CLOCK_OVERHEAD: set(),
}

# Fields that must be set (non-neutral) for the family to make sense.
_REQUIRED_FIELDS = {
    Workload.MIXED_INT_FP32: {"mixed"},
    Workload.MMA_SYNC: {"mma"},
    Workload.POINTER_CHASE: {"working_set_bytes", "accesses"},
    Workload.SHARED_STRIDE: {"accesses", "working_set_bytes"},
    Workload.L1_STRIDE: {"accesses", "working_set_bytes"},
    Workload.L2_WARP_LOADSTORE: {"accesses", "working_set_bytes"},
    Workload.GLOBAL_BW_READ: {"working_set_bytes"},
    Workload.GLOBAL_BW_WRITE: {"working_set_bytes"},
}

_CANONICAL_ORDER = (
    "workload", "mixed", "chain_len", "ilp", "iterations", "warps",
    "stride", "working_set_bytes", "accesses", "mma",
)


@dataclass(frozen=True)
class KernelSpec:
    """Declarative description of one microbenchmark configuration."""

    workload: Workload
    chain_len: int = 1
    ilp: int = 1
    iterations: int = 1
    warps: int = 1
    stride: int = 1
    working_set_bytes: int = 0
    accesses: int = 0
    mma: Optional[MmaDescriptor] = None
    mixed: Optional[MixedVariant] = None

    def validate(self) -> "KernelSpec":
        """Range checks plus neutral-field enforcement. Returns self."""
        if self.chain_len < 1:
            raise InvalidSpec("chain_len must be >= 1")
        if self.ilp < 1:
            raise InvalidSpec("ilp must be >= 1")
        if self.iterations < 1:
            raise InvalidSpec("iterations must be >= 1")
        if not 1 <= self.warps <= MAX_WARPS:
            raise InvalidSpec(f"warps must be in 1..{MAX_WARPS}, got {self.warps}")
        if self.stride < 1:
            raise InvalidSpec("stride must be >= 1")
        if self.working_set_bytes < 0 or self.accesses < 0:
            raise InvalidSpec("sizes and counts must be non-negative")

        active = _ACTIVE_FIELDS[self.workload]
        for name, neutral in _NEUTRAL.items():
            value = getattr(self, name)
            if name not in active and value != neutral:
                raise InvalidSpec(
                    f"{self.workload.value} ignores {name}; it must stay at "
                    f"its neutral value {neutral!r} (got {value!r})"
                )
        for name in _REQUIRED_FIELDS.get(self.workload, ()):
            if getattr(self, name) in (None, 0):
                raise InvalidSpec(f"{self.workload.value} requires {name}")
        return self

    @property
    def instructions_per_iteration(self) -> int:
        return self.chain_len * self.ilp

    @property
    def total_instructions(self) -> int:
        """Per-thread (per-warp for matrix ops) count in the measured region."""
        if self.workload in CHAIN_WORKLOADS or self.workload is Workload.MMA_SYNC:
            return self.chain_len * self.ilp * self.iterations
        if self.workload is Workload.L2_WARP_LOADSTORE:
            return 2 * self.accesses  # load/store pairs
        if self.workload in MEMORY_WORKLOADS:
            return max(1, self.accesses)
        return 1  # clock overhead: the empty region counts as one subtraction

    def canonical_key(self) -> str:
        """Stable text key: fixed field order, neutral values normalized."""
        parts = []
        for name in _CANONICAL_ORDER:
            value = getattr(self, name)
            if name == "workload":
                parts.append(f"workload={value.value}")
            elif name == "mma":
                parts.append(f"mma={value.key() if value else '-'}")
            elif name == "mixed":
                parts.append(f"mixed={value.value if value else '-'}")
            else:
                parts.append(f"{name}={value}")
        return ";".join(parts)

    def to_dict(self) -> dict:
        return {
            "workload": self.workload.value,
            "mixed": self.mixed.value if self.mixed else None,
            "chain_len": self.chain_len,
            "ilp": self.ilp,
            "iterations": self.iterations,
            "warps": self.warps,
            "stride": self.stride,
            "working_set_bytes": self.working_set_bytes,
            "accesses": self.accesses,
            "mma": None if self.mma is None else {
                "tile": str(self.mma.tile),
                "a_type": self.mma.a_type,
                "b_type": self.mma.b_type,
                "accum_type": self.mma.accum_type,
                "kind_suffix": self.mma.kind_suffix,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KernelSpec":
        mma = data.get("mma")
        if mma is not None:
            mma = MmaDescriptor(
                tile=MatrixShape.parse(mma["tile"]),
                a_type=mma["a_type"],
                b_type=mma["b_type"],
                accum_type=mma.get("accum_type", "f32"),
                kind_suffix=mma.get("kind_suffix"),
            )
        mixed = data.get("mixed")
        return cls(
            workload=Workload(data["workload"]),
            mixed=MixedVariant(mixed) if mixed else None,
            chain_len=data.get("chain_len", 1),
            ilp=data.get("ilp", 1),
            iterations=data.get("iterations", 1),
            warps=data.get("warps", 1),
            stride=data.get("stride", 1),
            working_set_bytes=data.get("working_set_bytes", 0),
            accesses=data.get("accesses", 0),
            mma=mma,
        )


@dataclass(frozen=True)
class LaunchDims:
    grid: tuple[int, int, int] = (1, 1, 1)
    block: tuple[int, int, int] = (32, 1, 1)

    @property
    def blocks(self) -> int:
        return self.grid[0] * self.grid[1] * self.grid[2]

    @property
    def threads_per_block(self) -> int:
        return self.block[0] * self.block[1] * self.block[2]


@dataclass(frozen=True)
class BufferSpec:
    """One device buffer the executor must allocate, in kernel-parameter order."""

    name: str
    kind: str          # element type: u32 | u64 | f32 | f64
    count: int
    init: Optional[dict] = None   # None = zero-fill; else {"kind": ..., ...}

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "count": self.count,
                "init": self.init}


@dataclass(frozen=True)
class ResultLayout:
    """Where timing and checksum values land in the output buffers."""

    cycles_buffer: str = "out_cycles"
    cycles_per: str = "warp"        # "warp" or "thread"
    cycles_count: int = 1
    sink_buffer: str = "out_sink"
    sink_kind: str = "u32"
    sink_count: int = 32

    def to_dict(self) -> dict:
        return {
            "cycles_buffer": self.cycles_buffer,
            "cycles_per": self.cycles_per,
            "cycles_count": self.cycles_count,
            "sink_buffer": self.sink_buffer,
            "sink_kind": self.sink_kind,
            "sink_count": self.sink_count,
        }


@dataclass(frozen=True)
class PtxKernel:
    """Generated PTX program plus everything needed to launch it."""

    name: str
    source: str
    entry_symbol: str
    launch: LaunchDims
    result_layout: ResultLayout
    buffers: tuple[BufferSpec, ...]
    spec: KernelSpec
    dyn_shared_bytes: int = 0

    def metadata(self) -> dict:
        return {
            "kernel": self.name,
            "entry": self.entry_symbol,
            "launch": {"grid": list(self.launch.grid), "block": list(self.launch.block)},
            "dyn_shared_bytes": self.dyn_shared_bytes,
            "buffers": [b.to_dict() for b in self.buffers],
            "result_layout": self.result_layout.to_dict(),
            "spec": self.spec.to_dict(),
        }

    def write(self, out_dir: Path) -> tuple[Path, Path]:
        """Emit <name>.ptx (UTF-8) and the sidecar <name>.json."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        ptx_path = out_dir / f"{self.name}.ptx"
        meta_path = out_dir / f"{self.name}.json"
        ptx_path.write_text(self.source, encoding="utf-8")
        meta_path.write_text(
            json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        return ptx_path, meta_path
