"""Matrix-instruction text generation.

Emits the full mma.sync instruction string for a descriptor, with the
.kind::f8f6f4 qualifier whenever either operand is one of the five
low-precision formats (FP4/FP6/FP8 encodings). Layout is fixed at .row.col
and the accumulator/output type at f32 for this instruction family.

Tile coverage: m16n8k32 is always available. m8n8k16 (f16) and m16n8k64
(low-precision kinds) sit behind ``allow_extended_tiles`` because their
operand fragment layouts differ; instruction text is still exact.
"""

from __future__ import annotations

from gpudissect.errors import InvalidPrecisionKind, UnsupportedShape
from gpudissect.kernels.types import (
    KIND_F8F6F4,
    KIND_REQUIRED_TYPES,
    MatrixShape,
    MmaDescriptor,
)

BASE_TILE = MatrixShape(16, 8, 32)

# tile -> element types the generator will emit for it
_DEFAULT_TILES = {
    BASE_TILE: KIND_REQUIRED_TYPES | {"f16"},
}
_EXTENDED_TILES = {
    MatrixShape(8, 8, 16): frozenset({"f16"}),
    MatrixShape(16, 8, 64): KIND_REQUIRED_TYPES,
}

# Per-warp b32 register counts for the m16n8k32 kind::f8f6f4 fragment layout:
# one byte-sized container per element regardless of 4/6/8-bit encoding.
FRAGMENT_REGS = {"a": 4, "b": 2, "acc": 4}


def gen_mma_instruction(desc: MmaDescriptor, *, allow_extended_tiles: bool = False) -> str:
    """Full PTX instruction string (no operands) for the descriptor."""
    if desc.a_type != desc.b_type:
        raise UnsupportedShape(
            f"operand types must match ({desc.a_type} vs {desc.b_type})"
        )
    if desc.accum_type != "f32":
        raise UnsupportedShape("this instruction family accumulates in f32 only")

    needs_kind = desc.a_type in KIND_REQUIRED_TYPES
    if needs_kind and desc.kind_suffix != KIND_F8F6F4:
        raise InvalidPrecisionKind(
            f"{desc.a_type} requires the kind::{KIND_F8F6F4} qualifier"
        )
    if not needs_kind and desc.kind_suffix is not None:
        raise InvalidPrecisionKind(
            f"kind::{desc.kind_suffix} does not apply to {desc.a_type}"
        )

    tiles = dict(_DEFAULT_TILES)
    if allow_extended_tiles:
        tiles.update(_EXTENDED_TILES)
    supported = tiles.get(desc.tile)
    if supported is None or desc.a_type not in supported:
        raise UnsupportedShape(
            f"unsupported (tile, type) pair ({desc.tile}, {desc.a_type})"
        )

    head = "mma.sync.aligned"
    if desc.kind_suffix:
        head += f".kind::{desc.kind_suffix}"
    return (
        f"{head}.{desc.tile}.row.col."
        f"{desc.accum_type}.{desc.a_type}.{desc.b_type}.{desc.accum_type}"
    )


def mma_operand_text(chain_index: int) -> str:
    """Operand lists for one accumulate-in-place instruction on chain k.

    Accumulator registers are private to the chain (D == C keeps the chain
    dependent); the A/B fragments are shared inputs.
    """
    base = 4 * chain_index
    acc = ", ".join(f"%facc{base + j}" for j in range(4))
    a = ", ".join(f"%va{j}" for j in range(4))
    b = ", ".join(f"%vb{j}" for j in range(2))
    return f"{{{acc}}}, {{{a}}}, {{{b}}}, {{{acc}}}"
