"""Independent text-level oracles over generated PTX.

These scanners know nothing about how the generators build their text; they
re-derive instruction counts and dependency structure from the emitted
source so the tests check the generators against something that cannot
share their bugs.
"""

from __future__ import annotations

import re

CHAIN_OPCODES = ("mad.lo.s32", "fma.rn.f32", "fma.rn.f64")
MMA_PREFIX = "mma.sync"

_VEC_RE = re.compile(r"\{([^}]*)\}")


def measured_region(source: str) -> str:
    """Text strictly between the two cycle-counter reads."""
    pieces = source.split("%clock64")
    assert len(pieces) == 3, "kernel must read the counter exactly twice"
    return pieces[1]


def count_opcode(region: str, opcode: str) -> int:
    return len(re.findall(rf"(?m)^\s*{re.escape(opcode)}\b", region))


def chain_instructions(region: str) -> list[tuple[str, str, list[str]]]:
    """(opcode, dst, srcs) for every chain-class instruction, in order."""
    out = []
    for raw in region.splitlines():
        line = raw.strip().rstrip(";").strip()
        if not line:
            continue
        opcode = line.split()[0]
        rest = line[len(opcode):].strip()
        if opcode.startswith(MMA_PREFIX):
            vectors = _VEC_RE.findall(rest)
            dst = vectors[0].split(",")[0].strip()
            srcs = [r.strip() for vec in vectors[1:] for r in vec.split(",")]
            out.append((opcode, dst, srcs))
        elif any(opcode == c for c in CHAIN_OPCODES):
            regs = [r.strip() for r in rest.split(",")]
            out.append((opcode, regs[0], regs[1:]))
    return out


def def_use_chains(region: str) -> dict[str, dict]:
    """Group chain instructions by destination register.

    Returns {dst: {"length": n, "dependent": bool, "srcs": set}} where
    ``dependent`` means every instruction on the chain reads its own
    destination (the previous step's result).
    """
    chains: dict[str, dict] = {}
    for opcode, dst, srcs in chain_instructions(region):
        slot = chains.setdefault(dst, {"length": 0, "dependent": True,
                                       "srcs": set(), "opcodes": set()})
        slot["length"] += 1
        slot["dependent"] = slot["dependent"] and (dst in srcs)
        slot["srcs"].update(srcs)
        slot["opcodes"].add(opcode)
    return chains


def disjoint_destinations(chains: dict[str, dict]) -> bool:
    """Chains never share a destination register (keys are unique already);
    additionally no chain reads another chain's destination."""
    dsts = set(chains)
    for dst, slot in chains.items():
        others = dsts - {dst}
        if slot["srcs"] & others:
            return False
    return True
