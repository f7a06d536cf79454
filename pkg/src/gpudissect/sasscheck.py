"""Assemble-and-inspect verification of generated PTX.

Compiling PTX with the vendor assembler and disassembling the result proves
two things the generator cannot: (a) no optimization collapsed the measured
instruction chain, and (b) matrix instructions lowered to the expected
SASS opcode family. Tool invocations are pluggable command templates;
checked-in fixture listings keep every check runnable without the toolkit.
"""

from __future__ import annotations

import json
import re
import shlex
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from gpudissect.errors import (
    ListingMismatch,
    NoMatrixInstructionFound,
    ToolchainMissing,
)
from gpudissect.kernels.types import MmaDescriptor, PtxKernel, Workload

PTXAS_TEMPLATE = "ptxas -arch={arch} -o {cubin} {ptx}"
DISASM_TEMPLATE = "cuobjdump -sass {cubin}"

MATRIX_FAMILIES = frozenset({"HMMA", "QMMA", "OMMA", "IMMA", "BMMA"})

# SASS opcode families implementing each measured workload class. Prefix
# matched and extensible: expectations are data, not code.
WORKLOAD_FAMILIES = {
    Workload.INT32_MAD: frozenset({"IMAD"}),
    Workload.FP32_FMA: frozenset({"FFMA"}),
    Workload.FP64_FMA: frozenset({"DFMA", "DADD", "DMUL"}),
    Workload.MIXED_INT_FP32: frozenset({"IMAD", "FFMA"}),
    Workload.MMA_SYNC: MATRIX_FAMILIES,
    Workload.CLOCK_OVERHEAD: frozenset(),
}

_FUNCTION_RE = re.compile(r"^\s*Function\s*:\s*([\w$]+)\s*$")
_CODE_LINE_RE = re.compile(
    r"^\s*(?:/\*[0-9a-fA-F]+\*/)?\s*"          # optional address comment
    r"(@!?U?P\d+\s+)?"                          # optional predicate
    r"([A-Z][A-Z0-9_.:]*)\s*"                   # opcode with dot suffixes
    r"([^;]*);"                                 # operands up to ;
)


@dataclass(frozen=True)
class SassLine:
    opcode: str
    operands: str
    predicate: str = ""

    @property
    def family(self) -> str:
        return self.opcode.split(".", 1)[0]

    def render(self) -> str:
        head = f"{self.predicate} " if self.predicate else ""
        tail = f" {self.operands}" if self.operands else ""
        return f"{head}{self.opcode}{tail} ;"


@dataclass(frozen=True)
class SassListing:
    lines: tuple[SassLine, ...]
    arch: str
    entry: Optional[str] = None


@dataclass(frozen=True)
class OpcodeExpectation:
    input_format: MmaDescriptor
    expected: frozenset[str]
    arch: str

    def __post_init__(self):
        if not self.expected:
            raise ValueError("expectation needs at least one opcode family")


def parse_line(text: str) -> Optional[SassLine]:
    match = _CODE_LINE_RE.match(text)
    if not match:
        return None
    predicate = (match.group(1) or "").strip()
    opcode = match.group(2)
    operands = match.group(3).strip()
    if opcode.startswith("."):
        return None
    return SassLine(opcode=opcode, operands=operands, predicate=predicate)


def parse_listing(text: str, arch: str) -> list[SassListing]:
    """Split disassembler output into per-function listings.

    Text without Function headers (hand-written fixtures) becomes a single
    listing with no entry name.
    """
    listings: list[SassListing] = []
    current_name: Optional[str] = None
    current_lines: list[SassLine] = []

    def flush():
        nonlocal current_lines
        if current_name is not None or current_lines:
            listings.append(SassListing(
                lines=tuple(current_lines), arch=arch, entry=current_name
            ))
        current_lines = []

    saw_header = False
    for raw in text.splitlines():
        header = _FUNCTION_RE.match(raw)
        if header:
            if saw_header:
                flush()
            saw_header = True
            current_name = header.group(1)
            continue
        if raw.strip().startswith(".headerflags"):
            continue
        line = parse_line(raw)
        if line:
            current_lines.append(line)
    flush()
    return [l for l in listings if l.lines or l.entry]


def listing_for_entry(listings: Iterable[SassListing], entry: str) -> SassListing:
    for listing in listings:
        if listing.entry == entry:
            return listing
    raise ListingMismatch(f"entry symbol {entry!r} absent from the listing")


@dataclass(frozen=True)
class IntegrityReport:
    entry: str
    required: int
    counted: int
    passed: bool
    ratio: float
    families: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "entry": self.entry, "required": self.required,
            "counted": self.counted, "passed": self.passed,
            "ratio": self.ratio, "families": list(self.families),
        }


def verify_chain_integrity(kernel: PtxKernel, listing: SassListing) -> IntegrityReport:
    """Check that the assembler kept the measured chain intact.

    Counts arithmetic opcodes of the kernel's measured class; passes iff the
    count is at least chain_len * ilp per unrolled iteration (the loop body
    instance count in an un-unrolled build).
    """
    if listing.entry is not None and listing.entry != kernel.entry_symbol:
        raise ListingMismatch(
            f"listing is for {listing.entry!r}, kernel entry is "
            f"{kernel.entry_symbol!r}"
        )
    families = WORKLOAD_FAMILIES.get(kernel.spec.workload)
    if families is None:
        families = frozenset()
    required = (
        0 if kernel.spec.workload is Workload.CLOCK_OVERHEAD
        else kernel.spec.instructions_per_iteration
    )
    counted = sum(1 for line in listing.lines if line.family in families)
    ratio = counted / required if required else 1.0
    return IntegrityReport(
        entry=kernel.entry_symbol,
        required=required,
        counted=counted,
        passed=counted >= required,
        ratio=ratio,
        families=tuple(sorted(families)),
    )


@dataclass(frozen=True)
class MmaVerdict:
    passed: bool
    families: tuple[str, ...]
    offenders: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "families": list(self.families),
                "offenders": list(self.offenders)}


def classify_mma(listing: SassListing, expect: OpcodeExpectation) -> MmaVerdict:
    """Verdict on the opcode family of every matrix instruction in a listing."""
    found = [line.family for line in listing.lines if line.family in MATRIX_FAMILIES]
    if not found:
        raise NoMatrixInstructionFound(
            f"no matrix opcode in listing for arch {listing.arch}"
        )
    families = tuple(sorted(set(found)))
    offenders = tuple(sorted({f for f in found if f not in expect.expected}))
    return MmaVerdict(passed=not offenders, families=families, offenders=offenders)


# --- external toolchain ------------------------------------------------------

def _run_tool(command: str) -> str:
    argv = shlex.split(command)
    if shutil.which(argv[0]) is None:
        raise ToolchainMissing(f"{argv[0]!r} not found on PATH")
    proc = subprocess.run(argv, capture_output=True, text=True)
    if proc.returncode != 0:
        raise ToolchainMissing(
            f"{argv[0]} failed ({proc.returncode}): {proc.stderr.strip()}"
        )
    return proc.stdout


def assemble_and_disassemble(
    kernel: PtxKernel,
    arch: str,
    *,
    ptxas_template: str = PTXAS_TEMPLATE,
    disasm_template: str = DISASM_TEMPLATE,
    workdir: Optional[Path] = None,
) -> list[SassListing]:
    """ptxas + disassembler round trip; serialized per temporary workspace."""
    with tempfile.TemporaryDirectory(dir=workdir, prefix="gd_sass_") as tmp:
        tmp_path = Path(tmp)
        ptx_path, _ = kernel.write(tmp_path)
        cubin = tmp_path / f"{kernel.name}.cubin"
        _run_tool(ptxas_template.format(arch=arch, cubin=cubin, ptx=ptx_path))
        text = _run_tool(disasm_template.format(cubin=cubin))
    return parse_listing(text, arch)


def verification_report(
    kernel: PtxKernel,
    listing: SassListing,
    expect: Optional[OpcodeExpectation] = None,
) -> dict:
    """JSON-ready verification report for one kernel."""
    report: dict = {
        "kernel": kernel.name,
        "arch": listing.arch,
        "integrity": verify_chain_integrity(kernel, listing).to_dict(),
    }
    if expect is not None:
        report["mma"] = classify_mma(listing, expect).to_dict()
    return report


def write_report(report: dict, path: Path) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")
