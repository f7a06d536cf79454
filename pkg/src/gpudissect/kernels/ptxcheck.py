"""Structural well-formedness checks for emitted PTX text.

Not a full grammar: verifies the properties every generated kernel must hold
(directives, brace balance, declared registers, resolvable branch targets,
exactly two cycle-counter reads) and an ISA-version floor when the
kind-qualified matrix instructions appear.
"""

from __future__ import annotations

import re

_DIRECTIVE_RE = re.compile(r"^\.version\s+(\d+)\.(\d+)\s*$", re.MULTILINE)
_TARGET_RE = re.compile(r"^\.target\s+(sm_\w+)\s*$", re.MULTILINE)
_ADDR_RE = re.compile(r"^\.address_size\s+64\s*$", re.MULTILINE)
_ENTRY_RE = re.compile(r"\.visible\s+\.entry\s+([A-Za-z_][\w$]*)")
_REG_DECL_RE = re.compile(
    r"\.reg\s+\.\w+\s+(%[A-Za-z_][\w]*)<(\d+)>\s*;"
)
_REG_USE_RE = re.compile(r"%[A-Za-z_][\w]*")
_LABEL_DEF_RE = re.compile(r"^\s*(\$[\w]+):", re.MULTILINE)
_BRA_RE = re.compile(r"\bbra(?:\.uni)?\s+(\$[\w]+)\s*;")

# Registers the machine provides; never declared.
_SPECIAL_REGS = {
    "%tid", "%ntid", "%ctaid", "%nctaid", "%laneid", "%warpid",
    "%clock", "%clock64", "%globaltimer",
}

_MIN_VERSION_FOR_KIND = (8, 7)


def validate_ptx(source: str, *, expect_clock_reads: int = 2) -> list[str]:
    """Return a list of problems; empty means the source passes."""
    problems: list[str] = []

    version = _DIRECTIVE_RE.search(source)
    if not version:
        problems.append("missing .version directive")
    if not _TARGET_RE.search(source):
        problems.append("missing .target directive")
    if not _ADDR_RE.search(source):
        problems.append("missing .address_size 64 directive")

    if "kind::" in source and version:
        got = (int(version.group(1)), int(version.group(2)))
        if got < _MIN_VERSION_FOR_KIND:
            problems.append(
                f"kind-qualified instructions need PTX ISA >= "
                f"{'.'.join(map(str, _MIN_VERSION_FOR_KIND))}, found {got[0]}.{got[1]}"
            )

    opens, closes = source.count("{"), source.count("}")
    if opens == 0:
        problems.append("no function body")
    # Operand vectors use braces too, so compare totals rather than scanning.
    if opens != closes:
        problems.append(f"unbalanced braces ({opens} open, {closes} close)")

    if not _ENTRY_RE.search(source):
        problems.append("no .visible .entry definition")
    if not re.search(r"\bret\s*;", source):
        problems.append("entry never returns")

    declared: set[str] = set()
    for match in _REG_DECL_RE.finditer(source):
        base, count = match.group(1), int(match.group(2))
        for i in range(count):
            declared.add(f"{base}{i}")
    for match in re.finditer(r"\.reg\s+\.\w+\s+(%[\w]+)\s*;", source):
        declared.add(match.group(1))

    for match in _REG_USE_RE.finditer(source):
        name = match.group(0)
        if name in declared:
            continue
        base = name.rstrip("0123456789")
        if base in _SPECIAL_REGS or name in _SPECIAL_REGS:
            continue
        # declaration tokens themselves: %r<12>
        end = match.end()
        if end < len(source) and source[end] == "<":
            continue
        problems.append(f"register {name} used but not declared")

    labels = set(_LABEL_DEF_RE.findall(source))
    for match in _BRA_RE.finditer(source):
        if match.group(1) not in labels:
            problems.append(f"branch to undefined label {match.group(1)}")

    clock_reads = source.count("%clock64")
    if clock_reads != expect_clock_reads:
        problems.append(
            f"expected exactly {expect_clock_reads} cycle-counter reads, "
            f"found {clock_reads}"
        )

    # deduplicate, preserving order
    seen: set[str] = set()
    unique = []
    for p in problems:
        if p not in seen:
            seen.add(p)
            unique.append(p)
    return unique


def assert_well_formed(source: str) -> None:
    problems = validate_ptx(source)
    if problems:
        raise ValueError("malformed PTX: " + "; ".join(problems))
