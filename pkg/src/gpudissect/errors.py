"""Exception taxonomy shared by every gpudissect module.

Each failure mode a caller is expected to branch on gets a named class.
Plain programming mistakes (wrong types, impossible arguments created by
code rather than data) stay as builtin exceptions.
"""


class GpuDissectError(Exception):
    """Base class for all toolkit errors."""


# --- kernel generation ---------------------------------------------------

class InvalidSpec(GpuDissectError):
    """A kernel spec, policy, or request is degenerate or out of range."""


class SpecTooLarge(GpuDissectError):
    """Register (or other resource) demand exceeds the per-thread budget."""

    def __init__(self, message: str, register_demand: int | None = None):
        super().__init__(message)
        self.register_demand = register_demand


class InvalidPrecisionKind(GpuDissectError):
    """Sub-byte matrix formats need the kind qualifier (and f16 must not carry it)."""


class UnsupportedShape(GpuDissectError):
    """(tile, element type) pair outside the supported instruction families."""


class FootprintTooLarge(GpuDissectError):
    """Requested working set exceeds the capacity of the targeted space."""


# --- execution backends ---------------------------------------------------

class DeviceUnavailable(GpuDissectError):
    """No usable device (or bridge) behind the live backend."""


class KernelLoadFailed(GpuDissectError):
    """The bridge could not load or launch a kernel; carries its diagnostics."""


class FixtureMiss(GpuDissectError):
    """Replay fixture has no entry covering the requested spec."""

    def __init__(self, key: str):
        super().__init__(f"no fixture entry for spec {key}")
        self.key = key


# --- metrics ---------------------------------------------------------------

class WrongWorkload(GpuDissectError):
    """Metric applied to a record whose workload does not define it."""


class ZeroCycles(GpuDissectError):
    """Measured cycles do not exceed the clock overhead."""


class InvalidRuntime(GpuDissectError):
    """Non-positive or non-finite runtime."""


class InvalidPower(GpuDissectError):
    """Non-positive average power."""


# --- curve analysis --------------------------------------------------------

class TooFewPoints(GpuDissectError):
    """Curve too short for the requested analysis."""


class NoPlateauFound(GpuDissectError):
    """Every segment collapses to a single sample; no stable level exists."""


class NeverSaturates(GpuDissectError):
    """Metric still growing through the last sample; reported, not fatal."""


class DisjointDomains(GpuDissectError):
    """Two curves share no x-range overlap."""


# --- power sampling --------------------------------------------------------

class SamplerUnavailable(GpuDissectError):
    """Power sampler executable not found or not runnable."""


class EmptyTrace(GpuDissectError):
    """No power samples fell inside the benchmark window."""


# --- SASS verification -----------------------------------------------------

class ListingMismatch(GpuDissectError):
    """Disassembly does not contain the kernel's entry symbol."""


class NoMatrixInstructionFound(GpuDissectError):
    """Listing from a matrix kernel contains no matrix opcode."""


class ToolchainMissing(GpuDissectError):
    """External assembler/disassembler not available on this host."""


# --- CLI / configuration ---------------------------------------------------

class ConfigInvalid(GpuDissectError):
    """Sweep config failed validation; names the offending field path."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class ResultsUnreadable(GpuDissectError):
    """Results file missing, unparsable, or of an unknown layout."""
