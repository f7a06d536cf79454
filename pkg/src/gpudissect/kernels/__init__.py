"""Microbenchmark kernel generation: PTX text plus launch metadata.

All generators are deterministic functions of their inputs and safe to call
concurrently; identical inputs produce byte-identical sources.
"""

from gpudissect.kernels.compute import (
    DEFAULT_ARCH,
    gen_clock_overhead,
    gen_dependent_chain,
    gen_independent_ilp,
    register_demand,
)
from gpudissect.kernels.memory import (
    chase_walk,
    gen_bandwidth,
    gen_l2_warp_probe,
    gen_pointer_chase,
    gen_strided_probe,
    pointer_chain,
)
from gpudissect.kernels.mma import gen_mma_instruction
from gpudissect.kernels.ptxcheck import assert_well_formed, validate_ptx
from gpudissect.kernels.types import (
    BufferSpec,
    KernelSpec,
    LaunchDims,
    MatrixShape,
    MixedVariant,
    MmaDescriptor,
    PtxKernel,
    ResultLayout,
    Workload,
    mma_for_format,
)

from gpudissect.errors import InvalidSpec


def generate(spec: KernelSpec, *, seed: int = 0, arch: str = DEFAULT_ARCH) -> PtxKernel:
    """Route a validated spec to its family generator."""
    spec.validate()
    w = spec.workload
    if w is Workload.CLOCK_OVERHEAD:
        return gen_clock_overhead(arch=arch)
    if w is Workload.POINTER_CHASE:
        return gen_pointer_chase(
            spec.working_set_bytes, seed, accesses=spec.accesses, arch=arch
        )
    if w is Workload.SHARED_STRIDE:
        return gen_strided_probe(spec, "shared", arch=arch, dynamic_shared=True)
    if w is Workload.L1_STRIDE:
        return gen_strided_probe(spec, "l1", arch=arch)
    if w is Workload.L2_WARP_LOADSTORE:
        return gen_l2_warp_probe(
            spec.warps,
            working_set_bytes=spec.working_set_bytes,
            accesses=spec.accesses,
            arch=arch,
        )
    if w is Workload.GLOBAL_BW_READ:
        return gen_bandwidth("read", spec.working_set_bytes, arch=arch)
    if w is Workload.GLOBAL_BW_WRITE:
        return gen_bandwidth("write", spec.working_set_bytes, arch=arch)
    if spec.ilp == 1 and w is not Workload.MMA_SYNC:
        return gen_dependent_chain(spec, arch=arch)
    return gen_independent_ilp(spec, arch=arch)


__all__ = [
    "BufferSpec", "DEFAULT_ARCH", "KernelSpec", "LaunchDims", "MatrixShape",
    "MixedVariant", "MmaDescriptor", "PtxKernel", "ResultLayout", "Workload",
    "assert_well_formed", "chase_walk", "gen_bandwidth", "gen_clock_overhead",
    "gen_dependent_chain", "gen_independent_ilp", "gen_l2_warp_probe",
    "gen_mma_instruction", "gen_pointer_chase", "gen_strided_probe", "generate",
    "mma_for_format", "pointer_chain", "register_demand", "validate_ptx",
    "InvalidSpec",
]
