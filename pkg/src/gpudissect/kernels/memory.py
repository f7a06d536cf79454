"""PTX generators for the memory-hierarchy microbenchmarks.

Pointer chase, shared-memory and L1 stride probes, the L2 warp-scaling
load/store benchmark, and the sustained global-bandwidth kernels. The chase
buffer is initialized host-side as one random Hamiltonian cycle so every load
address depends on the previous load's value.
"""

from __future__ import annotations

from gpudissect.errors import FootprintTooLarge, InvalidSpec
from gpudissect.kernels.compute import DEFAULT_ARCH, _epilogue, _finish, _loop, _prologue
from gpudissect.kernels.types import (
    WARP_SIZE,
    BufferSpec,
    KernelSpec,
    Workload,
)

CHASE_ELEMENT_BYTES = 8

# Static shared-memory window available without dynamic allocation, and the
# largest dynamic window any supported part exposes.
STATIC_SHARED_BYTES = 48 * 1024
MAX_DYNAMIC_SHARED_BYTES = 228 * 1024

_MASK64 = (1 << 64) - 1


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64, state


def pointer_chain(n_elements: int, seed: int) -> list[int]:
    """Random cyclic permutation over ``n_elements`` slots.

    Sattolo's shuffle driven by SplitMix64; following ``chain[i]`` from any
    slot returns to it after exactly n steps, visiting every slot once. The
    executor side regenerates this array from (n, seed) with the identical
    algorithm, so only the parameters travel in the launch metadata.
    """
    if n_elements < 1:
        raise InvalidSpec("pointer chain needs at least one element")
    chain = list(range(n_elements))
    state = seed & _MASK64
    for i in range(n_elements - 1, 0, -1):
        value, state = _splitmix64(state)
        j = value % i
        chain[i], chain[j] = chain[j], chain[i]
    return chain


def chase_walk(chain: list[int], accesses: int, start: int = 0) -> int:
    """Final slot index after ``accesses`` dependent loads (checksum oracle)."""
    idx = start
    for _ in range(accesses):
        idx = chain[idx]
    return idx


def gen_pointer_chase(
    working_set_bytes: int,
    seed: int,
    *,
    accesses: int = 1024,
    arch: str = DEFAULT_ARCH,
) -> "PtxKernel":
    """Serialized random walk over a device buffer of index-sized elements."""
    if working_set_bytes < CHASE_ELEMENT_BYTES:
        raise InvalidSpec(
            f"working set must hold at least one {CHASE_ELEMENT_BYTES}-byte element"
        )
    if accesses < 1:
        raise InvalidSpec("accesses must be >= 1")
    elements = working_set_bytes // CHASE_ELEMENT_BYTES
    spec = KernelSpec(
        workload=Workload.POINTER_CHASE,
        working_set_bytes=elements * CHASE_ELEMENT_BYTES,
        accesses=accesses,
    ).validate()

    reg_decls = [".reg .pred %p<2>;", ".reg .b32 %r<12>;", ".reg .b64 %rd<12>;",
                 ".reg .b64 %t<3>;", ".reg .b64 %idx<1>;"]
    body = _prologue(["p_chase"])
    body.append("    mov.u64 %idx0, 0;")
    measured = [
        "    shl.b64 %rd4, %idx0, 3;",
        "    add.u64 %rd5, %rd2, %rd4;",
        "    ld.global.u64 %idx0, [%rd5];",
    ]
    body += _loop(measured, accesses)
    body += _epilogue("u64", [])
    body.append("    st.global.u64 [%rd9], %idx0;")

    name = f"gd_chase_ws{elements * CHASE_ELEMENT_BYTES}_a{accesses}"
    chase_buffer = BufferSpec(
        name="chase",
        kind="u64",
        count=elements,
        init={"kind": "pointer_chain", "seed": seed, "elements": elements},
    )
    return _finish(
        spec, name, arch, reg_decls, body, "u64",
        extra_buffers=(chase_buffer,), extra_params=("p_chase",),
    )


def gen_strided_probe(
    spec: KernelSpec,
    space: str,
    *,
    arch: str = DEFAULT_ARCH,
    dynamic_shared: bool = False,
) -> "PtxKernel":
    """Strided loads from shared memory or an L1-resident read-only buffer.

    Each thread performs ``spec.accesses`` loads at ``spec.stride`` elements,
    wrapping inside the working set; per-warp timing is emitted. Stride 4
    with many warps is the bank-conflict-inducing pattern.
    """
    spec.validate()
    if space not in ("shared", "l1"):
        raise InvalidSpec(f"unknown probe space {space!r}")
    expected = Workload.SHARED_STRIDE if space == "shared" else Workload.L1_STRIDE
    if spec.workload is not expected:
        raise InvalidSpec(f"spec workload {spec.workload.value} does not match {space}")

    elements = spec.working_set_bytes // 4
    if elements < 1:
        raise InvalidSpec("working set must hold at least one 4-byte element")
    if elements & (elements - 1):
        raise InvalidSpec("strided-probe working set must be a power-of-two bytes")

    dyn_bytes = 0
    if space == "shared":
        if spec.working_set_bytes > MAX_DYNAMIC_SHARED_BYTES:
            raise FootprintTooLarge(
                f"{spec.working_set_bytes} B exceeds the shared-memory window"
            )
        if spec.working_set_bytes > STATIC_SHARED_BYTES:
            if not dynamic_shared:
                raise FootprintTooLarge(
                    f"{spec.working_set_bytes} B needs dynamic shared allocation "
                    f"(static limit {STATIC_SHARED_BYTES} B)"
                )
            dyn_bytes = spec.working_set_bytes

    reg_decls = [".reg .pred %p<2>;", ".reg .b32 %r<12>;", ".reg .b64 %rd<12>;",
                 ".reg .b64 %t<3>;", ".reg .b32 %sum<1>;", ".reg .b32 %pos<1>;",
                 ".reg .b32 %val<1>;"]
    extra_params: tuple[str, ...] = ()
    extra_buffers: tuple[BufferSpec, ...] = ()

    if space == "shared":
        load_op = "ld.shared.b32"
    else:
        load_op = "ld.global.nc.b32"
        extra_params = ("p_data",)
        extra_buffers = (BufferSpec("data", "u32", elements),)

    body = _prologue(list(extra_params))
    # start position: lane * stride, step: warp-width * stride, wrap by mask
    body += [
        f"    mul.lo.u32 %pos0, %r4, {spec.stride};",
        "    mov.b32 %sum0, 0;",
    ]
    if space == "shared":
        # zero-fill the window once per block, then barrier
        body += [
            "    mov.u64 %rd4, gd_sbuf;",
            f"    mov.u32 %r7, {elements};",
            "    mov.u32 %r8, %r0;",
            "$L_fill:",
            f"    setp.ge.u32 %p1, %r8, {elements};",
            "    @%p1 bra $L_filled;",
            "    mul.wide.u32 %rd5, %r8, 4;",
            "    add.u64 %rd6, %rd4, %rd5;",
            "    st.shared.b32 [%rd6], %r8;",
            "    add.u32 %r8, %r8, %r2;",
            "    bra $L_fill;",
            "$L_filled:",
            "    bar.sync 0;",
        ]

    mask = elements - 1
    measured = [
        f"    and.b32 %r9, %pos0, {mask};",
        "    mul.wide.u32 %rd6, %r9, 4;",
    ]
    if space == "shared":
        measured += [
            "    add.u64 %rd7, %rd4, %rd6;",
            f"    {load_op} %val0, [%rd7];",
        ]
    else:
        measured += [
            "    add.u64 %rd7, %rd2, %rd6;",
            f"    {load_op} %val0, [%rd7];",
        ]
    measured += [
        "    add.s32 %sum0, %sum0, %val0;",
        f"    add.u32 %pos0, %pos0, {WARP_SIZE * spec.stride};",
    ]

    body += _loop(measured, spec.accesses)
    body += _epilogue("u32", [])
    body.append("    st.global.u32 [%rd9], %sum0;")

    if space == "shared":
        if dyn_bytes:
            shared_decl = ".extern .shared .align 4 .b8 gd_sbuf[];"
        else:
            shared_decl = f".shared .align 4 .b8 gd_sbuf[{spec.working_set_bytes}];"
        reg_decls = [shared_decl] + reg_decls

    name = (
        f"gd_{spec.workload.value}_s{spec.stride}"
        f"_ws{spec.working_set_bytes}_a{spec.accesses}_w{spec.warps}"
    )
    return _finish(
        spec, name, arch, reg_decls, body, "u32",
        extra_buffers=extra_buffers, extra_params=extra_params,
        dyn_shared_bytes=dyn_bytes,
    )


def gen_l2_warp_probe(
    warps: int,
    *,
    working_set_bytes: int = 8 * 1024 * 1024,
    accesses: int = 1024,
    arch: str = DEFAULT_ARCH,
) -> "PtxKernel":
    """Per-thread load/store pairs against an L2-resident footprint.

    Each thread issues ``accesses`` load/store pairs; per-warp start/end
    cycles land in the cycles buffer for warp-scaling analysis.
    """
    if not 1 <= warps <= 32:
        raise InvalidSpec(f"warps must be in 1..32, got {warps}")
    if accesses < 1:
        raise InvalidSpec("accesses must be >= 1")
    elements = working_set_bytes // 4
    if elements < 1 or elements & (elements - 1):
        raise InvalidSpec("footprint must be a power-of-two byte count >= 4")
    spec = KernelSpec(
        workload=Workload.L2_WARP_LOADSTORE,
        warps=warps,
        accesses=accesses,
        working_set_bytes=working_set_bytes,
    ).validate()

    reg_decls = [".reg .pred %p<2>;", ".reg .b32 %r<12>;", ".reg .b64 %rd<12>;",
                 ".reg .b64 %t<3>;", ".reg .b32 %pos<1>;", ".reg .b32 %val<1>;"]
    body = _prologue(["p_data"])
    # thread-private starting offset spread across the footprint
    body.append("    mul.lo.u32 %pos0, %r3, 1027;")
    mask = elements - 1
    measured = [
        f"    and.b32 %r9, %pos0, {mask};",
        "    mul.wide.u32 %rd4, %r9, 4;",
        "    add.u64 %rd5, %rd2, %rd4;",
        "    ld.global.u32 %val0, [%rd5];",
        f"    xor.b32 %r10, %r9, {mask};",
        "    mul.wide.u32 %rd6, %r10, 4;",
        "    add.u64 %rd7, %rd2, %rd6;",
        "    st.global.u32 [%rd7], %val0;",
        "    add.u32 %pos0, %pos0, 65;",
    ]
    body += _loop(measured, accesses)
    body += _epilogue("u32", [])
    body.append("    st.global.u32 [%rd9], %val0;")

    name = f"gd_l2_warps{warps}_ws{working_set_bytes}_a{accesses}"
    return _finish(
        spec, name, arch, reg_decls, body, "u32",
        extra_buffers=(BufferSpec("data", "u32", elements),),
        extra_params=("p_data",),
    )


def gen_bandwidth(
    direction: str,
    working_set_bytes: int,
    *,
    arch: str = DEFAULT_ARCH,
) -> "PtxKernel":
    """Grid-stride sustained transfer over a footprint larger than L2."""
    if direction not in ("read", "write"):
        raise InvalidSpec(f"direction must be read or write, got {direction!r}")
    elements = working_set_bytes // 8
    if elements < 1:
        raise InvalidSpec("bandwidth footprint must hold at least one element")
    workload = (
        Workload.GLOBAL_BW_READ if direction == "read" else Workload.GLOBAL_BW_WRITE
    )
    spec = KernelSpec(workload=workload, working_set_bytes=elements * 8).validate()

    block = 256
    grid = max(1, min(65535, (elements + block * 64 - 1) // (block * 64)))

    reg_decls = [".reg .pred %p<2>;", ".reg .b32 %r<12>;", ".reg .b64 %rd<12>;",
                 ".reg .b64 %t<3>;", ".reg .b64 %acc<1>;", ".reg .b64 %pos<1>;",
                 ".reg .b64 %span<1>;", ".reg .b64 %lim<1>;"]
    body = _prologue(["p_data"])
    body += [
        "    cvt.u64.u32 %pos0, %r3;",
        f"    mov.u64 %lim0, {elements};",
        f"    mov.u64 %span0, {grid * block};",
        "    mov.u64 %acc0, 0;",
        "    mov.u64 %t0, %clock64;",
        "$L_body:",
        "    setp.ge.u64 %p1, %pos0, %lim0;",
        "    @%p1 bra $L_done;",
        "    shl.b64 %rd4, %pos0, 3;",
        "    add.u64 %rd5, %rd2, %rd4;",
    ]
    if direction == "read":
        body += [
            "    ld.global.u64 %rd6, [%rd5];",
            "    xor.b64 %acc0, %acc0, %rd6;",
        ]
    else:
        body += [
            "    st.global.u64 [%rd5], %pos0;",
        ]
    body += [
        "    add.u64 %pos0, %pos0, %span0;",
        "    bra $L_body;",
        "$L_done:",
        "    mov.u64 %t1, %clock64;",
    ]
    body += _epilogue("u64", [])
    if direction == "read":
        body.append("    st.global.u64 [%rd9], %acc0;")
    else:
        body.append("    st.global.u64 [%rd9], %pos0;")

    name = f"gd_bw_{direction}_ws{elements * 8}"
    return _finish(
        spec, name, arch, reg_decls, body, "u64",
        extra_buffers=(BufferSpec("data", "u64", elements),),
        extra_params=("p_data",),
        grid=(grid, 1, 1), block=(block, 1, 1),
    )
