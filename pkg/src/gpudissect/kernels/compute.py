"""PTX generators for the arithmetic-pipeline microbenchmarks.

Every kernel is emitted as standalone PTX text so device-side behavior is
fixed when the text is written, out of reach of host-compiler optimization.
The measured region sits between exactly two reads of the cycle counter, and
the final chain registers feed a checksum store indexed by global thread id
so the measured instructions cannot be dead-code eliminated.
"""

from __future__ import annotations

from gpudissect.errors import InvalidSpec, SpecTooLarge
from gpudissect.kernels.mma import FRAGMENT_REGS, gen_mma_instruction, mma_operand_text
from gpudissect.kernels.types import (
    CHAIN_WORKLOADS,
    REGISTER_BUDGET,
    WARP_SIZE,
    BufferSpec,
    KernelSpec,
    LaunchDims,
    MixedVariant,
    PtxKernel,
    ResultLayout,
    Workload,
)

DEFAULT_ARCH = "sm_120a"
PTX_VERSION = "8.7"

# 32-bit-register-equivalent cost of the fixed scaffolding (indexing, params,
# clock values, loop counter) plus per-chain costs by workload.
BASE_REG_COST = 32
_CHAIN_REG_COST = {
    Workload.INT32_MAD: 2,        # accumulator + multiplier
    Workload.FP32_FMA: 2,
    Workload.FP64_FMA: 4,         # two 64-bit registers
    Workload.MIXED_INT_FP32: 4,   # one int pair + one fp pair
    Workload.MMA_SYNC: 4,         # four f32 accumulators
}
_MMA_SHARED_REG_COST = FRAGMENT_REGS["a"] + FRAGMENT_REGS["b"]


def _header(arch: str) -> list[str]:
    return [
        f".version {PTX_VERSION}",
        f".target {arch}",
        ".address_size 64",
        "",
    ]


def _prologue(extra_params: list[str]) -> list[str]:
    """Parameter loads, generic->global conversion, and thread indexing.

    Global thread id is assembled with mul+add on purpose: the measured
    opcode classes (mad/fma) must appear only inside the measured region.
    """
    lines = [
        "    ld.param.u64 %rd0, [p_cycles];",
        "    ld.param.u64 %rd1, [p_sink];",
    ]
    for i, name in enumerate(extra_params):
        lines.append(f"    ld.param.u64 %rd{2 + i}, [{name}];")
    lines += [
        "    cvta.to.global.u64 %rd0, %rd0;",
        "    cvta.to.global.u64 %rd1, %rd1;",
    ]
    for i in range(len(extra_params)):
        lines.append(f"    cvta.to.global.u64 %rd{2 + i}, %rd{2 + i};")
    lines += [
        "    mov.u32 %r0, %tid.x;",
        "    mov.u32 %r1, %ctaid.x;",
        "    mov.u32 %r2, %ntid.x;",
        "    mul.lo.u32 %r3, %r1, %r2;",
        "    add.u32 %r3, %r3, %r0;",          # global thread id
        "    and.b32 %r4, %r0, 31;",           # lane
        "    shr.u32 %r5, %r3, 5;",            # global warp id
    ]
    return lines


def _epilogue(sink_kind: str, sink_expr_lines: list[str]) -> list[str]:
    """Per-warp cycle store (lane 0) followed by the checksum store."""
    lines = [
        "    sub.u64 %t2, %t1, %t0;",
        "    setp.ne.u32 %p0, %r4, 0;",
        "    @%p0 bra $L_nostore;",
        "    mul.wide.u32 %rd8, %r5, 8;",
        "    add.u64 %rd8, %rd0, %rd8;",
        "    st.global.u64 [%rd8], %t2;",
        "$L_nostore:",
    ]
    width = {"u32": 4, "f32": 4, "u64": 8, "f64": 8}[sink_kind]
    lines += sink_expr_lines
    lines += [
        f"    mul.wide.u32 %rd9, %r3, {width};",
        "    add.u64 %rd9, %rd1, %rd9;",
    ]
    return lines


def _finish(
    spec: KernelSpec,
    name: str,
    arch: str,
    reg_decls: list[str],
    body: list[str],
    sink_kind: str,
    extra_buffers: tuple[BufferSpec, ...] = (),
    extra_params: tuple[str, ...] = (),
    grid: tuple[int, int, int] | None = None,
    block: tuple[int, int, int] | None = None,
    dyn_shared_bytes: int = 0,
) -> PtxKernel:
    launch = LaunchDims(
        grid=grid or (1, 1, 1),
        block=block or (WARP_SIZE * spec.warps, 1, 1),
    )
    total_threads = launch.blocks * launch.threads_per_block
    total_warps = total_threads // WARP_SIZE
    params = ["p_cycles", "p_sink", *extra_params]
    param_text = ",\n".join(f"    .param .u64 {p}" for p in params)

    lines = _header(arch)
    lines.append(f".visible .entry {name}(")
    lines.append(param_text)
    lines.append(")")
    lines.append("{")
    lines += [f"    {d}" for d in reg_decls]
    lines.append("")
    lines += body
    lines.append("    ret;")
    lines.append("}")

    buffers = (
        BufferSpec("out_cycles", "u64", total_warps),
        BufferSpec("out_sink", sink_kind, total_threads),
        *extra_buffers,
    )
    layout = ResultLayout(
        cycles_per="warp",
        cycles_count=total_warps,
        sink_kind=sink_kind,
        sink_count=total_threads,
    )
    return PtxKernel(
        name=name,
        source="\n".join(lines) + "\n",
        entry_symbol=name,
        launch=launch,
        result_layout=layout,
        buffers=buffers,
        spec=spec,
        dyn_shared_bytes=dyn_shared_bytes,
    )


def _loop(body: list[str], iterations: int) -> list[str]:
    lines = [
        f"    mov.u32 %r6, {iterations};",
        "    mov.u64 %t0, %clock64;",
        "$L_body:",
    ]
    lines += body
    lines += [
        "    sub.u32 %r6, %r6, 1;",
        "    setp.ne.u32 %p1, %r6, 0;",
        "    @%p1 bra $L_body;",
        "    mov.u64 %t1, %clock64;",
    ]
    return lines


def register_demand(spec: KernelSpec) -> int:
    """32-bit-register-equivalent demand of the generated kernel."""
    cost = BASE_REG_COST + _CHAIN_REG_COST.get(spec.workload, 0) * spec.ilp
    if spec.workload is Workload.MMA_SYNC:
        cost += _MMA_SHARED_REG_COST
    return cost


def _check_budget(spec: KernelSpec) -> None:
    demand = register_demand(spec)
    if demand > REGISTER_BUDGET:
        raise SpecTooLarge(
            f"spec needs {demand} registers/thread (budget {REGISTER_BUDGET})",
            register_demand=demand,
        )


def _chain_op_sequence(spec: KernelSpec) -> list[str]:
    """Per-step op class ('i' int32, 'f' fp32, 'd' fp64) along one chain."""
    if spec.workload is Workload.INT32_MAD:
        return ["i"] * spec.chain_len
    if spec.workload is Workload.FP32_FMA:
        return ["f"] * spec.chain_len
    if spec.workload is Workload.FP64_FMA:
        return ["d"] * spec.chain_len
    if spec.mixed is MixedVariant.MIXED1:
        return ["i" if step % 2 == 0 else "f" for step in range(spec.chain_len)]
    # MIXED2: two INT32 then one FP32, repeating
    return ["i" if step % 3 != 2 else "f" for step in range(spec.chain_len)]


_OP_TEXT = {
    "i": "mad.lo.s32 %iacc{k}, %iacc{k}, %im{k}, %iacc{k};",
    "f": "fma.rn.f32 %facc{k}, %facc{k}, %fm{k}, %facc{k};",
    "d": "fma.rn.f64 %dacc{k}, %dacc{k}, %dm{k}, %dacc{k};",
}


def _scalar_chain_kernel(spec: KernelSpec, arch: str) -> PtxKernel:
    ops = _chain_op_sequence(spec)
    kinds = set(ops)
    n = spec.ilp

    reg_decls = [".reg .pred %p<2>;", ".reg .b32 %r<12>;", ".reg .b64 %rd<12>;",
                 ".reg .b64 %t<3>;"]
    init = []
    if "i" in kinds:
        reg_decls += [f".reg .b32 %iacc<{n}>;", f".reg .b32 %im<{n}>;"]
        for k in range(n):
            init += [f"    mov.b32 %iacc{k}, {k + 1};",
                     f"    mov.b32 %im{k}, 3;"]
    if "f" in kinds:
        reg_decls += [f".reg .f32 %facc<{n}>;", f".reg .f32 %fm<{n}>;"]
        for k in range(n):
            # accumulator 1.0, multiplier ~1e-7 so the value stays finite
            init += [f"    mov.f32 %facc{k}, 0F3F800000;",
                     f"    mov.f32 %fm{k}, 0F33D6BF95;"]
    if "d" in kinds:
        reg_decls += [f".reg .f64 %dacc<{n}>;", f".reg .f64 %dm<{n}>;"]
        for k in range(n):
            init += [f"    mov.f64 %dacc{k}, 0D3FF0000000000000;",
                     f"    mov.f64 %dm{k}, 0D3E7AD7F29ABCAF48;"]

    # Round-robin across chains: all chains issue step s before step s+1.
    measured = []
    for step_kind in ops:
        for k in range(n):
            measured.append("    " + _OP_TEXT[step_kind].format(k=k))

    sink_kind = "u64" if kinds == {"d"} else "u32"
    if kinds == {"d"}:
        sink_lines = ["    mov.b64 %rd10, %dacc0;"]
        store = "    st.global.u64 [%rd9], %rd10;"
    elif kinds == {"i"}:
        sink_lines = ["    mov.b32 %r8, %iacc0;"]
        store = "    st.global.u32 [%rd9], %r8;"
    elif kinds == {"f"}:
        sink_lines = ["    mov.b32 %r8, %facc0;"]
        store = "    st.global.u32 [%rd9], %r8;"
    else:  # mixed: fold both chains into one word
        sink_lines = ["    mov.b32 %r8, %facc0;", "    xor.b32 %r8, %r8, %iacc0;"]
        store = "    st.global.u32 [%rd9], %r8;"

    body = _prologue([]) + init + _loop(measured, spec.iterations)
    body += _epilogue(sink_kind, sink_lines)
    body.append(store)

    tag = spec.workload.value if spec.mixed is None else spec.mixed.value
    name = f"gd_{tag}_c{spec.chain_len}_p{spec.ilp}_i{spec.iterations}_w{spec.warps}"
    return _finish(spec, name, arch, reg_decls, body, sink_kind)


def _mma_kernel(spec: KernelSpec, arch: str) -> PtxKernel:
    instr = gen_mma_instruction(spec.mma)
    n = spec.ilp
    reg_decls = [
        ".reg .pred %p<2>;", ".reg .b32 %r<12>;", ".reg .b64 %rd<12>;",
        ".reg .b64 %t<3>;",
        f".reg .f32 %facc<{4 * n}>;",
        f".reg .b32 %va<{FRAGMENT_REGS['a']}>;",
        f".reg .b32 %vb<{FRAGMENT_REGS['b']}>;",
    ]
    init = [f"    mov.b32 %va{j}, 1010580540;" for j in range(FRAGMENT_REGS["a"])]
    init += [f"    mov.b32 %vb{j}, 1010580540;" for j in range(FRAGMENT_REGS["b"])]
    init += [f"    mov.f32 %facc{j}, 0F00000000;" for j in range(4 * n)]

    measured = []
    for _ in range(spec.chain_len):
        for k in range(n):
            measured.append(f"    {instr} {mma_operand_text(k)};")

    sink_lines = ["    mov.b32 %r8, %facc0;"]
    body = _prologue([]) + init + _loop(measured, spec.iterations)
    body += _epilogue("u32", sink_lines)
    body.append("    st.global.u32 [%rd9], %r8;")

    name = (
        f"gd_mma_{spec.mma.a_type}_{spec.mma.tile}"
        f"_c{spec.chain_len}_p{spec.ilp}_i{spec.iterations}_w{spec.warps}"
    )
    return _finish(spec, name, arch, reg_decls, body, "u32")


def gen_dependent_chain(spec: KernelSpec, *, arch: str = DEFAULT_ARCH) -> PtxKernel:
    """Serialized chain: each instruction reads the previous destination."""
    spec.validate()
    if spec.workload not in CHAIN_WORKLOADS:
        raise InvalidSpec(f"{spec.workload.value} is not a dependent-chain workload")
    if spec.ilp != 1:
        raise InvalidSpec("dependent-chain kernels require ilp=1; use gen_independent_ilp")
    _check_budget(spec)
    return _scalar_chain_kernel(spec, arch)


def gen_independent_ilp(spec: KernelSpec, *, arch: str = DEFAULT_ARCH) -> PtxKernel:
    """ILP chains: disjoint register chains interleaved round-robin.

    With ilp=1 the measured-region instruction sequence is identical to the
    dependent-chain generator's for the same spec.
    """
    spec.validate()
    _check_budget(spec)
    if spec.workload is Workload.MMA_SYNC:
        return _mma_kernel(spec, arch)
    if spec.workload not in CHAIN_WORKLOADS:
        raise InvalidSpec(f"{spec.workload.value} is not an ILP-chain workload")
    return _scalar_chain_kernel(spec, arch)


def gen_clock_overhead(*, arch: str = DEFAULT_ARCH) -> PtxKernel:
    """Two adjacent counter reads with nothing in between.

    The resulting value is the raw read overhead to subtract from every other
    measurement taken on the same device.
    """
    spec = KernelSpec(workload=Workload.CLOCK_OVERHEAD).validate()
    reg_decls = [".reg .pred %p<2>;", ".reg .b32 %r<12>;", ".reg .b64 %rd<12>;",
                 ".reg .b64 %t<3>;"]
    body = _prologue([])
    body += [
        "    mov.u64 %t0, %clock64;",
        "    mov.u64 %t1, %clock64;",
    ]
    sink_lines = ["    cvt.u32.u64 %r8, %t2;"]
    body += _epilogue("u32", sink_lines)
    body.append("    st.global.u32 [%rd9], %r8;")
    return _finish(spec, "gd_clock_overhead", arch, reg_decls, body, "u32")
