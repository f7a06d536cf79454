"""Live-GPU backend: talks to the bridge shim over a child process.

The bridge owns all GPU-toolkit linkage; this side only writes PTX files and
speaks a line-delimited JSON protocol on the child's standard streams:

    request  = {"id", "cmd", ...}
    response = {"id", ..., "error": null | {"code", "message"}}

Commands: "identify" (device description), "run" (load PTX, launch, return
cycles/wall time/checksum). The bridge binary comes from the constructor
argument or the GPUDISSECT_BRIDGE environment variable. One request is in
flight at a time; the device queue is serialized by construction.
"""

from __future__ import annotations

import json
import os
import shlex
import subprocess
import tempfile
import threading
from pathlib import Path
from typing import Optional

from gpudissect.backend.base import (
    DeviceIdentity,
    ExecutionPolicy,
    MeasurementRecord,
    largest_accepted,
)
from gpudissect.errors import (
    DeviceUnavailable,
    KernelLoadFailed,
    InvalidSpec,
)
from gpudissect.kernels.compute import DEFAULT_ARCH
from gpudissect.kernels.memory import STATIC_SHARED_BYTES, gen_strided_probe
from gpudissect.kernels.types import KernelSpec, PtxKernel, Workload

BRIDGE_ENV_VAR = "GPUDISSECT_BRIDGE"

_ERROR_MAP = {
    "device_unavailable": DeviceUnavailable,
    "load_failed": KernelLoadFailed,
    "launch_failed": KernelLoadFailed,
    "out_of_memory": KernelLoadFailed,
    "bad_request": InvalidSpec,
}


def bridge_command(explicit: Optional[str] = None) -> list[str]:
    cmd = explicit or os.environ.get(BRIDGE_ENV_VAR)
    if not cmd:
        raise DeviceUnavailable(
            f"no bridge binary configured (set {BRIDGE_ENV_VAR} or pass --bridge)"
        )
    return shlex.split(cmd)


class BridgeClient:
    """One child bridge process; serialized request/response."""

    def __init__(self, command: list[str]):
        self.command = command
        self._lock = threading.Lock()
        self._next_id = 0
        try:
            self._proc = subprocess.Popen(
                command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
            )
        except OSError as exc:
            raise DeviceUnavailable(f"cannot start bridge {command!r}: {exc}") from exc

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()

    def request(self, cmd: str, **fields) -> dict:
        with self._lock:
            self._next_id += 1
            req_id = self._next_id
            payload = {"id": req_id, "cmd": cmd, **fields}
            try:
                self._proc.stdin.write(json.dumps(payload) + "\n")
                self._proc.stdin.flush()
                line = self._proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise DeviceUnavailable(f"bridge pipe closed: {exc}") from exc
        if not line:
            stderr = self._proc.stderr.read() if self._proc.stderr else ""
            raise DeviceUnavailable(f"bridge exited without replying: {stderr.strip()}")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise KernelLoadFailed(f"bridge spoke garbage: {line!r}") from exc
        if response.get("id") != req_id:
            raise KernelLoadFailed(
                f"bridge response id {response.get('id')} != request id {req_id}"
            )
        error = response.get("error")
        if error:
            exc_type = _ERROR_MAP.get(error.get("code", ""), KernelLoadFailed)
            raise exc_type(f"bridge error [{error.get('code')}]: {error.get('message')}")
        return response


class GpuBackend:
    """Backend that executes kernels on real hardware through the bridge."""

    def __init__(self, bridge: Optional[str] = None, *, workdir: Optional[Path] = None,
                 arch: str = DEFAULT_ARCH):
        self.client = BridgeClient(bridge_command(bridge))
        self.workdir = Path(workdir) if workdir else Path(tempfile.mkdtemp(prefix="gd_"))
        self.arch = arch
        info = self.client.request("identify")
        self._device = DeviceIdentity.from_dict(info["device"])

    @property
    def device(self) -> DeviceIdentity:
        return self._device

    def close(self) -> None:
        self.client.close()

    def run(self, kernel: PtxKernel, spec: KernelSpec,
            policy: ExecutionPolicy) -> MeasurementRecord:
        spec.validate()
        ptx_path, _ = kernel.write(self.workdir)
        response = self.client.request(
            "run",
            ptx_path=str(ptx_path),
            entry=kernel.entry_symbol,
            grid=list(kernel.launch.grid),
            block=list(kernel.launch.block),
            buffer_spec=[b.to_dict() for b in kernel.buffers],
            dyn_shared_bytes=kernel.dyn_shared_bytes,
            reps=policy.repetitions,
        )
        cycles_all = [int(c) for c in response["cycles"]]
        per_rep = kernel.result_layout.cycles_count
        expected = per_rep * policy.repetitions
        if len(cycles_all) != expected:
            raise KernelLoadFailed(
                f"bridge returned {len(cycles_all)} cycle slots, expected {expected}"
            )
        retained = cycles_all[policy.warmup_discards * per_rep:]
        # one slot per warp per retained repetition, averaged across blocks
        warps = spec.warps
        cycles = []
        for rep in range(policy.retained):
            chunk = retained[rep * per_rep:(rep + 1) * per_rep]
            for w in range(warps):
                group = chunk[w::warps] or [0]
                cycles.append(round(sum(group) / len(group)))
        return MeasurementRecord(
            spec=spec,
            device=self._device,
            cycles_per_warp=tuple(cycles),
            wall_time_s=max(response["wall_time_ns"] / 1e9, 1e-12),
            repetitions=policy.retained,
            discarded_warmups=policy.warmup_discards,
            checksum=response.get("checksum"),
        )

    def probe_shared_limit(self) -> int:
        """Largest dynamic shared-memory window the device accepts.

        Binary search over launch attempts of a one-warp probe kernel with
        increasing dynamic allocations.
        """
        def accepts(nbytes: int) -> bool:
            spec = KernelSpec(
                workload=Workload.SHARED_STRIDE, stride=1, warps=1,
                accesses=1, working_set_bytes=4096,
            )
            kernel = gen_strided_probe(spec, "shared", arch=self.arch)
            probe = PtxKernel(
                name=f"{kernel.name}_dyn{nbytes}",
                source=kernel.source,
                entry_symbol=kernel.entry_symbol,
                launch=kernel.launch,
                result_layout=kernel.result_layout,
                buffers=kernel.buffers,
                spec=kernel.spec,
                dyn_shared_bytes=nbytes,
            )
            try:
                self.run(probe, probe.spec, ExecutionPolicy(repetitions=1,
                                                            warmup_discards=0))
                return True
            except KernelLoadFailed:
                return False

        return largest_accepted(STATIC_SHARED_BYTES, 256 * 1024, accepts)

    def measure_bandwidth(self, direction: str, nbytes: int) -> float:
        from gpudissect.kernels.memory import gen_bandwidth

        if nbytes <= self._device.l2_mb * 1024 * 1024:
            raise InvalidSpec("footprint must exceed the L2 capacity")
        kernel = gen_bandwidth(direction, nbytes, arch=self.arch)
        best = 0.0
        for _ in range(3):
            record = self.run(kernel, kernel.spec,
                              ExecutionPolicy(repetitions=1, warmup_discards=0))
            best = max(best, nbytes / record.wall_time_s)
        return best
