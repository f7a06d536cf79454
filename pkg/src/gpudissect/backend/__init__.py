"""Execution backends: deterministic trace replay and the live-GPU bridge."""

from gpudissect.backend.base import (
    Backend,
    DeviceIdentity,
    ExecutionPolicy,
    MeasurementRecord,
    largest_accepted,
)
from gpudissect.backend.bridge import BRIDGE_ENV_VAR, BridgeClient, GpuBackend
from gpudissect.backend.replay import (
    ReplayBackend,
    TraceFixture,
    bundled_fixture_path,
    load_fixture,
)

__all__ = [
    "BRIDGE_ENV_VAR", "Backend", "BridgeClient", "DeviceIdentity",
    "ExecutionPolicy", "GpuBackend", "MeasurementRecord", "ReplayBackend",
    "TraceFixture", "bundled_fixture_path", "largest_accepted", "load_fixture",
]
