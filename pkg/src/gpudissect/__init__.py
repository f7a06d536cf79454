"""gpudissect: GPU microarchitecture dissection toolkit.

Generates PTX microbenchmark kernels, drives parameter sweeps on live
hardware (through a bridge shim) or deterministic replay fixtures, and turns
the raw cycle counters into latency, throughput, power, and inferred
memory-hierarchy structure.
"""

__version__ = "0.1.0"
