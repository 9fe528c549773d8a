"""qmtime: measurement-time bounds for quantum systems.

Simulation of ancilla-based projective measurement on spin chains, quantum
speed limit calculators, Lieb-Robinson style light-cone scans, and SI-unit
estimators for the minimum time a projective measurement can take.
"""

from qmtime.opcore import (
    DensityMatrix,
    HilbertGeometry,
    Operator,
    PauliString,
    StateVector,
    commutator,
    expectation,
    heisenberg_evolve,
    materialize_pauli_string,
    partial_trace,
    pauli,
    spectral_norm,
    tensor_product,
    variance,
)

__version__ = "0.1.0"
