"""Projective measurements and their ancilla-based unitary implementation.

A rank-complete projective measurement {Pi(r)} on a system S is realized by
entangling S with an ancilla register A through the controlled-shift unitary

    U_SA = sum_r Pi(r) (x) S^(r-1),    S|x> = |x+1 mod d>,

starting the ancilla in its first basis state, then reading the ancilla in
its computational basis. Outcome r leaves the ancilla at index r-1.

Two unitaries realize the SAME measurement whenever they differ by a phase
on each outcome block, sum_r e^{i phi_r} Pi(r) (x) (...): the phases ride on
branches that the ancilla readout separates, so no statistic or
post-measurement state can see them. Fidelities and state comparisons here
therefore align phases per outcome block rather than globally; the binary
z-measurement generated by the builder's coupling Hamiltonian hits exactly
this equivalence class at t = pi/g (its blocks carry -i and -1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from qmtime.evolve import Propagator, TimeGrid
from qmtime.models import build_binary_measurement_hamiltonian
from qmtime.opcore import (
    DensityMatrix,
    HilbertGeometry,
    Operator,
    StateVector,
    partial_trace,
    tensor_product,
)

__all__ = [
    "ATOL_PROJECTOR",
    "ZeroProbabilityError",
    "ProjectiveMeasurement",
    "MeasurementOutcome",
    "AncillaProtocolResult",
    "readout_observable",
    "born_probabilities",
    "collapse",
    "dephase",
    "shift_ancilla_unitary",
    "build_ancilla_unitary",
    "run_ancilla_protocol",
    "protocol_fidelity_curve",
    "outcome_block_fidelity",
    "branch_phase_state_distance",
]

ATOL_PROJECTOR = 1e-10
_ZERO_PROBABILITY = 1e-14


class ZeroProbabilityError(ValueError):
    """Conditioning on an outcome whose Born probability is numerically zero."""


@dataclass(frozen=True)
class ProjectiveMeasurement:
    """An ordered family of orthogonal projectors summing to the identity.

    Outcome order is meaningful: the r-th outcome (1-based) drives an
    ancilla shift by r-1 in the dilation unitary.
    """

    geometry: HilbertGeometry
    outcomes: tuple[tuple[object, Operator], ...]

    def __post_init__(self) -> None:
        outcomes = tuple((label, op) for label, op in self.outcomes)
        if not outcomes:
            raise ValueError("a measurement needs at least one outcome")
        labels = [label for label, _ in outcomes]
        if len(set(labels)) != len(labels):
            raise ValueError(f"outcome labels must be unique, got {labels}")
        dim = self.geometry.dim
        mats = []
        for label, op in outcomes:
            if op.geometry.dim != dim:
                raise ValueError(f"projector for outcome {label!r} has the wrong dimension")
            m = op.dense()
            if np.abs(m - m.conj().T).max() > ATOL_PROJECTOR:
                raise ValueError(f"projector for outcome {label!r} is not hermitian")
            if np.abs(m @ m - m).max() > ATOL_PROJECTOR:
                raise ValueError(f"projector for outcome {label!r} is not idempotent")
            mats.append(m)
        for i in range(len(mats)):
            for j in range(i + 1, len(mats)):
                if np.abs(mats[i] @ mats[j]).max() > ATOL_PROJECTOR:
                    raise ValueError(
                        f"projectors {labels[i]!r} and {labels[j]!r} are not orthogonal"
                    )
        total = sum(mats)
        if np.abs(total - np.eye(dim)).max() > ATOL_PROJECTOR:
            raise ValueError("projectors do not sum to the identity")
        object.__setattr__(self, "outcomes", outcomes)

    @property
    def n_outcomes(self) -> int:
        return len(self.outcomes)

    @property
    def labels(self) -> tuple:
        return tuple(label for label, _ in self.outcomes)

    def projector(self, label) -> Operator:
        for l, op in self.outcomes:
            if l == label:
                return op
        raise KeyError(f"no outcome labelled {label!r}")

    @classmethod
    def from_projectors(cls, geometry, pairs) -> "ProjectiveMeasurement":
        ops = tuple(
            (label, p if isinstance(p, Operator) else Operator(geometry, p))
            for label, p in pairs
        )
        return cls(geometry, ops)

    @classmethod
    def binary_z(cls) -> "ProjectiveMeasurement":
        """The single-qubit z-bit measurement: outcome 0 kept by |0><0|, 1 by |1><1|."""
        g = HilbertGeometry(1)
        return cls.from_projectors(g, ((0, np.diag([1.0, 0.0])), (1, np.diag([0.0, 1.0]))))

    @classmethod
    def computational_basis(cls, geometry: HilbertGeometry) -> "ProjectiveMeasurement":
        pairs = []
        for k in range(geometry.dim):
            p = np.zeros((geometry.dim, geometry.dim))
            p[k, k] = 1.0
            pairs.append((k, p))
        return cls.from_projectors(geometry, pairs)


def readout_observable(m: ProjectiveMeasurement, values: Sequence[float] | None = None) -> Operator:
    """The Hermitian observable sum_r v_r Pi(r).

    Default values are the labels when numeric. The conventional z readout
    uses values (-1, +1), i.e. |1><1| - |0><0|.
    """
    if values is None:
        values = [float(label) for label, _ in m.outcomes]
    if len(values) != m.n_outcomes:
        raise ValueError("need one value per outcome")
    acc = None
    for v, (_, op) in zip(values, m.outcomes):
        term = float(v) * op
        acc = term if acc is None else acc + term
    return Operator(m.geometry, acc.matrix, hermitian=True)


def _as_density(state: StateVector | DensityMatrix) -> DensityMatrix:
    if isinstance(state, StateVector):
        return state.density()
    if isinstance(state, DensityMatrix):
        return state
    raise TypeError(f"expected StateVector or DensityMatrix, got {type(state).__name__}")


def born_probabilities(state: StateVector | DensityMatrix, m: ProjectiveMeasurement) -> np.ndarray:
    """Outcome probabilities tr(Pi(r) rho), in outcome order."""
    if isinstance(state, StateVector):
        probs = [
            float(np.real(np.vdot(state.amplitudes, op.dense() @ state.amplitudes)))
            for _, op in m.outcomes
        ]
    else:
        rho = _as_density(state).matrix
        probs = [float(np.real(np.sum(op.dense() * rho.T))) for _, op in m.outcomes]
    out = np.clip(np.array(probs), 0.0, None)
    return out


@dataclass(frozen=True)
class MeasurementOutcome:
    """One conditioned measurement record: label, probability, post state."""

    label: object
    probability: float
    state: DensityMatrix


def collapse(state: StateVector | DensityMatrix, m: ProjectiveMeasurement, label) -> MeasurementOutcome:
    """Condition on one outcome: Pi rho Pi / p, failing on p <= 1e-14."""
    rho = _as_density(state)
    pi = m.projector(label).dense()
    projected = pi @ rho.matrix @ pi
    p = float(np.real(np.trace(projected)))
    if p <= _ZERO_PROBABILITY:
        raise ZeroProbabilityError(
            f"outcome {label!r} has probability {p:.3e}, cannot condition on it"
        )
    return MeasurementOutcome(label, p, DensityMatrix(m.geometry, projected / p))


def dephase(state: StateVector | DensityMatrix, m: ProjectiveMeasurement) -> DensityMatrix:
    """Unconditional post-measurement state sum_r Pi(r) rho Pi(r)."""
    rho = _as_density(state).matrix
    acc = np.zeros_like(rho)
    for _, op in m.outcomes:
        pi = op.dense()
        acc += pi @ rho @ pi
    return DensityMatrix(m.geometry, acc)


def shift_ancilla_unitary(projectors: Sequence[np.ndarray], ancilla_dim: int) -> np.ndarray:
    """Array-level dilation sum_r P_r (x) S^(r-1) for arbitrary dimensions.

    Accepts any system dimension (qutrits included); the ancilla dimension
    must be at least the number of outcomes so every outcome lands on its
    own ancilla index.
    """
    n = len(projectors)
    if ancilla_dim < n:
        raise ValueError(f"ancilla dimension {ancilla_dim} < {n} outcomes")
    ds = projectors[0].shape[0]
    shift = np.zeros((ancilla_dim, ancilla_dim))
    for x in range(ancilla_dim):
        shift[(x + 1) % ancilla_dim, x] = 1.0
    u = np.zeros((ds * ancilla_dim, ds * ancilla_dim), dtype=complex)
    step = np.eye(ancilla_dim)
    for r, p in enumerate(projectors):
        if p.shape != (ds, ds):
            raise ValueError("projectors must share one dimension")
        u += np.kron(p, step)
        step = shift @ step
    return u


def build_ancilla_unitary(m: ProjectiveMeasurement, ancilla_sites: int | None = None) -> Operator:
    """The controlled-shift dilation as an operator on system (x) ancilla qubits.

    The ancilla register defaults to the smallest number of qubits holding
    one index per outcome (at least one site). For the binary z measurement
    this is the 4x4 controlled flip
        |0><0| (x) I + |1><1| (x) sigma_x.
    """
    if ancilla_sites is None:
        ancilla_sites = max(1, math.ceil(math.log2(m.n_outcomes)))
    if 2**ancilla_sites < m.n_outcomes:
        raise ValueError(
            f"{ancilla_sites} ancilla sites hold {2**ancilla_sites} indices, "
            f"fewer than {m.n_outcomes} outcomes"
        )
    u = shift_ancilla_unitary([op.dense() for _, op in m.outcomes], 2**ancilla_sites)
    g = m.geometry.combine(HilbertGeometry(ancilla_sites))
    return Operator(g, u)


@dataclass(frozen=True)
class AncillaProtocolResult:
    """Everything the ancilla readout run produces.

    ``dephasing_distance`` is the largest entry-wise deviation of the
    reduced system state from the unconditional post-measurement form; it
    is the protocol's own error meter, so a mistimed coupling shows up here
    rather than as an exception.
    """

    joint_state: StateVector
    reduced_system: DensityMatrix
    readout: tuple[tuple[object, float], ...]
    mode: str
    duration: float | None
    dephasing_distance: float

    def probability(self, label) -> float:
        for l, p in self.readout:
            if l == label:
                return p
        raise KeyError(f"no outcome labelled {label!r}")


def run_ancilla_protocol(
    psi: StateVector,
    m: ProjectiveMeasurement,
    mode: str = "exact",
    *,
    g: float | None = None,
    duration: float | None = None,
) -> AncillaProtocolResult:
    """Entangle, evolve, and read out the ancilla register.

    mode "exact" applies the dilation unitary directly. Mode "eq7" evolves
    under the binary z-measurement coupling Hamiltonian with rate g for the
    given duration (default pi/g, the protocol time); a mismatched duration
    is not an error, it simply leaves a nonzero dephasing distance.
    """
    if not isinstance(psi, StateVector):
        raise TypeError("the protocol runs on a pure system state")
    if mode == "exact":
        u = build_ancilla_unitary(m)
        ancilla_sites = u.geometry.n_sites - m.geometry.n_sites
        duration = None
    elif mode == "eq7":
        if m.geometry.n_sites != 1 or m.n_outcomes != 2:
            raise ValueError("eq7 mode implements the single-qubit binary z measurement")
        z = ProjectiveMeasurement.binary_z()
        for (la, pa), (lb, pb) in zip(m.outcomes, z.outcomes):
            if not np.allclose(pa.dense(), pb.dense(), atol=ATOL_PROJECTOR):
                raise ValueError("eq7 mode implements the single-qubit binary z measurement")
        if g is None or g <= 0:
            raise ValueError("eq7 mode needs a positive coupling rate g")
        if duration is None:
            duration = math.pi / g
        u = Propagator(build_binary_measurement_hamiltonian(g)).at(duration)
        ancilla_sites = 1
    else:
        raise ValueError(f"unknown mode {mode!r}, expected 'exact' or 'eq7'")

    n_sys = m.geometry.n_sites
    ancilla0 = StateVector.basis(HilbertGeometry(ancilla_sites), 0)
    joint = u @ tensor_product(psi, ancilla0)

    dim_a = 2**ancilla_sites
    amps = joint.amplitudes.reshape(m.geometry.dim, dim_a)
    ancilla_marginal = np.sum(np.abs(amps) ** 2, axis=0)
    readout = tuple(
        (label, float(ancilla_marginal[r])) for r, (label, _) in enumerate(m.outcomes)
    )

    reduced = partial_trace(joint.density(), keep=range(n_sys))
    target = dephase(psi, m)
    distance = float(np.abs(reduced.matrix - target.matrix).max())
    return AncillaProtocolResult(joint, reduced, readout, mode, duration, distance)


def outcome_block_fidelity(u: Operator, target: Operator, m: ProjectiveMeasurement) -> float:
    """Overlap of two dilation unitaries modulo per-outcome phases.

    F = (1/dim) sum_r |tr[(Pi(r) (x) I) target^dag u]|, which is 1 exactly
    when u = sum_r e^{i phi_r} (Pi(r) (x) I) target, the equivalence class
    of unitaries implementing the same measurement.
    """
    if u.geometry.dim != target.geometry.dim:
        raise ValueError("unitaries must share a geometry")
    dim = u.geometry.dim
    dim_a, rem = divmod(dim, m.geometry.dim)
    if rem:
        raise ValueError("joint dimension is not a multiple of the system dimension")
    prod = target.dense().conj().T @ u.dense()
    total = 0.0
    for _, op in m.outcomes:
        block = np.kron(op.dense(), np.eye(dim_a))
        total += abs(np.trace(block @ prod))
    return float(total / dim)


def protocol_fidelity_curve(g: float, grid: TimeGrid) -> np.ndarray:
    """Fidelity of exp(-i H t) to the binary z dilation across a time grid.

    Returns an array of (t, fidelity) rows. The curve starts strictly below
    one, peaks at t = pi/g, is symmetric about the peak, and repeats with
    period 2 pi / g.
    """
    m = ProjectiveMeasurement.binary_z()
    target = build_ancilla_unitary(m)
    prop = Propagator(build_binary_measurement_hamiltonian(g))
    rows = []
    for t in grid.times():
        rows.append((float(t), outcome_block_fidelity(prop.at(t), target, m)))
    return np.array(rows)


def branch_phase_state_distance(
    a: StateVector, b: StateVector, m: ProjectiveMeasurement
) -> float:
    """Largest per-branch distance between two joint states.

    Branch r is the component (Pi(r) (x) I)|psi>. Each branch's phase is
    aligned independently (on its largest-weight amplitude) before taking
    the norm of the difference; the maximum over branches is returned.
    States that feed identical statistics into the ancilla readout score
    zero here even though their relative branch phases differ.
    """
    if a.geometry.dim != b.geometry.dim:
        raise ValueError("states must share a geometry")
    dim_a, rem = divmod(a.geometry.dim, m.geometry.dim)
    if rem:
        raise ValueError("joint dimension is not a multiple of the system dimension")
    worst = 0.0
    for _, op in m.outcomes:
        block = np.kron(op.dense(), np.eye(dim_a))
        av = block @ a.amplitudes
        bv = block @ b.amplitudes
        idx = int(np.argmax(np.abs(av) * np.abs(bv)))
        if abs(av[idx]) > 0 and abs(bv[idx]) > 0:
            ratio = av[idx] / bv[idx]
            phase = ratio / abs(ratio)
        else:
            phase = 1.0
        worst = max(worst, float(np.linalg.norm(av - phase * bv)))
    return worst
