"""Time evolution engines: exact propagators from eigendecompositions,
Trotter products, and truncated Zassenhaus factorizations.

Engine units fix hbar = 1, so the propagator for a Hamiltonian H is
exp(-iHt). The eigendecomposition route is the reference; the product
formulas exist to study how fast they approach it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from qmtime.opcore import (
    ATOL_HERMITIAN,
    ATOL_UNITARY,
    HilbertGeometry,
    Operator,
    StateVector,
    _hermiticity_defect,
    _unitarity_defect,
    commutator,
    spectral_norm,
)

__all__ = [
    "RECONSTRUCTION_ATOL",
    "DEFAULT_MAX_GRID_STEPS",
    "Propagator",
    "TimeGrid",
    "propagator_at",
    "trotter_evolve",
    "zassenhaus_truncated",
    "reachability_probe",
    "ReachabilityReport",
    "phase_aligned_distance",
    "phase_aligned_state_distance",
]

RECONSTRUCTION_ATOL = 1e-9
DEFAULT_MAX_GRID_STEPS = 50_000


class Propagator:
    """Exact unitary evolution for one Hermitian operator.

    The eigendecomposition is computed once and cached; each requested time
    costs two dense matrix products. Construction fails if H is not
    Hermitian or if the eigendecomposition does not reproduce H to 1e-9.
    """

    def __init__(self, hamiltonian: Operator):
        if not hamiltonian.hermitian and _hermiticity_defect(hamiltonian.matrix) > ATOL_HERMITIAN:
            raise ValueError("propagator needs a hermitian hamiltonian")
        self._geometry = hamiltonian.geometry
        dense = hamiltonian.dense()
        w, v = np.linalg.eigh(dense)
        rebuilt = (v * w) @ v.conj().T
        defect = float(np.abs(rebuilt - dense).max())
        if defect > RECONSTRUCTION_ATOL:
            raise ValueError(
                f"eigendecomposition reconstruction defect {defect:.3e} exceeds "
                f"{RECONSTRUCTION_ATOL}"
            )
        self._w = w
        self._v = v
        self._vh = np.ascontiguousarray(v.conj().T)

    @property
    def geometry(self) -> HilbertGeometry:
        return self._geometry

    @property
    def eigenvalues(self) -> np.ndarray:
        out = self._w.copy()
        out.setflags(write=False)
        return out

    @property
    def ground_energy(self) -> float:
        return float(self._w[0])

    def at(self, t: float) -> Operator:
        """The unitary exp(-iHt)."""
        phases = np.exp(-1j * self._w * float(t))
        return Operator(self._geometry, (self._v * phases) @ self._vh)

    def evolve(self, psi: StateVector, t: float) -> StateVector:
        """Evolve a pure state, cheaper than forming the full unitary."""
        if psi.geometry.dim != self._geometry.dim:
            raise ValueError("state does not live on the propagator's geometry")
        phases = np.exp(-1j * self._w * float(t))
        amp = self._v @ (phases * (self._vh @ psi.amplitudes))
        return StateVector(self._geometry, amp)


def propagator_at(hamiltonian: Operator | Propagator, t: float) -> Operator:
    """exp(-iHt) for a Hermitian H, accepting a prebuilt Propagator too."""
    p = hamiltonian if isinstance(hamiltonian, Propagator) else Propagator(hamiltonian)
    return p.at(t)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid from t_start to t_end in steps of dt.

    The grid always contains t_start; t_end is included when the span is an
    integer multiple of dt. Step counts above max_steps are rejected.
    """

    t_end: float
    dt: float
    t_start: float = 0.0
    max_steps: int = DEFAULT_MAX_GRID_STEPS

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t_end) and math.isfinite(self.dt) and math.isfinite(self.t_start)):
            raise ValueError("grid parameters must be finite")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end <= self.t_start:
            raise ValueError("t_end must exceed t_start")
        if self.n_steps > self.max_steps:
            raise ValueError(
                f"grid would have {self.n_steps} steps, above the cap {self.max_steps}"
            )

    @property
    def n_steps(self) -> int:
        return int(math.floor((self.t_end - self.t_start) / self.dt + 1e-9))

    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_steps + 1)


def _expi(h: np.ndarray) -> np.ndarray:
    """exp(-i h) of a Hermitian matrix via its eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w)) @ v.conj().T


def _check_pair(x: Operator, y: Operator) -> HilbertGeometry:
    if x.geometry.dim != y.geometry.dim:
        raise ValueError("operators must share a geometry")
    for name, op in (("x", x), ("y", y)):
        if not op.hermitian and _hermiticity_defect(op.matrix) > ATOL_HERMITIAN:
            raise ValueError(f"{name} must be hermitian")
    return x.geometry


def trotter_evolve(x: Operator, y: Operator, t: float, steps: int) -> Operator:
    """First-order Trotter product (exp(-ixt/n) exp(-iyt/n))^n for H = x + y."""
    g = _check_pair(x, y)
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    dt = float(t) / steps
    ux = _expi(x.dense() * dt)
    uy = _expi(y.dense() * dt)
    return Operator(g, np.linalg.matrix_power(ux @ uy, steps))


def zassenhaus_truncated(x: Operator, y: Operator, t: float, order: int) -> Operator:
    """Truncated Zassenhaus product for exp(-i(x+y)t).

    order 1:  exp(-ixt) exp(-iyt)
    order 2:  ... exp((t^2/2)[x,y])
    order 3:  ... exp(i(t^3/6)(2[y,[x,y]] + [x,[x,y]]))

    The exponents come from splitting exp(t(X+Y)) with X = -ix, Y = -iy;
    every factor is the exponential of an anti-Hermitian matrix, so the
    truncation stays exactly unitary. The leading error scales as
    t^(order+1).
    """
    g = _check_pair(x, y)
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    t = float(t)
    xd, yd = x.dense(), y.dense()
    u = _expi(xd * t) @ _expi(yd * t)
    if order >= 2:
        cxy = xd @ yd - yd @ xd
        u = u @ _expi(1j * (t**2 / 2.0) * cxy)
    if order >= 3:
        c_y = yd @ cxy - cxy @ yd
        c_x = xd @ cxy - cxy @ xd
        u = u @ _expi(-(t**3 / 6.0) * (2.0 * c_y + c_x))
    return Operator(g, u)


@dataclass(frozen=True)
class ReachabilityReport:
    """Norms of nested commutators of a Hamiltonian split, by nesting depth.

    Purely diagnostic: nonzero norms at successive depths indicate that the
    split generates new directions, a necessary ingredient for steering the
    joint system toward a target. No synthesis claim is made, so the target
    is only checked for unitarity and echoed back.
    """

    levels: tuple[tuple[tuple[str, float], ...], ...]
    target_dim: int

    def level(self, depth: int) -> dict[str, float]:
        """Norms at one nesting depth (1-based)."""
        return dict(self.levels[depth - 1])

    def max_norm(self, depth: int) -> float:
        vals = [v for _, v in self.levels[depth - 1]]
        return max(vals) if vals else 0.0

    def all_nonzero(self, through_depth: int | None = None, tol: float = 0.0) -> bool:
        upto = through_depth or len(self.levels)
        return all(self.max_norm(d) > tol for d in range(1, upto + 1))


_MAX_PROBE_DEPTH = 6


def reachability_probe(x: Operator, y: Operator, target: Operator, depth: int) -> ReachabilityReport:
    """Survey nested commutators of (x, y) up to the given depth."""
    _check_pair(x, y)
    if target.geometry.dim != x.geometry.dim:
        raise ValueError("target must share the operators' geometry")
    if _unitarity_defect(target) > ATOL_UNITARY:
        raise ValueError("target must be unitary within 1e-10")
    if not 1 <= depth <= _MAX_PROBE_DEPTH:
        raise ValueError(f"depth must be between 1 and {_MAX_PROBE_DEPTH}")

    generators = {"x": x, "y": y}
    current: dict[str, Operator] = {"[x,y]": commutator(x, y)}
    levels = [tuple((word, spectral_norm(op)) for word, op in current.items())]
    for _ in range(depth - 1):
        nxt: dict[str, Operator] = {}
        for word, op in current.items():
            for gname, gop in generators.items():
                nxt[f"[{gname},{word}]"] = commutator(gop, op)
        levels.append(tuple((word, spectral_norm(op)) for word, op in nxt.items()))
        current = nxt
    return ReachabilityReport(tuple(levels), x.geometry.dim)


def phase_aligned_distance(u: Operator, v: Operator) -> float:
    """Spectral distance ||U - exp(i phi) V|| with phi chosen so the entry
    where both matrices carry the most weight lines up."""
    if u.geometry.dim != v.geometry.dim:
        raise ValueError("operators must share a geometry")
    ud, vd = u.dense(), v.dense()
    idx = np.unravel_index(np.argmax(np.abs(ud) * np.abs(vd)), ud.shape)
    uv, vv = ud[idx], vd[idx]
    if abs(uv) > 0 and abs(vv) > 0:
        ratio = uv / vv
        phase = ratio / abs(ratio)
    else:
        phase = 1.0
    return spectral_norm(Operator(u.geometry, ud - phase * vd))


def phase_aligned_state_distance(a: StateVector, b: StateVector) -> float:
    """|| |a> - exp(i phi)|b> || with phi aligning the largest-weight amplitude.

    Aligning on an entry instead of using sqrt(2 - 2|<b|a>|) avoids the
    catastrophic cancellation that would otherwise inflate the distance
    between numerically identical states to around 1e-8.
    """
    if a.geometry.dim != b.geometry.dim:
        raise ValueError("states must share a geometry")
    av, bv = a.amplitudes, b.amplitudes
    idx = int(np.argmax(np.abs(av) * np.abs(bv)))
    if abs(av[idx]) > 0 and abs(bv[idx]) > 0:
        ratio = av[idx] / bv[idx]
        phase = ratio / abs(ratio)
    else:
        phase = 1.0
    return float(np.linalg.norm(av - phase * bv))
