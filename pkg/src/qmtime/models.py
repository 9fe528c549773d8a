"""Hamiltonian builders: transverse-field Ising chains, the binary
measurement coupling, and locality diagnostics for volume-decomposed models.

The chain Hamiltonian is

    H = h * sum_i sigma_z(i) + g * sum_i sigma_x(i) sigma_x(i+1)

with open boundaries, so the coupling sum has N-1 terms. Site 0 is the
leftmost tensor factor throughout. Engine units set hbar = 1.
"""

from __future__ import annotations

import json
import math
import numbers
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import sparse

from qmtime.opcore import (
    HilbertGeometry,
    Operator,
    PauliString,
    commutator,
    materialize_pauli_string,
    spectral_norm,
    tensor_product,
)

__all__ = [
    "IsingParams",
    "AncillaCoupling",
    "LocalTerm",
    "Coupling",
    "LocalHamiltonianSpec",
    "LocalityReport",
    "build_ising",
    "build_ising_with_ancilla",
    "build_binary_measurement_hamiltonian",
    "locality_report",
    "ising_local_spec",
    "hamiltonian_from_dict",
    "load_hamiltonian",
]

# Commutator norms below this are treated as structural zeros when judging
# whether a volume couples to anything.
_ZERO_NORM_TOL = 1e-12


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class IsingParams:
    """Chain parameters: n sites, field strength h, exchange strength g."""

    n: int
    h: float
    g: float

    def __post_init__(self) -> None:
        if not isinstance(self.n, numbers.Integral) or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "h", _require_finite("h", self.h))
        object.__setattr__(self, "g", _require_finite("g", self.g))


@dataclass(frozen=True)
class AncillaCoupling:
    """Ancilla field h_A and exchange g_A to one chain site (default: the last)."""

    h_a: float
    g_a: float
    attach_site: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "h_a", _require_finite("h_a", self.h_a))
        object.__setattr__(self, "g_a", _require_finite("g_a", self.g_a))
        if self.attach_site is not None:
            if not isinstance(self.attach_site, numbers.Integral) or self.attach_site < 0:
                raise ValueError(f"attach_site must be a site index, got {self.attach_site!r}")
            object.__setattr__(self, "attach_site", int(self.attach_site))


def build_ising(p: IsingParams) -> Operator:
    """Open-boundary transverse-field Ising chain on p.n sites."""
    g = HilbertGeometry(p.n)
    acc = sparse.csr_array((g.dim, g.dim), dtype=np.complex128)
    for i in range(p.n):
        acc = acc + p.h * materialize_pauli_string(PauliString(g, {i: "Z"})).matrix
    for i in range(p.n - 1):
        acc = acc + p.g * materialize_pauli_string(
            PauliString(g, {i: "X", i + 1: "X"})
        ).matrix
    return Operator(g, acc, hermitian=True)


def build_ising_with_ancilla(p: IsingParams, a: AncillaCoupling) -> Operator:
    """Chain of p.n sites plus one ancilla qubit appended as site p.n.

    Adds h_a * sigma_z on the ancilla and g_a * sigma_x(attach) sigma_x(ancilla),
    where attach defaults to the last chain site.
    """
    attach = a.attach_site if a.attach_site is not None else p.n - 1
    if not 0 <= attach < p.n:
        raise ValueError(f"attach_site {attach} outside chain of {p.n} sites")
    g_full = HilbertGeometry(p.n + 1)
    chain = build_ising(p)
    eye_a = Operator(HilbertGeometry(1), np.eye(2))
    acc = tensor_product(chain, eye_a).matrix
    acc = acc + a.h_a * materialize_pauli_string(PauliString(g_full, {p.n: "Z"})).matrix
    acc = acc + a.g_a * materialize_pauli_string(
        PauliString(g_full, {attach: "X", p.n: "X"})
    ).matrix
    return Operator(g_full, acc, hermitian=True)


def build_binary_measurement_hamiltonian(g: float) -> Operator:
    """Coupling that measures a system qubit's z bit through an ancilla.

    H = (g/2) [ |0><0| (x) I + |1><1| (x) (I + sigma_x) ] on system (x) ancilla,
    in engine units (hbar = 1). Its ground energy is exactly 0; evolving for
    t = pi/g maps |r>|0> to |r>|r> up to a phase on each branch.
    """
    g = _require_finite("g", g)
    if g <= 0:
        raise ValueError(f"coupling rate g must be positive, got {g}")
    p1x = np.zeros((4, 4), dtype=np.complex128)
    p1x[2:, 2:] = np.array([[0, 1], [1, 0]])
    h = (g / 2.0) * (np.eye(4) + p1x)
    return Operator(HilbertGeometry(2), h, hermitian=True)


@dataclass(frozen=True)
class LocalTerm:
    """One volume's local Hamiltonian, given as a full-space operator."""

    support: tuple[int, ...]
    operator: Operator

    def __post_init__(self) -> None:
        sites = tuple(sorted(int(s) for s in self.support))
        if not sites:
            raise ValueError("a local term needs a nonempty support")
        object.__setattr__(self, "support", sites)


@dataclass(frozen=True)
class Coupling:
    """Interaction between two volumes, with their separation distance."""

    volumes: tuple[int, int]
    operator: Operator
    distance: float

    def __post_init__(self) -> None:
        i, j = (int(v) for v in self.volumes)
        if i == j:
            raise ValueError("a coupling must link two distinct volumes")
        object.__setattr__(self, "volumes", (i, j))
        d = _require_finite("distance", self.distance)
        if d <= 0:
            raise ValueError(f"coupling distance must be positive, got {d}")
        object.__setattr__(self, "distance", d)


@dataclass(frozen=True)
class LocalHamiltonianSpec:
    """A Hamiltonian split into per-volume terms plus pairwise couplings."""

    geometry: HilbertGeometry
    terms: tuple[LocalTerm, ...]
    couplings: tuple[Coupling, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "couplings", tuple(self.couplings))
        seen: set[int] = set()
        for t in self.terms:
            if t.operator.geometry.dim != self.geometry.dim:
                raise ValueError("local term geometry does not match the spec")
            overlap = seen.intersection(t.support)
            if overlap:
                raise ValueError(f"volume supports overlap at sites {sorted(overlap)}")
            seen.update(t.support)
        nvol = len(self.terms)
        for c in self.couplings:
            if c.operator.geometry.dim != self.geometry.dim:
                raise ValueError("coupling geometry does not match the spec")
            if any(v < 0 or v >= nvol for v in c.volumes):
                raise ValueError(f"coupling links unknown volume in {c.volumes}")

    def total_hamiltonian(self) -> Operator:
        acc = None
        for part in list(self.terms) + list(self.couplings):
            acc = part.operator if acc is None else acc + part.operator
        if acc is None:
            raise ValueError("spec has no terms")
        return acc


@dataclass(frozen=True)
class CouplingNorms:
    """Commutator strengths of one coupling against both of its volumes."""

    volumes: tuple[int, int]
    distance: float
    norm_first: float
    norm_second: float


@dataclass(frozen=True)
class LocalityReport:
    """Commutator-strength survey of a volume-decomposed Hamiltonian.

    ``connected`` is true when every volume has at least one coupling it
    fails to commute with. ``decay_exponent`` is the slope of
    log(norm) against log(distance), or None when fewer than two distinct
    distances carry nonzero norms.
    """

    entries: tuple[CouplingNorms, ...]
    connected: bool
    decay_exponent: float | None
    decay_residual: float | None

    def norm(self, volume_i: int, volume_j: int) -> float:
        """Commutator norm of volume i's term with the (i, j) coupling; 0 if uncoupled."""
        for e in self.entries:
            if e.volumes == (volume_i, volume_j):
                return e.norm_first
            if e.volumes == (volume_j, volume_i):
                return e.norm_second
        return 0.0


def locality_report(spec: LocalHamiltonianSpec) -> LocalityReport:
    """Measure ||[H_i, J_ij]|| for every coupling and fit the distance decay."""
    entries = []
    touched: dict[int, bool] = {k: False for k in range(len(spec.terms))}
    points: list[tuple[float, float]] = []
    for c in spec.couplings:
        i, j = c.volumes
        ni = spectral_norm(commutator(spec.terms[i].operator, c.operator))
        nj = spectral_norm(commutator(spec.terms[j].operator, c.operator))
        entries.append(CouplingNorms((i, j), c.distance, ni, nj))
        for vol, nv in ((i, ni), (j, nj)):
            if nv > _ZERO_NORM_TOL:
                touched[vol] = True
                points.append((c.distance, nv))
    connected = bool(touched) and all(touched.values())

    exponent = residual = None
    if len({d for d, _ in points}) >= 2:
        logd = np.log([d for d, _ in points])
        logn = np.log([v for _, v in points])
        coeffs, res, *_ = np.polyfit(logd, logn, 1, full=True)
        exponent = float(coeffs[0])
        residual = float(np.sqrt(res[0])) if len(res) else 0.0
    return LocalityReport(tuple(entries), connected, exponent, residual)


def ising_local_spec(p: IsingParams) -> LocalHamiltonianSpec:
    """Volume decomposition of the chain: one site per volume, field terms
    local, exchange terms as nearest-neighbour couplings at unit distance."""
    g = HilbertGeometry(p.n)
    terms = tuple(
        LocalTerm(
            (i,),
            p.h * materialize_pauli_string(PauliString(g, {i: "Z"})),
        )
        for i in range(p.n)
    )
    couplings = tuple(
        Coupling(
            (i, i + 1),
            p.g * materialize_pauli_string(PauliString(g, {i: "X", i + 1: "X"})),
            1.0,
        )
        for i in range(p.n - 1)
    )
    return LocalHamiltonianSpec(g, terms, couplings)


_SPEC_KEYS = {
    "ising": {"type", "n", "h", "g"},
    "ising+ancilla": {"type", "n", "h", "g", "hA", "gA", "attach"},
}


def hamiltonian_from_dict(d: Mapping) -> Operator:
    """Build a Hamiltonian from a plain dict, the on-disk JSON layout."""
    kind = d.get("type")
    if kind not in _SPEC_KEYS:
        raise ValueError(
            f"unknown hamiltonian type {kind!r}, expected one of {sorted(_SPEC_KEYS)}"
        )
    extra = set(d) - _SPEC_KEYS[kind]
    if extra:
        raise ValueError(f"unknown keys for {kind!r} spec: {sorted(extra)}")
    missing = {"n", "h", "g"} - set(d)
    if kind == "ising+ancilla":
        missing |= {"hA", "gA"} - set(d)
    if missing:
        raise ValueError(f"{kind!r} spec is missing keys: {sorted(missing)}")
    p = IsingParams(d["n"], d["h"], d["g"])
    if kind == "ising":
        return build_ising(p)
    a = AncillaCoupling(d["hA"], d["gA"], d.get("attach"))
    return build_ising_with_ancilla(p, a)


def load_hamiltonian(path) -> Operator:
    with open(path, "r", encoding="utf-8") as f:
        return hamiltonian_from_dict(json.load(f))
