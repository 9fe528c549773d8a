"""Core operator and state types for qubit-chain simulations.

Finite-dimensional linear algebra on chains of qubits. Site 0 is the leftmost
tensor factor, so basis index bits read site-0-major: on two sites the basis
is |00>, |01>, |10>, |11> with the first bit belonging to site 0. All values
are immutable after construction and every operation returns a new object.
"""

from __future__ import annotations

import functools
import numbers
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
from scipy import sparse

__all__ = [
    "DEFAULT_MAX_DIM",
    "ATOL_STATE",
    "ATOL_HERMITIAN",
    "ATOL_UNITARY",
    "ITERATIVE_NORM_RTOL",
    "DimensionLimitError",
    "GeometryMismatchError",
    "ConvergenceError",
    "HilbertGeometry",
    "PauliString",
    "Operator",
    "StateVector",
    "DensityMatrix",
    "pauli",
    "identity",
    "tensor_product",
    "materialize_pauli_string",
    "commutator",
    "spectral_norm",
    "expectation",
    "variance",
    "partial_trace",
    "heisenberg_evolve",
]

DEFAULT_MAX_DIM = 2**14

ATOL_STATE = 1e-10
ATOL_HERMITIAN = 1e-12
ATOL_UNITARY = 1e-10
ITERATIVE_NORM_RTOL = 1e-8

# Representation policy: matrices stay dense up to this dimension; above it
# anything with at most the fill fraction below is stored as CSR.
_SPARSE_MIN_DIM = 2**10
_SPARSE_MAX_FILL = 0.05
# Largest dimension handled by the exact (LAPACK) spectral-norm path.
_DENSE_NORM_MAX_DIM = 2**12

_POWER_METHOD_MAX_ITER = 10_000

MatrixLike = Union[np.ndarray, sparse.spmatrix, sparse.sparray]


class DimensionLimitError(ValueError):
    """Requested Hilbert space exceeds the configured dimension cap."""


class GeometryMismatchError(ValueError):
    """Operands live on different Hilbert-space geometries."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap before converging."""


@dataclass(frozen=True)
class HilbertGeometry:
    """Geometry of a chain of qubits: n_sites tensor factors of dimension 2."""

    n_sites: int
    max_dim: int = DEFAULT_MAX_DIM

    def __post_init__(self) -> None:
        if not isinstance(self.n_sites, numbers.Integral) or self.n_sites < 1:
            raise ValueError(f"n_sites must be a positive integer, got {self.n_sites!r}")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        if self.dim > self.max_dim:
            raise DimensionLimitError(
                f"dim 2**{self.n_sites} exceeds the configured maximum {self.max_dim}"
            )

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def combine(self, other: "HilbertGeometry") -> "HilbertGeometry":
        return HilbertGeometry(
            self.n_sites + other.n_sites, max_dim=max(self.max_dim, other.max_dim)
        )


_PAULI_ENTRIES = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
for _m in _PAULI_ENTRIES.values():
    _m.setflags(write=False)


def pauli(letter: str) -> np.ndarray:
    """Return the 2x2 matrix for one of the letters I, X, Y, Z."""
    try:
        return _PAULI_ENTRIES[letter.upper()]
    except (KeyError, AttributeError):
        raise ValueError(f"unknown Pauli letter {letter!r}, expected one of I, X, Y, Z")


def _require_same_geometry(a, b) -> HilbertGeometry:
    if a.geometry.n_sites != b.geometry.n_sites:
        raise GeometryMismatchError(
            f"geometry mismatch: {a.geometry.n_sites} vs {b.geometry.n_sites} sites"
        )
    return a.geometry


def _is_sparse(m: MatrixLike) -> bool:
    return sparse.issparse(m)


def _canonical_matrix(matrix: MatrixLike, dim: int) -> MatrixLike:
    """Coerce to complex128 and apply the dense/sparse representation policy."""
    if _is_sparse(matrix):
        m = sparse.csr_array(matrix, dtype=np.complex128, copy=True)
        if dim <= _SPARSE_MIN_DIM or m.nnz > _SPARSE_MAX_FILL * dim * dim:
            dense = m.toarray()
            dense.setflags(write=False)
            return dense
        return m
    m = np.array(matrix, dtype=np.complex128, copy=True)
    if dim > _SPARSE_MIN_DIM and np.count_nonzero(m) <= _SPARSE_MAX_FILL * dim * dim:
        return sparse.csr_array(m)
    m.setflags(write=False)
    return m


def _hermiticity_defect(m: MatrixLike) -> float:
    if _is_sparse(m):
        d = m - m.conj().T
        return float(abs(d).max()) if d.nnz else 0.0
    return float(np.abs(m - m.conj().T).max())


@dataclass(frozen=True)
class Operator:
    """A linear operator on a qubit-chain Hilbert space.

    The matrix is stored dense or CSR according to size and fill; both paths
    produce identical results. When ``hermitian`` is True the entries were
    checked against the conjugate transpose at tolerance 1e-12.
    """

    geometry: HilbertGeometry
    matrix: MatrixLike
    hermitian: bool | None = None

    def __post_init__(self) -> None:
        dim = self.geometry.dim
        m = self.matrix if _is_sparse(self.matrix) else np.asarray(self.matrix)
        if m.shape != (dim, dim):
            raise ValueError(
                f"matrix shape {m.shape} does not match geometry dim {dim}"
            )
        object.__setattr__(self, "matrix", _canonical_matrix(m, dim))
        if self.hermitian:
            defect = _hermiticity_defect(self.matrix)
            if defect > ATOL_HERMITIAN:
                raise ValueError(
                    f"operator marked hermitian but max |A - A^dag| = {defect:.3e}"
                )

    @property
    def is_sparse(self) -> bool:
        return _is_sparse(self.matrix)

    def dense(self) -> np.ndarray:
        if self.is_sparse:
            return self.matrix.toarray()
        return self.matrix

    def dagger(self) -> "Operator":
        return Operator(self.geometry, self.matrix.conj().T, hermitian=self.hermitian)

    def __add__(self, other: "Operator") -> "Operator":
        g = _require_same_geometry(self, other)
        herm = True if (self.hermitian and other.hermitian) else None
        return Operator(g, self.matrix + other.matrix, hermitian=herm)

    def __sub__(self, other: "Operator") -> "Operator":
        g = _require_same_geometry(self, other)
        herm = True if (self.hermitian and other.hermitian) else None
        return Operator(g, self.matrix - other.matrix, hermitian=herm)

    def __neg__(self) -> "Operator":
        return Operator(self.geometry, -self.matrix, hermitian=self.hermitian)

    def __mul__(self, scalar: complex) -> "Operator":
        if not isinstance(scalar, numbers.Number):
            return NotImplemented
        herm = True if (self.hermitian and isinstance(scalar, numbers.Real)) else None
        return Operator(self.geometry, self.matrix * scalar, hermitian=herm)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            g = _require_same_geometry(self, other)
            return Operator(g, self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            _require_same_geometry(self, other)
            amp = self.matrix @ other.amplitudes
            return StateVector(self.geometry, amp)
        return NotImplemented


def identity(geometry: HilbertGeometry) -> Operator:
    if geometry.dim > _SPARSE_MIN_DIM:
        m = sparse.identity(geometry.dim, dtype=np.complex128, format="csr")
    else:
        m = np.eye(geometry.dim, dtype=np.complex128)
    return Operator(geometry, m, hermitian=True)


@dataclass(frozen=True)
class PauliString:
    """A tensor product of single-site Pauli letters, identity elsewhere.

    ``factors`` maps site index to a letter in {I, X, Y, Z}. Explicit I
    entries are dropped. The empty mapping is the identity string.
    """

    geometry: HilbertGeometry
    factors: Mapping[int, str] | Sequence[tuple[int, str]]

    def __post_init__(self) -> None:
        items = (
            self.factors.items()
            if isinstance(self.factors, Mapping)
            else list(self.factors)
        )
        cleaned = {}
        for site, letter in items:
            if not 0 <= site < self.geometry.n_sites:
                raise ValueError(
                    f"site {site} outside chain of {self.geometry.n_sites} sites"
                )
            letter = letter.upper()
            if letter not in _PAULI_ENTRIES:
                raise ValueError(f"unknown Pauli letter {letter!r}")
            if site in cleaned:
                raise ValueError(f"site {site} listed twice")
            if letter != "I":
                cleaned[site] = letter
        object.__setattr__(self, "factors", tuple(sorted(cleaned.items())))

    @property
    def weight(self) -> int:
        """Number of non-identity factors."""
        return len(self.factors)

    def letter(self, site: int) -> str:
        for s, l in self.factors:
            if s == site:
                return l
        return "I"


def materialize_pauli_string(ps: PauliString) -> Operator:
    """Build the full-space matrix of a Pauli string as a Kronecker chain."""
    n = ps.geometry.n_sites
    letters = [ps.letter(site) for site in range(n)]
    mats = [sparse.csr_array(_PAULI_ENTRIES[l]) for l in letters]
    full = functools.reduce(lambda a, b: sparse.kron(a, b, format="csr"), mats)
    return Operator(ps.geometry, full, hermitian=True)


@dataclass(frozen=True)
class StateVector:
    """A pure state on a qubit chain, unit norm enforced at 1e-10."""

    geometry: HilbertGeometry
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amp = np.array(self.amplitudes, dtype=np.complex128, copy=True).reshape(-1)
        if amp.shape != (self.geometry.dim,):
            raise ValueError(
                f"amplitude length {amp.shape} does not match dim {self.geometry.dim}"
            )
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > ATOL_STATE:
            raise ValueError(f"state norm {norm!r} deviates from 1 beyond {ATOL_STATE}")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def basis(cls, geometry: HilbertGeometry, label: int | str) -> "StateVector":
        """Basis state from an integer index or a site-0-major bit label like "10"."""
        if isinstance(label, str):
            if len(label) != geometry.n_sites or set(label) - {"0", "1"}:
                raise ValueError(f"bad basis label {label!r} for {geometry.n_sites} sites")
            index = int(label, 2)
        else:
            index = int(label)
        if not 0 <= index < geometry.dim:
            raise ValueError(f"basis index {index} outside dim {geometry.dim}")
        amp = np.zeros(geometry.dim, dtype=np.complex128)
        amp[index] = 1.0
        return cls(geometry, amp)

    def inner(self, other: "StateVector") -> complex:
        _require_same_geometry(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.geometry, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """A mixed state: Hermitian, unit trace, eigenvalues bounded below by -1e-10."""

    geometry: HilbertGeometry
    matrix: np.ndarray

    def __post_init__(self) -> None:
        dim = self.geometry.dim
        m = self.matrix.toarray() if _is_sparse(self.matrix) else self.matrix
        m = np.array(m, dtype=np.complex128, copy=True)
        if m.shape != (dim, dim):
            raise ValueError(f"matrix shape {m.shape} does not match dim {dim}")
        defect = float(np.abs(m - m.conj().T).max())
        if defect > ATOL_HERMITIAN:
            raise ValueError(f"density matrix not hermitian, defect {defect:.3e}")
        tr = m.trace()
        if abs(tr - 1.0) > ATOL_STATE:
            raise ValueError(f"density matrix trace {tr!r} deviates from 1")
        # Positivity check is exact only where eigensolving is affordable.
        if dim <= _SPARSE_MIN_DIM:
            lo = float(np.linalg.eigvalsh(m).min())
            if lo < -ATOL_STATE:
                raise ValueError(f"density matrix has eigenvalue {lo:.3e} < -{ATOL_STATE}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def dense(self) -> np.ndarray:
        return self.matrix


def tensor_product(a, b):
    """Kronecker product of two operators or two state vectors.

    Site indices of ``b`` are shifted up by ``a.geometry.n_sites``, keeping
    the site-0-major ordering.
    """
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        g = a.geometry.combine(b.geometry)
        return StateVector(g, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, Operator) and isinstance(b, Operator):
        g = a.geometry.combine(b.geometry)
        if a.is_sparse or b.is_sparse:
            m = sparse.kron(a.matrix, b.matrix, format="csr")
        else:
            m = np.kron(a.matrix, b.matrix)
        herm = True if (a.hermitian and b.hermitian) else None
        return Operator(g, m, hermitian=herm)
    raise TypeError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")


def commutator(a: Operator, b: Operator) -> Operator:
    g = _require_same_geometry(a, b)
    return Operator(g, a.matrix @ b.matrix - b.matrix @ a.matrix)


def _power_method_norm(m: MatrixLike, rtol: float) -> float:
    """Largest singular value via power iteration on A^dag A."""
    dim = m.shape[0]
    mh = m.conj().T
    v = np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)
    sigma = 0.0
    for _ in range(_POWER_METHOD_MAX_ITER):
        w = mh @ (m @ v)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        sigma_new = float(np.sqrt(norm_w))
        v = w / norm_w
        if abs(sigma_new - sigma) <= rtol * max(sigma_new, 1e-300):
            return sigma_new
        sigma = sigma_new
    raise ConvergenceError(
        f"power method did not reach relative tolerance {rtol} "
        f"in {_POWER_METHOD_MAX_ITER} iterations"
    )


def spectral_norm(a: Operator, rtol: float = ITERATIVE_NORM_RTOL) -> float:
    """Largest singular value of ``a``.

    Exact LAPACK solve up to dimension 2**12; above that a power iteration
    on A^dag A with relative tolerance ``rtol`` (ConvergenceError if the
    iteration cap is hit).
    """
    dim = a.geometry.dim
    if dim <= _DENSE_NORM_MAX_DIM:
        m = a.dense()
        if a.hermitian:
            return float(np.abs(np.linalg.eigvalsh(m)).max())
        return float(np.linalg.svd(m, compute_uv=False)[0])
    return _power_method_norm(a.matrix, rtol)


def _require_hermitian(a: Operator) -> None:
    if a.hermitian:
        return
    if _hermiticity_defect(a.matrix) > ATOL_HERMITIAN:
        raise ValueError("observable must be hermitian within 1e-12")


def expectation(state: StateVector | DensityMatrix, a: Operator) -> float:
    """Expectation value of a Hermitian observable, returned as a real float."""
    _require_same_geometry(state, a)
    _require_hermitian(a)
    if isinstance(state, StateVector):
        val = complex(np.vdot(state.amplitudes, a.matrix @ state.amplitudes))
    elif isinstance(state, DensityMatrix):
        if a.is_sparse:
            val = complex((a.matrix @ state.matrix).trace())
        else:
            # trace of a product without forming it
            val = complex(np.sum(a.matrix * state.matrix.T))
    else:
        raise TypeError(f"expected StateVector or DensityMatrix, got {type(state).__name__}")
    if abs(val.imag) > ATOL_STATE:
        raise ValueError(f"expectation of hermitian observable came out complex: {val!r}")
    return float(val.real)


def variance(state: StateVector | DensityMatrix, a: Operator) -> float:
    """Variance <a^2> - <a>^2, clamped to be non-negative."""
    _require_same_geometry(state, a)
    _require_hermitian(a)
    mean = expectation(state, a)
    if isinstance(state, StateVector):
        w = a.matrix @ state.amplitudes
        second = float(np.real(np.vdot(w, w)))
    else:
        sq = Operator(a.geometry, a.matrix @ a.matrix, hermitian=True)
        second = expectation(state, sq)
    return max(second - mean * mean, 0.0)


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Trace out every site not listed in ``keep``.

    ``keep`` must be a nonempty proper subset of the chain's sites; kept
    sites retain their relative order in the reduced state.
    """
    n = rho.geometry.n_sites
    keep = sorted(set(int(s) for s in keep))
    if not keep:
        raise ValueError("keep must be nonempty")
    if any(s < 0 or s >= n for s in keep):
        raise ValueError(f"keep sites {keep} outside chain of {n} sites")
    if len(keep) == n:
        raise ValueError("keep must be a proper subset of the sites")

    tensor = rho.matrix.reshape([2] * (2 * n))
    # Row axes are 0..n-1, column axes n..2n-1. Contract each traced site's
    # row axis with its column axis, renumbering as axes disappear.
    traced = tensor
    removed = 0
    kept_set = set(keep)
    for site in range(n):
        if site in kept_set:
            continue
        row = site - removed
        ncur = n - removed
        traced = np.trace(traced, axis1=row, axis2=row + ncur)
        removed += 1
    k = len(keep)
    reduced = traced.reshape(1 << k, 1 << k)
    return DensityMatrix(HilbertGeometry(k, max_dim=rho.geometry.max_dim), reduced)


def _unitarity_defect(u: Operator) -> float:
    """Frobenius norm of U^dag U - I, an upper bound on the spectral defect."""
    m = u.matrix
    if _is_sparse(m):
        d = (m.conj().T @ m) - sparse.identity(m.shape[0], dtype=np.complex128, format="csr")
        return float(sparse.linalg.norm(d)) if d.nnz else 0.0
    d = m.conj().T @ m - np.eye(m.shape[0])
    return float(np.linalg.norm(d))


def heisenberg_evolve(a: Operator, u: Operator) -> Operator:
    """Heisenberg-picture conjugation U^dag a U by a unitary U."""
    g = _require_same_geometry(a, u)
    if _unitarity_defect(u) > ATOL_UNITARY:
        raise ValueError("u is not unitary within 1e-10")
    m = u.matrix.conj().T @ (a.matrix @ u.matrix)
    return Operator(g, m, hermitian=a.hermitian or None)
