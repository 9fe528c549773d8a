"""Information light cones from commutator-norm scans of the spin chain.

The scan tabulates C_j(t) = ||[A_j(t), A_i]|| for a single-site source
observable A_i, single-site probe observables A_j at every site, and
Heisenberg evolution A_j(t) = U(t)^dag A_j U(t). The growth of C_j(t) away
from the source traces the effective light cone; arrival times at a
threshold give an information velocity, and the exponential-envelope check
tests a claimed (c, a, v) cone against the whole grid.

Everything is computed in the Hamiltonian eigenbasis, where the propagator
is a phase mask: with B = V^dag A V and phases e_k(t) = exp(i lam_k t),

    A_j(t)  ->  diag(e(t)) B_j diag(conj(e(t))).

Two routes share this representation. The dense route forms the commutator
per grid cell and diagonalizes it; it is exact and used up to dimension 256.
The iterative route runs one Lanczos recursion per site for ALL grid times
at once (the batch dimension is time), so each iteration costs a handful of
matrix products against the full batch; converged time columns drop out of
the batch as the run proceeds. Start vectors are fixed, so scans are
deterministic bit for bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from qmtime.evolve import TimeGrid
from qmtime.models import IsingParams, build_ising
from qmtime.opcore import HilbertGeometry, PauliString, materialize_pauli_string

__all__ = [
    "MAX_SCAN_SITES",
    "DENSE_SCAN_MAX_DIM",
    "DEFAULT_THRESHOLD",
    "ConeScan",
    "ArrivalTable",
    "VelocityFit",
    "EnvelopeReport",
    "cone_scan",
    "arrival_times",
    "fit_velocity",
    "envelope_check",
    "scan_to_csv",
    "arrivals_to_csv",
]

# Exact evolution only: 2^12 is the largest chain the scan will diagonalize.
MAX_SCAN_SITES = 12

# At or below this dimension the per-cell dense route is fast enough and
# exact; above it the batched Lanczos route takes over.
DENSE_SCAN_MAX_DIM = 256

# Default arrival threshold: 5% of the norm ceiling 2 for Pauli pairs.
DEFAULT_THRESHOLD = 0.1

_PROBE_LETTERS = ("X", "Y", "Z")

# Lanczos controls. The start vector seed is a fixed constant, not a knob:
# scans must be reproducible run to run.
_LANCZOS_SEED = 20260822
_LANCZOS_MAX_ITER = 200
_LANCZOS_CHECK_EVERY = 4
_LANCZOS_RTOL = 1e-10
_LANCZOS_ATOL = 1e-13
_BREAKDOWN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ConeScan:
    """Commutator norms on a (site x time) grid, plus how they were made."""

    params: IsingParams
    source: int
    probe: str
    source_probe: str
    sites: tuple[int, ...]
    times: np.ndarray
    norms: np.ndarray  # shape (n_sites, n_times)
    method: str

    def norm_history(self, site: int) -> np.ndarray:
        return self.norms[self.sites.index(site)]


@dataclass(frozen=True)
class ArrivalTable:
    """First threshold crossings per site.

    ``arrivals`` holds the earliest grid time with C_j >= eps, None when the
    threshold is never reached on the grid. The source is pinned to 0 by
    convention: the perturbation starts there. ``monotonicity_violations``
    lists sites that arrive earlier than some site closer to the source.
    """

    source: int
    eps: float
    sites: tuple[int, ...]
    distances: tuple[int, ...]
    arrivals: tuple[float | None, ...]
    monotonicity_violations: tuple[int, ...]

    def arrival(self, site: int) -> float | None:
        return self.arrivals[self.sites.index(site)]

    def reached_sites(self) -> tuple[int, ...]:
        return tuple(s for s, t in zip(self.sites, self.arrivals) if t is not None)


@dataclass(frozen=True)
class VelocityFit:
    """Least-squares line distance = velocity * arrival + intercept."""

    velocity: float
    intercept: float
    residual_norm: float
    n_points: int
    lattice_spacing: float | None = None

    @property
    def relative_residual(self) -> float:
        # residual measured against the size of the distances being fit
        return self.residual_norm / self._distance_scale

    @property
    def velocity_si(self) -> float | None:
        """Velocity in m/s when a lattice spacing (m/site) was supplied."""
        if self.lattice_spacing is None:
            return None
        return self.velocity * self.lattice_spacing

    _distance_scale: float = 1.0


@dataclass(frozen=True)
class EnvelopeReport:
    """Verdict of C_j(t) <= c exp[-a (v t - d_j)] over the whole grid."""

    passed: bool
    n_violations: int
    worst_site: int
    worst_time: float
    worst_excess: float  # C - envelope at the worst cell; <= 0 when passed


def _single_site(geometry: HilbertGeometry, site: int, letter: str) -> np.ndarray:
    op = materialize_pauli_string(PauliString(geometry, {site: letter}))
    return op.dense()


def _eigenbasis_observable(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    b = v.conj().T @ (a @ v)
    if np.abs(b.imag).max() < 1e-14:
        return np.ascontiguousarray(b.real)
    return b


def _bdot(b: np.ndarray, m: np.ndarray) -> np.ndarray:
    # real matrix times complex batch: multiply the interleaved real view,
    # which runs at dgemm speed instead of zgemm speed
    if b.dtype == np.float64:
        m = np.ascontiguousarray(m)
        return (b @ m.view(np.float64)).view(np.complex128)
    return b @ m


def _norms_dense(lam: np.ndarray, b_src: np.ndarray, b_probe: np.ndarray, times: np.ndarray) -> np.ndarray:
    out = np.empty(len(times))
    for c, t in enumerate(times):
        e = np.exp(1j * lam * t)
        at = (b_probe * e[:, None]) * e.conj()[None, :]
        k = -1j * (at @ b_src - b_src @ at)
        w = np.linalg.eigvalsh(k)
        out[c] = max(abs(w[0]), abs(w[-1]))
    return out


def _ritz_extremes(alpha: np.ndarray, beta: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Largest |Ritz value| and its residual bound, per column.

    alpha has shape (m, w), beta (m, w) with beta[m-1] the not-yet-used
    trailing coefficient. Returns (estimate, bound) arrays of width w.
    """
    w = alpha.shape[1]
    t = np.zeros((w, m, m))
    idx = np.arange(m)
    t[:, idx, idx] = alpha[:m].T
    if m > 1:
        off = np.arange(m - 1)
        t[:, off, off + 1] = beta[: m - 1].T
        t[:, off + 1, off] = beta[: m - 1].T
    vals, vecs = np.linalg.eigh(t)
    lo, hi = np.abs(vals[:, 0]), np.abs(vals[:, -1])
    pick_hi = hi >= lo
    est = np.where(pick_hi, hi, lo)
    last_component = np.where(pick_hi, np.abs(vecs[:, -1, -1]), np.abs(vecs[:, -1, 0]))
    bound = beta[m - 1] * last_component
    return est, bound


def _norms_lanczos(lam: np.ndarray, b_src: np.ndarray, b_probe: np.ndarray, times: np.ndarray) -> np.ndarray:
    dim, nt = len(lam), len(times)
    phases = np.exp(1j * np.outer(lam, times))

    rng = np.random.default_rng(_LANCZOS_SEED)
    v0 = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    v0 /= np.linalg.norm(v0)

    def heis(mcols: np.ndarray, e: np.ndarray) -> np.ndarray:
        return e * _bdot(b_probe, e.conj() * mcols)

    def apply_k(mcols: np.ndarray, e: np.ndarray) -> np.ndarray:
        return -1j * (heis(_bdot(b_src, mcols), e) - _bdot(b_src, heis(mcols, e)))

    out = np.zeros(nt)
    active = np.arange(nt)
    vk = np.tile(v0[:, None], (1, nt))
    vprev = np.zeros_like(vk)
    alpha = np.zeros((_LANCZOS_MAX_ITER, nt))
    beta = np.zeros((_LANCZOS_MAX_ITER, nt))

    for m in range(1, _LANCZOS_MAX_ITER + 1):
        e = phases[:, active]
        w = apply_k(vk, e)
        a = np.sum(vk.conj() * w, axis=0).real
        w -= a * vk
        if m > 1:
            w -= beta[m - 2, active] * vprev
        # one extra projection against the current vector keeps the
        # recursion stable without full reorthogonalization
        w -= np.sum(vk.conj() * w, axis=0) * vk
        b = np.linalg.norm(w, axis=0)
        alpha[m - 1, active] = a
        beta[m - 1, active] = b

        if m % _LANCZOS_CHECK_EVERY == 0 or m == _LANCZOS_MAX_ITER or (b < _BREAKDOWN_TOL).any():
            est, bound = _ritz_extremes(alpha[:, active], beta[:, active], m)
            tol = np.maximum(_LANCZOS_ATOL, _LANCZOS_RTOL * est)
            done = (bound <= tol) | (b < _BREAKDOWN_TOL)
            if done.any():
                out[active[done]] = est[done]
                keep = ~done
                active = active[keep]
                if active.size == 0:
                    return out
                vk = np.ascontiguousarray(vk[:, keep])
                vprev = np.ascontiguousarray(vprev[:, keep])
                w = np.ascontiguousarray(w[:, keep])
                b = b[keep]
                est = est[keep]
            if m == _LANCZOS_MAX_ITER:
                # ran out of iterations: take the current Ritz estimates
                out[active] = est
                return out
        vprev = vk
        vk = w / b
    return out


def cone_scan(
    p: IsingParams,
    source: int,
    grid: TimeGrid,
    probe: str = "Z",
    source_probe: str | None = None,
    method: str = "auto",
) -> ConeScan:
    """Scan ||[A_j(t), A_source]|| over every site and grid time.

    ``probe`` is the Pauli letter measured at each site j; ``source_probe``
    is the letter perturbing the source site and defaults to the probe
    letter. Chains are capped at 12 sites (exact evolution only).
    """
    if p.n > MAX_SCAN_SITES:
        raise ValueError(f"chain length {p.n} exceeds the exact-evolution cap {MAX_SCAN_SITES}")
    if not 0 <= source < p.n:
        raise ValueError(f"source site {source} outside chain of length {p.n}")
    if source_probe is None:
        source_probe = probe
    for letter in (probe, source_probe):
        if letter not in _PROBE_LETTERS:
            raise ValueError(f"probe must be one of {_PROBE_LETTERS}, got {letter!r}")
    if method not in ("auto", "dense", "iterative"):
        raise ValueError(f"unknown method {method!r}")

    geometry = HilbertGeometry(p.n)
    h = build_ising(p).dense()
    lam, v = np.linalg.eigh(h)
    if method == "auto":
        method = "dense" if geometry.dim <= DENSE_SCAN_MAX_DIM else "iterative"
    route = _norms_dense if method == "dense" else _norms_lanczos

    times = grid.times()
    b_src = _eigenbasis_observable(_single_site(geometry, source, source_probe), v)
    norms = np.empty((p.n, len(times)))
    for j in range(p.n):
        b_probe = _eigenbasis_observable(_single_site(geometry, j, probe), v)
        norms[j] = route(lam, b_src, b_probe, times)

    times = times.copy()
    times.flags.writeable = False
    norms.flags.writeable = False
    return ConeScan(p, source, probe, source_probe, tuple(range(p.n)), times, norms, method)


def arrival_times(scan: ConeScan, eps: float = DEFAULT_THRESHOLD) -> ArrivalTable:
    """First grid time per site with C_j >= eps; no interpolation.

    The source entry is 0 by convention. Sites whose norm never reaches the
    threshold stay unmarked. Arrivals are then checked for monotonicity in
    distance from the source; offenders are reported, not rejected.
    """
    if not 0 < eps < 2:
        raise ValueError(f"threshold must sit inside (0, 2), got {eps}")
    arrivals: list[float | None] = []
    for row, site in zip(scan.norms, scan.sites):
        if site == scan.source:
            arrivals.append(0.0)
            continue
        hits = np.nonzero(row >= eps)[0]
        arrivals.append(float(scan.times[hits[0]]) if hits.size else None)

    # Sites at equal distance (the two sides of the source) are never
    # compared with each other, only against strictly nearer ones; a nearer
    # site that never arrives makes any farther arrival a violation.
    distances = tuple(abs(s - scan.source) for s in scan.sites)
    by_distance: dict[int, list[float]] = {}
    for k, dist in enumerate(distances):
        t = arrivals[k] if arrivals[k] is not None else np.inf
        by_distance.setdefault(dist, []).append(t)
    violations = []
    latest_nearer = 0.0
    for dist in sorted(by_distance):
        for k, site_dist in enumerate(distances):
            if site_dist != dist:
                continue
            t = arrivals[k] if arrivals[k] is not None else np.inf
            if t < latest_nearer - 1e-12:
                violations.append(scan.sites[k])
        latest_nearer = max(latest_nearer, max(by_distance[dist]))
    return ArrivalTable(
        scan.source, eps, scan.sites, distances, tuple(arrivals), tuple(violations)
    )


def fit_velocity(arrivals: ArrivalTable, lattice_spacing: float | None = None) -> VelocityFit:
    """Least-squares information velocity from the reached sites.

    Fits distance = v * arrival + intercept. With a lattice spacing (metres
    per site) the slope also becomes available in m/s.
    """
    pts = [
        (t, d)
        for t, d in zip(arrivals.arrivals, arrivals.distances)
        if t is not None
    ]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 reached sites to fit, got {len(pts)}")
    t = np.array([q[0] for q in pts])
    d = np.array([q[1] for q in pts], dtype=float)
    design = np.column_stack([t, np.ones_like(t)])
    coef, _, _, _ = np.linalg.lstsq(design, d, rcond=None)
    residual = float(np.linalg.norm(d - design @ coef))
    return VelocityFit(
        velocity=float(coef[0]),
        intercept=float(coef[1]),
        residual_norm=residual,
        n_points=len(pts),
        lattice_spacing=lattice_spacing,
        _distance_scale=float(np.linalg.norm(d)),
    )


def envelope_check(scan: ConeScan, c: float, a: float, v: float) -> EnvelopeReport:
    """Test C_j(t) <= c exp[-a (v t - d_j)] over the whole grid."""
    if not (c > 0 and a > 0 and v > 0):
        raise ValueError("envelope parameters must all be positive")
    d = np.array([abs(s - scan.source) for s in scan.sites], dtype=float)
    arg = a * (v * scan.times[None, :] - d[:, None])
    # cap the argument so the envelope underflows to 0 instead of exp overflowing
    envelope = c * np.exp(-np.minimum(arg, 700.0))
    excess = scan.norms - envelope
    flat = int(np.argmax(excess))
    si, ti = np.unravel_index(flat, excess.shape)
    worst = float(excess[si, ti])
    return EnvelopeReport(
        passed=bool(worst <= 0.0),
        n_violations=int(np.count_nonzero(excess > 0.0)),
        worst_site=scan.sites[si],
        worst_time=float(scan.times[ti]),
        worst_excess=worst,
    )


def scan_to_csv(scan: ConeScan, path: str | Path) -> None:
    """Write the grid as rows of site, time, commutator_norm."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["site", "time", "commutator_norm"])
        for row, site in zip(scan.norms, scan.sites):
            for t, value in zip(scan.times, row):
                writer.writerow([site, repr(float(t)), repr(float(value))])


def arrivals_to_csv(arrivals: ArrivalTable, path: str | Path) -> None:
    """Write per-site rows of site, distance, arrival_time (blank if unreached)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["site", "distance", "arrival_time"])
        for site, d, t in zip(arrivals.sites, arrivals.distances, arrivals.arrivals):
            writer.writerow([site, d, "" if t is None else repr(float(t))])
