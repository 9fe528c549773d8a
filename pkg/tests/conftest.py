"""Shared randomized-input helpers. Everything is seeded and deterministic."""

import zlib

import numpy as np

from qmtime.opcore import DensityMatrix, HilbertGeometry, Operator, StateVector


def rng_for(seed: int | str) -> np.random.Generator:
    if isinstance(seed, str):
        seed = zlib.crc32(seed.encode())
    return np.random.default_rng(seed)


def random_state(rng: np.random.Generator, n_sites: int) -> StateVector:
    g = HilbertGeometry(n_sites)
    amp = rng.normal(size=g.dim) + 1j * rng.normal(size=g.dim)
    return StateVector(g, amp / np.linalg.norm(amp))


def random_hermitian(rng: np.random.Generator, n_sites: int, scale: float = 1.0) -> Operator:
    g = HilbertGeometry(n_sites)
    a = rng.normal(size=(g.dim, g.dim)) + 1j * rng.normal(size=(g.dim, g.dim))
    return Operator(g, scale * (a + a.conj().T) / 2.0, hermitian=True)


def random_unitary(rng: np.random.Generator, n_sites: int) -> Operator:
    g = HilbertGeometry(n_sites)
    a = rng.normal(size=(g.dim, g.dim)) + 1j * rng.normal(size=(g.dim, g.dim))
    q, r = np.linalg.qr(a)
    # fix the phase ambiguity of QR so the distribution is Haar
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return Operator(g, q)


def random_density(rng: np.random.Generator, n_sites: int, rank: int | None = None) -> DensityMatrix:
    g = HilbertGeometry(n_sites)
    r = rank or g.dim
    a = rng.normal(size=(g.dim, r)) + 1j * rng.normal(size=(g.dim, r))
    m = a @ a.conj().T
    return DensityMatrix(g, m / m.trace())
