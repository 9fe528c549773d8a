"""Quantum speed limits and the SI-unit estimators built on them.

Two unit systems live here, deliberately kept apart. ``qsl_time`` works in
engine units (hbar = 1) on concrete Hamiltonian/state pairs: the
Mandelstam-Tamm term bounds evolution time by the energy spread, the
Margolus-Levitin term by the mean energy above the ground state, and the
binding bound is the larger of the two. Everything below it works in SI
units on laboratory numbers: Coulomb coupling energies, the velocity scale
they induce, the distance-over-velocity time bound, and the thermal
de Broglie wavelength that separates macroscopic pointers from quantum ones.

A note on the velocity scale: the characteristic speed of an interaction of
strength u acting across a distance d is v = u d / (hbar pi), which for a
Coulomb pair is independent of d,

    v = k q1 q2 / (hbar pi).

For two elementary charges this is about 7.0e5 m/s; the headline convention
rounds it down to 1e5 m/s, leaving a factor of roughly seven of headroom in
any bound quoted at the conventional value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from qmtime.opcore import Operator, StateVector, expectation, variance

__all__ = [
    "DENOMINATOR_FLOOR",
    "CONVENTION_VELOCITY",
    "QslResult",
    "PhysicalConstants",
    "CONSTANTS",
    "CoulombCoupling",
    "ThermalParams",
    "qsl_time",
    "coulomb_energy",
    "energetic_velocity",
    "min_measurement_time",
    "thermal_wavelength",
    "is_macroscopic",
]

# Below this, a QSL denominator is treated as exactly zero: the state is
# (numerically) stationary and no finite bound applies.
DENOMINATOR_FLOOR = 1e-14

# The conventional round-number velocity used for headline bounds, m/s.
CONVENTION_VELOCITY = 1e5

_EIGENSOLVER_MAX_DIM = 2**13


@dataclass(frozen=True)
class QslResult:
    """Speed-limit times for one Hamiltonian/state pair, engine units.

    ``unreachable`` is set when either denominator vanishes; the affected
    time is +inf, and so is the combined bound.
    """

    tau_mt: float
    tau_ml: float
    unreachable: bool

    @property
    def tau_qsl(self) -> float:
        return max(self.tau_mt, self.tau_ml)


def qsl_time(h: Operator, psi: StateVector, e0: float | None = None) -> QslResult:
    """Mandelstam-Tamm and Margolus-Levitin times for evolving psi under h.

    tau_mt = pi / (2 dH), tau_ml = pi / (2 (<H> - E0)), hbar = 1. The ground
    energy defaults to an exact eigensolve of h; pass e0 when it is known
    analytically or the matrix is too large to diagonalize.
    """
    mean = expectation(psi, h)
    spread = math.sqrt(variance(psi, h))
    if e0 is None:
        if h.geometry.dim > _EIGENSOLVER_MAX_DIM:
            raise ValueError(
                f"dimension {h.geometry.dim} is too large for the default "
                "eigensolve; pass the ground energy e0 explicitly"
            )
        e0 = float(np.linalg.eigvalsh(h.dense()).min())
    lift = max(mean - e0, 0.0)

    tau_mt = math.pi / (2 * spread) if spread >= DENOMINATOR_FLOOR else math.inf
    tau_ml = math.pi / (2 * lift) if lift >= DENOMINATOR_FLOOR else math.inf
    return QslResult(tau_mt, tau_ml, unreachable=not (math.isfinite(tau_mt) and math.isfinite(tau_ml)))


@dataclass(frozen=True)
class PhysicalConstants:
    """SI constants, pinned to the values every estimate here is quoted in.

    Deliberately not imported from a constants library: the Coulomb constant
    and elementary charge are the rounded values the headline numbers are
    computed with, and silently sharpening them would shift quoted results.
    """

    hbar: float = 1.054571817e-34  # J s
    coulomb_constant: float = 9e9  # N m^2 / C^2
    elementary_charge: float = 1.6e-19  # C
    light_speed: float = 2.998e8  # m/s
    boltzmann: float = 1.380649e-23  # J/K
    planck: float = 6.62607015e-34  # J s


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class CoulombCoupling:
    """Two point charges (C) a fixed separation (m) apart."""

    charge_first: float
    charge_second: float
    separation: float

    def __post_init__(self) -> None:
        if not self.separation > 0:
            raise ValueError(f"separation must be positive, got {self.separation}")


@dataclass(frozen=True)
class ThermalParams:
    """A mass (kg) at a temperature (K), for thermal-wavelength estimates."""

    mass: float
    temperature: float

    def __post_init__(self) -> None:
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")


def coulomb_energy(c: CoulombCoupling, constants: PhysicalConstants = CONSTANTS) -> float:
    """Interaction energy k q1 q2 / r in joules."""
    return constants.coulomb_constant * c.charge_first * c.charge_second / c.separation


def energetic_velocity(
    charge_first: float, charge_second: float, constants: PhysicalConstants = CONSTANTS
) -> float:
    """Velocity scale k q1 q2 / (hbar pi) of a Coulomb-coupled pair, m/s.

    The separation cancels: energy falls as 1/r exactly as the traversal
    distance grows as r. Both charges must carry the same sign; a bound
    built on a negative energy scale would be meaningless.
    """
    if not charge_first * charge_second > 0:
        raise ValueError("charge product must be positive")
    return constants.coulomb_constant * charge_first * charge_second / (constants.hbar * math.pi)


def min_measurement_time(d: float, v: float) -> float:
    """Lower bound d / v on the time to measure across a distance d."""
    if not d > 0:
        raise ValueError(f"distance must be positive, got {d}")
    if not v > 0:
        raise ValueError(f"velocity must be positive, got {v}")
    return d / v


def thermal_wavelength(t: ThermalParams, constants: PhysicalConstants = CONSTANTS) -> float:
    """Thermal de Broglie wavelength h / sqrt(m k_B T), order-of-magnitude form.

    The sqrt(2 pi) of the textbook definition is dropped; at this precision
    it never matters. Hydrogen at room temperature comes out near 2.5e-10 m,
    a fraction of a nanometre (claims of ~100 nm for that case do not follow
    from this formula).
    """
    return constants.planck / math.sqrt(t.mass * constants.boltzmann * t.temperature)


def is_macroscopic(
    d: float,
    t: ThermalParams,
    factor: float = 100.0,
    constants: PhysicalConstants = CONSTANTS,
) -> bool:
    """Whether d clears the thermal wavelength by the given factor."""
    if not d > 0:
        raise ValueError(f"distance must be positive, got {d}")
    return d > factor * thermal_wavelength(t, constants)
