"""Propagator and product-formula tests. The independent oracle throughout
is scipy.linalg.expm, which shares no code with the eigendecomposition route."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from conftest import random_hermitian, random_state, rng_for
from qmtime.evolve import (
    Propagator,
    ReachabilityReport,
    TimeGrid,
    phase_aligned_distance,
    phase_aligned_state_distance,
    propagator_at,
    reachability_probe,
    trotter_evolve,
    zassenhaus_truncated,
)
from qmtime.models import (
    AncillaCoupling,
    IsingParams,
    build_binary_measurement_hamiltonian,
    build_ising,
    build_ising_with_ancilla,
)
from qmtime.opcore import (
    HilbertGeometry,
    Operator,
    StateVector,
    commutator,
    expectation,
    identity,
    materialize_pauli_string,
    PauliString,
    pauli,
    spectral_norm,
)

G1 = HilbertGeometry(1)


class TestPropagator:
    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_matches_expm_oracle(self, seed):
        rng = rng_for(seed)
        n = int(rng.integers(1, 4))
        h = random_hermitian(rng, n)
        t = float(rng.uniform(-3, 3))
        oracle = expm(-1j * h.dense() * t)
        assert np.allclose(propagator_at(h, t).dense(), oracle, atol=1e-10)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_unitarity(self, seed):
        rng = rng_for(seed)
        h = random_hermitian(rng, 2)
        u = propagator_at(h, float(rng.uniform(0, 10)))
        defect = spectral_norm(u.dagger() @ u - identity(u.geometry))
        assert defect < 1e-10

    def test_group_property(self):
        rng = rng_for(42)
        p = Propagator(random_hermitian(rng, 3))
        t1, t2 = 0.37, 1.61
        combined = p.at(t1) @ p.at(t2)
        assert spectral_norm(combined - p.at(t1 + t2)) < 1e-9

    def test_zero_time_is_identity(self):
        p = Propagator(random_hermitian(rng_for(5), 2))
        assert np.allclose(p.at(0.0).dense(), np.eye(4), atol=1e-12)

    def test_energy_conservation(self):
        rng = rng_for(9)
        h = random_hermitian(rng, 3)
        p = Propagator(h)
        psi = random_state(rng, 3)
        e0 = expectation(psi, h)
        for t in (0.5, 2.0, 7.3):
            assert expectation(p.evolve(psi, t), h) == pytest.approx(e0, abs=1e-9)

    def test_state_evolution_matches_matrix(self):
        rng = rng_for(13)
        h = random_hermitian(rng, 2)
        p = Propagator(h)
        psi = random_state(rng, 2)
        direct = p.at(1.7) @ psi
        assert np.allclose(p.evolve(psi, 1.7).amplitudes, direct.amplitudes, atol=1e-12)

    def test_rejects_nonhermitian(self):
        with pytest.raises(ValueError):
            Propagator(Operator(G1, np.array([[0.0, 1.0], [0.0, 0.0]])))

    def test_ising_ground_energy_exposed(self):
        h = build_ising(IsingParams(4, 0.0, 1.0))
        assert Propagator(h).ground_energy == pytest.approx(-3.0, abs=1e-10)


class TestBinaryMeasurementPropagator:
    """Closed-form behaviour of the z-measurement coupling from the builder."""

    def test_closed_form_at_protocol_time(self):
        g = 1.3
        u = propagator_at(build_binary_measurement_hamiltonian(g), np.pi / g)
        expected = np.zeros((4, 4), dtype=complex)
        expected[:2, :2] = -1j * np.eye(2)
        expected[2:, 2:] = -pauli("X")
        assert np.allclose(u.dense(), expected, atol=1e-12)

    def test_basis_maps_up_to_phase(self):
        g = 2.0
        geom = HilbertGeometry(2)
        p = Propagator(build_binary_measurement_hamiltonian(g))
        u = p.at(np.pi / g)
        got_00 = u @ StateVector.basis(geom, "00")
        got_10 = u @ StateVector.basis(geom, "10")
        assert phase_aligned_state_distance(got_00, StateVector.basis(geom, "00")) < 1e-9
        assert phase_aligned_state_distance(got_10, StateVector.basis(geom, "11")) < 1e-9

    def test_square_at_full_period_is_identity(self):
        g = 0.7
        p = Propagator(build_binary_measurement_hamiltonian(g))
        u = p.at(2 * np.pi / g)
        assert np.allclose((u @ u).dense(), np.eye(4), atol=1e-9)


class TestTimeGrid:
    def test_includes_both_ends(self):
        ts = TimeGrid(t_end=10.0, dt=0.05).times()
        assert len(ts) == 201
        assert ts[0] == 0.0
        assert ts[-1] == pytest.approx(10.0, abs=1e-12)

    def test_step_cap(self):
        with pytest.raises(ValueError):
            TimeGrid(t_end=10.0, dt=1e-9)

    def test_validation(self):
        with pytest.raises(ValueError):
            TimeGrid(t_end=1.0, dt=-0.1)
        with pytest.raises(ValueError):
            TimeGrid(t_end=0.0, dt=0.1)


class TestTrotter:
    def test_error_halves_when_steps_double(self):
        x = Operator(G1, pauli("X"), hermitian=True)
        z = Operator(G1, pauli("Z"), hermitian=True)
        exact = propagator_at(x + z, 1.0)
        errs = {
            n: spectral_norm(trotter_evolve(x, z, 1.0, n) - exact) for n in (64, 128)
        }
        ratio = errs[64] / errs[128]
        assert 1.6 < ratio < 2.4

    def test_large_step_count_converges(self):
        # leading error is t^2 ||[x,z]|| / (2n) = 1/n here, so 1e4 steps land
        # near 1e-4 and 1e6 steps near 1e-6
        x = Operator(G1, pauli("X"), hermitian=True)
        z = Operator(G1, pauli("Z"), hermitian=True)
        exact = propagator_at(x + z, 1.0)
        assert spectral_norm(trotter_evolve(x, z, 1.0, 10_000) - exact) < 1e-4
        assert spectral_norm(trotter_evolve(x, z, 1.0, 1_000_000) - exact) < 1e-6

    def test_commuting_split_is_exact(self):
        g2 = HilbertGeometry(2)
        a = materialize_pauli_string(PauliString(g2, {0: "Z"}))
        b = materialize_pauli_string(PauliString(g2, {1: "X"}))
        exact = propagator_at(a + b, 2.2)
        assert spectral_norm(trotter_evolve(a, b, 2.2, 3) - exact) < 1e-12

    def test_rejects_bad_steps(self):
        x = Operator(G1, pauli("X"), hermitian=True)
        with pytest.raises(ValueError):
            trotter_evolve(x, x, 1.0, 0)


class TestZassenhaus:
    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_truncation_is_unitary(self, order):
        rng = rng_for(order)
        x, y = random_hermitian(rng, 2), random_hermitian(rng, 2)
        u = zassenhaus_truncated(x, y, 0.3, order)
        assert spectral_norm(u.dagger() @ u - identity(u.geometry)) < 1e-10

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_error_order_scaling(self, order):
        # halving t should shrink the defect by about 2^(order+1)
        x = Operator(G1, pauli("X"), hermitian=True)
        z = Operator(G1, pauli("Z"), hermitian=True)
        p = Propagator(x + z)

        def err(t):
            return spectral_norm(zassenhaus_truncated(x, z, t, order) - p.at(t))

        ratio = err(0.08) / err(0.04)
        assert ratio == pytest.approx(2 ** (order + 1), rel=0.25)

    def test_commuting_split_exact_at_order_one(self):
        g2 = HilbertGeometry(2)
        a = materialize_pauli_string(PauliString(g2, {0: "Z"}))
        b = materialize_pauli_string(PauliString(g2, {1: "X"}))
        exact = propagator_at(a + b, 1.5)
        assert spectral_norm(zassenhaus_truncated(a, b, 1.5, 1) - exact) < 1e-12

    def test_order_validation(self):
        x = Operator(G1, pauli("X"), hermitian=True)
        with pytest.raises(ValueError):
            zassenhaus_truncated(x, x, 1.0, 4)


class TestReachability:
    def test_depth_one_is_commutator_norm(self):
        rng = rng_for(21)
        x, y = random_hermitian(rng, 2), random_hermitian(rng, 2)
        report = reachability_probe(x, y, identity(x.geometry), 1)
        assert report.max_norm(1) == pytest.approx(
            spectral_norm(commutator(x, y)), rel=1e-12
        )

    def test_ising_ancilla_split_nonzero_through_depth_three(self):
        p = IsingParams(3, 1.0, 1.0)
        chain = build_ising(p)
        full = build_ising_with_ancilla(p, AncillaCoupling(0.5, 0.8))
        eye1 = Operator(HilbertGeometry(1), np.eye(2))
        from qmtime.opcore import tensor_product

        chain_embedded = tensor_product(chain, eye1)
        ancilla_part = full - chain_embedded
        report = reachability_probe(chain_embedded, ancilla_part, identity(full.geometry), 3)
        assert report.all_nonzero(3, tol=1e-10)

    def test_commuting_pair_reports_zero(self):
        g2 = HilbertGeometry(2)
        a = materialize_pauli_string(PauliString(g2, {0: "Z"}))
        b = materialize_pauli_string(PauliString(g2, {1: "X"}))
        report = reachability_probe(a, b, identity(g2), 2)
        assert report.max_norm(1) == pytest.approx(0.0, abs=1e-13)
        assert report.max_norm(2) == pytest.approx(0.0, abs=1e-13)

    def test_rejects_nonunitary_target(self):
        rng = rng_for(3)
        x, y = random_hermitian(rng, 1), random_hermitian(rng, 1)
        with pytest.raises(ValueError):
            reachability_probe(x, y, x, 1)

    def test_depth_validation(self):
        rng = rng_for(4)
        x, y = random_hermitian(rng, 1), random_hermitian(rng, 1)
        with pytest.raises(ValueError):
            reachability_probe(x, y, identity(x.geometry), 0)


class TestPhaseAlignment:
    @given(st.floats(-np.pi, np.pi))
    @settings(max_examples=20, deadline=None)
    def test_pure_phase_is_invisible(self, alpha):
        rng = rng_for(17)
        h = random_hermitian(rng, 2)
        u = propagator_at(h, 1.0)
        v = Operator(u.geometry, np.exp(1j * alpha) * u.dense())
        assert phase_aligned_distance(u, v) < 1e-10

    def test_distinct_unitaries_resolve(self):
        x = propagator_at(Operator(G1, pauli("X"), hermitian=True), 1.0)
        z = propagator_at(Operator(G1, pauli("Z"), hermitian=True), 1.0)
        assert phase_aligned_distance(x, z) > 0.1

    def test_state_distance_zero_for_phase(self):
        psi = random_state(rng_for(8), 2)
        rotated = StateVector(psi.geometry, np.exp(0.7j) * psi.amplitudes)
        assert phase_aligned_state_distance(psi, rotated) < 1e-12
