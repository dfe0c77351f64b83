import math

import numpy as np
import pytest

from cdquench.twolevel import (
    SIGMA_Y,
    DegeneracyError,
    LzParams,
    TwoLevelDriver,
    TwoLevelState,
    evolve_two_level,
    excited_state,
    ground_state,
    instantaneous_eigenbasis,
    lz_cd_term,
    lz_hamiltonian,
    state_fidelity,
)


class TestHamiltonian:
    def test_pure_gap(self):
        h = lz_hamiltonian(0.0, 1.0)
        evals = np.linalg.eigvalsh(h)
        assert np.allclose(evals, [-1.0, 1.0])
        assert evals[1] - evals[0] == pytest.approx(2.0)

    def test_pythagorean_gap(self):
        assert np.allclose(np.linalg.eigvalsh(lz_hamiltonian(3.0, 4.0)),
                           [-5.0, 5.0])

    def test_decoupled_levels(self):
        assert np.allclose(lz_hamiltonian(1.0, 0.0), np.diag([1.0, -1.0]))

    def test_gap_formula(self):
        for lam, delta in ((0.3, 0.7), (-2.0, 1.5), (5.0, 0.1)):
            evals = np.linalg.eigvalsh(lz_hamiltonian(lam, delta))
            assert evals[1] - evals[0] == pytest.approx(
                2.0 * math.hypot(lam, delta), rel=1e-14)


class TestCdTerm:
    def test_at_crossing(self):
        assert np.allclose(lz_cd_term(0.0, 1.0, 1.0), -0.5 * SIGMA_Y)

    def test_zero_rate(self):
        assert np.allclose(lz_cd_term(3.7, 1.0, 0.0), np.zeros((2, 2)))

    def test_vanishes_far_from_crossing(self):
        m = lz_cd_term(1e6, 1.0, 1.0)
        assert np.max(np.abs(m)) == pytest.approx(5e-13, rel=1e-6)

    def test_degenerate_point_rejected(self):
        with pytest.raises(DegeneracyError):
            lz_cd_term(0.0, 0.0, 1.0)


class TestEigenbasis:
    def test_diagonal(self):
        g, e, (e0, e1) = instantaneous_eigenbasis(np.diag([1.0, -1.0]))
        assert np.allclose(g, [0.0, 1.0])
        assert np.allclose(e, [1.0, 0.0])
        assert (e0, e1) == (-1.0, 1.0)

    def test_pure_gap(self):
        g, _, (e0, _) = instantaneous_eigenbasis(lz_hamiltonian(0.0, 1.0))
        assert e0 == pytest.approx(-1.0)
        expected = np.array([1.0, -1.0]) / math.sqrt(2.0)
        assert np.allclose(np.abs(g @ expected), 1.0)

    def test_residual(self):
        h = lz_hamiltonian(3.0, 4.0)
        g, e, (e0, e1) = instantaneous_eigenbasis(h)
        assert (e0, e1) == pytest.approx((-5.0, 5.0))
        assert np.max(np.abs(h @ g - e0 * g)) < 1e-12
        assert np.max(np.abs(h @ e - e1 * e)) < 1e-12

    def test_orthonormal_real_gauge(self):
        g, e, _ = instantaneous_eigenbasis(lz_hamiltonian(-0.7, 1.3))
        assert abs(np.vdot(g, e)) < 1e-14
        assert np.max(np.abs(g.imag)) == 0.0
        first = g[np.flatnonzero(np.abs(g) > 1e-12)[0]]
        assert first.real > 0

    def test_degenerate_rejected(self):
        with pytest.raises(DegeneracyError):
            instantaneous_eigenbasis(np.eye(2))


class TestParams:
    def test_duration_from_endpoints(self):
        p = LzParams(delta=1.0, lam_initial=-20.0, lam_final=20.0, rate=4.0)
        assert p.duration == pytest.approx(10.0)
        assert p.lam(0.0) == -20.0
        assert p.lam(p.duration) == pytest.approx(20.0, rel=4e-16)

    def test_zero_rate_requires_duration(self):
        with pytest.raises(ValueError):
            LzParams(delta=1.0, lam_initial=1.0, lam_final=1.0, rate=0.0)
        p = LzParams(delta=1.0, lam_initial=1.0, lam_final=1.0, rate=0.0,
                     duration=3.0)
        assert p.lam(1.7) == 1.0

    def test_inconsistent_sweep_rejected(self):
        with pytest.raises(ValueError):
            LzParams(delta=1.0, lam_initial=-1.0, lam_final=1.0, rate=-2.0)
        with pytest.raises(ValueError):
            LzParams(delta=-1.0, lam_initial=-1.0, lam_final=1.0, rate=2.0)


class TestEvolve:
    def test_stationary_state(self):
        p = LzParams(delta=1.0, lam_initial=0.5, lam_final=0.5, rate=0.0,
                     duration=8.0)
        start = ground_state(0.5, 1.0)
        final = evolve_two_level(p, TwoLevelDriver.BARE, start, 1e-10)
        assert state_fidelity(start, final) == pytest.approx(1.0, abs=1e-10)

    def test_assisted_fast_sweep_transitionless(self):
        p = LzParams(delta=1.0, lam_initial=-20.0, lam_final=20.0, rate=100.0)
        final = evolve_two_level(p, TwoLevelDriver.ASSISTED,
                                 ground_state(-20.0, 1.0), 1e-10)
        assert state_fidelity(ground_state(20.0, 1.0), final) >= 1.0 - 1e-6

    def test_bare_crossing_matches_asymptotic_formula(self):
        # Independent oracle: transition probability exp(-pi delta^2 / rate)
        # for a linear sweep through the avoided crossing.
        p = LzParams(delta=1.0, lam_initial=-50.0, lam_final=50.0, rate=10.0)
        final = evolve_two_level(p, TwoLevelDriver.BARE,
                                 ground_state(-50.0, 1.0), 1e-10)
        excited_pop = state_fidelity(excited_state(50.0, 1.0), final)
        assert excited_pop == pytest.approx(math.exp(-math.pi / 10.0),
                                            rel=0.01)

    def test_unnormalized_initial_rejected(self):
        p = LzParams(delta=1.0, lam_initial=-1.0, lam_final=1.0, rate=1.0)
        with pytest.raises(ValueError):
            evolve_two_level(p, TwoLevelDriver.BARE,
                             TwoLevelState(1.0, 1.0), 1e-8)

    def test_assisted_rejects_degenerate_gap(self):
        p = LzParams(delta=0.0, lam_initial=-1.0, lam_final=1.0, rate=1.0)
        with pytest.raises(DegeneracyError):
            evolve_two_level(p, TwoLevelDriver.ASSISTED,
                             ground_state(-1.0, 0.0), 1e-8)

    def test_bare_degenerate_crossing_stays_diabatic(self):
        # delta = 0 decouples the levels: the state follows its diabatic
        # branch and ends fully excited relative to the new ground state.
        p = LzParams(delta=0.0, lam_initial=-5.0, lam_final=5.0, rate=1.0)
        final = evolve_two_level(p, TwoLevelDriver.BARE,
                                 ground_state(-5.0, 0.0), 1e-10)
        assert state_fidelity(excited_state(5.0, 0.0), final) == pytest.approx(
            1.0, abs=1e-10)


class TestInvariants:
    @pytest.mark.parametrize("tol", [1e-8, 1e-10])
    def test_norm_conservation(self, tol):
        for driver in TwoLevelDriver:
            p = LzParams(delta=1.0, lam_initial=-20.0, lam_final=20.0,
                         rate=2.0)
            final = evolve_two_level(p, driver, ground_state(-20.0, 1.0), tol)
            assert abs(final.norm_squared() - 1.0) <= 100.0 * tol

    def test_transitionless_at_all_sampled_times(self):
        tol = 1e-10
        for rate in (0.1, 1.0, 10.0, 100.0):
            for delta in (0.5, 1.0, 2.0):
                p = LzParams(delta=delta, lam_initial=-5.0, lam_final=5.0,
                             rate=rate)
                times = np.linspace(0.0, p.duration, 9)[1:-1]
                _, snaps = evolve_two_level(
                    p, TwoLevelDriver.ASSISTED, ground_state(-5.0, delta),
                    tol, sample_times=list(times))
                for t, state in snaps:
                    target = ground_state(p.lam(t), delta)
                    assert state_fidelity(target, state) >= 1.0 - 10.0 * tol

    @pytest.mark.parametrize("lam", [-2.0, 0.0, 2.0])
    def test_gauge_consistency_with_adiabatic_connection(self, lam):
        # Finite-difference the real-gauge eigenvectors and build
        # i rate [|dn><n| - <n|dn>|n><n|]; must equal the closed form.
        delta, rate, step = 1.0, 1.3, 1e-6
        terms = np.zeros((2, 2), dtype=complex)
        for idx in (0, 1):
            up = instantaneous_eigenbasis(lz_hamiltonian(lam + step, delta))[idx]
            dn = instantaneous_eigenbasis(lz_hamiltonian(lam - step, delta))[idx]
            vec = instantaneous_eigenbasis(lz_hamiltonian(lam, delta))[idx]
            dvec = (up - dn) / (2.0 * step)
            terms += np.outer(dvec, vec.conj())
            terms -= np.vdot(vec, dvec) * np.outer(vec, vec.conj())
        numeric = 1j * rate * terms
        assert np.max(np.abs(numeric - lz_cd_term(lam, delta, rate))) < 1e-6

    def test_halving_tolerance_never_hurts(self):
        p = LzParams(delta=1.0, lam_initial=-30.0, lam_final=30.0, rate=10.0)
        start = ground_state(-30.0, 1.0)
        reference = evolve_two_level(p, TwoLevelDriver.BARE, start, 1e-13)
        errs = []
        tol = 1e-4
        for _ in range(5):
            final = evolve_two_level(p, TwoLevelDriver.BARE, start, tol)
            errs.append(np.linalg.norm(final.vector - reference.vector))
            tol /= 2.0
        assert all(b <= a for a, b in zip(errs, errs[1:]))
