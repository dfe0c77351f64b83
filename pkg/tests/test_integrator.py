import math

import numpy as np
import pytest

from cdquench.integrate import StepSizeUnderflow, solve_ode


def test_scalar_phase_against_closed_form():
    # y' = -i w(t) y with w(t) = 2 + t has exact solution
    # y(t) = exp(-i (2t + t^2/2)).
    def rhs(t, y):
        return -1j * (2.0 + t) * y

    y, _ = solve_ode(rhs, (0.0, 3.0), np.array([1.0 + 0.0j]), rtol=1e-10)
    exact = np.exp(-1j * (2.0 * 3.0 + 4.5))
    assert abs(y[0] - exact) < 1e-8


def test_matrix_evolution_against_expm():
    from scipy.linalg import expm

    h = np.array([[1.0, 0.3 - 0.2j], [0.3 + 0.2j, -0.5]])
    y0 = np.array([0.8, 0.6], dtype=complex)

    def rhs(t, y):
        return -1j * (h @ y)

    y, _ = solve_ode(rhs, (0.0, 5.0), y0, rtol=1e-11)
    exact = expm(-1j * 5.0 * h) @ y0
    assert np.max(np.abs(y - exact)) < 1e-9


def test_tolerance_controls_error():
    def rhs(t, y):
        return -1j * 4.0 * y

    errs = []
    for tol in (1e-5, 1e-7, 1e-9):
        y, _ = solve_ode(rhs, (0.0, 10.0), np.array([1.0 + 0j]), rtol=tol)
        errs.append(abs(y[0] - np.exp(-40j)))
    assert errs[0] > errs[1] > errs[2]


def test_sample_times_hit_exactly():
    def rhs(t, y):
        return np.array([1.0 + 0j])  # y = t

    y, samples = solve_ode(rhs, (0.0, 1.0), np.array([0.0 + 0j]), rtol=1e-10,
                           sample_times=[0.25, 0.5, 0.75])
    assert [t for t, _ in samples] == [0.25, 0.5, 0.75]
    for t, snap in samples:
        assert abs(snap[0] - t) < 1e-12
    assert abs(y[0] - 1.0) < 1e-12


def test_sample_time_outside_span_rejected():
    with pytest.raises(ValueError):
        solve_ode(lambda t, y: y, (0.0, 1.0), np.array([1.0 + 0j]),
                  rtol=1e-8, sample_times=[2.0])


def test_invalid_span_rejected():
    with pytest.raises(ValueError):
        solve_ode(lambda t, y: y, (1.0, 0.0), np.array([1.0 + 0j]), rtol=1e-8)


def test_step_underflow_near_singularity():
    # y' = y / (1 - t)^2 blows up at t = 1; the controller must shrink the
    # step below the floor before reaching it.
    def rhs(t, y):
        return y / (1.0 - t) ** 2

    with pytest.raises(StepSizeUnderflow):
        solve_ode(rhs, (0.0, 1.0), np.array([1.0 + 0j]), rtol=1e-10)


def test_max_step_is_respected():
    seen = []

    def rhs(t, y):
        seen.append(t)
        return -1j * y

    solve_ode(rhs, (0.0, 1.0), np.array([1.0 + 0j]), rtol=1e-6, max_step=0.01)
    accepted = sorted(set(seen))
    assert np.max(np.diff(accepted)) <= 0.011


def test_projection_hook_applied():
    def rhs(t, y):
        return -1j * 3.0 * y + 0.001 * y  # slightly norm-expanding

    def unit(y):
        return y / np.sqrt(float(np.vdot(y, y).real))

    y, _ = solve_ode(rhs, (0.0, 20.0), np.array([1.0 + 0j]), rtol=1e-8,
                     project=unit)
    assert abs(abs(y[0]) - 1.0) < 1e-14


def test_bitwise_repeatability():
    def rhs(t, y):
        return -1j * np.array([2.0 * y[0] + 0.1 * y[1],
                               0.1 * y[0] - 2.0 * y[1]])

    y0 = np.array([1.0, 0.0], dtype=complex) / 1.0
    a, _ = solve_ode(rhs, (0.0, 7.0), y0, rtol=1e-9)
    b, _ = solve_ode(rhs, (0.0, 7.0), y0, rtol=1e-9)
    assert np.all(a == b)


def test_preserves_state_shape():
    y0 = np.ones((2, 5), dtype=complex)

    def rhs(t, y):
        assert y.shape == (2, 5)
        return -1j * y

    y, _ = solve_ode(rhs, (0.0, 1.0), y0, rtol=1e-8)
    assert y.shape == (2, 5)
    assert np.max(np.abs(y - np.exp(-1j) * y0)) < 1e-7


def test_convergence_order_is_high():
    # Halving the step via max_step should shrink the error by ~2^5.
    def rhs(t, y):
        return -1j * (1.0 + np.sin(t)) * y

    exact_phase = 2.0 + (1.0 - math.cos(2.0))
    errs = []
    for h in (0.1, 0.05):
        y, _ = solve_ode(rhs, (0.0, 2.0), np.array([1.0 + 0j]), rtol=1e-2,
                         atol=1.0, max_step=h)
        errs.append(abs(y[0] - np.exp(-1j * exact_phase)))
    order = math.log2(errs[0] / errs[1])
    assert order > 4.0
