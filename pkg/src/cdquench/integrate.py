"""Adaptive embedded Runge-Kutta integration for complex-valued ODE systems.

Implements the Dormand-Prince 5(4) pair with FSAL, PI step-size control and
optional hard sampling points.  The state may be a numpy array of any shape;
the right-hand side must return an array of the same shape.  All arithmetic
is deterministic, so repeated runs with identical inputs produce bit-identical
trajectories.
"""

from __future__ import annotations

import math

import numpy as np


class IntegrationError(RuntimeError):
    """Integration could not be completed."""


class StepSizeUnderflow(IntegrationError):
    """Required step size fell below the representable resolution."""


# Dormand-Prince 5(4) extended Butcher tableau.  The fifth-order solution is
# propagated; _E holds b5 - b4 for the embedded error estimate.
_C = np.array([0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1.0 / 5.0]),
    np.array([3.0 / 40.0, 9.0 / 40.0]),
    np.array([44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0]),
    np.array([19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0,
              -212.0 / 729.0]),
    np.array([9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
              -5103.0 / 18656.0]),
    np.array([35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0,
              -2187.0 / 6784.0, 11.0 / 84.0]),
]
_E = np.array([71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
               -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0])

_MAX_STEPS = 50_000_000
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_SAFETY = 0.9
# PI controller exponents for a 5th-order error estimate.
_K_I = 0.7 / 5.0
_K_P = 0.4 / 5.0


def _rms(arr) -> float:
    v = arr.reshape(-1)
    return math.sqrt(float(np.vdot(v, v).real) / v.size)


def _initial_step(rhs, t0, y0, f0, rtol, atol, max_step):
    # Hairer/Norsett/Wanner style heuristic, as in standard RK drivers.
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = rhs(t0 + h0, y0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, max_step)


def solve_ode(rhs, t_span, y0, rtol, atol=None, max_step=math.inf,
              sample_times=None, project=None):
    """Integrate ``y' = rhs(t, y)`` from t_span[0] to t_span[1].

    Parameters
    ----------
    rhs : callable ``(t, y) -> dy/dt`` with y and dy/dt of the same shape.
    t_span : pair of floats, t1 > t0 required.
    y0 : complex ndarray, initial state.
    rtol : relative tolerance of the local error per step.
    atol : absolute tolerance; defaults to ``0.01 * rtol``.
    max_step : optional cap on the step size.
    sample_times : optional increasing sequence of interior times the solver
        must land on exactly; snapshots of the state are recorded there.
    project : optional manifold projection applied after every accepted step
        (e.g. renormalization for norm-preserving flows).  Removes only the
        error component off the invariant manifold; order of accuracy is
        unchanged.

    Returns
    -------
    y_final, samples : final state and a list of (t, y) snapshots (empty when
    no sampling was requested).
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError(f"require t1 > t0, got span ({t0}, {t1})")
    if atol is None:
        atol = 0.01 * rtol

    shape = np.shape(y0)

    def f_flat(t, y_flat):
        return np.asarray(
            rhs(t, y_flat.reshape(shape)), dtype=complex).reshape(-1)

    y = np.array(y0, dtype=complex, copy=True).reshape(-1)
    n = y.size
    t = t0
    k = np.empty((7, n), dtype=complex)
    k[0] = f_flat(t, y)
    h = _initial_step(f_flat, t, y, k[0], rtol, atol, max_step)

    pending = list(sample_times) if sample_times is not None else []
    for ts in pending:
        if ts < t0 - 1e-12 or ts > t1 + 1e-12:
            raise ValueError(f"sample time {ts} outside span ({t0}, {t1})")
    samples = []

    h_floor_scale = 16.0 * np.finfo(float).eps
    err_prev = 1.0
    n_steps = 0

    while t < t1:
        if n_steps > _MAX_STEPS:
            raise IntegrationError(f"step budget exhausted at t={t}")
        h_try = min(h, max_step)
        # Clip onto the next mandatory stop (sample point or final time).
        t_stop = pending[0] if pending else t1
        hit_stop = t + h_try >= t_stop
        h_step = t_stop - t if hit_stop else h_try
        if h_step <= h_floor_scale * max(abs(t), t1 - t0):
            raise StepSizeUnderflow(f"step size underflow at t={t} (h={h_step})")

        with np.errstate(all="ignore"):
            for i in range(1, 7):
                y_stage = y + h_step * (_A[i] @ k[:i])
                k[i] = f_flat(t + _C[i] * h_step, y_stage)
            y_new = y_stage  # stage 7 input is the 5th-order solution (FSAL)
            err = h_step * (_E @ k)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = _rms(err / scale)
        if not math.isfinite(err_norm):
            err_norm = math.inf
        n_steps += 1

        if err_norm <= 1.0:
            if project is not None:
                y_new = np.asarray(
                    project(y_new.reshape(shape)), dtype=complex).reshape(-1)
            t, y = t_stop if hit_stop else t + h_step, y_new
            k[0] = k[6]
            if pending and t >= pending[0]:
                samples.append((t, y.reshape(shape).copy()))
                pending.pop(0)
            if err_norm == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = min(_MAX_FACTOR, _SAFETY * err_norm ** -_K_I
                             * err_prev ** _K_P)
            err_prev = max(err_norm, 1e-4)
            # A step clipped onto a stop says nothing about the natural step
            # scale, so resume from the pre-clip size.
            h = h_try if hit_stop else h_step * factor
        else:
            h = h_step * max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2)

    return y.reshape(shape), samples
