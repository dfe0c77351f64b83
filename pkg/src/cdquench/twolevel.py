"""Two-level avoided crossing with exact counterdiabatic assistance.

The bare Hamiltonian is ``lambda(t) sigma_z + delta sigma_x`` with an affine
sweep of the bias lambda.  The auxiliary term proportional to sigma_y makes
the instantaneous eigenstates exact solutions of the time-dependent
Schrodinger equation at any sweep rate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .integrate import IntegrationError, solve_ode

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


class DegeneracyError(ValueError):
    """Spectrum too close to degenerate for a well-defined eigenbasis."""


class NormDriftError(IntegrationError):
    """Integrated state norm drifted beyond the allowed budget."""


class TwoLevelDriver(enum.Enum):
    BARE = "h0"
    ASSISTED = "h0_plus_h1"


@dataclass(frozen=True)
class LzParams:
    """Affine bias sweep ``lambda(t) = lam_initial + rate * t`` over t in
    [0, duration].

    ``rate == 0`` holds the bias constant and requires an explicit
    ``duration`` (and ``lam_final == lam_initial``); otherwise the duration
    is derived from the endpoints.
    """

    delta: float
    lam_initial: float
    lam_final: float
    rate: float
    duration: float | None = None

    def __post_init__(self):
        if self.delta < 0.0:
            raise ValueError("delta must be non-negative")
        if self.rate == 0.0:
            if self.lam_final != self.lam_initial:
                raise ValueError("rate 0 requires equal bias endpoints")
            if self.duration is None or self.duration <= 0.0:
                raise ValueError("rate 0 requires a positive duration")
        else:
            span = (self.lam_final - self.lam_initial) / self.rate
            if span <= 0.0:
                raise ValueError(
                    "endpoints and rate imply a non-positive duration")
            if self.duration is None:
                object.__setattr__(self, "duration", span)

    def lam(self, t: float) -> float:
        return self.lam_initial + self.rate * t


@dataclass(frozen=True)
class TwoLevelState:
    c1: complex
    c2: complex

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.c1, self.c2], dtype=complex)

    def norm_squared(self) -> float:
        return abs(self.c1) ** 2 + abs(self.c2) ** 2

    @classmethod
    def from_vector(cls, v) -> "TwoLevelState":
        return cls(complex(v[0]), complex(v[1]))


def lz_hamiltonian(lam: float, delta: float) -> np.ndarray:
    """Bias-plus-gap Hamiltonian ``lam sigma_z + delta sigma_x``."""
    return np.array([[lam, delta], [delta, -lam]], dtype=complex)


def lz_cd_term(lam: float, delta: float, rate: float) -> np.ndarray:
    """Counterdiabatic term ``-rate * delta / (2 (delta^2 + lam^2)) sigma_y``."""
    denom = delta * delta + lam * lam
    if denom == 0.0:
        raise DegeneracyError("counterdiabatic term undefined at delta=lam=0")
    return (-rate * 0.5 * delta / denom) * SIGMA_Y


def instantaneous_eigenbasis(h: np.ndarray, gap_tol: float | None = None):
    """Ordered eigenpair of a 2x2 Hermitian matrix.

    Returns (ground, excited, (e_ground, e_excited)).  Eigenvectors carry a
    fixed gauge: each is rescaled by the phase of its first component of
    non-negligible magnitude, so real matrices yield real vectors with that
    component positive.  With this gauge the diagonal connection
    <n|d n/d lam> vanishes for real sweeps.
    """
    h = np.asarray(h, dtype=complex)
    scale = max(float(np.max(np.abs(h))), 1.0)
    if gap_tol is None:
        gap_tol = 1e-14 * scale
    energies, vectors = np.linalg.eigh(h)
    if energies[1] - energies[0] < gap_tol:
        raise DegeneracyError(
            f"gap {energies[1] - energies[0]:.3e} below tolerance {gap_tol:.3e}")
    out = []
    for i in (0, 1):
        v = vectors[:, i]
        pivot = v[0] if abs(v[0]) > 1e-12 else v[1]
        v = v * (abs(pivot) / pivot)
        if np.max(np.abs(v.imag)) < 1e-15 * np.max(np.abs(v.real)):
            v = v.real.astype(complex)
        out.append(v)
    return out[0], out[1], (float(energies[0]), float(energies[1]))


def state_fidelity(a, b) -> float:
    """Squared overlap |<a|b>|^2; dynamical and geometric phases drop out."""
    a = a.vector if isinstance(a, TwoLevelState) else np.asarray(a)
    b = b.vector if isinstance(b, TwoLevelState) else np.asarray(b)
    return float(abs(np.vdot(a, b)) ** 2)


def ground_state(lam: float, delta: float) -> TwoLevelState:
    g, _, _ = instantaneous_eigenbasis(lz_hamiltonian(lam, delta))
    return TwoLevelState.from_vector(g)


def excited_state(lam: float, delta: float) -> TwoLevelState:
    _, e, _ = instantaneous_eigenbasis(lz_hamiltonian(lam, delta))
    return TwoLevelState.from_vector(e)


def evolve_two_level(params: LzParams, driver: TwoLevelDriver,
                     initial: TwoLevelState, tol: float,
                     sample_times=None):
    """Integrate the sweep and return the final state.

    When ``sample_times`` is given, also returns the list of
    (t, TwoLevelState) snapshots recorded at those times.
    The assisted driver requires ``delta > 0``; the bare driver accepts the
    degenerate ``delta == 0`` crossing (decoupled diabatic levels).
    """
    if driver is TwoLevelDriver.ASSISTED and params.delta == 0.0:
        raise DegeneracyError("assisted driver undefined for delta = 0")
    norm0 = initial.norm_squared()
    if abs(norm0 - 1.0) > 1e-9:
        raise ValueError(f"initial state not normalized (|psi|^2 = {norm0})")

    delta, rate = params.delta, params.rate
    assisted = driver is TwoLevelDriver.ASSISTED

    def rhs(t, y):
        lam = params.lam(t)
        hy = 0.0
        if assisted:
            hy = -rate * 0.5 * delta / (delta * delta + lam * lam)
        # H = [[lam, delta - i hy], [delta + i hy, -lam]]
        return -1j * np.array([
            lam * y[0] + (delta - 1j * hy) * y[1],
            (delta + 1j * hy) * y[0] - lam * y[1],
        ])

    def unit_norm(y):
        return y / math.sqrt(float(np.vdot(y, y).real))

    y_final, raw = solve_ode(rhs, (0.0, params.duration), initial.vector,
                             rtol=tol, sample_times=sample_times,
                             project=unit_norm)
    drift = abs(float(np.vdot(y_final, y_final).real) - 1.0)
    if drift > 100.0 * tol:
        raise NormDriftError(f"norm drift {drift:.3e} exceeds 100*tol")
    final = TwoLevelState.from_vector(y_final)
    if sample_times is None:
        return final
    return final, [(t, TwoLevelState.from_vector(y)) for t, y in raw]
