"""Momentum-space transverse-field Ising chain in the even-parity sector.

Each positive momentum k pairs with -k into a 2x2 Nambu block whose
Hamiltonian is a Bloch vector contracted with Pauli matrices,
``a(k, g) = (2 sin k, 0, 2 (g - cos k))``.  The chain decouples into these
independent two-level problems, which is what makes exact counterdiabatic
driving and brute-force cross-checks tractable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .twolevel import SIGMA_X, SIGMA_Y, SIGMA_Z


class ZeroEnergyError(ValueError):
    """Mode energy vanished where a finite gap is required."""


class SingularKernelError(ValueError):
    """Counterdiabatic kernel evaluated at its critical singularity."""


@dataclass(frozen=True)
class ChainSpec:
    """Even-length periodic spin chain with transverse field g."""

    n_sites: int
    g: float

    def __post_init__(self):
        if self.n_sites < 2 or self.n_sites % 2 != 0:
            raise ValueError("n_sites must be an even integer >= 2")


@dataclass(frozen=True)
class BlochVector:
    ax: float
    ay: float
    az: float

    @property
    def energy(self) -> float:
        return math.sqrt(self.ax ** 2 + self.ay ** 2 + self.az ** 2)

    def as_matrix(self) -> np.ndarray:
        return (self.ax * SIGMA_X + self.ay * SIGMA_Y + self.az * SIGMA_Z)


@dataclass(frozen=True)
class ModeState:
    """Amplitude pair (u, v) of one Nambu block."""

    u: complex
    v: complex

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.u, self.v], dtype=complex)

    def norm_squared(self) -> float:
        return abs(self.u) ** 2 + abs(self.v) ** 2


def momentum_grid(n_sites: int) -> np.ndarray:
    """Positive momenta of the anti-periodic sector, ascending.

    Odd multiples of pi/N: {pi/N, 3 pi/N, ..., (N-1) pi/N}; length N/2.
    """
    if n_sites < 2 or n_sites % 2 != 0:
        raise ValueError("n_sites must be an even integer >= 2")
    return np.arange(1, n_sites, 2) * (math.pi / n_sites)


def bloch_vector(k: float, g: float) -> BlochVector:
    return BlochVector(2.0 * math.sin(k), 0.0, 2.0 * (g - math.cos(k)))


def mode_energy(k, g):
    """Gap |a(k, g)| = 2 sqrt(g^2 + 1 - 2 g cos k); accepts arrays in k."""
    return 2.0 * np.sqrt(g * g + 1.0 - 2.0 * g * np.cos(k))


def _eigen_amplitudes(cos_k, sin_k, g):
    """Stable real-gauge eigenvectors of the mode blocks, vectorized.

    Returns (u_g, v_g, u_e, v_e): ground vector (u_g, v_g) and excited
    vector (u_e, v_e) of a . sigma with a = (2 sin k, 0, 2 (g - cos k)).
    """
    ax = 2.0 * sin_k
    az = 2.0 * (g - cos_k)
    eps = np.sqrt(ax * ax + az * az)
    if np.any(eps == 0.0):
        raise ZeroEnergyError("mode energy vanished; eigenvectors undefined")
    # w = az + eps suffers cancellation for az < 0; use ax^2 / (eps - az).
    w = np.where(az >= 0.0, az + eps, ax * ax / (eps - az))
    norm = np.sqrt(ax * ax + w * w)
    u_g, v_g = ax / norm, -w / norm
    u_e, v_e = w / norm, ax / norm
    return u_g, v_g, u_e, v_e


def mode_ground_state(k: float, g: float) -> ModeState:
    """Lower eigenvector of the (k, -k) block in the real gauge
    (first nonzero component positive)."""
    u, v, _, _ = _eigen_amplitudes(math.cos(k), math.sin(k), g)
    return ModeState(complex(u), complex(v))


def mode_excited_state(k: float, g: float) -> ModeState:
    u, v = _eigen_amplitudes(math.cos(k), math.sin(k), g)[2:]
    return ModeState(complex(u), complex(v))


def cd_kernel_exact(k: float, g: float) -> float:
    """Exact momentum kernel ``f(k) = sin k / (4 (g^2 + 1 - 2 g cos k))``.

    The exact per-mode sigma_y coefficient of the counterdiabatic term is
    ``-g'(t) * 2 * f(k)``.
    """
    denom = g * g + 1.0 - 2.0 * g * math.cos(k)
    if denom == 0.0:
        raise SingularKernelError(f"kernel singular at k={k}, g={g}")
    return 0.25 * math.sin(k) / denom


def free_fermion_cd(a: BlochVector, da: BlochVector, rate: float) -> np.ndarray:
    """Counterdiabatic 2x2 block ``rate (a x da) . sigma / (2 |a|^2)``.

    Model-agnostic: valid for any quadratic-fermion Bloch vector a and its
    parameter derivative da.
    """
    eps2 = a.ax ** 2 + a.ay ** 2 + a.az ** 2
    if eps2 == 0.0:
        raise ZeroEnergyError("zero mode energy in counterdiabatic block")
    cx = a.ay * da.az - a.az * da.ay
    cy = a.az * da.ax - a.ax * da.az
    cz = a.ax * da.ay - a.ay * da.ax
    pref = rate / (2.0 * eps2)
    return pref * (cx * SIGMA_X + cy * SIGMA_Y + cz * SIGMA_Z)


def mode_hamiltonian(k: float, g: float, cd_coefficient: float) -> np.ndarray:
    """Mode block ``a(k, g) . sigma + cd_coefficient sigma_y``."""
    return bloch_vector(k, g).as_matrix() + cd_coefficient * SIGMA_Y


def ground_energy(n_sites: int, g: float) -> float:
    """Chain ground energy -sum_{k>0} eps_k(g) in the even sector."""
    return -math.fsum(mode_energy(momentum_grid(n_sites), g))
