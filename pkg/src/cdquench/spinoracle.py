"""Brute-force many-body oracle in the full 2^N spin basis.

Everything here is assembled independently of the momentum engine: explicit
Pauli strings for the chain and the range-m drive terms, Jordan-Wigner
momentum operators built by discrete Fourier transform, an independently
coded coefficient sum, and scipy's DOP853 integrator.  Agreement between the
two stacks validates the momentum decomposition end to end.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

OPERATOR_CAP = 12
EVOLVE_CAP = 10

_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_SPLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # annihilates a fermion


class OracleCapError(ValueError):
    """System size beyond the brute-force memory/time guard."""


def _check_cap(n_sites: int, cap: int):
    if n_sites < 2 or n_sites % 2 != 0:
        raise ValueError("n_sites must be an even integer >= 2")
    if n_sites > cap:
        raise OracleCapError(f"n_sites = {n_sites} exceeds oracle cap {cap}")


def _kron_chain(n_sites: int, ops: dict[int, np.ndarray]) -> sp.csr_matrix:
    """Tensor product with the given single-site operators, identity elsewhere.
    Site 0 is the most significant factor."""
    out = sp.identity(1, dtype=complex, format="csr")
    eye = sp.identity(2, dtype=complex, format="csr")
    for site in range(n_sites):
        factor = sp.csr_matrix(ops[site]) if site in ops else eye
        out = sp.kron(out, factor, format="csr")
    return out


def build_spin_h0(n_sites: int, g: float) -> sp.csr_matrix:
    """Periodic chain ``-sum_n (X_n X_{n+1} + g Z_n)``.

    The n-sum runs over all N bonds, so N = 2 carries its single bond twice;
    that convention is the one whose even-sector spectrum matches the
    momentum representation.
    """
    _check_cap(n_sites, OPERATOR_CAP)
    return (build_spin_exchange(n_sites)
            + g * build_spin_field(n_sites)).tocsr()


def build_spin_exchange(n_sites: int) -> sp.csr_matrix:
    _check_cap(n_sites, OPERATOR_CAP)
    h = sp.csr_matrix((2 ** n_sites, 2 ** n_sites), dtype=complex)
    for n in range(n_sites):
        h = h - _kron_chain(n_sites, {n: _SX, (n + 1) % n_sites: _SX})
    return h.tocsr()


def build_spin_field(n_sites: int) -> sp.csr_matrix:
    """``-sum_n Z_n``; also the field derivative of the chain Hamiltonian."""
    _check_cap(n_sites, OPERATOR_CAP)
    h = sp.csr_matrix((2 ** n_sites, 2 ** n_sites), dtype=complex)
    for n in range(n_sites):
        h = h - _kron_chain(n_sites, {n: _SZ})
    return h.tocsr()


def build_spin_h1m(n_sites: int, m: int) -> sp.csr_matrix:
    """Range-m drive string ``sum_n (X_n Z...Z Y_{n+m} + Y_n Z...Z X_{n+m})``
    with periodic indexing and m-1 interior Z factors."""
    _check_cap(n_sites, OPERATOR_CAP)
    if not 1 <= m <= n_sites // 2:
        raise ValueError(f"m = {m} outside [1, {n_sites // 2}]")
    h = sp.csr_matrix((2 ** n_sites, 2 ** n_sites), dtype=complex)
    for n in range(n_sites):
        interior = {(n + j) % n_sites: _SZ for j in range(1, m)}
        h = h + _kron_chain(n_sites, {n: _SX, (n + m) % n_sites: _SY, **interior})
        h = h + _kron_chain(n_sites, {n: _SY, (n + m) % n_sites: _SX, **interior})
    return h.tocsr()


def parity_diagonal(n_sites: int) -> np.ndarray:
    """Diagonal of P = prod_n Z_n: +1 on even numbers of down spins."""
    idx = np.arange(2 ** n_sites, dtype=np.uint64)
    bits = np.zeros_like(idx, dtype=np.int64)
    for b in range(n_sites):
        bits += ((idx >> np.uint64(b)) & np.uint64(1)).astype(np.int64)
    return np.where(bits % 2 == 0, 1.0, -1.0)


def even_indices(n_sites: int) -> np.ndarray:
    return np.flatnonzero(parity_diagonal(n_sites) > 0)


def _even_block(op: sp.spmatrix, idx: np.ndarray) -> np.ndarray:
    return op.toarray()[np.ix_(idx, idx)]


def parity_commutator_norm(op: sp.spmatrix, n_sites: int) -> float:
    p = parity_diagonal(n_sites)
    dense = op.toarray()
    comm = dense * p[None, :] - p[:, None] * dense
    return float(np.max(np.abs(comm)))


@lru_cache(maxsize=None)
def _jw_annihilation(n_sites: int, site: int) -> sp.csr_matrix:
    """Fermion annihilation c_site = (prod_{l<site} Z_l) sigma^+_site."""
    ops = {l: _SZ for l in range(site)}
    ops[site] = _SPLUS
    return _kron_chain(n_sites, ops)


def momentum_annihilation(n_sites: int, k: float) -> sp.csr_matrix:
    """Fourier operator ``c_k = e^{i pi/4} / sqrt(N) sum_n e^{-i k n} c_n``."""
    phase = np.exp(1j * np.pi / 4.0) / math.sqrt(n_sites)
    out = sp.csr_matrix((2 ** n_sites, 2 ** n_sites), dtype=complex)
    for n in range(n_sites):
        out = out + (phase * np.exp(-1j * k * n)) * _jw_annihilation(n_sites, n)
    return out.tocsr()


def pair_operators(n_sites: int, k: float):
    """Spin-basis images of the Nambu-block Paulis for the (k, -k) pair.

    Returns (X_k, Y_k, Z_k) with
      X_k = c_k^+ c_{-k}^+ + c_{-k} c_k,
      Y_k = -i (c_k c_{-k} + c_k^+ c_{-k}^+),
      Z_k = c_k^+ c_k + c_{-k}^+ c_{-k} - 1.
    """
    ck = momentum_annihilation(n_sites, k)
    cmk = momentum_annihilation(n_sites, -k)
    ckd, cmkd = ck.getH(), cmk.getH()
    eye = sp.identity(2 ** n_sites, dtype=complex, format="csr")
    x = (ckd @ cmkd + cmk @ ck).tocsr()
    y = (-1j * (ck @ cmk + ckd @ cmkd)).tocsr()
    z = (ckd @ ck + cmkd @ cmk - eye).tocsr()
    return x, y, z


def _oracle_momenta(n_sites: int) -> np.ndarray:
    return np.arange(1, n_sites, 2) * (math.pi / n_sites)


def _oracle_mode_energy(k: float, g: float) -> float:
    return 2.0 * math.sqrt(g * g + 1.0 - 2.0 * g * math.cos(k))


def _oracle_h_coefficient(m: int, g: float, n_sites: int) -> float:
    """Independent evaluation of the range-m coefficient (plain loop)."""
    terms = []
    for k in _oracle_momenta(n_sites):
        f = 0.25 * math.sin(k) / (g * g + 1.0 - 2.0 * g * math.cos(k))
        terms.append(f * math.sin(m * k))
    return (2.0 / n_sites) * math.fsum(terms)


def momentum_h0_matrix(n_sites: int, g: float) -> sp.csr_matrix:
    """Chain Hamiltonian rebuilt from the momentum pairs:
    ``2 sum_{k>0} [(g - cos k) Z_k + sin k X_k]``."""
    h = sp.csr_matrix((2 ** n_sites, 2 ** n_sites), dtype=complex)
    for k in _oracle_momenta(n_sites):
        x, _, z = pair_operators(n_sites, k)
        h = h + 2.0 * ((g - math.cos(k)) * z + math.sin(k) * x)
    return h.tocsr()


def verify_h0_momentum_form(n_sites: int, g: float) -> float:
    """Max even-block deviation between the spin chain and its momentum
    reconstruction."""
    _check_cap(n_sites, OPERATOR_CAP)
    idx = even_indices(n_sites)
    a = _even_block(build_spin_h0(n_sites, g), idx)
    b = _even_block(momentum_h0_matrix(n_sites, g), idx)
    return float(np.max(np.abs(a - b)))


def verify_h1m_momentum_form(n_sites: int, m: int) -> float:
    """Max even-block deviation of the range-m string against its claimed
    momentum form ``4 sum_{k>0} sin(m k) Y_k``."""
    _check_cap(n_sites, OPERATOR_CAP)
    idx = even_indices(n_sites)
    a = _even_block(build_spin_h1m(n_sites, m), idx)
    b = sp.csr_matrix((2 ** n_sites, 2 ** n_sites), dtype=complex)
    for k in _oracle_momenta(n_sites):
        _, y, _ = pair_operators(n_sites, k)
        b = b + (4.0 * math.sin(m * k)) * y
    return float(np.max(np.abs(a - _even_block(b, idx))))


def even_spectrum(n_sites: int, g: float) -> np.ndarray:
    idx = even_indices(n_sites)
    return np.linalg.eigvalsh(_even_block(build_spin_h0(n_sites, g), idx))


def momentum_even_spectrum(n_sites: int, g: float) -> np.ndarray:
    """Even-sector spectrum from quasiparticle counting: the vacuum energy
    plus any even-cardinality multiset of mode energies (each |k| twice)."""
    eps = [_oracle_mode_energy(k, g) for k in _oracle_momenta(n_sites)]
    slots = np.repeat(eps, 2)
    base = -math.fsum(eps)
    energies = []
    for mask in range(2 ** n_sites):
        if bin(mask).count("1") % 2 == 0:
            energies.append(base + math.fsum(
                slots[b] for b in range(n_sites) if mask >> b & 1))
    return np.sort(np.asarray(energies))


def assemble_cd_drive(n_sites: int, g: float, rate: float) -> sp.csr_matrix:
    """Full-range drive ``rate * [sum_{m<N/2} h_m H1m + h_{N/2} H1m / 2]``
    for a ramp with dg/dt = -rate."""
    _check_cap(n_sites, OPERATOR_CAP)
    half = n_sites // 2
    h = sp.csr_matrix((2 ** n_sites, 2 ** n_sites), dtype=complex)
    for m in range(1, half + 1):
        w = 0.5 if m == half else 1.0
        h = h + (rate * w * _oracle_h_coefficient(m, g, n_sites)) * \
            build_spin_h1m(n_sites, m)
    return h.tocsr()


def cd_matrix_element_check(n_sites: int, g: float, rate: float = 1.0) -> float:
    """Verify that the assembled drive reproduces the adiabatic-connection
    matrix elements ``<0|drive|n> = i lambda' <0|dH/dg|n> / (E_n - E_0)``
    (lambda' = -rate) on the even block; returns the max relative deviation
    over states with non-negligible coupling."""
    _check_cap(n_sites, EVOLVE_CAP)
    idx = even_indices(n_sites)
    h0 = _even_block(build_spin_h0(n_sites, g), idx).real
    dh = _even_block(build_spin_field(n_sites), idx).real
    drive = _even_block(assemble_cd_drive(n_sites, g, rate), idx)
    energies, vectors = np.linalg.eigh(h0)
    v0 = vectors[:, 0]
    lhs = (v0 @ drive) @ vectors
    coupling = (v0 @ dh) @ vectors
    rhs = np.zeros_like(lhs)
    rhs[1:] = 1j * (-rate) * coupling[1:] / (energies[1:] - energies[0])
    mask = np.abs(coupling) > 1e-12
    mask[0] = False
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(lhs[mask] - rhs[mask]) / np.abs(rhs[mask])))


def quasiparticle_number_operator(n_sites: int, k: float, g: float) -> sp.csr_matrix:
    """Number operator of the (k, -k) quasiparticle pair at field g."""
    block = np.array([
        [2.0 * (g - math.cos(k)), 2.0 * math.sin(k)],
        [2.0 * math.sin(k), -2.0 * (g - math.cos(k))]])
    _, w = np.linalg.eigh(block)   # columns: lower, upper
    ck = momentum_annihilation(n_sites, k)
    cmk = momentum_annihilation(n_sites, -k)
    # eta_upper annihilates the quasiparticle gamma_k, eta_lower^+ is gamma_{-k}
    eta_upper = w[0, 1] * ck + w[1, 1] * cmk.getH()
    eta_lower = w[0, 0] * ck + w[1, 0] * cmk.getH()
    return (eta_upper.getH() @ eta_upper + eta_lower @ eta_lower.getH()).tocsr()


def ground_state_even(n_sites: int, g: float) -> np.ndarray:
    """Even-sector ground state embedded in the full basis."""
    idx = even_indices(n_sites)
    h0 = _even_block(build_spin_h0(n_sites, g), idx).real
    _, vectors = np.linalg.eigh(h0)
    psi = np.zeros(2 ** n_sites, dtype=complex)
    psi[idx] = vectors[:, 0]
    return psi


def evolve_full(n_sites: int, protocol, driver, tol: float = 1e-11):
    """Integrate the full 2^N Schrodinger equation through the quench and
    count quasiparticles at g_final.

    Returns (n_ex, p_k) with p_k the half-expectation of each pair number
    operator in the final state.  Accepts the engine's QuenchProtocol and
    DriverConfig but shares no numerics with it: Hamiltonians are spin
    matrices, coefficients come from the oracle-local sum, and time stepping
    uses scipy DOP853.
    """
    _check_cap(n_sites, EVOLVE_CAP)
    use_h0 = driver.composition.value in ("h0_only", "h0_plus_h1")
    use_h1 = driver.composition.value in ("h1_only", "h0_plus_h1")
    cutoff = driver.cd.cutoff if use_h1 else 0
    if cutoff > n_sites // 2:
        raise ValueError("cutoff exceeds n_sites/2")

    hxx = build_spin_exchange(n_sites)
    hz = build_spin_field(n_sites)
    drive_terms = []
    half = n_sites // 2
    for m in range(1, cutoff + 1):
        if driver.cd.filter_kind.value == "raised_cosine":
            s = 0.5 * (1.0 + math.cos(m * math.pi / cutoff))
        else:
            s = 1.0
        w = 0.5 if m == half else 1.0
        drive_terms.append((m, s * w, build_spin_h1m(n_sites, m)))

    rate = protocol.rate
    exact = driver.cd.coeff_mode.value == "exact"

    def h_coeff(m, g):
        if exact:
            return _oracle_h_coefficient(m, g, n_sites)
        a = abs(g)
        if a < 1.0:
            return 0.125 * g ** (m - 1)
        if a > 1.0:
            return 0.125 * g ** (-m - 1)
        return 0.125 * math.copysign(1.0, g) ** (m - 1)

    def rhs(t, y):
        g = 1.0 - rate * t
        acc = np.zeros_like(y)
        if use_h0:
            acc = hxx @ y + g * (hz @ y)
        for m, sw, mat in drive_terms:
            acc = acc + (rate * sw * h_coeff(m, g)) * (mat @ y)
        return -1j * acc

    psi0 = ground_state_even(n_sites, protocol.g_initial)
    t0 = (1.0 - protocol.g_initial) / rate
    t1 = (1.0 - protocol.g_final) / rate
    sol = solve_ivp(rhs, (t0, t1), psi0, method="DOP853",
                    rtol=tol, atol=tol * 1e-2, t_eval=[t1])
    if not sol.success:
        raise RuntimeError(f"full-basis integration failed: {sol.message}")
    psi = sol.y[:, -1]

    p_k = []
    for k in _oracle_momenta(n_sites):
        n_op = quasiparticle_number_operator(n_sites, k, protocol.g_final)
        p_k.append(0.5 * float(np.vdot(psi, n_op @ psi).real))
    n_ex = (2.0 / n_sites) * math.fsum(p_k)
    return n_ex, np.asarray(p_k)
