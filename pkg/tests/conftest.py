import numpy as np
import pytest

import cdquench as cq


@pytest.fixture(scope="session")
def paper_scale_spectra():
    """Shared N=1600, rate=50 spectra used by several acceptance criteria.

    Returns (dirichlet spectra keyed by cutoff, raised-cosine spectrum at
    cutoff 16).
    """
    protocol = cq.QuenchProtocol(10.0, 0.0, 50.0)
    dirichlet = {}
    for cutoff in (8, 16, 32, 64):
        driver = cq.DriverConfig(
            cq.Composition.H0_PLUS_H1, cq.CdConfig(cutoff=cutoff))
        dirichlet[cutoff] = cq.run_spectrum(protocol, driver, 1600, tol=1e-10)
    raised = cq.run_spectrum(
        protocol,
        cq.DriverConfig(cq.Composition.H0_PLUS_H1, cq.CdConfig(
            cutoff=16, filter_kind=cq.FilterKind.RAISED_COSINE)),
        1600, tol=1e-10)
    return dirichlet, raised


def collapse_deviation(spectra, cutoffs, lobe_floor=0.1):
    """Max pairwise relative deviation of p(k*M) curves over the main lobe.

    The main lobe is the contiguous region where the smallest-cutoff curve
    stays above ``lobe_floor`` of its peak; curves are compared on a common
    geometric grid via log-log interpolation.
    """
    smallest = min(cutoffs)
    ref = spectra[smallest]
    peak = ref.p_k.max()
    kappa_ref = ref.k_grid * smallest
    end = len(ref.p_k)
    for i, p in enumerate(ref.p_k):
        if p < lobe_floor * peak:
            end = i
            break
    kappa_lo = max(spectra[m].k_grid[0] * m for m in cutoffs)
    kappa_hi = kappa_ref[end - 1]
    grid = np.geomspace(kappa_lo * 1.0001, kappa_hi, 80)
    curves = {}
    for m in cutoffs:
        kappa = spectra[m].k_grid * m
        curves[m] = np.exp(np.interp(
            np.log(grid), np.log(kappa), np.log(spectra[m].p_k)))
    worst = 0.0
    ms = sorted(cutoffs)
    for i, a in enumerate(ms):
        for b in ms[i + 1:]:
            rel = np.abs(curves[a] - curves[b]) / np.maximum(
                curves[a], curves[b])
            worst = max(worst, float(rel.max()))
    return worst
