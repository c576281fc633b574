import numpy as np
import pytest

import wavelab as wl


def smooth_field(grid, rng, kcut=16, scale=1.0):
    """Random band-limited real field (smooth enough for spectral accuracy)."""
    kcut = min(kcut, grid.N // 2 - 1)
    coeffs = np.zeros(grid.N // 2 + 1, dtype=complex)
    coeffs[1:kcut] = rng.normal(size=kcut - 1) + 1j * rng.normal(size=kcut - 1)
    coeffs[0] = rng.normal()
    vals = np.fft.irfft(coeffs, n=grid.N)
    peak = np.abs(vals).max()
    return wl.RealField(grid, vals * (scale / peak if peak else 1.0))


def smooth_pair(grid, rng, kcut=16, scale=1.0, xnorm=None):
    U = wl.StatePair(smooth_field(grid, rng, kcut, scale), smooth_field(grid, rng, kcut, scale))
    if xnorm is not None:
        U = U * (xnorm / wl.norm_x(U))
    return U


@pytest.fixture(scope="session")
def params():
    return wl.REFERENCE_PARAMS


@pytest.fixture(scope="session")
def grid80():
    return wl.make_grid(80.0, 512)


@pytest.fixture(scope="session")
def wave09(params):
    """Reference solve at omega = 0.9 (auto grid, N = 1024)."""
    return wl.solve_wave(params, 0.9, tol=1e-12)


@pytest.fixture(scope="session")
def wave095(params):
    """omega = 0.95 on a deliberately light grid for evolution tests."""
    grid = wl.make_grid(wl.default_domain_length(0.95), 512)
    return wl.solve_wave(params, 0.95, grid=grid, tol=1e-12)


@pytest.fixture(scope="session")
def branch095(params, wave095):
    """Seven-point branch centered at omega = 0.95 with 1e-3 spacing."""
    omegas = [round(0.947 + 0.001 * i, 6) for i in range(7)]
    return wl.continuation_branch(params, omegas, grid=wave095.grid, tol=1e-12)
