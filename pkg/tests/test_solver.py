import numpy as np
import pytest

import wavelab as wl
from wavelab.solver import (SolverError, jacobian_apply, minimize_direct,
                            solve_petviashvili)

from conftest import smooth_pair


def test_residual_zero_state(params, grid80):
    _, _, rn = wl.residual(wl.StatePair.zero(grid80), params, 0.9)
    assert rn == 0.0


def test_residual_of_converged_wave(wave09):
    assert wave09.residual_norm <= 1e-10
    _, _, rn = wl.residual(wave09.profile, wave09.params, wave09.omega)
    assert rn <= 1e-10


def test_residual_linear_part_matches_symbol(params, grid80):
    # the linearized residual is the per-mode symbol action; evaluate it the
    # slow way with spectral derivatives as the oracle
    rng = np.random.default_rng(0)
    U = smooth_pair(grid80, rng)
    omega = 0.9
    r1, r2, _ = wl.residual(U, params, omega, nonlinear=False)
    psi, v = U.first, U.second
    e1 = (-omega) * (psi - params.b * wl.deriv(psi, 2)) + v + params.a * wl.deriv(v, 2)
    e2 = omega * (-1.0 * v + params.b * wl.deriv(v, 2)) + psi + params.c * wl.deriv(psi, 2)
    assert np.abs(r1.values - e1.values).max() <= 1e-12
    assert np.abs(r2.values - e2.values).max() <= 1e-12


def test_symbol_det_examples(params):
    assert wl.symbol_det(0.0, params, 0.9) == pytest.approx(-0.19, abs=1e-15)
    # k -> infinity coefficient: omega^2 b^2 - a c
    k = 1e4
    lead = wl.symbol_det(k, params, 0.9) / k**4
    assert lead == pytest.approx(0.81 / 144.0 - 1.0 / 36.0, rel=1e-6)
    assert lead == pytest.approx(-0.022153, abs=1e-6)


def test_symbol_det_negative_over_window(params, grid80):
    for omega in np.arange(0.1, 1.0, 0.1):
        assert np.max(wl.symbol_det(grid80.kr, params, omega)) < 0.0
    assert np.max(wl.symbol_det(grid80.kr, params, 0.99)) < 0.0


def test_seed_quality_and_evenness(params):
    grid = wl.default_grid(params, 0.99)
    seed = wl.seed_from_kdv(params, 0.99, grid)
    _, _, rn_seed = wl.residual(seed, params, 0.99)
    rng = np.random.default_rng(1)
    noise = smooth_pair(grid, rng, xnorm=wl.norm_x(seed))
    _, _, rn_noise = wl.residual(noise, params, 0.99)
    assert rn_seed < 0.05 * rn_noise
    assert np.abs(seed.first.values - np.roll(seed.first.values[::-1], 1)).max() <= 1e-16


def test_seed_amplitude_scaling(params):
    grid = wl.make_grid(600.0, 2048)
    p = params.p
    s1 = wl.seed_from_kdv(params, 0.999, grid)
    s2 = wl.seed_from_kdv(params, 0.99, grid)
    e1 = wl.eps_from_omega(0.999, p)
    e2 = wl.eps_from_omega(0.99, p)
    expect = (e1 / e2) ** (2.0 / (p * (p + 1.0)))
    ratio = np.abs(s1.second.values).max() / np.abs(s2.second.values).max()
    assert ratio == pytest.approx(expect, rel=0.01)


def test_petviashvili_converges_and_stabilizer_at_fixed_point(params, wave09):
    # re-run from the converged profile: the stabilizing factor must be 1
    grid = wave09.grid
    sol = solve_petviashvili(params, 0.9, grid, seed=wave09.profile, tol=1e-12,
                             max_iter=5, newton_polish=False)
    assert sol.residual_norm <= 1e-11
    # M = <LU,U>/<-N(U),U> at the solution
    from wavelab.solver import _Symbol, _rfft2, _irfft2
    from wavelab.spectral import nonlinear_terms
    sym = _Symbol(grid, params, 0.9)
    a, b = wave09.profile.first.values, wave09.profile.second.values
    la, lb = _irfft2(*sym.apply(*_rfft2(a, b)), grid.N)
    n1, n2 = nonlinear_terms(a, b, params.p, grid)
    M = (np.dot(la, a) + np.dot(lb, b)) / (np.dot(-n1, a) + np.dot(-n2, b))
    assert M == pytest.approx(1.0, abs=1e-11)


def test_petviashvili_rejects_zero_seed(params, grid80):
    with pytest.raises(SolverError):
        solve_petviashvili(params, 0.9, grid80, seed=wl.StatePair.zero(grid80))


def test_solver_rejects_bad_regime():
    bad = wl.ModelParams(a=-1 / 6, b=1 / 4, c=-1 / 6)
    with pytest.raises(SolverError, match="existence"):
        wl.solve_wave(bad, 0.9, grid=wl.make_grid(60.0, 256))


def test_solver_rejects_omega_outside_window(params, grid80):
    with pytest.raises(SolverError, match="window"):
        wl.solve_wave(params, 1.2, grid=grid80)


def test_newton_refine_from_converged_wave(wave09, params):
    refined = wl.newton_refine(params, 0.9, wave09.grid, wave09.profile, tol=1e-12)
    assert refined.iterations["newton"] == 0  # already below tolerance
    assert refined.residual_norm <= wave09.residual_norm * 1.001


def test_jacobian_matches_finite_difference(params, wave09):
    rng = np.random.default_rng(2)
    U = wave09.profile
    V = smooth_pair(U.grid, rng, xnorm=1.0)
    h = 1e-6
    rp = wl.residual(U + h * V, params, 0.9, dealias=False)
    rm = wl.residual(U - h * V, params, 0.9, dealias=False)
    fd1 = (rp[0].values - rm[0].values) / (2 * h)
    fd2 = (rp[1].values - rm[1].values) / (2 * h)
    jv = jacobian_apply(U, params, 0.9, V)
    scale = max(np.abs(jv.first.values).max(), np.abs(jv.second.values).max())
    assert np.abs(fd1 - jv.first.values).max() <= 1e-6 * max(1.0, scale)
    assert np.abs(fd2 - jv.second.values).max() <= 1e-6 * max(1.0, scale)


def test_wave_identities(wave09):
    p = wave09.params.p
    f = wave09.functionals
    assert f.Jw == pytest.approx(p / (p + 2) * f.Iw, rel=1e-8)
    assert f.Jw == pytest.approx(-p / 2 * f.G, rel=1e-8)
    assert f.Iw == pytest.approx(-(p + 2) / 2 * f.G, rel=1e-8)
    assert abs(f.Kw) <= 1e-8 * abs(f.Iw)
    # profile is even to machine precision
    vals = wave09.profile.first.values
    assert np.abs(vals - np.roll(vals[::-1], 1)).max() <= 1e-14


def test_normalization(wave09, params):
    assert wl.gfun(wave09.normalized, params) == pytest.approx(-1.0, abs=1e-10)
    beta = wave09.beta()
    diff = wave09.profile - beta * wave09.normalized
    assert wl.norm_x(diff) <= 1e-9 * wl.norm_x(wave09.profile)
    # Lagrange multiplier identity lambda + beta^p = 0
    lam = -(2.0 / (params.p + 2.0)) * wave09.iw_min
    assert lam + beta**params.p == pytest.approx(0.0, abs=1e-9)


def test_normalize_rejects_nonnegative_g(params, grid80):
    U = wl.StatePair.from_arrays(grid80, np.exp(-grid80.x**2), np.exp(-grid80.x**2))
    assert wl.gfun(U, params) > 0
    with pytest.raises(SolverError, match="normalize"):
        wl.normalize_to_constraint(U, params, 0.9)


def test_grid_and_domain_doubling(params, wave09):
    # spectral accuracy: refining the grid or enlarging the box must not
    # move the profile beyond solver tolerance
    g = wave09.grid
    fine = wl.solve_wave(params, 0.9, grid=wl.make_grid(g.L, 2 * g.N), tol=1e-12)
    diff_vals_1 = fine.profile.first.values[::2] - wave09.profile.first.values
    diff_vals_2 = fine.profile.second.values[::2] - wave09.profile.second.values
    diff = wl.StatePair.from_arrays(g, diff_vals_1, diff_vals_2)
    assert wl.norm_x(diff) <= 1e-9

    big = wl.solve_wave(params, 0.9, grid=wl.make_grid(2 * g.L, 2 * g.N), tol=1e-12)
    sl = slice(g.N // 2, g.N // 2 + g.N)
    diff = wl.StatePair.from_arrays(
        g,
        big.profile.first.values[sl] - wave09.profile.first.values,
        big.profile.second.values[sl] - wave09.profile.second.values,
    )
    assert wl.norm_x(diff) <= 1e-9


def test_continuation_branch_basics(branch095):
    assert len(branch095) == 7
    assert not branch095.failed_omegas
    assert np.all(np.diff(branch095.omega) < 0)
    assert branch095.residual.max() <= 1e-11
    assert np.all(branch095.i2w < 0)  # the omega-coupling term is negative near 1^-
    assert np.all(branch095.d > 0)
    assert np.all(np.diff(branch095.d) > 0)  # d decreases in omega (omega descending)


def test_continuation_rejects_out_of_window_speeds(params):
    grid = wl.make_grid(90.0, 512)
    with pytest.raises(SolverError, match="window"):
        wl.continuation_branch(params, [0.95, 1.5], grid=grid)


def test_continuation_partial_branch_on_failure(params, monkeypatch):
    # a persistent convergence failure truncates the branch and flags the speed
    import wavelab.solver as solver_mod

    real_solve = solver_mod.solve_wave

    def flaky(prm, omega, **kw):
        if omega < 0.9495:
            raise solver_mod.SolverDiverged("forced failure")
        return real_solve(prm, omega, **kw)

    monkeypatch.setattr(solver_mod, "solve_wave", flaky)
    grid = wl.make_grid(90.0, 512)
    branch = solver_mod.continuation_branch(params, [0.951, 0.95, 0.948], grid=grid, tol=1e-12)
    assert branch.failed_omegas == (0.948,)
    assert len(branch) == 2


def test_fractional_p_solve():
    prm = wl.ModelParams(a=-1 / 6, b=1 / 12, c=-1 / 6, p=5 / 3)
    wave = wl.solve_wave(prm, 0.95, tol=1e-11)
    assert wave.residual_norm <= 1e-11
    f = wave.functionals
    p = prm.p
    assert f.Jw == pytest.approx(-p / 2 * f.G, rel=1e-8)


def test_direct_minimization_oracle(params):
    # projected-gradient minimizer agrees with the Euler-Lagrange route
    grid = wl.make_grid(90.0, 256)
    wave = wl.solve_wave(params, 0.9, grid=grid, tol=1e-12)
    U, val = minimize_direct(params, 0.9, grid, max_iter=3000)
    assert val == pytest.approx(wave.iw_min, rel=1e-5)
    diff = wl.StatePair(U.first - wave.normalized.first, U.second - wave.normalized.second)
    assert wl.norm_x(diff) <= 1e-2 * wl.norm_x(wave.normalized)
