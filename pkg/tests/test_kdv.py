import numpy as np
import pytest

import wavelab as wl
from wavelab.kdv import (beta_fn, kdv_limit_data, kdv_profile_values,
                         w0_amplitude)

from conftest import smooth_pair


def test_sech_moment_examples():
    assert wl.sech_moment(1.0, 1.0) == pytest.approx(2.0, rel=1e-14)
    # antiderivative tanh - tanh^3/3 gives 4/3
    assert wl.sech_moment(2.0, 1.0) == pytest.approx(4.0 / 3.0, rel=1e-14)
    # B(1/2, 1/2) = pi
    assert wl.sech_moment(0.5, 1.0) == pytest.approx(np.pi, rel=1e-14)
    with pytest.raises(ValueError):
        wl.sech_moment(0.0, 1.0)


def test_sech_moment_against_quadrature():
    g = wl.make_grid(80.0, 2048)
    for nu, a in ((1.5, 0.7), (2.5, 1.3), (0.8, 2.0)):
        quad = np.sum((1.0 / np.cosh(a * g.x)) ** (2 * nu)) * g.dx
        assert wl.sech_moment(nu, a) == pytest.approx(quad, rel=1e-12)


def test_j0_closed_value():
    # p=1, m=1/6: (36 / (5 sqrt 6))^{1/3}
    expect = (36.0 / (5.0 * np.sqrt(6.0))) ** (1.0 / 3.0)
    assert wl.j0_closed(1.0, 1.0 / 6.0) == pytest.approx(expect, rel=1e-14)


def test_j0_positive_and_m_scaling():
    for p in (1.0, 2.0, 3.0, 5.0, 7.0):
        for m in (0.05, 1.0 / 6.0, 0.4):
            assert wl.j0_closed(p, m) > 0
            ratio = wl.j0_closed(p, 4 * m) / wl.j0_closed(p, m)
            assert ratio == pytest.approx(2.0 ** (p / (p + 2.0)), rel=1e-13)


def test_j0_matches_quadrature():
    g = wl.make_grid(80.0, 4096)
    for p in (1.0, 2.0, 3.0, 5.0):
        for m in (1.0 / 6.0, 1.0 / 3.0):
            w0 = wl.kdv_profile(p, m, g)
            w0x = wl.deriv(w0, 1)
            quad = wl.inner_l2(w0, w0) + m * wl.inner_l2(w0x, w0x)
            assert quad == pytest.approx(wl.j0_closed(p, m), rel=1e-8)


def test_kdv_profile_peak_and_evenness():
    g = wl.make_grid(80.0, 2048)
    w0 = wl.kdv_profile(1.0, 1.0 / 6.0, g)
    # amplitude -(3/2)/J0
    assert w0.values.min() == pytest.approx(-1.5 / wl.j0_closed(1.0, 1.0 / 6.0), rel=1e-12)
    assert w0.values.min() == pytest.approx(-1.04714, abs=1e-5)
    assert np.abs(w0.values - np.roll(w0.values[::-1], 1)).max() <= 1e-15


def test_kdv_profile_residual():
    g = wl.make_grid(80.0, 4096)
    for p in (1.0, 2.0, 3.0, 5.0):
        for m in (1.0 / 6.0, 1.0 / 3.0):
            assert wl.kdv_residual(p, m, g) <= 1e-10


def test_kdv_profile_warns_on_short_domain():
    g = wl.make_grid(20.0, 256)
    with pytest.warns(UserWarning, match="tail"):
        wl.kdv_profile(1.0, 2.0, g)  # wide profile on a short box


def test_w0_l2_three_way():
    res = wl.w0_l2(1.0, 1.0 / 6.0)
    assert res.derived_value == pytest.approx((5.0 / 6.0) * wl.j0_closed(1.0, 1.0 / 6.0), rel=1e-14)
    assert res.quadrature_value == pytest.approx(res.derived_value, rel=1e-8)
    # the printed closed form is high by ((p+2)/(p+1))^{2/p} = 2.25 at p = 1
    assert res.paper_value == pytest.approx(2.25 * res.quadrature_value, rel=1e-10)
    assert res.paper_value == pytest.approx(2.68588, abs=1e-5)
    assert res.discrepancy_flag


def test_w0_l2_quadrature_m_scaling():
    # int w0^2 tracks J0: factor 2^{p/(p+2)} under m -> 4m (the profile
    # widens like sqrt(m) while the amplitude shrinks like m^{-1/(2(p+2))})
    for p in (1.0, 3.0):
        r1 = wl.w0_l2(p, 1.0 / 6.0)
        r4 = wl.w0_l2(p, 4.0 / 6.0)
        assert r4.quadrature_value / r1.quadrature_value == pytest.approx(
            2.0 ** (p / (p + 2.0)), rel=1e-8)


def test_k0_constraint_of_profile():
    # multiply the profile equation by w0 and integrate: J0 + J0 K0 = 0
    g = wl.make_grid(80.0, 4096)
    for p, m in ((1.0, 1 / 6), (3.0, 1 / 3)):
        w0 = wl.kdv_profile(p, m, g).values
        k0 = (2.0 / (p + 1.0)) * np.sum(w0 * w0 * wl.pow_signed(w0, p)) * g.dx
        assert k0 == pytest.approx(-1.0, abs=1e-10)


def test_critical_fn_examples():
    assert wl.critical_fn(1.0) == pytest.approx(2.15, rel=1e-14)
    assert wl.critical_fn(4.0) == pytest.approx(np.sqrt(6.0 / 5.0) - 1.0, rel=1e-13)
    assert wl.critical_fn(4.0) > 0  # hence the root exceeds 4
    ps = np.arange(1.0, 8.01, 0.1)
    vals = [wl.critical_fn(p) for p in ps]
    assert all(np.diff(vals) < 0)  # strictly decreasing on [1, 8]


def test_critical_p0():
    p0 = wl.critical_p0(tol=1e-10)
    assert abs(p0 - 4.2280673976) <= 1e-8
    assert abs(wl.critical_fn(p0)) <= 1e-10
    assert wl.critical_fn(4.0) > 0 and wl.critical_fn(6.0) < 0
    # bracket independence
    assert wl.critical_p0(1e-12, (4.0, 5.0)) == pytest.approx(wl.critical_p0(1e-12, (4.0, 6.0)), abs=1e-10)
    with pytest.raises(ValueError):
        wl.critical_p0(1e-10, (5.0, 6.0))


def test_scale_round_trip_and_transport(params):
    g = wl.make_grid(120.0, 512)
    rng = np.random.default_rng(0)
    U = smooth_pair(g, rng, kcut=12)
    for p, eps in ((1.0, 0.3), (3.0, 0.05)):
        Z = wl.scale_to_zw(U, eps, p)
        back = wl.scale_from_zw(Z, eps, p)
        assert np.abs(back.first.values - U.first.values).max() <= 1e-12
        assert back.grid.L == pytest.approx(g.L, rel=1e-14)
        prm = wl.ModelParams(a=params.a, b=params.b, c=params.c, p=p)
        # G is invariant under the rescaling
        assert wl.gfun(Z, prm) == pytest.approx(wl.gfun(U, prm), rel=1e-10, abs=1e-14)
        # Iw transports with the factor eps^{(p+4)/((p+1)(p+2))}
        omega = wl.omega_from_eps(eps, p)
        fac = eps ** ((p + 4.0) / ((p + 1.0) * (p + 2.0)))
        rf = wl.rescaled_functionals(Z.first, Z.second, eps, prm)
        assert fac * rf.Ie == pytest.approx(wl.iw(U, prm, omega), rel=1e-10, abs=1e-14)
        assert fac * rf.I1e == pytest.approx(wl.i1(U, prm), rel=1e-10, abs=1e-14)
        assert fac * rf.I2e == pytest.approx(wl.i2w(U, prm, omega), rel=1e-10, abs=1e-14)


def test_rescaled_zero_fields(params):
    g = wl.make_grid(40.0, 128)
    z = wl.RealField(g, np.zeros(g.N))
    rf = wl.rescaled_functionals(z, z, 0.1, params)
    assert rf.I1e == rf.I2e == rf.Ie == rf.Je == rf.Ke == 0.0


def test_je_definition_vs_direct_quadrature(params):
    # J^eps(w) = I^eps(omega w, w) collapses to the single-field quadrature
    g = wl.make_grid(60.0, 256)
    rng = np.random.default_rng(1)
    w = smooth_pair(g, rng).first
    p = params.p
    for eps in (0.3, 0.05):
        omega = wl.omega_from_eps(eps, p)
        scaled = wl.StatePair(omega * w, w)
        rf_pair = wl.rescaled_functionals(scaled.first, scaled.second, eps, params)
        rf = wl.rescaled_functionals(w, w, eps, params)  # Je/Ke columns use w only
        assert rf.Je == pytest.approx(rf_pair.Ie, rel=1e-10)
        wx = wl.deriv(w, 1)
        direct = (eps ** (-2 / (p + 1)) * (1 - omega**2) * wl.inner_l2(w, w)
                  - ((2 * params.b + params.c) * omega**2 + params.a) * wl.inner_l2(wx, wx))
        assert rf.Je == pytest.approx(direct, rel=1e-10)


def test_je_limit_toward_j0():
    # for fixed w with K0(w) = -1: J^eps(w) -> J0(w) as eps -> 0, with the
    # gap (2b + c) eps^{2/(p+1)} int w'^2 (identically zero when 2b + c = 0)
    prm = wl.ModelParams(a=-1.0 / 6.0, b=1.0 / 12.0, c=-1.0 / 5.0, p=1.0)
    g = wl.make_grid(80.0, 1024)
    w0 = wl.kdv_profile(prm.p, prm.m, g)
    w0x = wl.deriv(w0, 1)
    j0 = wl.inner_l2(w0, w0) + prm.m * wl.inner_l2(w0x, w0x)
    gaps = []
    for eps in (1e-2, 1e-4, 1e-6):
        rf = wl.rescaled_functionals(w0, w0, eps, prm)
        gaps.append(abs(rf.Je - j0))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] <= 1e-6 * j0
    # reference coefficients have 2b + c = 0: the gap vanishes identically
    ref = wl.REFERENCE_PARAMS
    w0r = wl.kdv_profile(ref.p, ref.m, g)
    j0r = wl.inner_l2(w0r, w0r) + ref.m * wl.inner_l2(wl.deriv(w0r, 1), wl.deriv(w0r, 1))
    for eps in (1e-2, 1e-4):
        rf = wl.rescaled_functionals(w0r, w0r, eps, ref)
        assert rf.Je == pytest.approx(j0r, rel=1e-12)


def test_kdv_limit_data_fields():
    data = kdv_limit_data(1.0, 1.0 / 6.0)
    assert data.J0 > 0
    assert data.amplitude == pytest.approx(w0_amplitude(1.0, 1.0 / 6.0))
    assert data.amplitude == pytest.approx(
        -(data.J0 ** -1.0) * (4.0 / 6.0) ** -1.0, rel=1e-13)
    assert data.w0_l2_derived == pytest.approx((5.0 / 6.0) * data.J0, rel=1e-13)
    assert data.width_rate == pytest.approx(1.0 / (2.0 * np.sqrt(1.0 / 6.0)))
