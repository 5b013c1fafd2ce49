import dataclasses

import numpy as np
import pytest
from scipy.integrate import quad

from relaqd.core import ATOMIC_UNITS as C
from relaqd.wkb import (
    FLAG_OK,
    FLAG_OVER_BARRIER,
    OverTheBarrierError,
    ScanBoundaryError,
    TunnelProblem,
    TurningPointError,
    default_soft_core,
    effective_potential,
    energy_curve,
    gamma_exponent,
    gamma_pz_derivative,
    keldysh_parameter,
    kinematic_momentum,
    most_probable_pz,
    nonrelativistic_gamma,
    turning_points,
    wkb_map,
)
from relaqd.fields import SoftCore


def _problem(**kw):
    return TunnelProblem(kw.pop("I_p", 0.5), kw.pop("E0", 0.05), **kw)


def test_bare_barrier_matches_closed_form():
    p = _problem(V=None)
    expect = 4 * np.sqrt(2) * 0.5**1.5 / (3 * 0.05)
    assert nonrelativistic_gamma(p) == pytest.approx(expect, rel=1e-10)
    assert turning_points(p, 0.0, 0.0)[0] == 0.0


@pytest.mark.parametrize("V", [None, "default"])
def test_nonrelativistic_limit(V):
    slow = dataclasses.replace(C, c=100 * C.c)
    p = _problem(V=V, const=slow)
    G = gamma_exponent(p, 0.0, 0.0)
    assert G == pytest.approx(nonrelativistic_gamma(p), rel=1e-6)


def test_transverse_momentum_symmetry_and_cost():
    p = _problem()
    g0 = gamma_exponent(p, 0.0, -0.005)
    assert gamma_exponent(p, 0.3, -0.005) == pytest.approx(gamma_exponent(p, -0.3, -0.005), rel=1e-12)
    assert gamma_exponent(p, 0.3, -0.005) > g0


def test_turning_points_are_zeros_of_the_gap():
    p = _problem(E0=0.04)
    xi, xe = turning_points(p, 0.0, -0.01)
    for x in (xi, xe):
        gap = effective_potential(p, x) - energy_curve(p, x, 0.0, -0.01)
        assert abs(gap) < 1e-9
    assert 0 < xi < xe


def test_gauss_legendre_matches_adaptive():
    p = _problem()
    G = gamma_exponent(p, 0.0, -0.003)
    assert gamma_exponent(p, 0.0, -0.003, nodes=64) == pytest.approx(G, rel=1e-10)
    sl = gamma_exponent(p, 0.0, -0.003, return_slice=True)
    raw, _ = quad(
        lambda x: np.sqrt(max(2 * (effective_potential(p, x) - energy_curve(p, x, 0.0, -0.003)), 0.0)),
        sl.x_i, sl.x_e, epsrel=1e-12, limit=500,
    )
    assert G == pytest.approx(2 * raw, rel=1e-8)


@pytest.mark.parametrize("pz", [-0.02, -0.004, 0.01])
def test_derivative_matches_finite_difference(pz):
    p = _problem()
    h = 1e-4
    fd = (gamma_exponent(p, 0.0, pz + h) - gamma_exponent(p, 0.0, pz - h)) / (2 * h)
    assert gamma_pz_derivative(p, 0.0, pz) == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_over_the_barrier_is_flagged():
    with pytest.warns(RuntimeWarning):
        p = _problem(E0=5.0)
    with pytest.raises(OverTheBarrierError):
        gamma_exponent(p, 0.0, 0.0)
    m = wkb_map(p, [0.0, 0.1])
    assert np.all(m.flag == FLAG_OVER_BARRIER) and np.all(np.isnan(m.rel_prob))


def test_shallow_well_has_no_core():
    with pytest.raises(TurningPointError):
        _problem(V=SoftCore(0.1, 1.0), I_p=0.5)


def test_map_peak_agrees_with_minimizer():
    p = _problem(E0=0.06)
    peak = most_probable_pz(p)
    lo, hi = -4 * 0.5 / C.c, 0.5 / C.c
    grid = np.linspace(lo, hi, 81)
    m = wkb_map(p, grid, p_y=[-0.1, 0.0, 0.1])
    assert np.all(m.flag == FLAG_OK)
    assert np.nanmax(m.rel_prob) == 1.0
    row = m.Gamma[1]
    assert abs(grid[np.argmin(row)] - peak.p_z_star) <= grid[1] - grid[0]
    np.testing.assert_allclose(m.Gamma[0], m.Gamma[2], rtol=1e-12)
    assert len(list(m.rows())) == 3 * 81
    assert gamma_pz_derivative(p, 0.0, peak.p_z_star) == pytest.approx(0.0, abs=1e-6 * abs(gamma_pz_derivative(p, 0.0, lo)))
    # the drift-free tunneling momentum lies at negative p_z
    assert peak.p_z_star < 0
    assert peak.p_kin_entry == pytest.approx(kinematic_momentum(p, peak.p_z_star, peak.x_i))


def test_scan_boundary_error():
    p = _problem()
    with pytest.raises(ScanBoundaryError):
        most_probable_pz(p, pz_range=(0.0, 0.01), coarse=11)


def test_keldysh_and_inputs():
    p = _problem(omega=0.057)
    assert keldysh_parameter(p) == pytest.approx(0.057 / 0.05)
    with pytest.raises(ValueError):
        TunnelProblem(-1.0, 0.1)
    with pytest.raises(ValueError):
        TunnelProblem(0.5, 0.0)
    sc = default_soft_core(0.5)
    assert sc.Z == pytest.approx(1.0) and sc.a == pytest.approx(0.5)
    r = TunnelProblem.from_ratios(1e-3, 2e-3)
    assert r.I_p == pytest.approx(1e-3 * C.rest_energy) and r.E0 == pytest.approx(2e-3)
