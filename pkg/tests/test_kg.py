import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relaqd.core import ATOMIC_UNITS as C, PairField, inner_product, make_grid
from relaqd.dirac import NumericalInstabilityError
from relaqd.fields import Envelope, PotentialSum, SoftCore, StandingWave, StaticUniform
from relaqd.kg import (
    KGPropagatorConfig,
    apply_h2,
    first_derivative,
    free_kg_matrix,
    fv_plane_wave,
    kg_charge,
    kg_charge_split,
    kg_energy,
    kg_kinetic_step,
    kg_potential_half_step,
    kinetic_operator,
    laplacian_symbol,
    propagate_kg,
    second_derivative,
)


def _random_pair(grid, rng):
    return PairField(grid, rng.normal(size=(2,) + grid.shape) + 1j * rng.normal(size=(2,) + grid.shape))


@pytest.mark.parametrize("order", [2, 4])
def test_stencils_on_smooth_function(order):
    n, L = 256, 2 * np.pi
    x = np.arange(n) * L / n
    h = L / n
    f = np.sin(3 * x)
    tol = 1e-2 if order == 2 else 1e-4
    np.testing.assert_allclose(first_derivative(f, 0, h, order), 3 * np.cos(3 * x), atol=tol)
    np.testing.assert_allclose(second_derivative(f, 0, h, order), -9 * np.sin(3 * x), atol=10 * tol)
    # the symbol is exact on lattice plane waves
    g = np.exp(5j * x)
    np.testing.assert_allclose(-second_derivative(g, 0, h, order), laplacian_symbol(5.0, h, order) * g, atol=1e-9)


def test_bad_stencil_order():
    with pytest.raises(ValueError):
        first_derivative(np.zeros(8), 0, 1.0, 6)
    with pytest.raises(ValueError):
        KGPropagatorConfig(dt=1e-6, steps=1, stencil_order=3)


@pytest.mark.parametrize("sign", [1, -1])
def test_plane_wave_at_rest(sign):
    g = make_grid(1, 8, 2.0)
    psi = fv_plane_wave((0, 0, 0), sign, g)
    expect = np.array([1.0, 0.0]) if sign > 0 else np.array([0.0, 1.0])
    np.testing.assert_allclose(psi.data * np.sqrt(g.volume), np.tile(expect[:, None], (1, 8)), atol=1e-14)
    assert kg_charge(psi) == pytest.approx(sign)


@settings(max_examples=30, deadline=None)
@given(px=st.floats(-300, 300), pz=st.floats(-300, 300), sign=st.sampled_from([1, -1]))
def test_fv_amplitudes_are_eigenvectors(px, pz, sign):
    g = make_grid(1, 4, 1.0, ("y",))
    p = np.array([px, 0.0, pz])
    psi = fv_plane_wave(p, sign, g)
    u = psi.data[:, 0]
    H = free_kg_matrix(px**2 + pz**2)
    np.testing.assert_allclose(H @ u, sign * kg_energy(p) * u, atol=1e-9 * C.rest_energy * np.abs(u).max())
    assert kg_charge(psi) == pytest.approx(sign, rel=1e-12)


def test_lattice_check_on_plane_wave():
    g = make_grid(1, 8, 2.0)
    with pytest.raises(ValueError):
        fv_plane_wave((0.1, 0, 0), 1, g)
    with pytest.raises(ValueError):
        fv_plane_wave((0, 0, 0), 2, g)


def test_h2_annihilates_phi_equal_minus_chi(rng):
    g = make_grid(2, 16, 4.0, ("x", "z"))
    f = rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape)
    psi = PairField(g, np.stack([f, -f]))
    spec = StandingWave((0, 0, 5.0), (np.pi / 2, 0, 0))
    out = kg_kinetic_step(psi, spec, 0.1, 1e-5)
    np.testing.assert_array_equal(out.data, psi.data)
    np.testing.assert_allclose(apply_h2(psi, spec, 0.1).data, 0, atol=1e-12)


def test_kinetic_step_is_nilpotent_expansion(rng):
    g = make_grid(1, 32, 6.0)
    spec = StandingWave((0, 0, 5.0), (np.pi / 3, 0, 0))
    psi = _random_pair(g, rng)
    dt = 1e-5
    once = kg_kinetic_step(psi, spec, 0.2, dt)
    # (U - 1)^2 = 0 since (sigma3 + i sigma2)^2 = 0
    d1 = once.data - psi.data
    twice = kg_kinetic_step(psi.with_data(d1), spec, 0.2, dt).data - d1
    np.testing.assert_allclose(twice, 0, atol=1e-12 * np.abs(d1).max())
    # and U = 1 - i dt H2 / hbar
    np.testing.assert_allclose(d1, -1j * dt * apply_h2(psi, spec, 0.2 + dt / 2).data, atol=1e-12 * np.abs(d1).max())


def test_pseudo_hermiticity(rng):
    g = make_grid(2, 16, 5.0, ("x", "z"))
    spec = StandingWave((0, 0, 4.0), (2 * np.pi / 5, 0, 0))
    f, h = _random_pair(g, rng), _random_pair(g, rng)
    lhs = inner_product(f, apply_h2(h, spec, 0.3), "sigma3")
    rhs = inner_product(apply_h2(f, spec, 0.3), h, "sigma3")
    assert abs(lhs - rhs) <= 1e-10 * abs(lhs)


def test_kinetic_operator_is_hermitian(rng):
    g = make_grid(1, 32, 5.0)
    A = np.zeros((3, 32))
    A[0] = np.sin(2 * np.pi * g.coordinates() / 5.0)
    f = rng.normal(size=32) + 1j * rng.normal(size=32)
    u = rng.normal(size=32) + 1j * rng.normal(size=32)
    assert np.vdot(f, kinetic_operator(u, g, A)) == pytest.approx(np.vdot(kinetic_operator(f, g, A), u), rel=1e-12)


def test_potential_half_step_keeps_charge_density(rng):
    g = make_grid(1, 32, 5.0)
    psi = _random_pair(g, rng)
    out = kg_potential_half_step(psi, SoftCore(1.0, 0.5), 0.0, 1e-5)
    np.testing.assert_allclose(np.abs(out.data), np.abs(psi.data), rtol=1e-13)


def _packet(g, sign=1):
    x = g.coordinates()
    env = np.exp(-(x**2) / 2 + 1j * x)
    data = np.stack([env, 0.05 * env]) if sign > 0 else np.stack([0.05 * env, env])
    psi = PairField(g, data)
    return psi.with_data(psi.data / np.sqrt(abs(kg_charge(psi))))


@pytest.mark.parametrize("sign", [1, -1])
def test_charge_conserved_with_fields(sign):
    g = make_grid(1, 128, 20.0)
    spec = PotentialSum((StandingWave((0, 0, 10.0), (np.pi / 10, 0, 0), Envelope(1, 1, 0.05)), SoftCore(1, 0.5)))
    psi = _packet(g, sign)
    q0 = kg_charge(psi)
    assert np.sign(q0) == sign
    _, tr = propagate_kg(psi, KGPropagatorConfig(dt=2e-6, steps=500, spec=spec, sample_every=100))
    assert np.max(np.abs(tr["charge"] - q0)) < 1e-10


def test_charge_split_of_plane_waves():
    g = make_grid(1, 16, 8.0)
    p = (2 * np.pi / 8 * 3, 0, 0)
    a, b = fv_plane_wave(p, 1, g, stencil_order=4), fv_plane_wave(p, -1, g, stencil_order=4)
    assert kg_charge_split(a) == pytest.approx((1.0, 0.0), abs=1e-10)
    assert kg_charge_split(b) == pytest.approx((0.0, -1.0), abs=1e-10)
    qp, qm = kg_charge_split(a.with_data(a.data + b.data))
    assert qp == pytest.approx(1.0, abs=1e-10) and qm == pytest.approx(-1.0, abs=1e-10)


def test_second_order_with_static_fields():
    g = make_grid(1, 64, 12.0)
    spec = PotentialSum((SoftCore(1.0, 0.5), StaticUniform((0.05, 0.0, 0.0))))
    psi = _packet(g)
    T = 1e-4

    def run(n):
        return propagate_kg(psi, KGPropagatorConfig(dt=T / n, steps=n, spec=spec, sample_every=n))[0].data

    ref = run(1600)
    e = [np.max(np.abs(run(n) - ref)) for n in (50, 100, 200)]
    orders = np.log2(np.array(e[:-1]) / np.array(e[1:]))
    assert np.all((orders > 1.8) & (orders < 2.3))


def test_config_and_input_checks():
    with pytest.warns(RuntimeWarning):
        KGPropagatorConfig(dt=1e-3, steps=1)
    with pytest.raises(ValueError):
        KGPropagatorConfig(dt=-1.0, steps=1)
    with pytest.raises(TypeError):
        from relaqd.core import SpinorField

        propagate_kg(SpinorField(make_grid(1, 8, 1.0)), KGPropagatorConfig(dt=1e-6, steps=1))
    g = make_grid(1, 8, 1.0)
    d = np.zeros((2, 8), complex)
    d[1, 2] = np.inf
    with pytest.raises(NumericalInstabilityError):
        propagate_kg(PairField(g, d), KGPropagatorConfig(dt=1e-6, steps=2))
