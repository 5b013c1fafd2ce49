import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relaqd.core import ATOMIC_UNITS as C
from relaqd.core import make_grid
from relaqd.fields import (
    VACUUM,
    EFGaugeLaser,
    Envelope,
    PotentialSum,
    SoftCore,
    StandingWave,
    StaticUniform,
    derive_fields,
    is_time_independent,
    potentials_on_grid,
    sample_potentials,
)

K = 0.7
ENV = Envelope(2, 3, 2 * np.pi / (C.c * K))
SPECS = {
    "standing": StandingWave((0.0, 0.3, 1.2), (K, 0.0, 0.0), ENV),
    "laser": EFGaugeLaser((0.0, 0.0, 0.8), 2.0, (1.0, 0.0, 0.0), Envelope(1, 1, np.pi), 0.3),
    "soft": SoftCore(2.0, 0.7, (0.1, -0.2, 0.3)),
    "static": StaticUniform((0.1, -0.4, 0.25)),
    "sum": PotentialSum((SoftCore(1.0, 0.5), StaticUniform((0.0, 0.0, 0.3)))),
}


def _fd_fields(spec, r, t, h=1e-5):
    """E = -grad phi - dA/dt and B = curl A by centred differences."""
    def pots(rr, tt):
        return sample_potentials(spec, rr[:, None], tt, C)

    grad = np.zeros(3)
    dA = np.zeros((3, 3))  # dA[i, j] = d A_i / d x_j
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        pp, Ap = pots(r + e, t)
        pm, Am = pots(r - e, t)
        grad[j] = (pp[0] - pm[0]) / (2 * h)
        dA[:, j] = (Ap[:, 0] - Am[:, 0]) / (2 * h)
    ht = h / C.c
    _, Atp = pots(r, t + ht)
    _, Atm = pots(r, t - ht)
    E = -grad - (Atp[:, 0] - Atm[:, 0]) / (2 * ht)
    B = np.array([dA[2, 1] - dA[1, 2], dA[0, 2] - dA[2, 0], dA[1, 0] - dA[0, 1]])
    return E, B


@pytest.mark.parametrize("name", sorted(SPECS))
@settings(max_examples=20, deadline=None)
@given(
    x=st.floats(-3, 3), y=st.floats(-3, 3), z=st.floats(-3, 3),
    t=st.floats(0.0, 0.2),
)
def test_fields_match_potentials(name, x, y, z, t):
    spec = SPECS[name]
    r = np.array([x, y, z])
    E, B = derive_fields(spec, r[:, None], t, C)
    E_fd, B_fd = _fd_fields(spec, r, t)
    scale = 1 + np.abs(E).max()
    np.testing.assert_allclose(E[:, 0], E_fd, atol=2e-5 * scale)
    np.testing.assert_allclose(B[:, 0], B_fd, atol=2e-5 * scale)


def test_envelope_shape():
    env = Envelope(2, 3, 0.5)
    assert env.ramp_time == 1.0 and env.flat_time == 1.5 and env.duration == 3.5
    assert env(0.0) == 0.0 and env(3.5) == 0.0
    assert env(1.0) == 1.0 and env(2.0) == 1.0
    assert env(0.5) == pytest.approx(0.5)
    t = np.linspace(0.01, 3.49, 500)
    h = 1e-6
    np.testing.assert_allclose(env.derivative(t), (env(t + h) - env(t - h)) / (2 * h), atol=1e-5)
    # ramp-down mirrors ramp-up
    np.testing.assert_allclose(env(t), env(3.5 - t), atol=1e-12)
    with pytest.raises(ValueError):
        Envelope(0, 1, 1.0)
    with pytest.raises(ValueError):
        Envelope(1, -1, 1.0)


def test_standing_wave_zero_at_start_and_antinodes():
    sw = SPECS["standing"]
    g = make_grid(1, 64, 2 * np.pi / K)
    phi, A = potentials_on_grid(sw, g, 0.0, C)
    assert np.all(phi == 0) and np.all(A == 0)
    E, _ = derive_fields(sw, np.array([[0.0], [0.0], [0.0]]), ENV.ramp_time + 0.0, C)
    # at a node of sin(omega t) E is maximal: E = E0 cos(k x) w
    np.testing.assert_allclose(E[:, 0], [0.0, 0.3, 1.2], atol=1e-12)


def test_soft_core_sign_convention():
    sc = SoftCore(3.0, 0.5)
    r = np.zeros((3, 1))
    phi, A = sample_potentials(sc, r, 0.0, C)
    assert phi[0] == pytest.approx(6.0)  # Z/a
    assert sc.energy(r)[0] == pytest.approx(-6.0)  # attractive for q = -1
    assert np.all(A == 0)
    with pytest.raises(ValueError):
        SoftCore(1.0, 0.0)


def test_potential_sum_is_additive(rng):
    r = rng.normal(size=(3, 7))
    a, b = SoftCore(1.0, 0.5), SPECS["standing"]
    pa, Aa = sample_potentials(a, r, 0.3)
    pb, Ab = sample_potentials(b, r, 0.3)
    ps, As = sample_potentials(PotentialSum((a, b)), r, 0.3)
    np.testing.assert_allclose(ps, pa + pb)
    np.testing.assert_allclose(As, Aa + Ab)


def test_time_independence_flags():
    assert is_time_independent(None) and is_time_independent(VACUUM)
    assert is_time_independent(SPECS["sum"])
    assert not is_time_independent(SPECS["standing"])
    assert not is_time_independent(PotentialSum((SoftCore(1, 1), SPECS["laser"])))


def test_bad_inputs():
    with pytest.raises(ValueError):
        StandingWave((0, 0, 1), (0, 0, 0))
    with pytest.raises(ValueError):
        EFGaugeLaser((0, 0, 1), 1.0, (2.0, 0, 0))
    with pytest.raises(ValueError):
        sample_potentials(SoftCore(1, 1), np.zeros((2, 4)), 0.0)
