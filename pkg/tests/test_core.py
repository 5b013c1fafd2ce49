import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relaqd.core import (
    ALPHA,
    ATOMIC_UNITS,
    BETA,
    PAULI,
    GridMismatchError,
    PairField,
    PhysicalConstants,
    SpinorField,
    absorbing_mask,
    inner_product,
    make_grid,
    plane_wave,
    read_snapshot,
    spectral_transform,
    write_snapshot,
)
from relaqd.units import (
    AU_TIME_AS,
    HARTREE_EV,
    intensity_to_field_amplitude,
    momentum_au_to_kev_per_c,
    momentum_kev_per_c_to_au,
)


def test_constants_and_energy():
    c = ATOMIC_UNITS
    assert c.rest_energy == pytest.approx(137.035999**2)
    assert c.e == 1.0
    p = np.array([[3.0, 0.0], [4.0, 0.0], [0.0, 0.0]])
    np.testing.assert_allclose(c.energy(p), np.sqrt(c.rest_energy**2 + c.c**2 * np.array([25.0, 0.0])))
    with pytest.raises(ValueError):
        PhysicalConstants(c=0.0)
    with pytest.raises(ValueError):
        PhysicalConstants(q=0.0)


def test_matrices_are_hermitian_and_anticommute():
    for a in ALPHA:
        np.testing.assert_array_equal(a, a.conj().T)
    np.testing.assert_array_equal(BETA, BETA.T)
    s1, s2, s3 = PAULI[1:]
    np.testing.assert_array_equal(s1 @ s2 - s2 @ s1, 2j * s3)
    with pytest.raises(ValueError):
        ALPHA[0][0, 0] = 5  # shared constants are read-only


def test_grid_geometry():
    g = make_grid(2, 8, 4.0, ("x", "z"))
    assert g.shape == (8, 8)
    assert g.spacing == 0.5
    assert g.cell_volume == 0.25 and g.volume == 16.0
    r = g.positions()
    assert r.shape == (3, 8, 8)
    assert np.all(r[1] == 0)
    assert r[0][0, 0] == -2.0 and r[2][0, 1] == -1.5
    lat = g.momentum_lattice()
    np.testing.assert_allclose(lat, 2 * np.pi / 4.0 * np.arange(-4, 4))
    p = g.momenta(offset=(0.1, 0.2, 0.3))
    assert np.all(p[1] == 0.2)
    with pytest.raises(ValueError):
        make_grid(3, 8, 1.0)
    with pytest.raises(ValueError):
        make_grid(1, 8, 1.0, ("x", "y"))


def test_lattice_index():
    g = make_grid(1, 16, 2 * np.pi)
    assert g.lattice_index(3.0) == (3,)
    assert g.lattice_index(-8.0) == (8,)
    with pytest.raises(ValueError):
        g.lattice_index(0.5)
    with pytest.raises(ValueError):
        g.lattice_index(8.0)


def test_field_shapes_and_metric():
    g = make_grid(1, 8, 1.0)
    with pytest.raises(ValueError):
        SpinorField(g, np.zeros((2, 8)))
    f = PairField(g, np.stack([np.full(8, 2.0), np.full(8, 1.0)]))
    assert inner_product(f, f) == pytest.approx(5.0)
    assert inner_product(f, f, "sigma3") == pytest.approx(3.0)
    with pytest.raises(ValueError):
        inner_product(SpinorField(g), SpinorField(g), "sigma3")
    with pytest.raises(GridMismatchError):
        inner_product(f, PairField(make_grid(1, 8, 2.0)))
    with pytest.raises(TypeError):
        inner_product(f, SpinorField(g))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([1, 2]))
def test_spectral_transform_is_unitary(seed, dim):
    rng = np.random.default_rng(seed)
    g = make_grid(dim, 8, 3.0)
    f = SpinorField(g, rng.normal(size=(4,) + g.shape) + 1j * rng.normal(size=(4,) + g.shape))
    k = spectral_transform(f)
    assert np.sum(np.abs(k.data) ** 2) == pytest.approx(np.sum(np.abs(f.data) ** 2))
    np.testing.assert_allclose(spectral_transform(k, "inverse").data, f.data, atol=1e-12)


def test_plane_wave_lands_on_one_fft_bin():
    g = make_grid(1, 32, 10.0)
    p = 2 * np.pi / 10.0 * 5
    f = plane_wave(g, (p, 0, 0), [1, 0, 0, 0])
    k = spectral_transform(f).data[0]
    assert np.argmax(np.abs(k)) == g.lattice_index(p)[0]
    assert np.sum(np.abs(k) ** 2) == pytest.approx(np.abs(k).max() ** 2)


def test_absorbing_mask_profile():
    g = make_grid(2, 40, 1.0)
    m = absorbing_mask(g)
    assert m.shape == g.shape
    assert np.all((m >= 0) & (m <= 1))
    assert m[20, 20] == 1.0
    assert m[0, 20] < 0.9 and m[20, 0] < 0.9
    # the ramp is monotone into the interior
    assert np.all(np.diff(m[:4, 20]) > 0)


def test_snapshot_round_trip(tmp_path, rng):
    g = make_grid(2, 6, 3.0, ("x", "z"))
    f = SpinorField(g, rng.normal(size=(4, 6, 6)) + 1j * rng.normal(size=(4, 6, 6)))
    path = tmp_path / "state.fld"
    write_snapshot(path, f, time=1.25)
    back, t = read_snapshot(path, ("x", "z"))
    assert t == 1.25 and back.grid == g
    np.testing.assert_allclose(back.data, f.data.astype(np.complex64), rtol=1e-6)
    raw = path.read_bytes()
    header, payload = raw.split(b"\n", 1)
    assert len(payload) == 4 * 36 * 8
    # point-major: the first 4 values belong to grid point (0, 0)
    first = np.frombuffer(payload[:32], dtype="<c8")
    np.testing.assert_allclose(first, f.data[:, 0, 0].astype(np.complex64))


def test_snapshot_rejects_truncated_file(tmp_path):
    g = make_grid(1, 8, 1.0)
    path = tmp_path / "bad.fld"
    write_snapshot(path, PairField(g), 0.0)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError):
        read_snapshot(path)


def test_unit_conversions():
    assert HARTREE_EV * 0.5 == pytest.approx(13.6, rel=1e-3)
    assert AU_TIME_AS == pytest.approx(24.188843, rel=1e-7)
    p = momentum_kev_per_c_to_au(176.0)
    assert momentum_au_to_kev_per_c(p) == pytest.approx(176.0)
    # mc = 511 keV/c is c in atomic units
    assert momentum_kev_per_c_to_au(510.99895) == pytest.approx(137.036, rel=1e-5)
    peak = intensity_to_field_amplitude(3.50944758e16)
    avg = intensity_to_field_amplitude(3.50944758e16, "cycle-averaged")
    # 3.51e16 W/cm^2 is the cycle-averaged intensity of a 1 a.u. field;
    # read as a peak Poynting flux the amplitude is 1/sqrt(2)
    assert avg == pytest.approx(1.0, rel=1e-6)
    assert peak == pytest.approx(np.sqrt(0.5), rel=1e-6)
    with pytest.raises(ValueError):
        intensity_to_field_amplitude(1.0, "rms")
