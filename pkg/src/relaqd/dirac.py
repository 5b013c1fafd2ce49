"""Fourier split-operator propagation of the Dirac equation.

One step is U1(dt/2) U2(dt) U1(dt/2) with

    H1 = -c q alpha.A + q phi         (diagonal in real space)
    H2 = c alpha.p + m c^2 beta       (diagonal in momentum space)

Both exponentials are applied in closed form. The two half steps sample the
potentials at the midpoints of their own half intervals, t + dt/4 and
t + 3dt/4.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .core import ATOMIC_UNITS, AXIS_INDEX, SpinorField, absorbing_mask, inner_product
from .fields import potentials_on_grid
from .trace import Trace


class NumericalInstabilityError(RuntimeError):
    """Non-finite values appeared in a propagated field."""


def max_timestep(E_typical, hbar=1.0, include_pi=False):
    """Largest sensible time step hbar/|E| for a typical energy scale.

    With ``include_pi=True`` the bound pi*hbar/|E| is returned instead.
    """
    if E_typical == 0:
        raise ValueError("typical energy must be nonzero")
    bound = hbar / abs(E_typical)
    return np.pi * bound if include_pi else bound


def relativistic_timestep(const=ATOMIC_UNITS, include_pi=False):
    return max_timestep(const.rest_energy, const.hbar, include_pi)


def sigma_dot(n, a0, a1):
    """(sigma.n) applied to the two-spinor (a0, a1); n has the vector index first."""
    return (n[2] * a0 + (n[0] - 1j * n[1]) * a1, (n[0] + 1j * n[1]) * a0 - n[2] * a1)


def alpha_dot(n, psi):
    """(alpha.n) psi for a 4-spinor array with the component index first."""
    lo0, lo1 = sigma_dot(n, psi[2], psi[3])
    up0, up1 = sigma_dot(n, psi[0], psi[1])
    return np.stack([lo0, lo1, up0, up1])


def _beta(psi):
    return np.stack([psi[0], psi[1], -psi[2], -psi[3]])


def apply_potential_exponential(data, phi, A, tau, const=ATOMIC_UNITS):
    """exp(-i tau H1/hbar) data for H1 = -c q alpha.A + q phi, pointwise.

    Uses (alpha.A)^2 = |A|^2: the factor is cos|th| + i sinc(|th|) alpha.th with
    th = c q tau A / hbar, which stays regular at A = 0.
    """
    theta = const.c * const.q * tau / const.hbar * A
    mag = np.sqrt(np.sum(theta * theta, axis=0))
    rot = np.cos(mag) * data + 1j * np.sinc(mag / np.pi) * alpha_dot(theta, data)
    return np.exp(-1j * const.q * phi * tau / const.hbar) * rot


def apply_kinetic_exponential(data_k, p, dt, const=ATOMIC_UNITS):
    """exp(-i dt H2/hbar) on momentum-space data at Cartesian momenta ``p``."""
    E = const.energy(p)
    arg = E * dt / const.hbar
    h = const.c * alpha_dot(p, data_k) + const.rest_energy * _beta(data_k)
    return np.cos(arg) * data_k - 1j * (np.sin(arg) / E) * h


def potential_half_step(psi, spec, t, dt, const=ATOMIC_UNITS):
    """Half step exp(-i (dt/2) H1/hbar) with the potentials sampled at t + dt/4."""
    phi, A = potentials_on_grid(spec, psi.grid, t + 0.25 * dt, const)
    return psi.with_data(apply_potential_exponential(psi.data, phi, A, 0.5 * dt, const))


def kinetic_full_step(psi, dt, const=ATOMIC_UNITS, momentum_offset=None):
    """Full step exp(-i dt H2/hbar), exact in momentum space."""
    axes = tuple(range(1, psi.grid.dim + 1))
    data_k = scipy.fft.fftn(psi.data, axes=axes, norm="ortho")
    p = psi.grid.momenta(const.hbar, momentum_offset)
    data_k = apply_kinetic_exponential(data_k, p, dt, const)
    return psi.with_data(scipy.fft.ifftn(data_k, axes=axes, norm="ortho"))


def dirac_norm(psi):
    return inner_product(psi, psi).real


def momentum_distribution(psi):
    """Probability per lattice momentum (sums to the norm), fftshift-ed so it
    lines up with ``grid.momentum_lattice()``."""
    axes = tuple(range(1, psi.grid.dim + 1))
    data_k = scipy.fft.fftn(psi.data, axes=axes, norm="ortho")
    rho = np.sum(np.abs(data_k) ** 2, axis=0) * psi.grid.cell_volume
    return np.fft.fftshift(rho)


def energy_projection_split(psi, const=ATOMIC_UNITS, momentum_offset=None):
    """Fractions of the norm carried by positive and negative free energies.

    Projectors L+-(p) = (E(p) +- H2(p)) / (2E(p)) are applied at every lattice
    momentum.
    """
    axes = tuple(range(1, psi.grid.dim + 1))
    data_k = scipy.fft.fftn(psi.data, axes=axes, norm="ortho")
    p = psi.grid.momenta(const.hbar, momentum_offset)
    E = const.energy(p)
    h = const.c * alpha_dot(p, data_k) + const.rest_energy * _beta(data_k)
    plus = np.sum(np.abs(0.5 * (data_k + h / E)) ** 2)
    minus = np.sum(np.abs(0.5 * (data_k - h / E)) ** 2)
    total = plus + minus
    return float(plus / total), float(minus / total)


def expectation_position(psi, axis):
    rho = psi.density()
    r = psi.grid.positions()[AXIS_INDEX[axis]]
    return float(np.sum(r * rho) / np.sum(rho))


@dataclass
class DiracPropagatorConfig:
    dt: float
    steps: int
    t0: float = 0.0
    spec: object = None
    mask: bool = False
    sample_every: int = 1
    momentum_offset: tuple = None
    const: object = field(default=ATOMIC_UNITS)
    workers: int = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.steps < 0 or int(self.steps) != self.steps:
            raise ValueError("steps must be a non-negative integer")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        bound = relativistic_timestep(self.const, include_pi=True)
        if self.dt > bound:
            warnings.warn(
                f"dt={self.dt:g} exceeds the rest-energy bound pi*hbar/(mc^2)={bound:g}",
                RuntimeWarning,
                stacklevel=3,
            )


class DiracSplitOperator:
    """Reusable propagator; caches the momentum-space factors of H2."""

    def __init__(self, grid, cfg):
        self.grid = grid
        self.cfg = cfg
        c = cfg.const
        self._axes = tuple(range(1, grid.dim + 1))
        p = grid.momenta(c.hbar, cfg.momentum_offset)
        E = c.energy(p)
        arg = E * cfg.dt / c.hbar
        self._cos = np.cos(arg)
        s = np.sin(arg) / E
        self._sp = c.c * s * p
        self._sm = c.rest_energy * s
        self._r = grid.positions()
        self._mask = absorbing_mask(grid) if cfg.mask else None
        self._static = None

    def _potentials(self, t):
        spec = self.cfg.spec
        if spec is None:
            return None
        return potentials_on_grid(spec, self.grid, t, self.cfg.const)

    def _half(self, data, t):
        pot = self._potentials(t)
        if pot is None:
            return data
        return apply_potential_exponential(data, pot[0], pot[1], 0.5 * self.cfg.dt, self.cfg.const)

    def _kinetic(self, data):
        w = self.cfg.workers
        dk = scipy.fft.fftn(data, axes=self._axes, norm="ortho", workers=w)
        dk = self._cos * dk - 1j * (alpha_dot(self._sp, dk) + self._sm * _beta(dk))
        return scipy.fft.ifftn(dk, axes=self._axes, norm="ortho", workers=w)

    def step(self, data, t):
        dt = self.cfg.dt
        data = self._half(data, t + 0.25 * dt)
        data = self._kinetic(data)
        data = self._half(data, t + 0.75 * dt)
        if self._mask is not None:
            data = data * self._mask
        return data

    def observe(self, psi, t):
        c = self.cfg.const
        pos, _ = energy_projection_split(psi, c, self.cfg.momentum_offset)
        row = {"t": t, "norm": dirac_norm(psi), "pos_fraction": pos}
        row["x"] = expectation_position(psi, "x")
        row["z"] = expectation_position(psi, "z")
        return row

    def run(self, psi, on_sample=None):
        cfg = self.cfg
        if not np.all(np.isfinite(psi.data)):
            raise NumericalInstabilityError("non-finite initial field")
        data = psi.data.copy()
        t = cfg.t0
        trace = Trace(["t", "norm", "pos_fraction", "x", "z"])
        trace.append(self.observe(psi, t))
        for j in range(1, cfg.steps + 1):
            data = self.step(data, t)
            t = cfg.t0 + j * cfg.dt
            if j % cfg.sample_every == 0 or j == cfg.steps:
                state = psi.with_data(data)
                row = self.observe(state, t)
                if not np.isfinite(row["norm"]):
                    raise NumericalInstabilityError(
                        f"non-finite field at t={t:g} (step {j}); dt too large or mask misuse"
                    )
                trace.append(row)
                if on_sample is not None:
                    on_sample(state, t)
        return psi.with_data(data), trace


def propagate_dirac(psi, cfg, on_sample=None):
    """Propagate ``cfg.steps`` Strang steps; returns the final field and a
    :class:`Trace` of (t, norm, pos_fraction, x, z)."""
    if not isinstance(psi, SpinorField):
        raise TypeError("propagate_dirac needs a SpinorField")
    return DiracSplitOperator(psi.grid, cfg).run(psi, on_sample)


def plane_wave_state(grid, p, spin="up", energy_sign=1, const=ATOMIC_UNITS, normalize=True, spin_axis=(0, 0, 1)):
    """Free eigenstate u(p) exp(i p.r/hbar) on ``grid``, unit norm by default."""
    from .core import plane_wave
    from .kapitza_dirac import plane_wave_spinor

    u = plane_wave_spinor(p, spin, energy_sign, const, spin_axis).u
    psi = plane_wave(grid, p, u, const.hbar)
    if normalize:
        psi.data /= np.sqrt(grid.volume)
    return psi
