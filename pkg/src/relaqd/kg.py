"""Real-space split-operator propagation of the two-component Klein-Gordon
equation.

    H1 = q phi + sigma3 m c^2
    H2 = (sigma3 + i sigma2) / (2m) * D,   D = (-i hbar grad - q A)^2

(sigma3 + i sigma2) squares to zero, so exp(-i dt H2/hbar) = 1 - i dt H2/hbar
exactly. D is discretized with centred finite differences; the mixed term is
written in the product-rule form i hbar q (C(A f) + A (C f)), C the first
derivative stencil. That form is Hermitian on the grid, which makes every
kinetic step exactly pseudo-unitary.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import ATOMIC_UNITS, AXIS_INDEX, PairField, absorbing_mask, inner_product
from .dirac import NumericalInstabilityError, expectation_position, relativistic_timestep
from .fields import potentials_on_grid
from .trace import Trace

_FIRST = {
    2: ((1, 0.5),),
    4: ((1, 2.0 / 3.0), (2, -1.0 / 12.0)),
}
_SECOND = {
    2: (-2.0, ((1, 1.0),)),
    4: (-2.5, ((1, 4.0 / 3.0), (2, -1.0 / 12.0))),
}


def _check_order(order):
    if order not in _FIRST:
        raise ValueError(f"stencil order must be 2 or 4, got {order!r}")


def first_derivative(f, axis, h, order=4):
    """Centred periodic first derivative along array ``axis``."""
    _check_order(order)
    out = np.zeros_like(f)
    for s, w in _FIRST[order]:
        out += w * (np.roll(f, -s, axis=axis) - np.roll(f, s, axis=axis))
    return out / h


def second_derivative(f, axis, h, order=4):
    _check_order(order)
    centre, taps = _SECOND[order]
    out = centre * f
    for s, w in taps:
        out = out + w * (np.roll(f, -s, axis=axis) + np.roll(f, s, axis=axis))
    return out / h**2


def laplacian_symbol(k, h, order=4):
    """Eigenvalue of -d^2/dx^2 (stencil) on exp(i k x)."""
    _check_order(order)
    centre, taps = _SECOND[order]
    val = -centre - sum(2 * w * np.cos(s * k * h) for s, w in taps)
    return val / h**2


def stencil_momentum_squared(grid, p, hbar=1.0, order=4):
    """Discrete counterpart of |p|^2 for lattice momentum ``p`` (3-vector or
    ``(3, ...)`` array): grid axes use the stencil symbol, others are exact."""
    p = np.asarray(p, dtype=float)
    total = np.zeros(p.shape[1:])
    on_grid = {AXIS_INDEX[a] for a in grid.axes}
    for j in range(3):
        if j in on_grid:
            total = total + hbar**2 * laplacian_symbol(p[j] / hbar, grid.spacing, order)
        else:
            total = total + p[j] ** 2
    return total


def kinetic_operator(f, grid, A, const=ATOMIC_UNITS, order=4):
    """D f = (-i hbar grad - q A)^2 f on the grid; ``A`` has shape (3, *shape)."""
    hb, q, h = const.hbar, const.q, grid.spacing
    out = np.zeros_like(f, dtype=complex)
    for ax_i, name in enumerate(grid.axes):
        j = AXIS_INDEX[name]
        out += -(hb**2) * second_derivative(f, ax_i, h, order)
        a = A[j]
        if np.any(a):
            mixed = first_derivative(a * f, ax_i, h, order) + a * first_derivative(f, ax_i, h, order)
            out += 1j * hb * q * mixed
    out += q**2 * np.sum(A * A, axis=0) * f
    return out


def fv_plane_wave(p, sign, grid, const=ATOMIC_UNITS, stencil_order=None):
    """Feshbach-Villars plane wave of charge sign ``sign`` (+1 or -1).

    Components ((1 +- eps)/2, (1 -+ eps)/2) exp(i p.r/hbar), eps = E/(m c^2),
    scaled so the sigma3 charge is exactly +-1 on ``grid``. With
    ``stencil_order`` set, E uses the stencil dispersion, making the state an
    exact eigenvector of the discretized free Hamiltonian.
    """
    if sign in ("+", "-"):
        sign = 1 if sign == "+" else -1
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    p = np.asarray(p, dtype=float).reshape(3)
    on = [AXIS_INDEX[a] for a in grid.axes]
    grid.lattice_index(p[on], const.hbar)
    E = kg_energy(p, const, grid, stencil_order)
    eps = E / const.rest_energy
    amp = np.array([(1 + sign * eps) / 2, (1 - sign * eps) / 2])
    r = grid.positions()
    phase = np.exp(1j * np.tensordot(p, r, axes=1) / const.hbar)
    data = amp[:, None] * phase.reshape(1, -1)
    data = data.reshape((2,) + grid.shape) / np.sqrt(eps * grid.volume)
    return PairField(grid, data)


def kg_energy(p, const=ATOMIC_UNITS, grid=None, stencil_order=None):
    """sqrt(m^2 c^4 + c^2 P) with P = |p|^2, or its stencil version."""
    p = np.asarray(p, dtype=float)
    if stencil_order is None:
        return const.energy(p)
    P = stencil_momentum_squared(grid, p, const.hbar, stencil_order)
    return np.sqrt(const.rest_energy**2 + const.c**2 * P)


def free_kg_matrix(P, const=ATOMIC_UNITS):
    """2x2 free Hamiltonian sigma3 m c^2 + (sigma3 + i sigma2) P/(2m) for
    squared momentum ``P``."""
    mc2, T = const.rest_energy, P / (2 * const.m)
    return np.array([[mc2 + T, T], [-T, -mc2 - T]], dtype=complex)


def kg_potential_half_step(psi, spec, t, dt, const=ATOMIC_UNITS):
    """exp(-i (dt/2) H1/hbar) with phi sampled at t + dt/4."""
    phi, _ = potentials_on_grid(spec, psi.grid, t + 0.25 * dt, const)
    return psi.with_data(_potential_phases(psi.data, phi, 0.5 * dt, const))


def _potential_phases(data, phi, tau, const):
    base = const.q * phi * tau / const.hbar
    rest = const.rest_energy * tau / const.hbar
    return np.stack([np.exp(-1j * (base + rest)) * data[0], np.exp(-1j * (base - rest)) * data[1]])


def _kinetic_update(data, grid, A, dt, const, order):
    s = kinetic_operator(data[0] + data[1], grid, A, const, order)
    s *= 1j * dt / (2 * const.m * const.hbar)
    return np.stack([data[0] - s, data[1] + s])


def kg_kinetic_step(psi, spec, t, dt, const=ATOMIC_UNITS, stencil_order=4):
    """exp(-i dt H2/hbar) = 1 - i dt H2/hbar, A sampled at t + dt/2."""
    _, A = potentials_on_grid(spec, psi.grid, t + 0.5 * dt, const)
    return psi.with_data(_kinetic_update(psi.data, psi.grid, A, dt, const, stencil_order))


def apply_h2(psi, spec, t, const=ATOMIC_UNITS, stencil_order=4):
    """H2 psi; used for operator identities."""
    _, A = potentials_on_grid(spec, psi.grid, t, const)
    s = kinetic_operator(psi.data[0] + psi.data[1], psi.grid, A, const, stencil_order) / (2 * const.m)
    return psi.with_data(np.stack([s, -s]))


def kg_charge(psi):
    return inner_product(psi, psi, "sigma3").real


def kg_charge_split(psi, const=ATOMIC_UNITS, stencil_order=4):
    """Charge carried by the positive- and negative-frequency parts.

    Uses L+- = (E +- H(p))/(2E) with the free stencil Hamiltonian; returns
    (Q+, Q-) with Q+ >= 0 >= Q-.
    """
    axes = tuple(range(1, psi.grid.dim + 1))
    dk = np.fft.fftn(psi.data, axes=axes, norm="ortho")
    P = stencil_momentum_squared(psi.grid, psi.grid.momenta(const.hbar), const.hbar, stencil_order)
    E = np.sqrt(const.rest_energy**2 + const.c**2 * P)
    T = P / (2 * const.m)
    mc2 = const.rest_energy
    h0 = (mc2 + T) * dk[0] + T * dk[1]
    h1 = -T * dk[0] - (mc2 + T) * dk[1]
    plus = 0.5 * np.stack([dk[0] + h0 / E, dk[1] + h1 / E])
    minus = dk - plus
    w = psi.grid.cell_volume

    def q(d):
        return float(np.sum(np.abs(d[0]) ** 2 - np.abs(d[1]) ** 2) * w)

    return q(plus), q(minus)


@dataclass
class KGPropagatorConfig:
    dt: float
    steps: int
    t0: float = 0.0
    spec: object = None
    stencil_order: int = 4
    mask: bool = False
    sample_every: int = 1
    const: object = field(default=ATOMIC_UNITS)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.steps < 0 or int(self.steps) != self.steps:
            raise ValueError("steps must be a non-negative integer")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        _check_order(self.stencil_order)
        bound = relativistic_timestep(self.const, include_pi=True)
        if self.dt > bound:
            warnings.warn(f"dt={self.dt:g} exceeds pi*hbar/(mc^2)={bound:g}", RuntimeWarning, stacklevel=3)


def _observe(psi, t, cfg):
    qp, qm = kg_charge_split(psi, cfg.const, cfg.stencil_order)
    denom = qp - qm
    return {
        "t": t,
        "charge": kg_charge(psi),
        "pos_fraction": qp / denom if denom > 0 else np.nan,
        "x": expectation_position(psi, "x"),
        "z": expectation_position(psi, "z"),
    }


class KGSplitOperator:
    """Reusable KG propagator working on raw ``(2, *shape)`` arrays."""

    def __init__(self, grid, cfg):
        self.grid = grid
        self.cfg = cfg
        self._mask = absorbing_mask(grid) if cfg.mask else None
        self._zero_phi = np.zeros(grid.shape)
        self._zero_A = np.zeros((3,) + grid.shape)

    def _pots(self, t):
        if self.cfg.spec is None:
            return self._zero_phi, self._zero_A
        return potentials_on_grid(self.cfg.spec, self.grid, t, self.cfg.const)

    def step(self, data, t):
        """One Strang step U1(dt/2) U2(dt) U1(dt/2) starting at ``t``."""
        cfg, const, dt = self.cfg, self.cfg.const, self.cfg.dt
        data = _potential_phases(data, self._pots(t + 0.25 * dt)[0], 0.5 * dt, const)
        data = _kinetic_update(data, self.grid, self._pots(t + 0.5 * dt)[1], dt, const, cfg.stencil_order)
        data = _potential_phases(data, self._pots(t + 0.75 * dt)[0], 0.5 * dt, const)
        if self._mask is not None:
            data = data * self._mask
        return data

    def run(self, psi, on_sample=None):
        cfg = self.cfg
        if not np.all(np.isfinite(psi.data)):
            raise NumericalInstabilityError("non-finite initial field")
        data = psi.data.copy()
        trace = Trace(["t", "charge", "pos_fraction", "x", "z"])
        trace.append(_observe(psi, cfg.t0, cfg))
        for j in range(1, cfg.steps + 1):
            data = self.step(data, cfg.t0 + (j - 1) * cfg.dt)
            t = cfg.t0 + j * cfg.dt
            if j % cfg.sample_every == 0 or j == cfg.steps:
                state = psi.with_data(data)
                row = _observe(state, t, cfg)
                if not np.isfinite(row["charge"]):
                    raise NumericalInstabilityError(f"non-finite field at t={t:g} (step {j})")
                trace.append(row)
                if on_sample is not None:
                    on_sample(state, t)
        return psi.with_data(data), trace


def propagate_kg(psi, cfg, on_sample=None):
    """Strang steps U1(dt/2) U2(dt) U1(dt/2); returns the final field and a
    trace of (t, charge, pos_fraction, x, z)."""
    if not isinstance(psi, PairField):
        raise TypeError("propagate_kg needs a PairField")
    return KGSplitOperator(psi.grid, cfg).run(psi, on_sample)
