"""Analytic electromagnetic potentials (phi, A) and the fields they produce.

Positions are Cartesian with the vector index first, ``r.shape == (3, ...)``;
times are scalars. Every variant provides closed-form potentials and closed-form
E = -grad(phi) - dA/dt, B = curl(A).
"""

from dataclasses import dataclass, field

import numpy as np

from .core import ATOMIC_UNITS


@dataclass(frozen=True)
class Envelope:
    """sin^2 ramp-up over ``ramp_cycles`` periods, flat top, sin^2 ramp-down."""

    ramp_cycles: float
    flat_cycles: float
    period: float

    def __post_init__(self):
        if not self.ramp_cycles > 0:
            raise ValueError("ramp_cycles must be positive")
        if self.flat_cycles < 0:
            raise ValueError("flat_cycles must be non-negative")
        if not self.period > 0:
            raise ValueError("period must be positive")

    @property
    def ramp_time(self):
        return self.ramp_cycles * self.period

    @property
    def flat_time(self):
        return self.flat_cycles * self.period

    @property
    def duration(self):
        return 2 * self.ramp_time + self.flat_time

    def _phase(self, t):
        t = np.asarray(t, dtype=float)
        tr, tf = self.ramp_time, self.flat_time
        up = (t >= 0) & (t < tr)
        down = (t >= tr + tf) & (t < 2 * tr + tf)
        flat = (t >= tr) & (t < tr + tf)
        u = np.where(up, 0.5 * np.pi * t / tr, 0.0)
        d = np.where(down, 0.5 * np.pi * (2 * tr + tf - t) / tr, 0.0)
        return up, down, flat, u, d

    def __call__(self, t):
        up, down, flat, u, d = self._phase(t)
        w = np.where(up, np.sin(u) ** 2, 0.0) + np.where(down, np.sin(d) ** 2, 0.0) + flat
        return w if np.ndim(w) else float(w)

    def derivative(self, t):
        up, down, _, u, d = self._phase(t)
        k = 0.5 * np.pi / self.ramp_time
        dw = np.where(up, k * np.sin(2 * u), 0.0) - np.where(down, k * np.sin(2 * d), 0.0)
        return dw if np.ndim(dw) else float(dw)


def _window(envelope, t):
    if envelope is None:
        return 1.0, 0.0
    return envelope(t), envelope.derivative(t)


def _vec(v):
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    return v


def _bcast(v, r):
    return v.reshape((3,) + (1,) * (np.ndim(r) - 1))


def _dot(v, r):
    return np.tensordot(v, r, axes=(0, 0))


@dataclass(frozen=True)
class StandingWave:
    """A = -(E0/(c|k|)) cos(k.r) sin(c|k|t) w(t), phi = 0."""

    E0: np.ndarray
    k: np.ndarray
    envelope: Envelope = None

    def __post_init__(self):
        object.__setattr__(self, "E0", _vec(self.E0))
        object.__setattr__(self, "k", _vec(self.k))
        if not np.linalg.norm(self.k) > 0:
            raise ValueError("standing wave needs a nonzero wave vector")

    def potentials(self, r, t, const):
        kappa = np.linalg.norm(self.k)
        omega = const.c * kappa
        w, _ = _window(self.envelope, t)
        g = np.cos(_dot(self.k, r)) * np.sin(omega * t) * w
        A = -_bcast(self.E0, r) / omega * g[None]
        return np.zeros(np.shape(r)[1:]), A

    def fields(self, r, t, const):
        kappa = np.linalg.norm(self.k)
        omega = const.c * kappa
        w, dw = _window(self.envelope, t)
        kr = _dot(self.k, r)
        E = _bcast(self.E0, r) / omega * (np.cos(kr) * (omega * np.cos(omega * t) * w + np.sin(omega * t) * dw))[None]
        B = _bcast(np.cross(self.k, self.E0), r) / omega * (np.sin(kr) * np.sin(omega * t) * w)[None]
        return E, B


@dataclass(frozen=True)
class EFGaugeLaser:
    """Plane-wave laser in electric-field gauge.

    E(eta) = E0 cos(omega*eta + phase) w(eta) with eta = t - k_hat.r/c;
    phi = -r.E(eta), A = -k_hat (r.E(eta))/c.
    """

    E0: np.ndarray
    omega: float
    k_hat: np.ndarray
    envelope: Envelope = None
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "E0", _vec(self.E0))
        k_hat = _vec(self.k_hat)
        if abs(np.linalg.norm(k_hat) - 1.0) > 1e-12:
            raise ValueError("k_hat must be a unit vector")
        object.__setattr__(self, "k_hat", k_hat)

    def field_at(self, eta):
        w, dw = _window(self.envelope, eta)
        arg = self.omega * eta + self.phase
        e = np.cos(arg) * w
        de = -self.omega * np.sin(arg) * w + np.cos(arg) * dw
        return e, de

    def potentials(self, r, t, const):
        eta = t - _dot(self.k_hat, r) / const.c
        e, _ = self.field_at(eta)
        rE = _dot(self.E0, r) * e
        return -rE, -_bcast(self.k_hat, r) * rE[None] / const.c

    def fields(self, r, t, const):
        eta = t - _dot(self.k_hat, r) / const.c
        e, _ = self.field_at(eta)
        E = _bcast(self.E0, r) * np.asarray(e)[None]
        B = _bcast(np.cross(self.k_hat, self.E0), r) * np.asarray(e)[None] / const.c
        return E, B


@dataclass(frozen=True)
class SoftCore:
    """Electrostatic potential of a smeared point charge Z at ``center``:
    phi = Z / sqrt(|r - center|^2 + a^2).

    A particle of charge q feels the energy q*phi, i.e. -Z/sqrt(...) for an
    electron.
    """

    Z: float
    a: float
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("soft-core length a must be positive")
        object.__setattr__(self, "center", _vec(self.center))

    def potentials(self, r, t, const):
        d = r - _bcast(self.center, r)
        phi = self.Z / np.sqrt(np.sum(d * d, axis=0) + self.a**2)
        return phi, np.zeros(np.shape(r))

    def fields(self, r, t, const):
        d = r - _bcast(self.center, r)
        s = np.sum(d * d, axis=0) + self.a**2
        return self.Z * d / s[None] ** 1.5, np.zeros(np.shape(r))

    def energy(self, r, const=ATOMIC_UNITS):
        """Potential energy q*phi of the bound particle."""
        return const.q * self.potentials(r, 0.0, const)[0]


@dataclass(frozen=True)
class StaticUniform:
    """phi = -r.E0, A = 0."""

    E0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "E0", _vec(self.E0))

    def potentials(self, r, t, const):
        return -_dot(self.E0, r), np.zeros(np.shape(r))

    def fields(self, r, t, const):
        return _bcast(self.E0, r) * np.ones(np.shape(r)), np.zeros(np.shape(r))


@dataclass(frozen=True)
class PotentialSum:
    terms: tuple

    def potentials(self, r, t, const):
        phi = np.zeros(np.shape(r)[1:])
        A = np.zeros(np.shape(r))
        for term in self.terms:
            p, a = term.potentials(r, t, const)
            phi = phi + p
            A = A + a
        return phi, A

    def fields(self, r, t, const):
        E = np.zeros(np.shape(r))
        B = np.zeros(np.shape(r))
        for term in self.terms:
            e, b = term.fields(r, t, const)
            E = E + e
            B = B + b
        return E, B


class Vacuum:
    def potentials(self, r, t, const):
        return np.zeros(np.shape(r)[1:]), np.zeros(np.shape(r))

    def fields(self, r, t, const):
        return np.zeros(np.shape(r)), np.zeros(np.shape(r))

    def __repr__(self):
        return "Vacuum()"


VACUUM = Vacuum()


def _as_points(r):
    r = np.asarray(r, dtype=float)
    if r.shape[0] != 3:
        raise ValueError("positions need the Cartesian index first")
    return r


def sample_potentials(spec, r, t, const=ATOMIC_UNITS):
    """Scalar potential phi and vector potential A at positions ``r``."""
    spec = VACUUM if spec is None else spec
    return spec.potentials(_as_points(r), t, const)


def derive_fields(spec, r, t, const=ATOMIC_UNITS):
    """Electric and magnetic fields from the closed-form derivatives."""
    spec = VACUUM if spec is None else spec
    return spec.fields(_as_points(r), t, const)


def potentials_on_grid(spec, grid, t, const=ATOMIC_UNITS):
    return sample_potentials(spec, grid.positions(), t, const)


def is_time_independent(spec):
    if spec is None or isinstance(spec, (Vacuum, SoftCore, StaticUniform)):
        return True
    if isinstance(spec, PotentialSum):
        return all(is_time_independent(term) for term in spec.terms)
    return False
