"""Quasi-classical tunneling through the barrier of a bound electron in a strong
static field with the magnetic drift of the laser included.

Along the field direction x the electron sees V_eff(x) = V(x) + q x E0 while
its position dependent energy is

    E(x) = -I_p - (p_y^2 + (p_z - q x E0 / c)^2) / (2m),

p_y, p_z being conserved canonical momenta. The tunneling exponent is
Gamma = (2/hbar) int_{x_i}^{x_e} sqrt(2m (V_eff - E)) dx over the forbidden
region. Both endpoints are square-root zeros; x = x_i + (x_e - x_i) sin^2 s
turns the integrand smooth.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar

from .core import ATOMIC_UNITS
from .fields import SoftCore


class OverTheBarrierError(ValueError):
    """No classically forbidden region: the field suppresses the barrier."""


class TurningPointError(RuntimeError):
    """Turning points could not be bracketed."""


class ScanBoundaryError(RuntimeError):
    """Minimum found at the edge of the scan range."""


def default_soft_core(I_p):
    """Z = sqrt(2 I_p), a = 0.5/Z (a = 0.5 for hydrogen); the well depth is
    -Z/a = -4 I_p, deep enough for an inner turning point at any I_p."""
    Z = np.sqrt(2.0 * I_p)
    return SoftCore(Z, 0.5 / Z)


@dataclass
class TunnelProblem:
    """``V`` is a SoftCore (default) or ``None`` for a bare linear barrier
    with a hard wall at x = 0."""

    I_p: float
    E0: float
    V: object = "default"
    const: object = field(default=ATOMIC_UNITS)
    omega: float = 0.0

    def __post_init__(self):
        if not self.I_p > 0:
            raise ValueError("I_p must be positive")
        if not self.E0 > 0:
            raise ValueError("E0 must be positive")
        if isinstance(self.V, str) and self.V == "default":
            self.V = default_soft_core(self.I_p)
        try:
            turning_points(self, 0.0, 0.0)
        except OverTheBarrierError:
            warnings.warn("field is above the over-the-barrier threshold at p = 0", RuntimeWarning, stacklevel=3)

    @property
    def exit_direction(self):
        """+1 if the field pushes the electron towards +x."""
        return -np.sign(self.const.q * self.E0)

    def binding(self, x):
        if self.V is None:
            return np.zeros_like(np.asarray(x, dtype=float))
        r = np.zeros((3,) + np.shape(x))
        r[0] = x
        return self.V.energy(r, self.const)

    @classmethod
    def from_ratios(cls, ip_over_mc2, e0_over_ea, const=ATOMIC_UNITS, V="default", omega=0.0):
        return cls(ip_over_mc2 * const.rest_energy, e0_over_ea * const.E_a, V, const, omega)


def effective_potential(problem, x):
    """V(x) + q x E0."""
    x = np.asarray(x, dtype=float)
    return problem.binding(x) + problem.const.q * x * problem.E0


def energy_curve(problem, x, p_y, p_z):
    c = problem.const
    x = np.asarray(x, dtype=float)
    kin = p_z - c.q * x * problem.E0 / c.c
    return -problem.I_p - (p_y**2 + kin**2) / (2 * c.m)


def _gap(problem, p_y, p_z):
    return lambda x: float(effective_potential(problem, x) - energy_curve(problem, x, p_y, p_z))


def turning_points(problem, p_y, p_z, xtol=1e-10):
    """Entry and exit points of the forbidden region on the exit side.

    Starting in the core, the gap V_eff - E is scanned outward on a
    geometric mesh for its first - to + and then + to - sign change; both
    roots are polished by Brent's method.
    """
    return _bracket_roots(problem, _gap(problem, p_y, p_z), xtol, f"p_y={p_y:g}, p_z={p_z:g}")


def _bracket_roots(problem, g, xtol, what):
    s = problem.exit_direction
    x_max = 1e3 * (problem.I_p + problem.const.rest_energy) / problem.E0
    mesh = np.concatenate([[0.0], np.geomspace(1e-8, x_max, 6000)])
    vals = np.array([g(s * x) for x in mesh])
    if problem.V is None:
        if vals[0] <= 0:
            raise OverTheBarrierError("no barrier at the wall")
        i_in = None
    else:
        if vals[0] >= 0:
            raise TurningPointError("no classically allowed core region: well too shallow for I_p")
        up = np.where((vals[:-1] < 0) & (vals[1:] >= 0))[0]
        if up.size == 0:
            raise OverTheBarrierError(f"no barrier for {what}")
        i_in = up[0]
    start = 0 if i_in is None else i_in + 1
    down = np.where((vals[start:-1] > 0) & (vals[start + 1 :] <= 0))[0]
    if down.size == 0:
        # only the magnetic drift term keeps the gap positive: no closed barrier
        raise OverTheBarrierError(f"forbidden region never closes for {what}")
    i_out = start + down[0]

    def root(a, b):
        return brentq(lambda x: g(s * x), mesh[a], mesh[a + 1], xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)

    x_i = 0.0 if i_in is None else root(i_in, i_in)
    x_e = root(i_out, i_out)
    lo, hi = sorted((s * x_i, s * x_e))
    return lo, hi


@dataclass(frozen=True)
class BarrierSlice:
    p_y: float
    p_z: float
    x_i: float
    x_e: float
    Gamma: float


def _substituted(problem, p_y, p_z, x_i, x_e, fn):
    L = x_e - x_i
    g = _gap(problem, p_y, p_z)

    def integrand(s):
        x = x_i + L * np.sin(s) ** 2
        return fn(x, max(g(x), 0.0)) * L * np.sin(2 * s)

    return integrand


def gamma_exponent(problem, p_y, p_z, nodes=None, epsrel=1e-10, return_slice=False):
    """WKB exponent Gamma. Adaptive Gauss-Kronrod by default; ``nodes``
    switches to a fixed Gauss-Legendre rule of that order."""
    x_i, x_e = turning_points(problem, p_y, p_z)
    m, hb = problem.const.m, problem.const.hbar
    f = _substituted(problem, p_y, p_z, x_i, x_e, lambda x, gap: np.sqrt(2 * m * gap))
    G = (2.0 / hb) * _integrate(f, nodes, epsrel)
    if return_slice:
        return BarrierSlice(p_y, p_z, x_i, x_e, G)
    return G


def gamma_pz_derivative(problem, p_y, p_z, nodes=None, epsrel=1e-10):
    """dGamma/dp_z = (2/hbar) int (p_z - q x E0/c) / sqrt(2m (V_eff - E)) dx."""
    x_i, x_e = turning_points(problem, p_y, p_z)
    c = problem.const

    def fn(x, gap):
        kin = p_z - c.q * x * problem.E0 / c.c
        return kin / np.sqrt(2 * c.m * gap) if gap > 0 else 0.0

    # the substitution leaves a finite integrand; the endpoints are not sampled by quad
    f = _substituted(problem, p_y, p_z, x_i, x_e, fn)
    # the integral changes sign at the peak, so the tolerance is absolute,
    # relative to the integral of |f|
    scale = _integrate(lambda s: abs(f(s)), 64, epsrel)
    return (2.0 / c.hbar) * _integrate(f, nodes, 0.0, epsabs=epsrel * scale)


def _integrate(f, nodes, epsrel, epsabs=0.0):
    if nodes is None:
        val, _ = quad(f, 0.0, 0.5 * np.pi, epsabs=epsabs, epsrel=epsrel, limit=500)
        return val
    s, w = np.polynomial.legendre.leggauss(int(nodes))
    s = 0.25 * np.pi * (s + 1.0)
    return 0.25 * np.pi * float(sum(wi * f(si) for si, wi in zip(s, w)))


def nonrelativistic_gamma(problem, p_y=0.0):
    """1-D WKB exponent without the magnetic coupling (c -> infinity)."""
    m, hb = problem.const.m, problem.const.hbar
    E = -problem.I_p - p_y**2 / (2 * m)
    x_i, x_e = _bracket_roots(problem, lambda x: float(effective_potential(problem, x)) - E, 1e-10, "c -> infinity")

    def f(s):
        x = x_i + (x_e - x_i) * np.sin(s) ** 2
        gap = max(float(effective_potential(problem, x)) - E, 0.0)
        return np.sqrt(2 * m * gap) * (x_e - x_i) * np.sin(2 * s)

    val, _ = quad(f, 0.0, 0.5 * np.pi, epsabs=0.0, epsrel=1e-13, limit=500)
    return 2.0 * val / hb


FLAG_OK = 0
FLAG_OVER_BARRIER = 1
FLAG_NO_CORE = 2


@dataclass
class WKBMap:
    p_y: np.ndarray
    p_z: np.ndarray
    Gamma: np.ndarray
    rel_prob: np.ndarray
    flag: np.ndarray

    def rows(self):
        for iy, py in enumerate(self.p_y):
            for iz, pz in enumerate(self.p_z):
                yield py, pz, self.Gamma[iy, iz], self.rel_prob[iy, iz], int(self.flag[iy, iz])


def wkb_map(problem, p_z, p_y=0.0, nodes=None):
    """exp(-(Gamma - Gamma_min)) on the (p_y, p_z) mesh; max = 1.

    Cells without a barrier carry a flag and NaN in Gamma and rel_prob.
    """
    p_z = np.atleast_1d(np.asarray(p_z, dtype=float))
    p_y = np.atleast_1d(np.asarray(p_y, dtype=float))
    G = np.full((p_y.size, p_z.size), np.nan)
    flag = np.zeros(G.shape, dtype=int)
    for iy, py in enumerate(p_y):
        for iz, pz in enumerate(p_z):
            try:
                G[iy, iz] = gamma_exponent(problem, py, pz, nodes)
            except OverTheBarrierError:
                flag[iy, iz] = FLAG_OVER_BARRIER
            except TurningPointError:
                flag[iy, iz] = FLAG_NO_CORE
    ok = flag == FLAG_OK
    rel = np.full(G.shape, np.nan)
    if ok.any():
        rel[ok] = np.exp(-(G[ok] - G[ok].min()))
    return WKBMap(p_y, p_z, G, rel, flag)


def default_pz_range(problem):
    r = problem.I_p / problem.const.c
    return -4.0 * r, r


@dataclass(frozen=True)
class PeakResult:
    p_z_star: float
    p_kin_entry: float
    p_kin_exit: float
    gamma_at_peak: float
    x_i: float
    x_e: float


def kinematic_momentum(problem, p_z, x):
    c = problem.const
    return p_z - c.q * x * problem.E0 / c.c


def most_probable_pz(problem, pz_range=None, coarse=41, tol=1e-6):
    """p_z minimizing Gamma(0, p_z), with the kinematic momenta at the
    turning points.

    A coarse scan brackets the minimum, golden-section search narrows it and
    the root of dGamma/dp_z inside the bracket fixes it to ``tol``.
    """
    lo, hi = default_pz_range(problem) if pz_range is None else pz_range
    grid = np.linspace(lo, hi, coarse)
    vals = []
    for pz in grid:
        try:
            vals.append(gamma_exponent(problem, 0.0, pz))
        except (OverTheBarrierError, TurningPointError):
            vals.append(np.inf)
    vals = np.array(vals)
    j = int(np.argmin(vals))
    if not np.isfinite(vals[j]):
        raise OverTheBarrierError("no barrier anywhere on the p_z scan")
    if j == 0 or j == coarse - 1:
        raise ScanBoundaryError(f"Gamma minimum at scan edge p_z={grid[j]:g}; widen the range")
    a, b = grid[j - 1], grid[j + 1]
    res = minimize_scalar(lambda pz: gamma_exponent(problem, 0.0, pz), bracket=(a, grid[j], b), method="golden", tol=1e-8)
    pz = float(res.x)
    da = gamma_pz_derivative(problem, 0.0, a)
    db = gamma_pz_derivative(problem, 0.0, b)
    if da < 0 < db:
        pz = brentq(lambda v: gamma_pz_derivative(problem, 0.0, v), a, b, xtol=0.1 * tol)
    sl = gamma_exponent(problem, 0.0, pz, return_slice=True)
    x_in, x_out = (sl.x_i, sl.x_e) if problem.exit_direction > 0 else (sl.x_e, sl.x_i)
    return PeakResult(
        pz,
        float(kinematic_momentum(problem, pz, x_in)),
        float(kinematic_momentum(problem, pz, x_out)),
        sl.Gamma,
        float(x_in),
        float(x_out),
    )


def keldysh_parameter(problem):
    c = problem.const
    if problem.omega < 0:
        raise ValueError("omega must be non-negative")
    return problem.omega * np.sqrt(2 * c.m * problem.I_p) / (c.e * problem.E0)
