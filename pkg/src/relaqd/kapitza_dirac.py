"""Kapitza-Dirac scattering in a standing light wave by plane-wave mode expansion.

The wave function is expanded in free Dirac eigenspinors on the momentum
ladder p + n hbar k,

    psi = sum_{n, g} c_n^g(t) u^g_{p + n hbar k} exp(i (p + n hbar k).r / hbar),

with g running over (up +, down +, up -, down -). In the standing wave
A = -(E/(c|k|)) cos(k.r) sin(c|k|t) w(t) the coefficients obey

    i hbar dc/dt = M(t) c,   M = D + f(t) C,
    D = diag(eps_g E(p + n hbar k)),   f(t) = q w(t) sin(c|k|t) / (2|k|),

where C couples neighbouring ladder sites through <u_n|E.alpha|u_{n+-1}>.
M is block tridiagonal with 4x4 blocks.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from .core import ALPHA, ATOMIC_UNITS, PAULI
from .fields import Envelope, StandingWave
from .units import ev_to_au, intensity_to_field_amplitude

LABELS = ("up+", "down+", "up-", "down-")
_SIGNS = np.array([1, 1, -1, -1])


class CutoffOverflowError(RuntimeError):
    """Population reached the edge of the truncated momentum ladder."""

    def __init__(self, message, side=None, population=None):
        super().__init__(message)
        self.side = side
        self.population = population


class NoBraggSolutionError(ValueError):
    """The Bragg condition has no kinematically allowed solution."""


class NoOscillationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# free spinors


@dataclass(frozen=True)
class PlaneWaveSpinor:
    p: np.ndarray
    spin: str
    energy_sign: int
    u: np.ndarray

    @property
    def label(self):
        return ("up" if self.spin == "up" else "down") + ("+" if self.energy_sign > 0 else "-")


def _spin_state(spin, axis):
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    theta = np.arccos(np.clip(n[2], -1.0, 1.0))
    phi = np.arctan2(n[1], n[0])
    if spin == "up":
        return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
    return np.array([-np.exp(-1j * phi) * np.sin(theta / 2), np.cos(theta / 2)])


def _parse_spin(spin):
    s = str(spin).lower()
    if s in ("up", "u", "+", "1", "↑"):
        return "up"
    if s in ("down", "d", "dn", "-", "-1", "↓"):
        return "down"
    raise ValueError(f"spin must be up or down, got {spin!r}")


def plane_wave_spinor(p, spin="up", energy_sign=1, const=ATOMIC_UNITS, spin_axis=(0.0, 0.0, 1.0)):
    """Normalized free eigenspinor of c alpha.p + m c^2 beta.

    Spin labels refer to the rest frame, quantized along ``spin_axis``:
    u+ ~ (chi, c sigma.p chi/(E + mc^2)), u- ~ (-c sigma.p chi/(E + mc^2), chi).
    """
    spin = _parse_spin(spin)
    if energy_sign not in (1, -1):
        raise ValueError("energy_sign must be +1 or -1")
    p = np.asarray(p, dtype=float).reshape(3)
    E = const.energy(p)
    chi = _spin_state(spin, spin_axis)
    sp = const.c * (p[0] * PAULI[1] + p[1] * PAULI[2] + p[2] * PAULI[3]) @ chi / (E + const.rest_energy)
    u = np.concatenate([chi, sp]) if energy_sign > 0 else np.concatenate([-sp, chi])
    u = u * np.sqrt((E + const.rest_energy) / (2 * E))
    return PlaneWaveSpinor(p, spin, energy_sign, u)


def spinor_matrix(p, const=ATOMIC_UNITS, spin_axis=(0.0, 0.0, 1.0)):
    """Columns are the four eigenspinors in the order of ``LABELS``."""
    cols = [plane_wave_spinor(p, s, e, const, spin_axis).u for e in (1, -1) for s in ("up", "down")]
    return np.stack(cols, axis=1)


def free_dirac_matrix(p, const=ATOMIC_UNITS):
    p = np.asarray(p, dtype=float)
    return const.c * np.tensordot(p, ALPHA, axes=1) + const.rest_energy * np.diag([1, 1, -1, -1]).astype(complex)


def coupling_element(u_left, u_right, E):
    """u_left^dagger (E.alpha) u_right."""
    ul = getattr(u_left, "u", u_left)
    ur = getattr(u_right, "u", u_right)
    Ea = np.tensordot(np.asarray(E, dtype=float), ALPHA, axes=1)
    return complex(np.conj(ul) @ Ea @ ur)


# ---------------------------------------------------------------------------
# laser and basis


@dataclass(frozen=True)
class KDLaser:
    """Standing wave of field amplitude vector ``E`` and wave vector ``k``."""

    E: np.ndarray
    k: np.ndarray
    envelope: Envelope
    const: object = field(default=ATOMIC_UNITS)

    def __post_init__(self):
        E = np.asarray(self.E, dtype=float).reshape(3)
        k = np.asarray(self.k, dtype=float).reshape(3)
        if not np.linalg.norm(k) > 0:
            raise ValueError("wave vector must be nonzero")
        if abs(E @ k) > 1e-12 * np.linalg.norm(E) * np.linalg.norm(k):
            raise ValueError("field must be transverse to k for a standing wave")
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "k", k)

    @property
    def kappa(self):
        return float(np.linalg.norm(self.k))

    @property
    def omega(self):
        return self.const.c * self.kappa

    @property
    def T_L(self):
        return 2 * np.pi / self.omega

    @property
    def T(self):
        return self.envelope.duration

    def drive(self, t):
        """f(t) = q w(t) sin(c|k|t) / (2|k|)."""
        return self.const.q * self.envelope(t) * np.sin(self.omega * t) / (2 * self.kappa)

    def with_flat_cycles(self, flat_cycles):
        env = Envelope(self.envelope.ramp_cycles, flat_cycles, self.envelope.period)
        return KDLaser(self.E, self.k, env, self.const)

    def scaled(self, factor):
        return KDLaser(factor * self.E, self.k, self.envelope, self.const)

    def potential_spec(self):
        return StandingWave(self.E, self.k, self.envelope)

    @classmethod
    def from_intensity(
        cls,
        intensity_w_cm2,
        photon_ev,
        polarization=(0.0, 0.0, 1.0),
        direction=(1.0, 0.0, 0.0),
        ramp_cycles=10,
        flat_cycles=0,
        convention="peak",
        const=ATOMIC_UNITS,
    ):
        """Two counter-propagating beams of equal intensity form the standing
        wave; its amplitude is twice the single-beam amplitude."""
        omega = ev_to_au(photon_ev) / const.hbar
        kappa = omega / const.c
        d = np.asarray(direction, dtype=float)
        e = np.asarray(polarization, dtype=float)
        E = 2 * intensity_to_field_amplitude(intensity_w_cm2, convention) * e / np.linalg.norm(e)
        env = Envelope(ramp_cycles, flat_cycles, 2 * np.pi / omega)
        return cls(E, kappa * d / np.linalg.norm(d), env, const)


class ModeBasis:
    """Free eigenspinors on the ladder p + n hbar k, n = n_min..n_max."""

    def __init__(self, p, k, n_min, n_max, const=ATOMIC_UNITS, spin_axis=(0.0, 0.0, 1.0)):
        if n_max < n_min:
            raise ValueError("empty ladder")
        if not n_min <= 0 <= n_max:
            raise ValueError("ladder must contain n = 0")
        self.p = np.asarray(p, dtype=float).reshape(3)
        self.k = np.asarray(k, dtype=float).reshape(3)
        self.n_min, self.n_max = int(n_min), int(n_max)
        self.const = const
        self.spin_axis = tuple(spin_axis)
        self.ns = np.arange(self.n_min, self.n_max + 1)
        self.momenta = self.p[None] + const.hbar * self.ns[:, None] * self.k[None]
        self.U = np.stack([spinor_matrix(q, const, spin_axis) for q in self.momenta])
        self.energies = const.energy(self.momenta.T)

    @property
    def sites(self):
        return len(self.ns)

    @property
    def size(self):
        return 4 * self.sites

    def index(self, n, label="up+"):
        g = LABELS.index(label) if isinstance(label, str) else int(label)
        if not self.n_min <= n <= self.n_max:
            raise IndexError(f"n={n} outside [{self.n_min}, {self.n_max}]")
        return 4 * (n - self.n_min) + g

    def diagonal(self):
        return (self.energies[:, None] * _SIGNS[None]).ravel()

    def coupling_blocks(self, E):
        """Upper blocks <u_n|E.alpha|u_{n+1}>, shape (sites-1, 4, 4)."""
        Ea = np.tensordot(np.asarray(E, dtype=float), ALPHA, axes=1)
        return np.einsum("nai,ab,nbj->nij", self.U[:-1].conj(), Ea, self.U[1:])

    def initial_state(self, label="up+"):
        c = np.zeros(self.size, dtype=complex)
        c[self.index(0, label)] = 1.0
        return ModeState(c, 0.0)

    def extended(self, by=4):
        return ModeBasis(self.p, self.k, self.n_min - by // 2, self.n_max + by - by // 2, self.const, self.spin_axis)


@dataclass
class ModeState:
    c: np.ndarray
    t: float = 0.0

    def norm(self):
        return float(np.vdot(self.c, self.c).real)


# ---------------------------------------------------------------------------
# coupling operator


class BlockTridiagonal:
    """Hermitian block-tridiagonal matrix: diagonal blocks and upper blocks."""

    def __init__(self, diag, upper):
        self.diag = np.asarray(diag, dtype=complex)
        self.upper = np.asarray(upper, dtype=complex)
        self.nb = self.diag.shape[1]

    @property
    def size(self):
        return self.diag.shape[0] * self.nb

    def to_dense(self):
        b, N = self.nb, self.diag.shape[0]
        M = np.zeros((N * b, N * b), dtype=complex)
        for i in range(N):
            M[i * b : (i + 1) * b, i * b : (i + 1) * b] = self.diag[i]
        for i in range(N - 1):
            M[i * b : (i + 1) * b, (i + 1) * b : (i + 2) * b] = self.upper[i]
            M[(i + 1) * b : (i + 2) * b, i * b : (i + 1) * b] = self.upper[i].conj().T
        return M

    def bandwidth(self):
        return 2 * self.nb - 1

    def to_banded(self, scale=1.0, shift=0.0):
        """LAPACK band storage of shift*I + scale*M, for solve_banded((w, w), ...)."""
        w = self.bandwidth()
        A = shift * np.eye(self.size, dtype=complex) + scale * self.to_dense()
        n = self.size
        ab = np.zeros((2 * w + 1, n), dtype=complex)
        for d in range(-w, w + 1):
            diag = np.diagonal(A, offset=d)
            if d >= 0:
                ab[w - d, d:] = diag
            else:
                ab[w - d, : n + d] = diag
        return ab

    def matvec(self, x):
        b, N = self.nb, self.diag.shape[0]
        X = x.reshape(N, b)
        y = np.einsum("nij,nj->ni", self.diag, X)
        y[:-1] += np.einsum("nij,nj->ni", self.upper, X[1:])
        y[1:] += np.einsum("nji,nj->ni", self.upper.conj(), X[:-1])
        return y.ravel()


def assemble_system(basis, laser, t):
    """M(t) = D + f(t) C as a :class:`BlockTridiagonal`."""
    f = laser.drive(t)
    N = basis.sites
    diag = np.zeros((N, 4, 4), dtype=complex)
    idx = np.arange(4)
    diag[:, idx, idx] = basis.energies[:, None] * _SIGNS[None]
    return BlockTridiagonal(diag, f * basis.coupling_blocks(laser.E))


def cn_step(state, basis, laser, dt):
    """Crank-Nicolson (Cayley) step with M sampled at the midpoint, banded solve."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    hb = basis.const.hbar
    M = assemble_system(basis, laser, state.t + 0.5 * dt)
    tau = 0.5j * dt / hb
    rhs = state.c - tau * M.matvec(state.c)
    w = M.bandwidth()
    ab = M.to_banded(scale=tau, shift=1.0)
    try:
        c = scipy.linalg.solve_banded((w, w), ab, rhs)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"singular Crank-Nicolson system at t={state.t:g}") from exc
    return ModeState(c, state.t + dt)


# ---------------------------------------------------------------------------
# fourth-order Magnus propagation

_G = np.sqrt(3.0) / 6.0


class MagnusPropagator:
    """Fourth-order commutator-free Magnus steps for M(t) = D + f(t) C.

    With Gauss nodes t1, t2 the step exponent is
    h (D + (f1 + f2)/2 C) + i (sqrt(3) h^2 / 12) (f2 - f1) [D, C],
    exponentiated by Hermitian eigendecomposition. Steps are batched.
    """

    def __init__(self, basis, laser, substeps=512):
        if substeps < 8:
            raise ValueError("need at least 8 substeps per laser period")
        self.basis, self.laser = basis, laser
        self.substeps = int(substeps)
        self.dt = laser.T_L / self.substeps
        self.D = basis.diagonal()
        self.C = assemble_system_coupling(basis, laser)
        self.K = self.D[:, None] * self.C - self.C * self.D[None, :]
        self._flat = None

    def step_eigen(self, t_start, drive=None):
        """Eigen-pairs (w, V) of the step exponents for steps starting at ``t_start``."""
        drive = self.laser.drive if drive is None else drive
        t_start = np.atleast_1d(np.asarray(t_start, dtype=float))
        h = self.dt / self.basis.const.hbar
        f1 = np.asarray(drive(t_start + (0.5 - _G) * self.dt), dtype=float)
        f2 = np.asarray(drive(t_start + (0.5 + _G) * self.dt), dtype=float)
        H = h * (np.diag(self.D)[None] + 0.5 * (f1 + f2)[:, None, None] * self.C[None])
        H = H + 1j * np.sqrt(3.0) * h * self.dt / 12.0 * (f2 - f1)[:, None, None] * self.K[None]
        return np.linalg.eigh(H)

    def step_unitaries(self, t_start, drive=None):
        """exp(-i Omega_j) for steps starting at each of ``t_start``."""
        w, V = self.step_eigen(t_start, drive)
        return (V * np.exp(-1j * w)[:, None, :]) @ V.conj().transpose(0, 2, 1)

    def flat_period(self):
        """Step unitaries of one period on the flat top (w = 1)."""
        if self._flat is None:
            ts = np.arange(self.substeps) * self.dt
            omega, q, kap = self.laser.omega, self.laser.const.q, self.laser.kappa
            self._flat = self.step_unitaries(ts, lambda t: q * np.sin(omega * t) / (2 * kap))
        return self._flat

    def evolve(self, Y, t0, nsteps, drive=None, chunk=512):
        """Apply ``nsteps`` steps starting at t0 to a vector or matrix ``Y``."""
        done = 0
        while done < nsteps:
            m = min(chunk, nsteps - done)
            ts = t0 + (done + np.arange(m)) * self.dt
            if np.ndim(Y) == 1:
                w, V = self.step_eigen(ts, drive)
                ph = np.exp(-1j * w)
                for s in range(m):
                    Y = V[s] @ (ph[s] * (V[s].conj().T @ Y))
            else:
                U = self.step_unitaries(ts, drive)
                for s in range(m):
                    Y = U[s] @ Y
            done += m
        return Y

    @property
    def real_coupling(self):
        return not np.any(self.C.imag)

    def monodromy(self):
        U = self.flat_period()
        M = np.eye(self.basis.size, dtype=complex)
        for s in range(self.substeps):
            M = U[s] @ M
        return M


def assemble_system_coupling(basis, laser):
    """Dense coupling matrix C (without the drive factor)."""
    op = BlockTridiagonal(np.zeros((basis.sites, 4, 4)), basis.coupling_blocks(laser.E))
    return op.to_dense()


# ---------------------------------------------------------------------------
# propagation and analysis


@dataclass
class ModeTrajectory:
    basis: ModeBasis
    times: np.ndarray
    coefficients: np.ndarray

    @property
    def final(self):
        return ModeState(self.coefficients[-1], float(self.times[-1]))

    def populations(self):
        return np.abs(self.coefficients) ** 2


def edge_populations(basis, c, sites=2):
    """Population on the outermost ``sites`` ladder sites at each end.

    ``c`` may carry leading axes (one coefficient vector per row).
    """
    pop = np.abs(np.asarray(c)) ** 2
    lo = pop[..., : 4 * sites].sum(axis=-1)
    hi = pop[..., -4 * sites :].sum(axis=-1)
    return np.max(lo), np.max(hi)


def check_cutoff(basis, c, tol=1e-8, sites=2):
    lo, hi = edge_populations(basis, c, sites)
    if lo > tol or hi > tol:
        side, val = ("lower", lo) if lo >= hi else ("upper", hi)
        raise CutoffOverflowError(
            f"population {val:.2e} within {sites} sites of the {side} ladder edge "
            f"[{basis.n_min}, {basis.n_max}] exceeds {tol:g}",
            side,
            val,
        )


def propagate_modes(basis, laser, dt=None, record_every=1, initial=None, method="magnus4", cutoff_tol=1e-8):
    """Integrate the mode equations over the full pulse [0, laser.T].

    ``dt`` defaults to T_L/512 and must divide T_L. ``method`` is "magnus4"
    (default) or "cn". Records every ``record_every`` steps plus the final
    step; raises :class:`CutoffOverflowError` if a recorded state leaks to
    the ladder edge.
    """
    substeps = 512 if dt is None else int(round(laser.T_L / dt))
    if dt is not None and abs(substeps * dt - laser.T_L) > 1e-9 * laser.T_L:
        raise ValueError("dt must divide the laser period")
    dt = laser.T_L / substeps
    nsteps = int(round(laser.T / dt))
    state = basis.initial_state() if initial is None else initial
    c = np.array(state.c, dtype=complex)
    times, rec = [0.0], [c.copy()]

    def record(j, c):
        if j % record_every == 0 or j == nsteps:
            times.append(j * dt)
            rec.append(c.copy())

    if method == "cn":
        st = ModeState(c, 0.0)
        for j in range(1, nsteps + 1):
            st = cn_step(st, basis, laser, dt)
            record(j, st.c)
    elif method == "magnus4":
        prop = MagnusPropagator(basis, laser, substeps)
        env = laser.envelope
        ramp_end = int(np.ceil(env.ramp_time / dt))
        down_start = int(np.floor((env.ramp_time + env.flat_time) / dt))
        flat = prop.flat_period() if down_start > ramp_end else None
        j = 0
        chunk = 256
        while j < nsteps:
            if flat is not None and ramp_end <= j < down_start:
                c = flat[j % substeps] @ c
                j += 1
                record(j, c)
                continue
            stop = min(nsteps, j + chunk)
            if flat is not None and j < ramp_end:
                stop = min(stop, ramp_end)
            U = prop.step_unitaries(j * dt + np.arange(stop - j) * dt)
            for s in range(stop - j):
                c = U[s] @ c
                j += 1
                record(j, c)
    else:
        raise ValueError(f"unknown method {method!r}")
    coeffs = np.array(rec)
    check_cutoff(basis, coeffs, cutoff_tol)
    return ModeTrajectory(basis, np.array(times), coeffs)


def occupations(state, basis):
    """Per-site totals |c_n|^2 = sum_g |c_n^g|^2 and the (n, g) breakdown.

    Accepts a :class:`ModeState`, a coefficient vector or a stack of them.
    """
    c = np.asarray(getattr(state, "c", state))
    return split_populations(np.abs(c) ** 2, basis)


def split_populations(pops, basis):
    """Same as :func:`occupations` for already squared amplitudes."""
    pops = np.asarray(pops, dtype=float)
    per = pops.reshape(pops.shape[:-1] + (basis.sites, 4))
    return per.sum(axis=-1), per


def _ramp_drives(laser, R):
    T_L, omega = laser.T_L, laser.omega
    q, kap = laser.const.q, laser.kappa
    tr = R * T_L

    def up(t):
        return q * np.sin(0.5 * np.pi * t / tr) ** 2 * np.sin(omega * t) / (2 * kap)

    def down(t):
        return q * np.cos(0.5 * np.pi * (t - tr) / tr) ** 2 * np.sin(omega * t) / (2 * kap)

    return up, down


def _integer_ramp(laser):
    R = laser.envelope.ramp_cycles
    if R != round(R):
        raise ValueError("ramp_cycles must be an integer for a Floquet scan")
    return int(R)


class FloquetScan:
    """Final populations after ramp-up, N flat-top periods and ramp-down.

    The flat top is applied as powers of the one-period monodromy in its
    Schur (orthonormal eigen-) basis. For real couplings the ramp-down
    operator is the ladder-parity mirror S U_up^T S of the ramp-up, because
    the ramp-down drive is the sign-flipped time mirror of the ramp-up drive.
    """

    def __init__(self, basis, laser, substeps=512, initial_label="up+", need_ramp_down=True):
        self.basis, self.laser = basis, laser
        R = _integer_ramp(laser)
        self.ramp_time = R * laser.T_L
        prop = MagnusPropagator(basis, laser, substeps)
        up, down = _ramp_drives(laser, R)
        c0 = basis.initial_state(initial_label).c
        n = basis.size
        nsteps = R * substeps
        self.Ud = None
        if not need_ramp_down:
            self.c_up = prop.evolve(c0, 0.0, nsteps, up)
        elif prop.real_coupling:
            Uu = prop.evolve(np.eye(n, dtype=complex), 0.0, nsteps, up)
            self.c_up = Uu @ c0
            parity = np.repeat((-1.0) ** basis.ns, 4)
            self.Ud = parity[:, None] * Uu.T * parity[None, :]
        else:
            self.c_up = prop.evolve(c0, 0.0, nsteps, up)
            self.Ud = prop.evolve(np.eye(n, dtype=complex), self.ramp_time, nsteps, down)
        T, Z = scipy.linalg.schur(prop.monodromy(), output="complex")
        self.eigvals = np.diag(T)
        self.Z = Z
        self.a = Z.conj().T @ self.c_up

    def quasi_energies(self):
        return -self.laser.const.hbar * np.angle(self.eigvals) / self.laser.T_L

    def coefficients(self, flat_cycles):
        N = np.asarray(flat_cycles, dtype=float)
        fin = (self.Ud @ self.Z) @ (self.a[:, None] * self.eigvals[:, None] ** N[None, :])
        return fin.T

    def populations(self, flat_cycles):
        return np.abs(self.coefficients(flat_cycles)) ** 2

    def total_times(self, flat_cycles):
        return 2 * self.ramp_time + np.asarray(flat_cycles) * self.laser.T_L

    def two_level(self, degeneracy=1e-7):
        """Detuning, coupling and peak transfer of the prepared state.

        The two Floquet groups (eigenvalues equal within ``degeneracy`` rad
        are merged) carrying most of the ramped-up state give the heavy and
        light weights w_h, w_l and the signed quasi-energy gap
        g = eps_light - eps_heavy = sign(delta) sqrt(delta^2 + Omega^2).
        """
        w = np.abs(self.a) ** 2
        phase = np.angle(self.eigvals)

        def group(j):
            return np.abs(np.angle(np.exp(1j * (phase - phase[j])))) < degeneracy

        h = int(np.argmax(w))
        gh = group(h)
        rest = np.where(gh, -1.0, w)
        l = int(np.argmax(rest))
        gl = group(l)
        wh, wl = w[gh].sum(), w[gl].sum()
        A = 4 * wh * wl / (wh + wl) ** 2
        gap = -self.laser.const.hbar * np.angle(self.eigvals[l] / self.eigvals[h]) / self.laser.T_L
        return {"delta": float(np.sign(gap) * abs(gap) * np.sqrt(1 - A)), "Omega": float(abs(gap) * np.sqrt(A)), "A": float(A)}


def rabi_scan(basis, laser, flat_cycles, substeps=512, initial_label="up+", cutoff_tol=1e-8):
    """Final mode populations after the pulse for integer flat-top lengths.

    Returns ``(T, populations)`` with ``populations.shape == (len(T), size)``;
    T is the total interaction time including both ramps.
    """
    flat_cycles = np.asarray(flat_cycles)
    if np.any(flat_cycles < 0) or np.any(flat_cycles != np.round(flat_cycles)):
        raise ValueError("flat_cycles must be non-negative integers")
    scan = FloquetScan(basis, laser, substeps, initial_label)
    coeffs = scan.coefficients(flat_cycles)
    check_cutoff(basis, coeffs, cutoff_tol)
    return scan.total_times(flat_cycles), np.abs(coeffs) ** 2


def rabi_scan_auto(basis, laser, flat_cycles, substeps=512, max_extensions=3, **kw):
    """:func:`rabi_scan` that widens the ladder by 4 sites on overflow."""
    for _ in range(max_extensions + 1):
        try:
            T, pops = rabi_scan(basis, laser, flat_cycles, substeps, **kw)
            return basis, T, pops
        except CutoffOverflowError:
            basis = basis.extended(4)
    raise CutoffOverflowError(f"ladder still too small after {max_extensions} extensions")


def rabi_period(T, P, min_contrast=1e-3):
    """Rabi period as twice the time of the first transfer maximum.

    The maximum is located on the sampled curve and refined by a parabola
    through the neighbouring points.
    """
    T = np.asarray(T, dtype=float)
    P = np.asarray(P, dtype=float)
    if T.size < 5 or np.ptp(P) < min_contrast:
        raise NoOscillationError("transfer probability does not oscillate")
    thresh = P.min() + 0.5 * np.ptp(P)
    i = None
    for j in range(1, len(P) - 1):
        if P[j] >= thresh and P[j] >= P[j - 1] and P[j] >= P[j + 1]:
            i = j
            break
    if i is None:
        raise NoOscillationError("no interior maximum; scan range too short")
    x, y = T[i - 1 : i + 2], P[i - 1 : i + 2]
    a, b, _ = np.polyfit(x - x[1], y, 2)
    t_peak = x[1] - b / (2 * a) if a < 0 else x[1]
    return 2.0 * t_peak


# ---------------------------------------------------------------------------
# Bragg condition


def _bragg_radicand(n_r, n_l, theta, lam_p, lam, lam_c):
    return 1 / lam**2 - (np.sin(theta) ** 2 / lam_p**2 + 1 / lam_c**2) / (n_r * n_l)


def bragg_residual(n_r, n_l, theta, p_mag, wavelength, const=ATOMIC_UNITS):
    """cos(theta)/lambda_p minus the right-hand side of the generalized Bragg
    condition; lambda_p = 2 pi hbar/p, lambda_C = 2 pi hbar/(m c)."""
    if n_r * n_l >= 0:
        raise ValueError("n_r and n_l must be nonzero with opposite signs")
    lam_p = 2 * np.pi * const.hbar / p_mag
    lam_c = 2 * np.pi * const.hbar / (const.m * const.c)
    rad = _bragg_radicand(n_r, n_l, theta, lam_p, wavelength, lam_c)
    if rad < 0:
        raise NoBraggSolutionError(f"negative radicand {rad:g}: no allowed solution")
    d = n_r - n_l
    rhs = -d / (2 * wavelength) + np.sign(d) * 0.5 * (n_r + n_l) * np.sqrt(rad)
    return float(np.cos(theta) / lam_p - rhs)


def bragg_momentum(n_r, n_l, theta, wavelength, const=ATOMIC_UNITS, p_max=None):
    """Momentum magnitude solving the Bragg condition at angle ``theta``."""
    if n_r * n_l >= 0:
        raise ValueError("n_r and n_l must be nonzero with opposite signs")
    p_max = 50 * const.m * const.c if p_max is None else p_max
    grid = np.geomspace(1e-6 * const.m * const.c, p_max, 4000)
    vals = []
    for p in grid:
        try:
            vals.append(bragg_residual(n_r, n_l, theta, p, wavelength, const))
        except NoBraggSolutionError:
            vals.append(np.nan)
    vals = np.array(vals)
    ok = np.isfinite(vals)
    if not ok.any():
        raise NoBraggSolutionError("radicand negative for every momentum")
    s = np.sign(vals)
    hits = np.where(ok[:-1] & ok[1:] & (s[:-1] * s[1:] < 0))[0]
    if hits.size == 0:
        raise NoBraggSolutionError("no momentum zeroes the Bragg residual")
    j = hits[0]
    return brentq(lambda p: bragg_residual(n_r, n_l, theta, p, wavelength, const), grid[j], grid[j + 1], xtol=1e-14, rtol=1e-15)


def bragg_angle(n_r, n_l, p_mag, wavelength, const=ATOMIC_UNITS):
    """Angle in [0, pi] zeroing the residual at fixed momentum."""
    th = np.linspace(0.0, np.pi, 20001)
    vals = []
    for x in th:
        try:
            vals.append(bragg_residual(n_r, n_l, x, p_mag, wavelength, const))
        except NoBraggSolutionError:
            vals.append(np.nan)
    vals = np.array(vals)
    s = np.sign(vals)
    hits = np.where(np.isfinite(vals[:-1]) & np.isfinite(vals[1:]) & (s[:-1] * s[1:] < 0))[0]
    if hits.size == 0:
        raise NoBraggSolutionError("no angle satisfies the Bragg condition")
    j = hits[0]
    return brentq(lambda x: bragg_residual(n_r, n_l, x, p_mag, wavelength, const), th[j], th[j + 1], xtol=1e-15)


# ---------------------------------------------------------------------------
# Bragg setups and resonance refinement


def bragg_setup(laser, n_r, n_l, theta, n_min=-8, n_max=12, spin_axis=None, p_mag=None, const=ATOMIC_UNITS):
    """Mode basis for an electron at angle ``theta`` to k in the (k, E) plane.

    The transverse momentum lies along the field polarization. ``p_mag``
    defaults to the field-free Bragg momentum.
    """
    lam = 2 * np.pi / laser.kappa
    if p_mag is None:
        p_mag = bragg_momentum(n_r, n_l, theta, lam, const)
    k_hat = laser.k / laser.kappa
    e_hat = laser.E / np.linalg.norm(laser.E)
    p = p_mag * (np.cos(theta) * k_hat + np.sin(theta) * e_hat)
    axis = e_hat if spin_axis is None else spin_axis
    return ModeBasis(p, laser.k, n_min, n_max, const, axis)


def resonance_probe(basis, laser, substeps=512):
    """Two-level readout (delta, Omega, A) of the flat-top dynamics."""
    return FloquetScan(basis, laser, substeps, need_ramp_down=False).two_level()


def detuning_slope(basis, n_target):
    """d/d|p| of E(p + n hbar k) - E(p) along the direction of p."""
    c = basis.const
    p_hat = basis.p / np.linalg.norm(basis.p)
    q = basis.p + c.hbar * n_target * basis.k
    return float(c.c**2 * (q / c.energy(q) - basis.p / c.energy(basis.p)) @ p_hat)


def tune_resonance(make_basis, laser, n_target, p0, substeps=512, tol=0.02, max_iter=8):
    """Dressed resonance momentum near ``p0``.

    Light shifts move the resonance away from the field-free Bragg momentum.
    Each probe reads the detuning delta off the flat-top Floquet states;
    delta is linear in |p|, so secant steps (the first one using the free
    dispersion slope) converge quickly. Stops when |delta| < tol * Omega.
    ``make_basis(p_mag)`` builds the basis at a trial momentum.
    Returns ``(p_res, probe)``.
    """
    basis = make_basis(p0)
    slope = detuning_slope(basis, n_target)
    x0, r0 = p0, resonance_probe(basis, laser, substeps)
    if abs(r0["delta"]) < tol * r0["Omega"]:
        return x0, r0
    x1 = x0 - r0["delta"] / slope
    for _ in range(max_iter):
        r1 = resonance_probe(make_basis(x1), laser, substeps)
        if abs(r1["delta"]) < tol * r1["Omega"]:
            return x1, r1
        denom = r1["delta"] - r0["delta"]
        s = denom / (x1 - x0) if denom != 0 else slope
        if not s > 0:
            s = slope
        x0, r0, x1 = x1, r1, x1 - r1["delta"] / s
    raise NoOscillationError("resonance search did not converge")
