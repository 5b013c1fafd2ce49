"""Units, spin matrices, periodic grids and fields on them.

Field data is stored component-first, ``data.shape == (ncomp, *grid.shape)``.
The snapshot format on disk is point-major (all components of one grid
point are adjacent), see :func:`write_snapshot`.
"""

import json
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .units import C_AU

AXIS_INDEX = {"x": 0, "y": 1, "z": 2}


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class PhysicalConstants:
    """Hbar, mass, charge and speed of light. Defaults are Hartree atomic units
    for an electron; ``E_a`` is the atomic field strength (1 a.u.)."""

    hbar: float = 1.0
    m: float = 1.0
    q: float = -1.0
    c: float = C_AU
    E_a: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "m", "c", "E_a"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.q == 0:
            raise ValueError("charge must be nonzero")

    @property
    def rest_energy(self):
        return self.m * self.c**2

    @property
    def e(self):
        return abs(self.q)

    def energy(self, p):
        """Free relativistic dispersion sqrt(m^2 c^4 + c^2 p^2); ``p`` has the
        vector index first."""
        p = np.asarray(p, dtype=float)
        p2 = np.sum(p * p, axis=0) if p.ndim else p * p
        return np.sqrt(self.rest_energy**2 + self.c**2 * p2)


ATOMIC_UNITS = PhysicalConstants()


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


SIGMA0 = _frozen([[1, 0], [0, 1]])
SIGMA1 = _frozen([[0, 1], [1, 0]])
SIGMA2 = _frozen([[0, -1j], [1j, 0]])
SIGMA3 = _frozen([[1, 0], [0, -1]])
PAULI = (SIGMA0, SIGMA1, SIGMA2, SIGMA3)

_Z2 = np.zeros((2, 2), dtype=complex)
ALPHA = _frozen([np.block([[_Z2, s], [s, _Z2]]) for s in (SIGMA1, SIGMA2, SIGMA3)])
BETA = _frozen(np.block([[SIGMA0, _Z2], [_Z2, -SIGMA0]]))


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice, centred on the origin.

    ``axes`` names the Cartesian directions the lattice axes run along.
    """

    dim: int
    n: int
    extent: float
    axes: tuple = ()

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"grid dimension must be 1 or 2, got {self.dim!r}")
        if int(self.n) != self.n or self.n < 4:
            raise ValueError(f"need an integer n >= 4 points per axis, got {self.n!r}")
        if not self.extent > 0:
            raise ValueError(f"grid extent must be positive, got {self.extent!r}")
        axes = tuple(self.axes) or (("x",) if self.dim == 1 else ("x", "y"))
        if len(axes) != self.dim or len(set(axes)) != self.dim or not set(axes) <= set(AXIS_INDEX):
            raise ValueError(f"axes {axes!r} do not match a {self.dim}-d grid")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "extent", float(self.extent))
        object.__setattr__(self, "axes", axes)

    @property
    def spacing(self):
        return self.extent / self.n

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def cell_volume(self):
        return self.spacing**self.dim

    @property
    def volume(self):
        return self.extent**self.dim

    def coordinates(self):
        """1-D coordinate array shared by every axis."""
        return (np.arange(self.n) - self.n // 2) * self.spacing

    def wavenumbers(self):
        """Angular wavenumbers in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    def momentum_lattice(self, hbar=1.0):
        """Sorted lattice momenta hbar*2*pi*j/extent, j = -n/2 .. n/2-1 (for even n)."""
        return hbar * np.fft.fftshift(self.wavenumbers())

    def positions(self):
        """Cartesian positions, shape ``(3, *shape)``; off-grid coordinates are 0."""
        r = np.zeros((3,) + self.shape)
        mesh = np.meshgrid(*([self.coordinates()] * self.dim), indexing="ij")
        for ax, m in zip(self.axes, mesh):
            r[AXIS_INDEX[ax]] = m
        return r

    def momenta(self, hbar=1.0, offset=None):
        """Cartesian lattice momenta (FFT order), shape ``(3, *shape)``.

        ``offset`` is a constant 3-vector added everywhere; it represents a
        Bloch factor exp(i p0.r/hbar) carried outside the periodic field.
        """
        p = np.zeros((3,) + self.shape)
        mesh = np.meshgrid(*([self.wavenumbers()] * self.dim), indexing="ij")
        for ax, m in zip(self.axes, mesh):
            p[AXIS_INDEX[ax]] = hbar * m
        if offset is not None:
            p += np.asarray(offset, dtype=float).reshape((3,) + (1,) * self.dim)
        return p

    def lattice_index(self, p, hbar=1.0, tol=1e-9):
        """Index tuple (FFT order) of the lattice momentum ``p`` (one value per
        grid axis); raises ``ValueError`` for off-lattice momenta."""
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if p.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} momentum components, got {p.shape}")
        dp = hbar * 2 * np.pi / self.extent
        j = p / dp
        jr = np.rint(j)
        if np.any(np.abs(j - jr) > tol) or np.any(jr < -(self.n // 2)) or np.any(jr > (self.n - 1) // 2):
            raise ValueError(f"momentum {p} is not on the lattice (spacing {dp})")
        return tuple(int(v) % self.n for v in jr)


def make_grid(dim, n, extent, axes=None):
    return Grid(dim, n, extent, tuple(axes) if axes else ())


class _Field:
    ncomp = 0

    def __init__(self, grid, data=None):
        self.grid = grid
        if data is None:
            data = np.zeros((self.ncomp,) + grid.shape, dtype=complex)
        data = np.asarray(data, dtype=complex)
        if data.shape != (self.ncomp,) + grid.shape:
            raise ValueError(
                f"{type(self).__name__} data must have shape {(self.ncomp,) + grid.shape}, got {data.shape}"
            )
        self.data = data

    def copy(self):
        return type(self)(self.grid, self.data.copy())

    def with_data(self, data):
        return type(self)(self.grid, data)

    def density(self):
        return np.sum(np.abs(self.data) ** 2, axis=0)

    def is_finite(self):
        return bool(np.all(np.isfinite(self.data)))

    def __repr__(self):
        return f"{type(self).__name__}(grid={self.grid!r})"


class SpinorField(_Field):
    """Four-component Dirac wave function."""

    ncomp = 4


class PairField(_Field):
    """Two-component (Feshbach-Villars) Klein-Gordon wave function."""

    ncomp = 2


def inner_product(f, g, metric="identity"):
    """Sum over points of f^dagger M g times the cell volume."""
    if type(f) is not type(g):
        raise TypeError(f"cannot pair {type(f).__name__} with {type(g).__name__}")
    if f.grid != g.grid:
        raise GridMismatchError("fields live on different grids")
    if metric == "identity":
        weights = np.ones(f.ncomp)
    elif metric == "sigma3":
        if not isinstance(f, PairField):
            raise ValueError("the sigma3 metric is only defined for PairField")
        weights = np.array([1.0, -1.0])
    else:
        raise ValueError(f"unknown metric {metric!r}")
    total = 0j
    for w, a, b in zip(weights, f.data, g.data):
        total += w * np.sum(np.conj(a) * b)
    return complex(total * f.grid.cell_volume)


def _fft_axes(field):
    return tuple(range(1, field.grid.dim + 1))


def spectral_transform(field, direction="forward", workers=None):
    """Unitary DFT of every component; the result is in FFT order."""
    axes = _fft_axes(field)
    if direction == "forward":
        data = scipy.fft.fftn(field.data, axes=axes, norm="ortho", workers=workers)
    elif direction == "inverse":
        data = scipy.fft.ifftn(field.data, axes=axes, norm="ortho", workers=workers)
    else:
        raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    return field.with_data(data)


def absorbing_mask(grid, fraction=0.1, power=0.125):
    """cos^(1/8) ramp over the outer ``fraction`` of each axis, 1 inside."""
    x = np.arange(grid.n) + 0.5
    width = fraction * grid.n
    d = np.minimum(x, grid.n - x)  # distance to the nearest boundary, in cells
    ramp = np.where(d < width, np.cos(0.5 * np.pi * (width - d) / width).clip(0.0) ** power, 1.0)
    mask = np.ones(grid.shape)
    for axis in range(grid.dim):
        shape = [1] * grid.dim
        shape[axis] = grid.n
        mask = mask * ramp.reshape(shape)
    return mask


def plane_wave(grid, p, amplitudes, hbar=1.0):
    """Field with constant component ``amplitudes`` times exp(i p.r/hbar).

    ``p`` is a Cartesian 3-vector; its projection on the grid axes must be a
    lattice momentum for the state to be periodic.
    """
    amplitudes = np.asarray(amplitudes, dtype=complex)
    r = grid.positions()
    phase = np.exp(1j * np.tensordot(np.asarray(p, dtype=float), r, axes=1) / hbar)
    data = amplitudes.reshape((-1,) + (1,) * grid.dim) * phase[None]
    cls = {4: SpinorField, 2: PairField}[amplitudes.size]
    return cls(grid, data)


def write_snapshot(path, field, time=0.0):
    """One JSON header line, then little-endian complex64 values, point-major."""
    header = {
        "dim": field.grid.dim,
        "n": field.grid.n,
        "extent": field.grid.extent,
        "components": field.ncomp,
        "time": float(time),
    }
    payload = np.moveaxis(field.data, 0, -1).astype("<c8")
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode("utf-8"))
        fh.write(payload.tobytes(order="C"))


def read_snapshot(path, axes=None):
    """Inverse of :func:`write_snapshot`; returns ``(field, time)``."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        raw = fh.read()
    grid = make_grid(header["dim"], header["n"], header["extent"], axes)
    ncomp = int(header["components"])
    cls = {4: SpinorField, 2: PairField}.get(ncomp)
    if cls is None:
        raise ValueError(f"unsupported component count {ncomp}")
    values = np.frombuffer(raw, dtype="<c8")
    expected = ncomp * grid.n**grid.dim
    if values.size != expected:
        raise ValueError(f"snapshot holds {values.size} values, header implies {expected}")
    data = np.moveaxis(values.reshape(grid.shape + (ncomp,)), -1, 0).astype(complex)
    return cls(grid, data), float(header["time"])
