"""Throughput of the grid propagators versus grid size.

Only the step loop is timed (monotonic clock); setup and one warm-up pass are
excluded and the reported time is the median over the repetitions.
"""

import hashlib
import json
import os
import platform
import statistics
import time
from dataclasses import dataclass

import numpy as np
import scipy
from threadpoolctl import threadpool_limits

from .core import ATOMIC_UNITS, PairField, SpinorField, make_grid
from .dirac import DiracPropagatorConfig, DiracSplitOperator
from .fields import Envelope, StandingWave
from .kg import KGPropagatorConfig, KGSplitOperator

COLUMNS = ("solver", "dim", "N", "threads", "median_seconds", "steps_per_second", "points_times_steps_per_second")


@dataclass
class BenchPlan:
    solver: str = "dirac"
    dims: int = 1
    sizes: tuple = (16384, 32768, 65536, 131072)
    steps: int = 128
    repetitions: int = 5
    threads: tuple = (1,)
    stencil_order: int = 4

    def __post_init__(self):
        if self.solver not in ("dirac", "kg"):
            raise ValueError("solver must be 'dirac' or 'kg'")
        if self.dims not in (1, 2):
            raise ValueError("dims must be 1 or 2")
        self.sizes = tuple(int(n) for n in self.sizes)
        if not self.sizes or list(self.sizes) != sorted(set(self.sizes)):
            raise ValueError("sizes must be non-empty and strictly ascending")
        if self.steps < 16:
            raise ValueError("steps must be at least 16")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        self.threads = tuple(int(t) for t in np.atleast_1d(self.threads))


def bench_case(plan, n, threads=1, const=ATOMIC_UNITS):
    """Initial field and propagator config of one benchmark point.

    A Gaussian packet in a ramped standing wave, with a fixed grid spacing so
    the step cost is the only thing that changes with ``n``.
    """
    extent = 0.05 * n
    grid = make_grid(plan.dims, n, extent)
    r = grid.positions()
    width = 0.1 * extent
    env = np.exp(-np.sum(r * r, axis=0) / (2 * width**2))
    wave = np.exp(1j * 2.0 * r[0])
    envelope = Envelope(2, 4, 2 * np.pi / (const.c * 0.5))
    spec = StandingWave((0.0, 0.0, 0.5), (0.5, 0.0, 0.0), envelope)
    dt = 0.5 / const.rest_energy
    if plan.solver == "dirac":
        data = np.zeros((4,) + grid.shape, dtype=complex)
        data[0] = env * wave
        psi = SpinorField(grid, data)
        cfg = DiracPropagatorConfig(dt=dt, steps=plan.steps, spec=spec, const=const, workers=threads)
    else:
        data = np.zeros((2,) + grid.shape, dtype=complex)
        data[0] = env * wave
        psi = PairField(grid, data)
        cfg = KGPropagatorConfig(dt=dt, steps=plan.steps, spec=spec, stencil_order=plan.stencil_order, const=const)
    return psi, cfg


def make_operator(psi, cfg):
    if isinstance(psi, SpinorField):
        return DiracSplitOperator(psi.grid, cfg)
    return KGSplitOperator(psi.grid, cfg)


def step_loop(op, data, cfg):
    for j in range(cfg.steps):
        data = op.step(data, cfg.t0 + j * cfg.dt)
    return data


def _dry_allocate(plan, n):
    """Allocate and touch roughly the peak working set of one step."""
    points = n**plan.dims
    ncomp = 4 if plan.solver == "dirac" else 2
    buf = np.empty(points * ncomp * 12, dtype=complex)
    buf[:: max(1, 4096 // 16)] = 0
    del buf


def time_case(plan, n, threads=1):
    """Raw timings (seconds) of ``plan.repetitions`` step loops after one
    warm-up; also returns the final field of the last loop."""
    psi, cfg = bench_case(plan, n, threads)
    op = make_operator(psi, cfg)
    raw = []
    with threadpool_limits(limits=threads):
        out = step_loop(op, psi.data, cfg)
        for _ in range(plan.repetitions):
            t0 = time.perf_counter()
            out = step_loop(op, psi.data, cfg)
            raw.append(time.perf_counter() - t0)
    return raw, psi.with_data(out)


def run_bench(plan, log=None):
    """Timing table: one dict per (threads, N) with the CSV columns plus
    ``raw`` timings, or an ``error`` entry if the size does not fit."""
    rows = []
    for threads in plan.threads:
        for n in plan.sizes:
            row = {"solver": plan.solver, "dim": plan.dims, "N": n, "threads": threads}
            try:
                _dry_allocate(plan, n)
                raw, _ = time_case(plan, n, threads)
            except MemoryError as exc:
                row.update(error=f"allocation failed: {exc}", raw=[])
                row.update(median_seconds=np.nan, steps_per_second=np.nan, points_times_steps_per_second=np.nan)
                rows.append(row)
                if log:
                    log(f"N={n}: allocation failed")
                continue
            med = statistics.median(raw)
            rate = plan.steps / med
            row.update(median_seconds=med, steps_per_second=rate, points_times_steps_per_second=rate * n**plan.dims, raw=raw)
            rows.append(row)
            if log:
                log(f"{plan.solver} dim={plan.dims} N={n} threads={threads}: {med:.4f} s")
    return rows


def scaling_slope(rows, threads=None):
    """Least-squares slope of log(time) against log(points)."""
    sel = [r for r in rows if np.isfinite(r["median_seconds"]) and (threads is None or r["threads"] == threads)]
    if len(sel) < 2:
        raise ValueError("need at least two successful sizes")
    pts = np.array([r["N"] ** r["dim"] for r in sel], dtype=float)
    t = np.array([r["median_seconds"] for r in sel])
    return float(np.polyfit(np.log(pts), np.log(t), 1)[0])


def write_bench_csv(rows, path):
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([r["solver"], r["dim"], r["N"], r["threads"]] + [f"{r[c]:.6e}" for c in COLUMNS[4:]])


def _cpu_model():
    try:
        with open("/proc/cpuinfo") as fh:
            for line in fh:
                if line.startswith("model name"):
                    return line.split(":", 1)[1].strip()
    except OSError:
        pass
    return platform.processor() or platform.machine()


def environment_info():
    try:
        flags = {"numpy": np.show_config(mode="dicts"), "scipy": scipy.show_config(mode="dicts")}
    except TypeError:
        flags = {"numpy": np.__version__, "scipy": scipy.__version__}
    blob = json.dumps(flags, sort_keys=True, default=str).encode()
    return {
        "cpu_model": _cpu_model(),
        "core_count": os.cpu_count(),
        "build_flags_sha256": hashlib.sha256(blob).hexdigest(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
    }
