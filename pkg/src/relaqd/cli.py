"""Command-line front end: ``relaqd <scenario> --config file.ini``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 physics-domain error.
"""

import argparse
import contextlib
import io
import json
import logging
import os
import platform
import sys
import time
from dataclasses import dataclass, field

import numpy as np
import scipy
from numpy.linalg import LinAlgError
from threadpoolctl import threadpool_limits

from . import __version__
from .bench import BenchPlan, environment_info, run_bench, scaling_slope, write_bench_csv
from .config import ConfigError, KINDS, load_config, parse_config
from .core import PairField, SpinorField, inner_product, make_grid, read_snapshot, write_snapshot
from .dirac import DiracPropagatorConfig, NumericalInstabilityError, dirac_norm, propagate_dirac
from .fields import EFGaugeLaser, Envelope, PotentialSum, SoftCore, StandingWave, StaticUniform, VACUUM
from .kapitza_dirac import (
    LABELS,
    CutoffOverflowError,
    KDLaser,
    NoBraggSolutionError,
    NoOscillationError,
    bragg_momentum,
    bragg_residual,
    bragg_setup,
    plane_wave_spinor,
    propagate_modes,
    rabi_period,
    rabi_scan,
    split_populations,
    tune_resonance,
)
from .kg import KGPropagatorConfig, kg_charge, kg_energy, propagate_kg
from .units import ev_to_au, momentum_au_to_kev_per_c, momentum_kev_per_c_to_au
from .wkb import (
    OverTheBarrierError,
    ScanBoundaryError,
    TunnelProblem,
    TurningPointError,
    default_pz_range,
    keldysh_parameter,
    most_probable_pz,
    wkb_map,
)

log = logging.getLogger("relaqd")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DOMAIN = 0, 2, 3, 4
NUMERIC_ERRORS = (NumericalInstabilityError, CutoffOverflowError, LinAlgError, FloatingPointError)
DOMAIN_ERRORS = (OverTheBarrierError, TurningPointError, ScanBoundaryError, NoBraggSolutionError, NoOscillationError)


class ScenarioError(RuntimeError):
    """Solver failure with the scenario it happened in."""

    def __init__(self, context, cause):
        self.context = context
        self.cause = cause
        super().__init__(f"{context}: {type(cause).__name__}: {cause}")


@dataclass
class RunResult:
    outputs: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def _fmt(v):
    return "%.12e" % v


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_jsonable)
        fh.write("\n")


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    raise TypeError(f"cannot serialize {type(v).__name__}")


def write_table(path, columns, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for r in rows:
            fh.write(",".join(v if isinstance(v, str) else _fmt(v) for v in r) + "\n")


# ---------------------------------------------------------------------------
# builders


def _field_vector(sec, const):
    if sec.get("E0") is not None:
        return np.array(sec["E0"])
    return np.array(sec["E0_over_Ea"]) * const.E_a


def _envelope(sec, period):
    ramp, flat = sec.get("ramp_cycles"), sec.get("flat_cycles")
    if ramp is None and flat is None:
        return None
    return Envelope(ramp or 0.0, np.inf if flat is None else flat, period)


def build_potential(entries, const):
    terms = []
    for e in entries:
        kind = e["kind"]
        if kind == "standing-wave":
            k = np.array(e["k"])
            terms.append(StandingWave(_field_vector(e, const), k, _envelope(e, 2 * np.pi / (const.c * np.linalg.norm(k)))))
        elif kind == "ef-laser":
            env = _envelope(e, 2 * np.pi / e["omega"])
            terms.append(EFGaugeLaser(_field_vector(e, const), e["omega"], e["k_hat"], env, e["phase"]))
        elif kind == "soft-core":
            terms.append(SoftCore(e["Z"], e["a"], e["center"]))
        elif kind == "static":
            terms.append(StaticUniform(_field_vector(e, const)))
    if not terms:
        return None
    return terms[0] if len(terms) == 1 else PotentialSum(tuple(terms))


def build_grid(sec):
    axes = sec.get("axes")
    return make_grid(sec["dim"], sec["n"], sec["extent"], tuple(axes) if axes else None)


def _amplitudes(solver, p, sec, const, stencil_order=None, grid=None):
    if solver == "dirac":
        return plane_wave_spinor(p, sec["spin"], sec["sign"], const, sec["spin_axis"]).u
    E = kg_energy(p, const, grid, stencil_order)
    eps = E / const.rest_energy
    s = sec["sign"]
    return np.array([(1 + s * eps) / 2, (1 - s * eps) / 2]) / np.sqrt(eps)


def _normalize(psi, solver):
    if solver == "dirac":
        return psi.with_data(psi.data / np.sqrt(dirac_norm(psi)))
    return psi.with_data(psi.data / np.sqrt(abs(kg_charge(psi))))


def build_initial(sec, grid, solver, const, seed=0, base_dir=".", stencil_order=4):
    """Initial field for a grid run; ``solver`` is "dirac" or "kg"."""
    kind = sec["kind"]
    cls = SpinorField if solver == "dirac" else PairField
    if kind == "file":
        path = sec["path"] if os.path.isabs(sec["path"]) else os.path.join(base_dir, sec["path"])
        psi, _ = read_snapshot(path, grid.axes)
        if not isinstance(psi, cls):
            raise ValueError(f"snapshot has {psi.ncomp} components, {solver} needs {cls(grid).ncomp}")
        if psi.grid != grid:
            raise ValueError("snapshot grid differs from [grid]")
        return psi
    r = grid.positions()
    if kind == "plane-wave":
        p = np.array(sec["p"])
        on = [("xyz").index(a) for a in grid.axes]
        grid.lattice_index(p[on], const.hbar)
        u = _amplitudes(solver, p, sec, const, stencil_order, grid)
        phase = np.exp(1j * np.tensordot(p, r, axes=1) / const.hbar)
        return _normalize(cls(grid, u.reshape((-1,) + (1,) * grid.dim) * phase[None]), solver)
    if kind == "random-packet":
        rng = np.random.default_rng(seed)
        lat = grid.momenta(const.hbar).reshape(3, -1)
        order = np.argsort(np.sum(lat**2, axis=0), kind="stable")[: sec["modes"]]
        data = np.zeros((cls(grid).ncomp,) + grid.shape, dtype=complex)
        for j in order:
            p = lat[:, j]
            amp = rng.normal() + 1j * rng.normal()
            u = _amplitudes(solver, p, sec, const, stencil_order, grid)
            data += amp * u.reshape((-1,) + (1,) * grid.dim) * np.exp(1j * np.tensordot(p, r, axes=1) / const.hbar)[None]
        return _normalize(cls(grid, data), solver)
    d = r - np.asarray(sec["center"], dtype=float).reshape((3,) + (1,) * grid.dim)
    if kind == "gaussian":
        p = np.array(sec["p"])
        env = np.exp(-np.sum(d * d, axis=0) / (4 * sec["width"] ** 2) + 1j * np.tensordot(p, r, axes=1) / const.hbar)
    else:
        p = np.zeros(3)
        env = np.exp(-sec["Z"] * np.sqrt(np.sum(d * d, axis=0) + sec["a"] ** 2))
    u = _amplitudes(solver, p, sec, const)
    return _normalize(cls(grid, u.reshape((-1,) + (1,) * grid.dim) * env[None]), solver)


# ---------------------------------------------------------------------------
# scenarios


def _run_grid(cfg, out_dir, threads, base_dir):
    solver = "dirac" if cfg.kind == "propagate-dirac" else "kg"
    const = cfg.const
    grid = build_grid(cfg["grid"])
    spec = build_potential(cfg.potentials, const)
    prop, out = cfg["propagator"], cfg["output"]
    order = prop.get("stencil_order", 4)
    psi = build_initial(cfg["initial"], grid, solver, const, cfg.seed, base_dir, order)
    common = dict(dt=prop["dt"], steps=prop["steps"], t0=prop["t0"], spec=spec, mask=prop["mask"], sample_every=out["every"], const=const)
    if solver == "dirac":
        pcfg = DiracPropagatorConfig(momentum_offset=prop["momentum_offset"], workers=threads, **common)
        final, trace = propagate_dirac(psi, pcfg)
    else:
        final, trace = propagate_kg(psi, KGPropagatorConfig(stencil_order=order, **common))
    cols = trace.columns
    if out["observables"]:
        bad = [c for c in out["observables"] if c not in cols]
        if bad:
            raise ConfigError([("output.observables", f"unknown observable(s) {', '.join(bad)}; available: {', '.join(cols)}")])
        cols = ["t"] + [c for c in out["observables"] if c != "t"]
    arr = trace.as_array()
    idx = [trace.columns.index(c) for c in cols]
    path = os.path.join(out_dir, out["csv"])
    write_table(path, cols, arr[:, idx])
    res = RunResult([out["csv"]])
    if out["snapshot"]:
        write_snapshot(os.path.join(out_dir, out["snapshot"]), final, prop["t0"] + prop["steps"] * prop["dt"])
        res.outputs.append(out["snapshot"])
    first = trace.columns[1]
    res.summary = {f"{first}_initial": float(arr[0, 1]), f"{first}_final": float(arr[-1, 1]), "samples": len(trace)}
    return res


def build_kd_laser(sec, const):
    if sec["intensity_w_cm2"] is not None:
        return KDLaser.from_intensity(
            sec["intensity_w_cm2"],
            sec["photon_ev"],
            sec["polarization"],
            sec["direction"],
            sec["ramp_cycles"],
            sec["flat_cycles"],
            sec["convention"],
            const,
        )
    E0 = sec["E0"] if sec["E0"] is not None else sec["E0_over_Ea"] * const.E_a
    omega = ev_to_au(sec["photon_ev"]) / const.hbar
    d = np.asarray(sec["direction"], dtype=float)
    e = np.asarray(sec["polarization"], dtype=float)
    env = Envelope(sec["ramp_cycles"], sec["flat_cycles"], 2 * np.pi / omega)
    return KDLaser(E0 * e / np.linalg.norm(e), omega / const.c * d / np.linalg.norm(d), env, const)


def kd_setup(cfg):
    """Laser, tuned mode basis and a description of the electron."""
    const = cfg.const
    laser = build_kd_laser(cfg["laser"], const)
    el, lad, prop = cfg["electron"], cfg["ladder"], cfg["propagator"]
    n_r, n_l = el["n_r"], el["n_l"]
    theta = np.radians(el["theta_deg"])
    lam = 2 * np.pi / laser.kappa
    if el["p_au"] is not None:
        p0 = el["p_au"]
    elif el["p_kev"] is not None:
        p0 = momentum_kev_per_c_to_au(el["p_kev"], const.c)
    else:
        p0 = bragg_momentum(n_r, n_l, theta, lam, const)

    def make_basis(p_mag):
        return bragg_setup(laser, n_r, n_l, theta, lad["n_min"], lad["n_max"], el["spin_axis"], p_mag, const)

    info = {"p_start_au": float(p0), "tuned": bool(el["tune"])}
    p_mag = p0
    if el["tune"]:
        p_mag, probe = tune_resonance(make_basis, laser, n_r - n_l, p0, prop["substeps"], el["tune_tol"])
        info.update(delta=probe["delta"], Omega=probe["Omega"])
        log.info("tuned |p| %.6f -> %.6f a.u.", p0, p_mag)
    info.update(p_au=float(p_mag), p_kev_per_c=float(momentum_au_to_kev_per_c(p_mag, const.c)))
    return laser, make_basis(p_mag), info


def _track_columns(basis, track):
    cols, picks = [], []
    for n in track:
        if not basis.n_min <= n <= basis.n_max:
            raise ConfigError([("output.track", f"n={n} outside the ladder [{basis.n_min}, {basis.n_max}]")])
        for g, lab in enumerate(LABELS):
            cols.append(f"n{n}_{lab}")
            picks.append((n - basis.n_min, g))
        cols.append(f"n{n}_total")
        picks.append((n - basis.n_min, None))
    return cols, picks


def _tracked(pops, basis, picks):
    tot, per = split_populations(pops, basis)
    return np.stack([tot[..., s] if g is None else per[..., s, g] for s, g in picks], axis=-1)


def _with_ladder_growth(fn, basis, auto, tries=3):
    for attempt in range(tries + 1):
        try:
            return fn(basis)
        except CutoffOverflowError:
            if not auto or attempt == tries:
                raise
            basis = basis.extended(4)
            log.info("ladder overflow; widening to [%d, %d]", basis.n_min, basis.n_max)


def _run_kd(cfg, out_dir, action):
    if action not in ("evolve", "scan"):
        raise ConfigError([("<command line>", "kapitza-dirac needs an action: evolve or scan")])
    if action == "scan" and "scan" not in cfg:
        raise ConfigError([("[scan]", "missing block required by kapitza-dirac scan")])
    laser, basis, info = kd_setup(cfg)
    el, lad, prop, out = cfg["electron"], cfg["ladder"], cfg["propagator"], cfg["output"]
    n_target = el["n_r"] - el["n_l"]
    track = out["track"] if out["track"] is not None else (0, n_target)
    substeps = prop["substeps"]
    csv_name = out["csv"] or f"kd_{action}.csv"
    summary_name = out["summary"] or f"kd_{action}.json"
    T_L = laser.T_L

    if action == "evolve":
        every = out["every"] or substeps

        def run(b):
            return b, propagate_modes(
                b, laser, T_L / substeps, every, b.initial_state(el["initial"]), prop["method"], prop["cutoff_tol"]
            )

        basis, traj = _with_ladder_growth(run, basis, lad["auto_extend"])
        cols, picks = _track_columns(basis, track)
        vals = _tracked(traj.populations(), basis, picks)
        rows = np.column_stack([traj.times, traj.times / T_L, vals])
        write_table(os.path.join(out_dir, csv_name), ["t", "t_over_TL"] + cols, rows)
        tot, _ = split_populations(traj.populations()[-1], basis)
        info.update(final_norm=float(tot.sum()), final_target=float(tot[n_target - basis.n_min]))
    else:
        sc = cfg["scan"]
        flat = np.arange(sc["flat_min"], sc["flat_max"] + 1, sc["flat_step"])

        def run(b):
            return (b,) + rabi_scan(b, laser, flat, substeps, el["initial"], prop["cutoff_tol"])

        basis, T, pops = _with_ladder_growth(run, basis, lad["auto_extend"])
        cols, picks = _track_columns(basis, track)
        vals = _tracked(pops, basis, picks)
        write_table(os.path.join(out_dir, csv_name), ["flat_cycles", "T", "T_over_TL"] + cols, np.column_stack([flat, T, T / T_L, vals]))
        tot, per = split_populations(pops, basis)
        target = tot[:, n_target - basis.n_min]
        j = int(np.argmax(target))
        info.update(peak_transfer=float(target[j]), peak_T_over_TL=float(T[j] / T_L))
        info["peak_spin"] = {lab: float(per[j, n_target - basis.n_min, g]) for g, lab in enumerate(LABELS)}
        try:
            TR = rabi_period(T, target)
            info.update(T_R=float(TR), T_R_over_TL=float(TR / T_L))
        except NoOscillationError as exc:
            info.update(T_R=None, T_R_over_TL=None, note=str(exc))
    info.update(ladder=[basis.n_min, basis.n_max], n_target=n_target, T_L=float(T_L), substeps=substeps)
    write_json(os.path.join(out_dir, summary_name), info)
    return RunResult([csv_name, summary_name], info)


def build_tunnel_problem(sec, const):
    I_p = sec["I_p"] if sec["I_p"] is not None else sec["ip_over_mc2"] * const.rest_energy
    E0 = sec["E0"] if sec["E0"] is not None else sec["E0_over_Ea"] * const.E_a
    if sec["potential"] == "none":
        if sec["Z"] is not None or sec["a"] is not None:
            raise ConfigError([("problem.Z", "soft-core parameters given with potential = none")])
        V = None
    elif sec["Z"] is not None or sec["a"] is not None:
        if sec["Z"] is None or sec["a"] is None:
            raise ConfigError([("problem.a" if sec["a"] is None else "problem.Z", "give both Z and a, or neither")])
        V = SoftCore(sec["Z"], sec["a"])
    else:
        V = "default"
    return TunnelProblem(I_p, E0, V, const, sec["omega"])


def _run_wkb(cfg, out_dir):
    prob = build_tunnel_problem(cfg["problem"], cfg.const)
    if cfg.kind == "wkb-map":
        m, out = cfg["map"], cfg["output"]
        lo, hi = default_pz_range(prob)
        lo = lo if m["pz_min"] is None else m["pz_min"]
        hi = hi if m["pz_max"] is None else m["pz_max"]
        res = wkb_map(prob, np.linspace(lo, hi, m["pz_points"]), np.array(m["py"]), m["nodes"])
        rows = [[py, pz, g, rp, str(fl)] for py, pz, g, rp, fl in res.rows()]
        write_table(os.path.join(out_dir, out["csv"]), ["p_y", "p_z", "Gamma", "rel_prob", "flag"], rows)
        ok = np.isfinite(res.rel_prob[0])
        j = int(np.nanargmax(np.where(ok, res.rel_prob[0], -1.0)))
        return RunResult([out["csv"]], {"p_z_at_max": float(res.p_z[j]), "flagged": int(np.count_nonzero(res.flag))})
    pk, out = cfg["peak"], cfg["output"]
    rng = None
    if pk["pz_min"] is not None or pk["pz_max"] is not None:
        lo, hi = default_pz_range(prob)
        rng = (lo if pk["pz_min"] is None else pk["pz_min"], hi if pk["pz_max"] is None else pk["pz_max"])
    r = most_probable_pz(prob, rng, pk["coarse"], pk["tol"])
    body = {
        "p_z_star": r.p_z_star,
        "p_kin_entry": r.p_kin_entry,
        "p_kin_exit": r.p_kin_exit,
        "gamma_at_peak": r.gamma_at_peak,
        "keldysh": float(keldysh_parameter(prob)),
        "x_entry": r.x_i,
        "x_exit": r.x_e,
        "I_p": prob.I_p,
        "E0": prob.E0,
    }
    write_json(os.path.join(out_dir, out["json"]), body)
    return RunResult([out["json"]], body)


def _run_bragg(cfg, out_dir):
    b, const = cfg["bragg"], cfg.const
    lam = 2 * np.pi * const.c / (ev_to_au(b["photon_ev"]) / const.hbar)
    theta = np.radians(b["theta_deg"])
    p = bragg_momentum(b["n_r"], b["n_l"], theta, lam, const)
    body = {
        "n_r": b["n_r"],
        "n_l": b["n_l"],
        "photon_ev": b["photon_ev"],
        "theta_deg": b["theta_deg"],
        "wavelength_au": lam,
        "p_au": p,
        "p_kev_per_c": momentum_au_to_kev_per_c(p, const.c),
        "residual": bragg_residual(b["n_r"], b["n_l"], theta, p, lam, const),
    }
    name = cfg["output"]["json"]
    write_json(os.path.join(out_dir, name), body)
    print(f"p = {p:.10g} a.u. = {body['p_kev_per_c']:.6f} keV/c (residual {body['residual']:.2e})")
    return RunResult([name], body)


def _run_bench(cfg, out_dir, threads):
    b, out = cfg["bench"], cfg["output"]
    plan = BenchPlan(b["solver"], b["dims"], b["sizes"], b["steps"], b["repetitions"], (threads,) if threads else b["threads"], b["stencil_order"])
    rows = run_bench(plan, log=log.info)
    write_bench_csv(rows, os.path.join(out_dir, out["csv"]))
    with contextlib.redirect_stdout(io.StringIO()):
        env = environment_info()
    write_json(os.path.join(out_dir, out["environment"]), env)
    summary = {"errors": {str(r["N"]): r["error"] for r in rows if "error" in r}}
    for t in plan.threads:
        try:
            summary[f"slope_threads_{t}"] = scaling_slope(rows, t)
        except ValueError:
            summary[f"slope_threads_{t}"] = None
    return RunResult([out["csv"], out["environment"]], summary)


def run_scenario(cfg, out_dir=".", threads=None, action=None, base_dir="."):
    """Run a parsed scenario, write its outputs and a ``manifest.json``.

    Solver exceptions are re-raised as :class:`ScenarioError` carrying the
    scenario name; configuration problems found late stay ConfigError.
    """
    os.makedirs(out_dir, exist_ok=True)
    start = time.perf_counter()
    context = cfg.kind + (f" {action}" if action else "")
    try:
        with threadpool_limits(limits=threads) if threads else contextlib.nullcontext():
            if cfg.kind in ("propagate-dirac", "propagate-kg"):
                res = _run_grid(cfg, out_dir, threads, base_dir)
            elif cfg.kind == "kapitza-dirac":
                res = _run_kd(cfg, out_dir, action)
            elif cfg.kind in ("wkb-map", "wkb-peak"):
                res = _run_wkb(cfg, out_dir)
            elif cfg.kind == "bragg":
                res = _run_bragg(cfg, out_dir)
            else:
                res = _run_bench(cfg, out_dir, threads)
    except ConfigError:
        raise
    except Exception as exc:
        raise ScenarioError(context, exc) from exc
    manifest = {
        "scenario": cfg.kind,
        "action": action,
        "config_sha256": cfg.sha256,
        "seed": cfg.seed,
        "threads": threads,
        "versions": {
            "relaqd": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "outputs": res.outputs,
        "summary": res.summary,
        "wall_time_s": time.perf_counter() - start,
    }
    write_json(os.path.join(out_dir, "manifest.json"), manifest)
    return res


# ---------------------------------------------------------------------------
# argument handling


def exit_code_for(exc):
    cause = exc.cause if isinstance(exc, ScenarioError) else exc
    if isinstance(cause, ConfigError):
        return EXIT_CONFIG
    if isinstance(cause, NUMERIC_ERRORS):
        return EXIT_NUMERIC
    if isinstance(cause, DOMAIN_ERRORS):
        return EXIT_DOMAIN
    if isinstance(cause, (ValueError, TypeError, OSError)):
        return EXIT_CONFIG
    return EXIT_NUMERIC


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario INI file")
    common.add_argument("--out-dir", default=".", help="directory for outputs (created if needed)")
    common.add_argument("--threads", type=int, default=None, help="thread count for FFT and BLAS")
    common.add_argument("--verbose", "-v", action="store_true")

    ap = argparse.ArgumentParser(prog="relaqd", description="Relativistic quantum dynamics scenarios.")
    ap.add_argument("--version", action="version", version=f"relaqd {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("propagate-dirac", "propagate-kg", "wkb-map", "wkb-peak", "bench"):
        sub.add_parser(name, parents=[common])
    kd = sub.add_parser("kapitza-dirac", parents=[common])
    kd.add_argument("action", choices=("evolve", "scan"))
    br = sub.add_parser("bragg", parents=[common], help="solve the Bragg condition for |p|")
    br.add_argument("--nr", type=int)
    br.add_argument("--nl", type=int)
    br.add_argument("--photon-ev", type=float)
    br.add_argument("--theta-deg", type=float)
    return ap


def _bragg_text(args):
    vals = {"n_r": args.nr, "n_l": args.nl, "photon_ev": args.photon_ev, "theta_deg": args.theta_deg}
    missing = [k for k, v in vals.items() if v is None]
    if missing:
        raise ConfigError([(f"--{k.replace('_', '-')}", "required without --config") for k in missing])
    return "[bragg]\n" + "".join(f"{k} = {v!r}\n" for k, v in vals.items())


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    kind = args.command
    action = getattr(args, "action", None)
    try:
        if args.threads is not None and args.threads < 1:
            raise ConfigError([("--threads", "must be at least 1")])
        if kind == "bragg" and args.config is None:
            cfg, base = parse_config(_bragg_text(args), kind), "."
        else:
            if args.config is None:
                raise ConfigError([("--config", f"required for {kind}")])
            if kind == "bragg" and any(v is not None for v in (args.nr, args.nl, args.photon_ev, args.theta_deg)):
                raise ConfigError([("--config", "give either --config or the --nr/--nl/--photon-ev/--theta-deg flags")])
            try:
                cfg = load_config(args.config, kind)
            except OSError as exc:
                raise ConfigError([("--config", str(exc))]) from None
            base = os.path.dirname(os.path.abspath(args.config))
        res = run_scenario(cfg, args.out_dir, args.threads, action, base)
    except ConfigError as exc:
        print("relaqd: configuration error", file=sys.stderr)
        for path, reason in exc.errors:
            print(f"  {path}: {reason}", file=sys.stderr)
        return EXIT_CONFIG
    except ScenarioError as exc:
        print(f"relaqd: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    log.info("wrote %s", ", ".join(res.outputs))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
