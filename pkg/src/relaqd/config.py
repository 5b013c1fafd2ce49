"""Strict INI scenario files.

Grammar: ``[section]`` headers followed by ``key = value`` lines; ``#`` and
``;`` start comments. Values are numbers (``1e23``, ``-0.5``, ``1/30``),
comma-separated vectors, booleans (true/false/yes/no/1/0) or bare words.
Potential terms live in ``[potential]``, ``[potential.2]``, ... each with a
``kind`` key. Every key must be known for the scenario kind; anything else is
reported with its ``section.key`` path.
"""

import configparser
import hashlib
import re
from dataclasses import dataclass, field
from fractions import Fraction

from .core import PhysicalConstants
from .kapitza_dirac import LABELS
from .units import C_AU

KINDS = ("propagate-dirac", "propagate-kg", "kapitza-dirac", "wkb-map", "wkb-peak", "bragg", "bench")
REQUIRED = object()


class ConfigError(ValueError):
    """Carries every problem found, as (path, reason) pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(f"{p}: {r}" for p, r in self.errors))


@dataclass(frozen=True)
class Key:
    kind: str
    default: object = None
    choices: tuple = None


def _num(text):
    try:
        return float(text)
    except ValueError:
        return float(Fraction(text.replace(" ", "")))


def _convert(key, raw):
    raw = raw.strip()
    if key.kind == "float":
        return _num(raw)
    if key.kind == "int":
        v = _num(raw)
        if v != int(v):
            raise ValueError("not an integer")
        return int(v)
    if key.kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError("not a boolean")
    if key.kind in ("vec3", "floats", "ints"):
        parts = [s for s in re.split(r"[,\s]+", raw) if s]
        if not parts:
            raise ValueError("empty list")
        vals = [_num(s) for s in parts]
        if key.kind == "ints":
            if any(v != int(v) for v in vals):
                raise ValueError("not a list of integers")
            vals = [int(v) for v in vals]
        if key.kind == "vec3" and len(vals) != 3:
            raise ValueError(f"expected 3 components, got {len(vals)}")
        return tuple(vals)
    if key.kind == "words":
        return tuple(s for s in re.split(r"[,\s]+", raw) if s)
    if key.kind == "str":
        if key.choices is not None and raw not in key.choices:
            raise ValueError(f"expected one of {', '.join(key.choices)}")
        return raw
    raise AssertionError(key.kind)


def _describe_error(key, raw, exc):
    if key.kind in ("float", "int", "vec3", "floats", "ints"):
        return f"non-numeric or malformed value {raw.strip()!r} ({exc})"
    return f"invalid value {raw.strip()!r} ({exc})"


# ---------------------------------------------------------------------------
# schemas

_SCENARIO = {"kind": Key("str", None, KINDS), "seed": Key("int", 0)}
_UNITS = {
    "system": Key("str", "atomic"),
    "c": Key("float", C_AU),
    "hbar": Key("float", 1.0),
    "m": Key("float", 1.0),
    "q": Key("float", -1.0),
}
_GRID = {
    "dim": Key("int", REQUIRED),
    "n": Key("int", REQUIRED),
    "extent": Key("float", REQUIRED),
    "axes": Key("words", None),
}
_ENVELOPE = {"ramp_cycles": Key("float", None), "flat_cycles": Key("float", None)}
_FIELD_E0 = {"E0": Key("vec3", None), "E0_over_Ea": Key("vec3", None)}
_POTENTIAL_KINDS = {
    "standing-wave": {**_FIELD_E0, "k": Key("vec3", REQUIRED), **_ENVELOPE},
    "ef-laser": {
        **_FIELD_E0,
        "omega": Key("float", REQUIRED),
        "k_hat": Key("vec3", (1.0, 0.0, 0.0)),
        "phase": Key("float", 0.0),
        **_ENVELOPE,
    },
    "soft-core": {"Z": Key("float", REQUIRED), "a": Key("float", REQUIRED), "center": Key("vec3", (0.0, 0.0, 0.0))},
    "static": dict(_FIELD_E0),
    "vacuum": {},
}
_SPIN = {
    "spin": Key("str", "up", ("up", "down")),
    "sign": Key("int", 1),
    "spin_axis": Key("vec3", (0.0, 0.0, 1.0)),
}
_INITIAL_KINDS = {
    "plane-wave": {"p": Key("vec3", REQUIRED), **_SPIN},
    "gaussian": {
        "center": Key("vec3", (0.0, 0.0, 0.0)),
        "width": Key("float", REQUIRED),
        "p": Key("vec3", (0.0, 0.0, 0.0)),
        **_SPIN,
    },
    "bound-surrogate": {"Z": Key("float", 1.0), "a": Key("float", 0.5), "center": Key("vec3", (0.0, 0.0, 0.0)), **_SPIN},
    "random-packet": {"modes": Key("int", 8), **_SPIN},
    "file": {"path": Key("str", REQUIRED)},
}
_PROPAGATOR_GRID = {
    "dt": Key("float", REQUIRED),
    "steps": Key("int", REQUIRED),
    "t0": Key("float", 0.0),
    "mask": Key("bool", False),
}
_OUTPUT_GRID = {
    "csv": Key("str", "observables.csv"),
    "snapshot": Key("str", None),
    "every": Key("int", 1),
    "observables": Key("words", None),
}

SCHEMAS = {
    "propagate-dirac": {
        "grid": (_GRID, True),
        "initial": (None, True),
        "propagator": ({**_PROPAGATOR_GRID, "momentum_offset": Key("vec3", None)}, True),
        "output": (_OUTPUT_GRID, False),
    },
    "propagate-kg": {
        "grid": (_GRID, True),
        "initial": (None, True),
        "propagator": ({**_PROPAGATOR_GRID, "stencil_order": Key("int", 4, None)}, True),
        "output": (_OUTPUT_GRID, False),
    },
    "kapitza-dirac": {
        "laser": (
            {
                "intensity_w_cm2": Key("float", None),
                "E0": Key("float", None),
                "E0_over_Ea": Key("float", None),
                "convention": Key("str", "peak", ("peak", "cycle-averaged")),
                "photon_ev": Key("float", REQUIRED),
                "polarization": Key("vec3", (0.0, 0.0, 1.0)),
                "direction": Key("vec3", (1.0, 0.0, 0.0)),
                "ramp_cycles": Key("int", 10),
                "flat_cycles": Key("int", 0),
            },
            True,
        ),
        "electron": (
            {
                "n_r": Key("int", REQUIRED),
                "n_l": Key("int", REQUIRED),
                "theta_deg": Key("float", REQUIRED),
                "p_au": Key("float", None),
                "p_kev": Key("float", None),
                "tune": Key("bool", True),
                "tune_tol": Key("float", 0.02),
                "spin_axis": Key("vec3", None),
                "initial": Key("str", "up+", LABELS),
            },
            True,
        ),
        "ladder": ({"n_min": Key("int", -8), "n_max": Key("int", 12), "auto_extend": Key("bool", True)}, False),
        "propagator": (
            {
                "substeps": Key("int", 512),
                "method": Key("str", "magnus4", ("magnus4", "cn")),
                "cutoff_tol": Key("float", 1e-8),
            },
            False,
        ),
        "scan": ({"flat_min": Key("int", 0), "flat_max": Key("int", REQUIRED), "flat_step": Key("int", 1)}, False),
        "output": (
            {
                "csv": Key("str", None),
                "summary": Key("str", None),
                "every": Key("int", None),
                "track": Key("ints", None),
            },
            False,
        ),
    },
    "wkb-map": {
        "problem": (None, True),
        "map": (
            {
                "pz_min": Key("float", None),
                "pz_max": Key("float", None),
                "pz_points": Key("int", 201),
                "py": Key("floats", (0.0,)),
                "nodes": Key("int", None),
            },
            False,
        ),
        "output": ({"csv": Key("str", "wkb_map.csv")}, False),
    },
    "wkb-peak": {
        "problem": (None, True),
        "peak": (
            {"pz_min": Key("float", None), "pz_max": Key("float", None), "coarse": Key("int", 41), "tol": Key("float", 1e-6)},
            False,
        ),
        "output": ({"json": Key("str", "wkb_peak.json")}, False),
    },
    "bragg": {
        "bragg": (
            {
                "n_r": Key("int", REQUIRED),
                "n_l": Key("int", REQUIRED),
                "photon_ev": Key("float", REQUIRED),
                "theta_deg": Key("float", REQUIRED),
            },
            True,
        ),
        "output": ({"json": Key("str", "bragg.json")}, False),
    },
    "bench": {
        "bench": (
            {
                "solver": Key("str", "dirac", ("dirac", "kg")),
                "dims": Key("int", 1),
                "sizes": Key("ints", REQUIRED),
                "steps": Key("int", 128),
                "repetitions": Key("int", 5),
                "threads": Key("ints", (1,)),
                "stencil_order": Key("int", 4),
            },
            True,
        ),
        "output": ({"csv": Key("str", "bench.csv"), "environment": Key("str", "environment.json")}, False),
    },
}
_PROBLEM = {
    "I_p": Key("float", None),
    "ip_over_mc2": Key("float", None),
    "E0": Key("float", None),
    "E0_over_Ea": Key("float", None),
    "omega": Key("float", 0.0),
    "potential": Key("str", "soft-core", ("soft-core", "none")),
    "Z": Key("float", None),
    "a": Key("float", None),
}
_EXCLUSIVE = {
    "potential": [("E0", "E0_over_Ea")],
    "laser": [("intensity_w_cm2", "E0", "E0_over_Ea")],
    "electron": [("p_au", "p_kev")],
    "problem": [("I_p", "ip_over_mc2"), ("E0", "E0_over_Ea")],
}
_NEEDS_ONE = {
    ("potential", "standing-wave"): [("E0", "E0_over_Ea")],
    ("potential", "ef-laser"): [("E0", "E0_over_Ea")],
    ("potential", "static"): [("E0", "E0_over_Ea")],
    ("laser", None): [("intensity_w_cm2", "E0", "E0_over_Ea")],
    ("problem", None): [("I_p", "ip_over_mc2"), ("E0", "E0_over_Ea")],
}


@dataclass
class ScenarioConfig:
    """Validated scenario: typed sections with defaults filled in.

    ``potentials`` is the ordered list of potential-term dicts (each with its
    ``kind``); ``sha256`` hashes the source text.
    """

    kind: str
    seed: int = 0
    const: PhysicalConstants = field(default_factory=PhysicalConstants)
    sections: dict = field(default_factory=dict)
    potentials: list = field(default_factory=list)
    sha256: str = ""
    text: str = ""

    def __getitem__(self, name):
        return self.sections[name]

    def get(self, name, default=None):
        return self.sections.get(name, default)

    def __contains__(self, name):
        return name in self.sections


def _read_ini(text):
    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#", ";"), strict=True, default_section="\0"
    )
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.DuplicateSectionError as exc:
        raise ConfigError([(f"[{exc.section}]", "duplicate section")]) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError([(f"{exc.section}.{exc.option}", "duplicate key")]) from None
    except configparser.Error as exc:
        raise ConfigError([("<file>", f"syntax error: {exc.message.splitlines()[0]}")]) from None
    return {s: dict(parser.items(s)) for s in parser.sections()}


def _parse_section(name, raw, schema, errors, subkind=None):
    out = {}
    for k, v in raw.items():
        path = f"{name}.{k}"
        if k not in schema:
            hint = _closest(k, schema)
            errors.append((path, "unknown key" + (f" (did you mean {hint!r}?)" if hint else "")))
            continue
        try:
            out[k] = _convert(schema[k], v)
        except (ValueError, ZeroDivisionError) as exc:
            errors.append((path, _describe_error(schema[k], v, exc)))
    for k, key in schema.items():
        if k in out:
            continue
        if key.default is REQUIRED:
            if k not in raw:
                errors.append((f"{name}.{k}", "missing required key"))
        else:
            out[k] = key.default
    base = name.split(".")[0]
    for group in _EXCLUSIVE.get(base, []):
        given = [g for g in group if g in raw]
        if len(given) > 1:
            errors.append((f"{name}.{given[1]}", f"conflicts with {name}.{given[0]}: give the quantity in one unit only"))
    for group in _NEEDS_ONE.get((base, subkind), []):
        if not any(g in raw for g in group):
            errors.append((f"{name}.{group[0]}", f"missing; give one of {', '.join(group)}"))
    return out


def _closest(word, names):
    import difflib

    hits = difflib.get_close_matches(word, list(names), n=1, cutoff=0.6)
    return hits[0] if hits else None


def _split_kind(name, raw, kinds, errors):
    kind = raw.get("kind")
    if kind is None:
        errors.append((f"{name}.kind", "missing required key"))
        return None, None
    kind = kind.strip()
    if kind not in kinds:
        errors.append((f"{name}.kind", f"unknown kind {kind!r}; expected one of {', '.join(kinds)}"))
        return None, None
    rest = {k: v for k, v in raw.items() if k != "kind"}
    return kind, rest


def _potential_order(name):
    if name == "potential":
        return 1
    m = re.fullmatch(r"potential\.(\d+)", name)
    return int(m.group(1)) if m else None


def parse_config(text, kind=None):
    """Parse and validate scenario text.

    ``kind`` (e.g. from the command line) is used when the file has no
    ``[scenario] kind`` and must agree with it otherwise. Raises
    :class:`ConfigError` listing every problem.
    """
    raw = _read_ini(text)
    errors = []
    scen = _parse_section("scenario", raw.get("scenario", {}), _SCENARIO, errors)
    file_kind = scen.get("kind")
    if kind is not None and kind not in KINDS:
        raise ConfigError([("<command line>", f"unknown scenario kind {kind!r}")])
    if file_kind and kind and file_kind != kind:
        errors.append(("scenario.kind", f"file declares {file_kind!r} but {kind!r} was requested"))
    kind = kind or file_kind
    if kind is None:
        errors.append(("scenario.kind", "missing required key"))
        raise ConfigError(errors)

    units = _parse_section("units", raw.get("units", {}), _UNITS, errors)
    const = None
    if units.get("system") not in (None, "atomic"):
        errors.append(("units.system", f"unit mismatch: only 'atomic' is supported, got {units['system']!r}"))
    else:
        try:
            const = PhysicalConstants(hbar=units["hbar"], m=units["m"], q=units["q"], c=units["c"])
        except (ValueError, KeyError) as exc:
            errors.append(("units", str(exc)))

    schema = SCHEMAS[kind]
    sections, potentials = {}, []
    pot_names = []
    for name in raw:
        if name in ("scenario", "units"):
            continue
        order = _potential_order(name)
        if order is not None and kind in ("propagate-dirac", "propagate-kg"):
            pot_names.append((order, name))
            continue
        if name not in schema:
            hint = _closest(name, list(schema) + ["scenario", "units"])
            errors.append((f"[{name}]", f"unknown section for {kind}" + (f" (did you mean [{hint}]?)" if hint else "")))
            continue
        keys, _ = schema[name]
        if keys is None:
            if name == "initial":
                sub, rest = _split_kind(name, raw[name], _INITIAL_KINDS, errors)
                if sub is not None:
                    sections[name] = {"kind": sub, **_parse_section(name, rest, _INITIAL_KINDS[sub], errors, sub)}
            elif name == "problem":
                sections[name] = _parse_section(name, raw[name], _PROBLEM, errors)
            continue
        sections[name] = _parse_section(name, raw[name], keys, errors)

    for name, (keys, required) in schema.items():
        if name in raw:
            continue
        if required:
            errors.append((f"[{name}]", f"missing block required by {kind}"))
        elif keys is not None and not any(k.default is REQUIRED for k in keys.values()):
            sections[name] = _parse_section(name, {}, keys, errors)

    seen = set()
    for order, name in sorted(pot_names):
        if order in seen:
            errors.append((f"[{name}]", "duplicate potential index"))
            continue
        seen.add(order)
        sub, rest = _split_kind(name, raw[name], _POTENTIAL_KINDS, errors)
        if sub is not None:
            potentials.append({"kind": sub, "section": name, **_parse_section(name, rest, _POTENTIAL_KINDS[sub], errors, sub)})

    if not errors:
        # value checks need every key present and well-typed
        _cross_checks(kind, sections, errors, potentials)
    if errors:
        raise ConfigError(errors)
    return ScenarioConfig(
        kind=kind,
        seed=scen["seed"],
        const=const,
        sections=sections,
        potentials=potentials,
        sha256=hashlib.sha256(text.encode("utf-8")).hexdigest(),
        text=text,
    )


def _cross_checks(kind, s, errors, potentials=()):
    for pot in potentials:
        name = pot["section"]
        if pot.get("ramp_cycles") is not None and not pot["ramp_cycles"] > 0:
            errors.append((f"{name}.ramp_cycles", "must be positive"))
        if pot.get("flat_cycles") is not None and pot["flat_cycles"] < 0:
            errors.append((f"{name}.flat_cycles", "must be non-negative"))
        if pot.get("flat_cycles") is not None and pot.get("ramp_cycles") is None:
            errors.append((f"{name}.ramp_cycles", "required when flat_cycles is given"))
    g = s.get("grid")
    if g:
        if g["dim"] not in (1, 2):
            errors.append(("grid.dim", "must be 1 or 2"))
        elif g.get("axes") is not None and len(g["axes"]) != g["dim"]:
            errors.append(("grid.axes", f"needs {g['dim']} axis names"))
        if g["n"] < 4:
            errors.append(("grid.n", "must be at least 4"))
        if not g["extent"] > 0:
            errors.append(("grid.extent", "must be positive"))
    p = s.get("propagator")
    if p and kind in ("propagate-dirac", "propagate-kg"):
        if not p["dt"] > 0:
            errors.append(("propagator.dt", "must be positive"))
        if p["steps"] < 0:
            errors.append(("propagator.steps", "must be non-negative"))
        if kind == "propagate-kg" and p["stencil_order"] not in (2, 4):
            errors.append(("propagator.stencil_order", "must be 2 or 4"))
    init = s.get("initial")
    if init and "sign" in init and init["sign"] not in (1, -1):
        errors.append(("initial.sign", "must be +1 or -1"))
    out = s.get("output")
    if out and out.get("every") is not None and out["every"] < 1:
        errors.append(("output.every", "must be >= 1"))
    lad = s.get("ladder")
    if lad and kind == "kapitza-dirac" and not lad["n_min"] < 0 < lad["n_max"]:
        errors.append(("ladder", "n_min < 0 < n_max required"))
    sc = s.get("scan")
    if sc and sc.get("flat_max") is not None:
        if sc["flat_min"] < 0 or sc["flat_max"] < sc["flat_min"] or sc["flat_step"] < 1:
            errors.append(("scan", "need 0 <= flat_min <= flat_max and flat_step >= 1"))
    b = s.get("bench")
    if b:
        sizes = list(b["sizes"])
        if sizes != sorted(sizes) or len(set(sizes)) != len(sizes):
            errors.append(("bench.sizes", "must be strictly ascending"))
        if b["steps"] < 16:
            errors.append(("bench.steps", "must be at least 16"))
        if b["repetitions"] < 1:
            errors.append(("bench.repetitions", "must be at least 1"))
        if b["dims"] not in (1, 2):
            errors.append(("bench.dims", "must be 1 or 2"))


def load_config(path, kind=None):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), kind)
