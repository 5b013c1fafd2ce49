import textwrap

import pytest

from relaqd.config import ConfigError, load_config, parse_config

KD_MIN = """
[scenario]
kind = kapitza-dirac
[laser]
E0 = 300
photon_ev = 3100
[electron]
n_r = 1
n_l = -1
theta_deg = 112
"""

DIRAC = """
[scenario]
kind = propagate-dirac
[grid]
dim = 1
n = 64
extent = 10
[initial]
kind = gaussian
center = 0, 0, 0
width = 1
p = 1, 0, 0
[propagator]
dt = 1e-4
steps = 10
"""


def _errors(text, kind=None):
    with pytest.raises(ConfigError) as exc:
        parse_config(textwrap.dedent(text), kind)
    return exc.value.errors


def test_minimal_kapitza_dirac_fills_defaults():
    cfg = parse_config(KD_MIN)
    assert cfg.kind == "kapitza-dirac"
    assert cfg["laser"]["ramp_cycles"] == 10 and cfg["laser"]["convention"] == "peak"
    assert cfg["ladder"] == {"n_min": -8, "n_max": 12, "auto_extend": True}
    assert cfg["propagator"]["method"] == "magnus4" and cfg["electron"]["tune"] is True
    assert "scan" not in cfg or cfg.get("scan") is None or "flat_max" in cfg["scan"]
    assert len(cfg.sha256) == 64


def test_typo_in_section_name_is_named():
    errs = _errors(DIRAC.replace("[grid]", "[gridd]"))
    paths = [p for p, _ in errs]
    assert "[gridd]" in paths
    assert any("did you mean [grid]" in r for _, r in errs)
    assert any(p == "[grid]" and "missing block" in r for p, r in errs)


def test_typo_in_key_is_named():
    errs = _errors(DIRAC.replace("extent = 10", "extnt = 10"))
    assert ("grid.extnt", "unknown key (did you mean 'extent'?)") in errs


def test_quantity_given_twice_conflicts():
    errs = _errors(KD_MIN.replace("E0 = 300", "E0 = 300\nE0_over_Ea = 300"))
    assert any("conflicts with laser.E0" in r for _, r in errs)


def test_unit_mismatch():
    errs = _errors(DIRAC + "[units]\nsystem = si\n")
    assert any(p == "units.system" and "unit mismatch" in r for p, r in errs)


def test_non_numeric_value():
    errs = _errors(DIRAC.replace("n = 64", "n = sixty-four"))
    assert [p for p, _ in errs] == ["grid.n"]


def test_fractions_and_duplicates():
    cfg = parse_config(DIRAC.replace("dt = 1e-4", "dt = 1/10000"))
    assert cfg["propagator"]["dt"] == pytest.approx(1e-4)
    errs = _errors(DIRAC.replace("n = 64", "n = 64\nn = 32"))
    assert errs[0][1] == "duplicate key"


def test_every_error_is_reported_at_once():
    bad = DIRAC.replace("n = 64", "n = 2").replace("dt = 1e-4", "dt = -1")
    paths = {p for p, _ in _errors(bad)}
    assert {"grid.n", "propagator.dt"} <= paths


def test_requested_kind_must_match(tmp_path):
    f = tmp_path / "a.ini"
    f.write_text(DIRAC)
    assert load_config(f).kind == "propagate-dirac"
    with pytest.raises(ConfigError):
        load_config(f, "propagate-kg")


def test_potential_sections_and_unknown_kind():
    text = DIRAC + "[potential.1]\nkind = soft-core\nZ = 1\na = 0.5\n[potential.2]\nkind = standing-wave\nE0 = 0, 0, 3\nk = 1, 0, 0\n"
    cfg = parse_config(text)
    assert [p["kind"] for p in cfg.potentials] == ["soft-core", "standing-wave"]
    errs = _errors(DIRAC + "[potential]\nkind = magnetic-bottle\n")
    assert any("unknown kind" in r for _, r in errs)


def test_bench_sizes_must_ascend():
    text = "[scenario]\nkind = bench\n[bench]\nsizes = 64, 32\n"
    assert any(p == "bench.sizes" for p, _ in _errors(text))
