import math

import pytest

from nldiv.config import (ConfigDominationError, RangeError, UnknownKeyError, load_config,
                          parse_config)
from nldiv.errors import ConfigError

MINIMAL = """\
schema = 1
experiment = "solve"
n = 1
"""


def test_minimal_solve_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.experiment == "solve" and cfg.n == 1 and cfg.N == 128 and cfg.s == 0.5
    assert math.isinf(cfg.rho) and cfg.field.name == "identity"
    assert (cfg.data.a, cfg.data.f, cfg.data.Q, cfg.data.h) == (1.0, 0.4, 0.4, "identity")
    assert cfg.s_grid == () and not cfg.deterministic


def test_s_out_of_range_names_key_and_line():
    with pytest.raises(RangeError) as exc:
        parse_config("s = 1.0\n")
    assert exc.value.key == "s" and exc.value.line == 1


def test_domination_error():
    text = "experiment = \"solve\"\n[data]\na = 1.0\nf = 0.6\nQ = 0.4\n"
    with pytest.raises(ConfigDominationError) as exc:
        parse_config(text)
    assert exc.value.key == "data.f" and exc.value.line == 4
    # the same data is accepted in linear mode and for experiments that never solve
    parse_config(text.replace("Q = 0.4", "Q = 0.4\nlinear = true"))
    parse_config(text.replace("solve", "constants"))


@pytest.mark.parametrize("text,key", [
    ("foo = 1\n", "foo"),
    ("[field]\nnmae = \"identity\"\n", "field.nmae"),
    ("[data]\nalpha = 1\n", "data.alpha"),
    ("[tolerances]\ntol_nope = 1e-3\n", "tolerances.tol_nope"),
])
def test_unknown_keys(text, key):
    with pytest.raises(UnknownKeyError) as exc:
        parse_config(text)
    assert exc.value.key == key


@pytest.mark.parametrize("text", [
    "n = 4\n", "N = 1\n", "schema = 2\n", "experiment = \"plot\"\n", "rho = 0.0\n",
    "s_grid = [0.5, 1.2]\n", "[data]\nh = \"quartic\"\n",
    "[data]\nh = \"atan\"\nQ = 2.0\n", "[field]\nmatrix = [[1.0, 2.0], [2.0, 1.0]]\nn = 2\n",
    "n = 2\n[field]\nmatrix = [[1.0, 2.0], [2.0, 1.0]]\n",
    "domain = [1.0, -1.0]\n", "[tolerances]\ntol_asm = -1.0\n",
])
def test_range_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_syntax_error_reports_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("n = 1\ns = \n")
    assert exc.value.line == 2


def test_overrides_and_hash():
    a = parse_config(MINIMAL, {"s": 0.3})
    b = parse_config(MINIMAL, {"s": 0.3, "deterministic": True})
    c = parse_config(MINIMAL, {"s": 0.4})
    assert a.s == 0.3 and b.deterministic
    assert a.hash == b.hash != c.hash and len(a.hash) == 12


def test_field_specs_build():
    cfg = parse_config("n = 2\n[field]\neigenvalues = [2.0, 0.5]\nangle = 0.3\n")
    A = cfg.field.build_A(2)
    assert A.lower == pytest.approx(0.5) and A.upper == pytest.approx(2.0)
    cfg = parse_config("n = 2\n[field]\nname = \"rotating-field\"\n[field.params]\nfrequency = 2.0\n")
    assert cfg.field.build_M(2).n == 2


def test_solver_tolerances_passed_through():
    cfg = parse_config("[tolerances]\ntol_asm = 1e-5\nmax_doublings = 12\n")
    opts = cfg.solver_options()
    assert opts.tol_asm == 1e-5 and opts.max_doublings == 12


def test_load_config_file(tmp_path):
    p = tmp_path / "bench.toml"
    p.write_text(MINIMAL + "[data]\nf_shape = \"cos\"\n", encoding="utf-8")
    cfg = load_config(str(p))
    assert cfg.data.f_shape == "cos"
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.toml"))
    bad = tmp_path / "bad.toml"
    bad.write_bytes(b"n = 1\n\xff\xfe\n")
    with pytest.raises(ConfigError):
        load_config(str(bad))
