"""Experiment configuration: TOML key = value files with a versioned schema.

Example::

    schema = 1
    experiment = "solve"
    n = 1
    N = 128
    s = 0.5

    [field]
    name = "identity"

    [data]
    a = 1.0
    f = 0.4
    Q = 0.4
    h = "identity"

Unknown keys, out-of-range values and violated domination |f| <= Q a are
reported as distinct ConfigError subclasses naming the key and its line.
"""
from dataclasses import asdict, dataclass, field as dc_field
import hashlib
import json
import math
import re

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .solver import NONLINEARITIES, ProblemData, SolverOptions, get_nonlinearity
from .algebra import eigh_sym
from .spectral import FIELD_CATALOGUE, build_M_field, constant_field, rotated_field

SCHEMA_VERSION = 1
EXPERIMENTS = ("constants", "recover-a", "build-m", "solve", "sweep-s", "limits", "verify")
F_SHAPES = ("constant", "cos", "sin")
PROBES = ("gaussian", "polynomial-bump", "odd-bump")


class UnknownKeyError(ConfigError):
    """A key that the schema does not define."""


class RangeError(ConfigError):
    """A value outside its admissible range or of the wrong type."""


class ConfigDominationError(ConfigError):
    """Data violating |f| <= Q a."""


@dataclass(frozen=True)
class FieldSpec:
    """Matrix field: catalogue name, constant matrix, or rotation + eigenvalues."""

    name: str = "identity"
    matrix: tuple = ()
    eigenvalues: tuple = ()
    angle: tuple = (0.0,)
    params: dict = dc_field(default_factory=dict)

    def build_A(self, n):
        if self.matrix:
            return constant_field(np.array(self.matrix, dtype=float), name="config-matrix")
        if self.eigenvalues:
            return rotated_field(np.array(self.eigenvalues, dtype=float), np.array(self.angle, dtype=float))
        return FIELD_CATALOGUE[self.name](n, **self.params)

    def build_M(self, n):
        return build_M_field(self.build_A(n))


@dataclass(frozen=True)
class DataSpec:
    a: float = 1.0
    f: float = 0.4
    f_shape: str = "constant"
    Q: float = 0.4
    h: str = "identity"
    linear: bool = False

    def f_callable(self):
        amp = self.f
        if self.f_shape == "constant":
            return amp
        if self.f_shape == "cos":
            return lambda x: amp * np.cos(0.5 * np.pi * x)
        return lambda x: amp * np.sin(np.pi * x)

    def problem(self):
        return ProblemData(self.a, self.f_callable(), self.Q, get_nonlinearity(self.h),
                           linear_mode=self.linear)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "solve"
    schema: int = SCHEMA_VERSION
    n: int = 1
    domain: tuple = (-1.0, 1.0)
    N: int = 128
    s: float = 0.5
    s_grid: tuple = ()  # empty: the experiment's default grid
    ell_grid: tuple = ()
    rho: float = math.inf
    limit: str = "both"
    probe: str = "gaussian"
    samples: int = 20
    field: FieldSpec = FieldSpec()
    data: DataSpec = DataSpec()
    tolerances: dict = dc_field(default_factory=dict)
    seed: int = 0
    deterministic: bool = False

    def solver_options(self):
        return SolverOptions(**self.tolerances)

    def canonical(self):
        d = asdict(self)
        d.pop("deterministic")
        d["rho"] = "inf" if math.isinf(self.rho) else self.rho
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    @property
    def hash(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:12]


TOP_KEYS = {"schema", "experiment", "n", "domain", "N", "s", "s_grid", "ell_grid", "rho", "limit",
            "probe", "samples", "seed", "deterministic", "field", "data", "tolerances"}
FIELD_KEYS = {"name", "matrix", "eigenvalues", "angle", "params"}
DATA_KEYS = {"a", "f", "f_shape", "Q", "h", "linear"}
TOL_KEYS = {f for f in SolverOptions.__dataclass_fields__ if f != "initial"}


def _line_of(text, key, section=None):
    """1-based line of ``key = ...`` (inside ``[section]`` when given), or None."""
    current = None
    pat = re.compile(r"^\s*" + re.escape(key) + r"\s*=")
    head = re.compile(r"^\s*\[([^\]]+)\]")
    for i, line in enumerate(text.splitlines(), start=1):
        m = head.match(line)
        if m:
            current = m.group(1).strip()
            if section is None and current == key:
                return i
            continue
        if current == section and pat.match(line):
            return i
    return None


class _Checker:
    def __init__(self, text):
        self.text = text

    def fail(self, cls, msg, key, section=None):
        full = key if section is None else f"{section}.{key}"
        line = _line_of(self.text, key, section)
        where = f" (line {line})" if line else ""
        raise cls(f"{full}: {msg}{where}", key=full, line=line)

    def unknown(self, table, allowed, section=None):
        for k in table:
            if k not in allowed:
                self.fail(UnknownKeyError, f"unknown key; allowed keys: {', '.join(sorted(allowed))}",
                          k, section)

    def number(self, table, key, default, lo=-math.inf, hi=math.inf, open_lo=False, open_hi=False,
               section=None, integer=False):
        if key not in table:
            return default
        v = table[key]
        if isinstance(v, str) and v.strip().lower() in ("inf", "+inf", "infinity"):
            v = math.inf
        if isinstance(v, bool) or not isinstance(v, (int, float)) or (integer and not isinstance(v, int)):
            kind = "an integer" if integer else "a number"
            self.fail(RangeError, f"expected {kind}, got {v!r}", key, section)
        if math.isnan(v):
            self.fail(RangeError, "NaN is not allowed", key, section)
        bad_lo = v <= lo if open_lo else v < lo
        bad_hi = v >= hi if open_hi else v > hi
        if bad_lo or bad_hi:
            lb = "(" if open_lo else "["
            rb = ")" if open_hi else "]"
            self.fail(RangeError, f"value {v!r} outside {lb}{lo}, {hi}{rb}", key, section)
        return v

    def choice(self, table, key, default, options, section=None):
        if key not in table:
            return default
        v = table[key]
        if v not in options:
            self.fail(RangeError, f"{v!r} is not one of {', '.join(options)}", key, section)
        return v

    def grid(self, table, key, default, lo, hi, section=None):
        if key not in table:
            return default
        v = table[key]
        if not isinstance(v, list) or not v:
            self.fail(RangeError, "expected a non-empty list of numbers", key, section)
        out = []
        for x in v:
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not lo < x < hi:
                self.fail(RangeError, f"entry {x!r} outside ({lo}, {hi})", key, section)
            out.append(float(x))
        return tuple(out)

    def flag(self, table, key, default, section=None):
        if key not in table:
            return default
        v = table[key]
        if not isinstance(v, bool):
            self.fail(RangeError, f"expected true or false, got {v!r}", key, section)
        return v


def parse_config(text, overrides=None):
    """Validate TOML text into an ExperimentConfig; ``overrides`` replace top-level keys."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"TOML syntax error: {exc}", key=None,
                          line=int(m.group(1)) if m else None) from exc
    raw.update(overrides or {})
    c = _Checker(text)
    c.unknown(raw, TOP_KEYS)

    schema = c.number(raw, "schema", SCHEMA_VERSION, integer=True)
    if schema != SCHEMA_VERSION:
        c.fail(RangeError, f"unsupported schema version {schema}; expected {SCHEMA_VERSION}", "schema")
    experiment = c.choice(raw, "experiment", "solve", EXPERIMENTS)
    n = c.number(raw, "n", 1, 1, 3, integer=True)
    domain = (-1.0, 1.0)
    if "domain" in raw:
        d = raw["domain"]
        if (not isinstance(d, list) or len(d) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in d)
                or not d[0] < d[1]):
            c.fail(RangeError, "expected [a, b] with a < b", "domain")
        domain = (float(d[0]), float(d[1]))
    N = c.number(raw, "N", 128, 2, 4096, integer=True)
    s = c.number(raw, "s", 0.5, 0.0, 1.0, open_lo=True, open_hi=True)
    s_grid = c.grid(raw, "s_grid", (), 0.0, 1.0)
    ell_grid = c.grid(raw, "ell_grid", (), 0.0, math.inf)
    rho = c.number(raw, "rho", math.inf, 0.0, math.inf, open_lo=True)
    limit = c.choice(raw, "limit", "both", ("s1", "s0", "both"))
    probe = c.choice(raw, "probe", "gaussian", PROBES)
    samples = c.number(raw, "samples", 20, 1, 100000, integer=True)
    seed = c.number(raw, "seed", 0, 0, 2 ** 63 - 1, integer=True)
    deterministic = c.flag(raw, "deterministic", False)

    ftab = raw.get("field", {})
    if not isinstance(ftab, dict):
        c.fail(RangeError, "expected a table", "field")
    c.unknown(ftab, FIELD_KEYS, "field")
    fname = c.choice(ftab, "name", "identity", tuple(FIELD_CATALOGUE), "field")
    matrix = ()
    if "matrix" in ftab:
        m = np.array(ftab["matrix"], dtype=float) if _is_matrix(ftab["matrix"]) else None
        if m is None or m.shape != (n, n):
            c.fail(RangeError, f"expected an {n}x{n} matrix", "matrix", "field")
        if not np.allclose(m, m.T) or eigh_sym(m).eigenvalues[0] <= 0:
            c.fail(RangeError, "matrix must be symmetric positive definite", "matrix", "field")
        matrix = tuple(tuple(row) for row in m.tolist())
    eig = ()
    if "eigenvalues" in ftab:
        e = ftab["eigenvalues"]
        if (not isinstance(e, list) or len(e) != n
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) and x > 0 for x in e)):
            c.fail(RangeError, f"expected {n} positive eigenvalues", "eigenvalues", "field")
        eig = tuple(float(x) for x in e)
    angle = (0.0,)
    if "angle" in ftab:
        v = ftab["angle"]
        vals = v if isinstance(v, list) else [v]
        if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in vals):
            c.fail(RangeError, "expected a number or a list of numbers", "angle", "field")
        angle = tuple(float(x) for x in vals)
    params = ftab.get("params", {})
    if not isinstance(params, dict):
        c.fail(RangeError, "expected a table", "params", "field")
    fspec = FieldSpec(fname, matrix, eig, angle, dict(params))
    try:
        fspec.build_A(n)
    except (TypeError, ValueError) as exc:
        c.fail(RangeError, f"cannot build field: {exc}", "name" if not matrix else "matrix", "field")

    dtab = raw.get("data", {})
    if not isinstance(dtab, dict):
        c.fail(RangeError, "expected a table", "data")
    c.unknown(dtab, DATA_KEYS, "data")
    h = c.choice(dtab, "h", "identity", tuple(NONLINEARITIES), "data")
    gam = get_nonlinearity(h).gamma
    linear = c.flag(dtab, "linear", False, "data")
    a = c.number(dtab, "a", 1.0, 0.0, math.inf, section="data")
    f = c.number(dtab, "f", 0.4, section="data")
    Q = c.number(dtab, "Q", 0.4, 0.0, gam, open_lo=True, open_hi=True, section="data")
    f_shape = c.choice(dtab, "f_shape", "constant", F_SHAPES, "data")
    data = DataSpec(float(a), float(f), f_shape, float(Q), h, linear)
    if experiment in ("solve", "sweep-s") and not linear and abs(f) > Q * a * (1.0 + 1e-12):
        c.fail(ConfigDominationError,
               f"domination |f| <= Q a violated: |f| = {abs(f)} > Q a = {Q * a} "
               "(a weight a and a level Q below the saturation of h must dominate f)", "f", "data")

    ttab = raw.get("tolerances", {})
    if not isinstance(ttab, dict):
        c.fail(RangeError, "expected a table", "tolerances")
    c.unknown(ttab, TOL_KEYS, "tolerances")
    tol = {}
    for k, v in ttab.items():
        integer = isinstance(getattr(SolverOptions(), k), int)
        tol[k] = c.number(ttab, k, None, 0.0, math.inf, open_lo=True, section="tolerances",
                          integer=integer)

    return ExperimentConfig(experiment, schema, n, domain, N, float(s), s_grid, ell_grid, float(rho),
                            limit, probe, samples, fspec, data, tol, seed, deterministic)


def _is_matrix(v):
    return (isinstance(v, list) and v and all(isinstance(r, list) for r in v)
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for r in v for x in r)
            and len({len(r) for r in v}) == 1)


def load_config(path, overrides=None):
    """Read a UTF-8 TOML file and validate it."""
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode("utf-8")
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}", key=None, line=None) from exc
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config file is not UTF-8: {path}", key=None, line=None) from exc
    return parse_config(text, overrides)
