"""Command line front-end: ``nldiv <experiment> [--config PATH] [options]``.

Each subcommand writes one CSV table (header row, 17 significant digits,
a config_hash column on every row) to standard output or to --out, which
is written to a temporary file first and renamed into place.  The exit
status is 0 when every assertion of the experiment holds, 1 when one
fails, 2 for configuration errors and 3 for numerical errors.
"""
import argparse
import io
import math
import os
import sys
import tempfile

import numpy as np

from .algebra import c_ns, eigh_sym, operator_norm, sphere_area, unit_ball_volume
from .config import EXPERIMENTS, ConfigError, load_config, parse_config
from .errors import NldivError

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return ""
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    if v is None:
        return ""
    s = str(v)
    if any(ch in s for ch in ",\"\n"):
        s = '"' + s.replace('"', '""') + '"'
    return s


def render_csv(rows, config_hash):
    """CSV text; the column order is the key order of the first row plus config_hash."""
    buf = io.StringIO()
    if not rows:
        buf.write("config_hash\n")
        return buf.getvalue()
    cols = list(rows[0]) + ["config_hash"]
    buf.write(",".join(cols) + "\n")
    for r in rows:
        if list(r) != cols[:-1]:
            raise ValueError("rows of one table must share the same columns")
        buf.write(",".join(format_value(r[c]) for c in cols[:-1]) + "," + config_hash + "\n")
    return buf.getvalue()


def write_atomic(path, text):
    """Write ``text`` next to ``path`` and rename it into place."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".nldiv-", suffix=".csv", dir=d)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ------------------------------------------------------------ experiments

def _mesh(cfg):
    from .stiffness import Mesh
    return Mesh(cfg.domain[0], cfg.domain[1], cfg.N, cfg.n)


def run_constants(cfg):
    n, s = cfg.n, cfg.s
    w = sphere_area(n)
    c = c_ns(n, s)
    row = {"n": n, "s": s, "c_ns": c, "omega": float(w), "ball_volume": float(unit_ball_volume(n)),
           "c_over_s": c / s, "limit_s0": 2.0 / w, "c_over_1ms": c / (1.0 - s), "limit_s1": 4.0 * n / w}
    return [row], True


def run_recover_a(cfg):
    from .spectral import build_N, recover_A, sphere_rule
    rng = np.random.default_rng(cfg.seed)
    A_field = cfg.field.build_A(cfg.n)
    rule = sphere_rule(cfg.n, 2 if cfg.n > 1 else 1)
    x = rng.uniform(cfg.domain[0], cfg.domain[1], (cfg.samples, cfg.n))
    A = A_field(x)
    N = build_N(A)
    R = recover_A(N, rule)
    err = operator_norm(R - A)
    lam = eigh_sym(A).eigenvalues
    sig = np.sqrt(np.maximum(eigh_sym(np.swapaxes(N, -1, -2) @ N).eigenvalues, 0.0))
    rows = []
    for i in range(cfg.samples):
        row = {"index": i}
        for k in range(cfg.n):
            row[f"x{k + 1}"] = x[i, k]
        row.update({"lambda_min": lam[i, 0], "lambda_max": lam[i, -1], "sigma_min": sig[i, 0],
                    "sigma_max": sig[i, -1], "round_trip_error": err[i]})
        rows.append(row)
    return rows, bool(np.all(err <= 1e-6))


def run_build_m(cfg):
    from .spectral import check_structural
    rng = np.random.default_rng(cfg.seed)
    M = cfg.field.build_M(cfg.n)
    rows = []
    ok = True
    for i in range(cfg.samples):
        xs = rng.uniform(cfg.domain[0], cfg.domain[1], (64, cfg.n))
        ys = rng.normal(0.0, 1.0, (64, cfg.n))
        xis = rng.normal(0.0, 1.0, (64, cfg.n))
        rep = check_structural(M, xs, ys, xis)
        ok = ok and rep.ok(1e-10)
        rows.append({"batch": i, "points": 64, "alpha": M.alpha, "beta": M.beta,
                     "lipschitz": math.nan if M.lipschitz is None else M.lipschitz,
                     "bound_violation": rep.bound_violation,
                     "structural_violation": rep.structural_violation})
    return rows, ok


def run_solve(cfg, solution_path=None):
    from .kernel import KernelSpec
    from .solver import solve_semilinear
    mesh = _mesh(cfg)
    K = KernelSpec(cfg.field.build_M(cfg.n), cfg.s, cfg.rho)
    data = cfg.data.problem()
    u, rep = solve_semilinear(K, mesh, data, cfg.solver_options())
    if solution_path:
        rows = [{"node": x, "value": v} for x, v in zip(mesh.nodes, u.full_values)]
        write_atomic(solution_path, render_csv(rows, cfg.hash))
    row = rep.row()
    row.update({"nonlinearity": cfg.data.h, "linear_mode": rep.linear_mode, "bounds_ok": rep.bounds_ok})
    return [row], rep.bounds_ok


def run_sweep_s(cfg):
    from .asymptotics import smoothing_sweep, sweep_s
    mesh = _mesh(cfg)
    data = cfg.data.problem()
    opts = cfg.solver_options()
    A = cfg.field.build_A(cfg.n)
    grid = cfg.s_grid or (0.6, 0.75, 0.9, 0.95)
    if cfg.ell_grid:
        rep = smoothing_sweep(A, cfg.ell_grid, grid, mesh, data, cfg.rho, opts)
        return rep.rows(), rep.bounds_ok and rep.outer_decreasing
    from .spectral import build_M_field
    rep = sweep_s(build_M_field(A), mesh, data, grid, A, cfg.rho, opts)
    rows = []
    for i, s in enumerate(rep.s):
        rows.append({"experiment": "sweep-s", "s": s, "distance_l2": rep.distances[i],
                     "max_diff": rep.max_diffs[i], "norm_inf": rep.norms_inf[i],
                     "bound_inf": rep.bounds_inf[i], "bounds_ok": bool(rep.bounds_ok[i]),
                     "local_max": rep.local_max})
    decreasing = rep.strictly_decreasing or rep.flagged
    return rows, bool(np.all(rep.bounds_ok)) and rep.local_bounds_ok and decreasing


def run_limits(cfg):
    from .asymptotics import form_limit_s0, form_limit_s1
    from .kernel import PROBE_CATALOGUE
    probe = PROBE_CATALOGUE[cfg.probe](cfg.n)
    M = cfg.field.build_M(cfg.n)
    rows = []
    ok = True
    if cfg.limit in ("s1", "both"):
        grid = cfg.s_grid or (0.7, 0.8, 0.9, 0.95, 0.99)
        rep = form_limit_s1(probe, probe, M, grid, cfg.rho)
        rows += rep.rows()
        ok = ok and rep.rel_err[-1] <= 0.02
    if cfg.limit in ("s0", "both"):
        rep = form_limit_s0(probe, probe, M, cfg.rho, (0.2, 0.1, 0.05, 0.01))
        rows += rep.rows()
        ok = ok and rep.rel_err[0] <= 0.02
    return rows, ok


def run_verify(cfg):
    from .verify import run_suite
    results = run_suite(cfg.seed)
    return [r.row() for r in results], all(r.passed for r in results)


RUNNERS = {"constants": run_constants, "recover-a": run_recover_a, "build-m": run_build_m,
           "solve": run_solve, "sweep-s": run_sweep_s, "limits": run_limits, "verify": run_verify}


# ------------------------------------------------------------------ main

def build_parser():
    p = argparse.ArgumentParser(prog="nldiv", description="Anisotropic nonlocal operators in divergence form.")
    sub = p.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        q = sub.add_parser(name)
        q.add_argument("--config", help="TOML experiment file")
        q.add_argument("--out", help="write the CSV here instead of standard output")
        q.add_argument("--deterministic", action="store_true",
                       help="single-threaded BLAS and fixed reduction order")
        q.add_argument("--threads", type=int, help="BLAS threads (default: NLDIV_THREADS or library default)")
        q.add_argument("--seed", type=int, help="random seed (overrides the config)")
        q.add_argument("--n", type=int, help="dimension")
        q.add_argument("--s", type=float, help="fractional order in (0, 1)")
        q.add_argument("--N", type=int, help="number of mesh elements")
        q.add_argument("--rho", type=float, help="horizon (inf allowed)")
        q.add_argument("--samples", type=int, help="number of random samples or batches")
        if name == "solve":
            q.add_argument("--solution", help="also write node,value CSV of the solution here")
    return p


def _overrides(args):
    out = {"experiment": args.experiment}
    for key in ("seed", "n", "s", "N", "rho", "samples"):
        v = getattr(args, key)
        if v is not None:
            out[key] = v
    if args.deterministic:
        out["deterministic"] = True
    return out


def _thread_count(args):
    if args.deterministic:
        return 1
    if args.threads is not None:
        return args.threads
    env = os.environ.get("NLDIV_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"NLDIV_THREADS must be an integer, got {env!r}", key="NLDIV_THREADS") from None
    return None


def run(cfg, solution_path=None):
    """Run one experiment; returns (csv text, all assertions held)."""
    runner = RUNNERS[cfg.experiment]
    rows, ok = runner(cfg, solution_path) if cfg.experiment == "solve" else runner(cfg)
    return render_csv(rows, cfg.hash), bool(ok)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        over = _overrides(args)
        cfg = load_config(args.config, over) if args.config else parse_config("", over)
        threads = _thread_count(args)
        if threads is not None and threads < 1:
            raise ConfigError("--threads must be at least 1", key="threads")
    except ConfigError as exc:
        print(f"nldiv: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if threads is not None:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=threads):
                text, ok = run(cfg, getattr(args, "solution", None))
        else:
            text, ok = run(cfg, getattr(args, "solution", None))
    except (NldivError, ValueError, ArithmeticError) as exc:
        print(f"nldiv {cfg.experiment}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    if not ok:
        print(f"nldiv {cfg.experiment}: an assertion of the experiment failed", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
