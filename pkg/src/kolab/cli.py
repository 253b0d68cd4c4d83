"""Command line entry point ``kolab``.

Every data-producing subcommand writes CSV: ``#`` metadata lines (no
timestamps), a header row, then one row per estimate.  With ``--out DIR``
the CSV lands in ``DIR/<command>.csv`` next to ``manifest.json``; without
it the CSV goes to stdout.

Exit codes: 0 success, 1 acceptance failures or I/O errors, 2 invalid
configuration or violated hypothesis, 3 numerical guard tripped.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import bounds as bd
from . import semigroup as sg
from .config import COMMANDS, ConfigError, ExperimentConfig, _floats, parse_grid
from .errors import HypothesisError, NumericalGuardError
from .kernels import available_backends, default_backend
from .partitions import enumerate_partitions, proper_partitions
from .sde_engine import DerivativeRequest, simulate_samples, steps_to

ESTIMATE_COLUMNS = ("command", "t", "eps", "k", "delta", "h", "seed", "samples", "steps", "value", "stderr",
                    "reference", "reference_stderr", "raw", "ratio", "slope", "oracle_only")
SIMULATE_COLUMNS = ("command", "t", "eps", "subset", "component", "seed", "samples", "steps", "mean", "stderr")
BOUNDS_COLUMNS = ("lambda", "L", "L_hat", "p", "alpha", "beta", "chi_alpha", "chi_beta", "beta_fn", "gen_exp",
                  "iota", "theta", "theta_bar")

DEFAULT_CONFIG = """
[model]
eigenvalues = laplacian
dim_h = 8
[drift]
family = zero
[diffusion]
family = constant
q = identity
[observable]
family = quadratic
[run]
t = 0.1, 0.5, 1.0
k = 1
delta = 0.2
samples = 1000
"""


def fmt(v) -> str:
    """Locale-free cell text: shortest round-trip floats, ``;``-joined tuples."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ";".join(fmt(x) for x in v)
    return str(v)


def render_csv(columns, rows, meta: dict) -> str:
    buf = io.StringIO()
    for key in sorted(meta):
        buf.write(f"# {key}={fmt(meta[key])}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def csv_body(text: str) -> str:
    """The CSV without its ``#`` metadata lines."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


# ----------------------------------------------------------------------------
# pipelines: config -> (columns, rows, meta)


def _ou_reference(cfg, k, t, eps, dirs):
    if not sg.is_ou_setting(cfg.drift, cfg.diffusion, cfg.observable):
        return None
    if k == 0:
        return sg.ou_value(cfg.model, cfg.diffusion.q, cfg.x, t, cfg.steps, eps)
    return sg.ou_derivative(cfg.model, k, cfg.x, dirs, t)


def _common(cfg, backend):
    return dict(samples=cfg.samples, seed=cfg.seed, steps=cfg.steps, jobs=cfg.jobs, backend=backend)


def run_derivative(cfg, backend):
    dirs = cfg.resolved_directions() if cfg.k else []
    oracle = bool(getattr(cfg.observable, "oracle_only", False))
    rows = []
    for t in cfg.t_grid:
        for eps in cfg.eps:
            args = (cfg.observable, cfg.model, cfg.drift, cfg.diffusion, t, cfg.x)
            if cfg.k == 0:
                est = sg.estimate_value(*args, eps=eps, **_common(cfg, backend))
            else:
                est = sg.estimate_derivative(cfg.k, *args, dirs, eps=eps, **_common(cfg, backend))
            rows.append({"command": "derivative", "t": t, "eps": eps, "k": cfg.k, "delta": cfg.delta,
                         "seed": cfg.seed, "samples": cfg.samples, "steps": est.metadata["steps"],
                         "value": est.value, "stderr": est.stderr,
                         "reference": _ou_reference(cfg, cfg.k, t, eps, dirs), "oracle_only": oracle})
    return ESTIMATE_COLUMNS, rows


def run_fd_check(cfg, backend):
    dirs = cfg.resolved_directions()
    t, eps = cfg.t_grid[-1], cfg.eps[0]
    rows, hs, gaps = [], [], []
    for h in sorted(cfg.h, reverse=True):
        chk = sg.fd_cross_check(cfg.k, cfg.observable, cfg.model, cfg.drift, cfg.diffusion, t, cfg.x, dirs, h,
                                eps=eps, **_common(cfg, backend))
        hs.append(h)
        gaps.append(abs(chk.gap))
        rows.append({"command": "fd-check", "t": t, "eps": eps, "k": cfg.k, "h": h, "seed": cfg.seed,
                     "samples": cfg.samples, "steps": chk.representation.metadata["steps"],
                     "value": chk.representation.value, "stderr": chk.representation.stderr,
                     "reference": chk.finite_difference.value,
                     "reference_stderr": chk.finite_difference.stderr,
                     "raw": abs(chk.gap), "ratio": chk.gap_stderr, "slope": sg._ols_slope(hs, gaps),
                     "oracle_only": bool(getattr(cfg.observable, "oracle_only", False))})
    return ESTIMATE_COLUMNS, rows


def _scan_rows(name, table, oracle):
    out = []
    for r in table.rows:
        out.append(dict(r, command=name, oracle_only=oracle))
    return out


def run_scan(cfg, backend):
    oracle = bool(getattr(cfg.observable, "oracle_only", False))
    dirs = cfg.resolved_directions()
    base = (cfg.k, cfg.delta, cfg.observable, cfg.model, cfg.drift, cfg.diffusion, cfg.x)
    if cfg.command == "regularity-scan":
        rows = []
        for eps in cfg.eps:
            tab = sg.regularity_scan(*base, cfg.t_grid, dirs, eps=eps, **_common(cfg, backend))
            rows += _scan_rows(cfg.command, tab, oracle)
    elif cfg.command == "lipschitz-scan":
        rows = []
        for eps in cfg.eps:
            tab = sg.lipschitz_scan(*base, cfg.y, cfg.t_grid, dirs, eps=eps, **_common(cfg, backend))
            rows += _scan_rows(cfg.command, tab, oracle)
    else:
        tab = sg.mollified_scan(*base, cfg.t_grid, cfg.eps, dirs, **_common(cfg, backend))
        rows = _scan_rows(cfg.command, tab, oracle)
    return ESTIMATE_COLUMNS, rows


def run_simulate(cfg, backend):
    """Sample mean and standard error of every path component on the grid up to ``max(t)``."""
    dirs = cfg.resolved_directions() if cfg.k else []
    t_end = max(cfg.t_grid)
    n = steps_to(t_end, cfg.steps, cfg.model.horizon)
    rows = []
    for eps in cfg.eps:
        req = DerivativeRequest(cfg.x, tuple(dirs), eps)
        paths = simulate_samples(cfg.model, cfg.drift, cfg.diffusion, req, t_end, cfg.steps, cfg.seed,
                                 cfg.samples, record=range(n + 1), jobs=cfg.jobs, backend=backend)
        mean = paths.mean(axis=0)
        se = paths.std(axis=0, ddof=1) / math.sqrt(cfg.samples)
        for j in range(n + 1):
            t = t_end * j / n if n else 0.0
            for mask in range(paths.shape[2]):
                subset = tuple(i + 1 for i in range(cfg.k) if mask >> i & 1)
                for c in range(paths.shape[3]):
                    rows.append({"command": "simulate", "t": t, "eps": eps, "subset": "{" + ",".join(map(str, subset)) + "}",
                                 "component": c + 1, "seed": cfg.seed, "samples": cfg.samples, "steps": n,
                                 "mean": mean[j, mask, c], "stderr": se[j, mask, c]})
    return SIMULATE_COLUMNS, rows


def run_bounds(cfg, backend):
    b = cfg.bounds
    lambdas = _floats(b.get("lambdas", "0, 0.25, 0.45, 0.5, 0.75"))
    Ls = _floats(b.get("L", "0.5, 1, 2"))
    L_hats = _floats(b.get("L_hat", "0, 1"))
    rows = bd.bounds_table(cfg.model, lambdas, Ls, L_hats, float(b.get("p", 2.0)), float(b.get("alpha", 0.0)),
                           float(b.get("beta", 0.0)), cfg.delta)
    return BOUNDS_COLUMNS, rows


PIPELINES = {"simulate": run_simulate, "value": run_derivative, "derivative": run_derivative,
             "fd-check": run_fd_check, "regularity-scan": run_scan, "lipschitz-scan": run_scan,
             "mollified-scan": run_scan, "bounds": run_bounds}


def execute(cfg: ExperimentConfig, backend: str | None = None) -> str:
    """Run the configured command and return the CSV text."""
    if cfg.command == "value":
        cfg.k = 0
    backend = backend or default_backend()
    columns, rows = PIPELINES[cfg.command](cfg, backend)
    meta = {"kolab": __version__, "command": cfg.command, "seed": cfg.seed, "samples": cfg.samples,
            "steps": cfg.steps, "t_grid": tuple(cfg.t_grid), "eps": tuple(cfg.eps), "k": cfg.k,
            "model": cfg.model.fingerprint(), "config": cfg.source_hash, "backend": backend,
            "drift": cfg.drift.family, "diffusion": cfg.diffusion.family, "observable": cfg.observable.family}
    return render_csv(columns, rows, meta)


def write_outputs(text: str, cfg: ExperimentConfig, out_dir, backend) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{cfg.command}.csv"
    path.write_text(text)
    versions = {"kolab": __version__, "numpy": np.__version__, "python": platform.python_version()}
    import scipy
    versions["scipy"] = scipy.__version__
    if "numba" in available_backends():
        import numba
        versions["numba"] = numba.__version__
    manifest = {"command": cfg.command, "timestamp": datetime.now(timezone.utc).isoformat(),
                "seed": cfg.seed, "samples": cfg.samples, "jobs": cfg.jobs, "backend": backend,
                "config_hash": cfg.source_hash, "model": cfg.model.fingerprint(), "versions": versions,
                "csv": path.name, "csv_body_sha256": hashlib.sha256(csv_body(text).encode()).hexdigest()}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# ----------------------------------------------------------------------------
# argument parsing


def _add_run_flags(p):
    p.add_argument("--config", metavar="PATH", help="INI experiment file (defaults to a built-in OU setup)")
    p.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    p.add_argument("--samples", type=int)
    p.add_argument("--jobs", type=int, help="worker threads; results do not depend on it")
    p.add_argument("--out", metavar="DIR", help="write CSV and manifest here instead of stdout")
    p.add_argument("--format", choices=["csv"], default=None)
    p.add_argument("--backend", choices=["numba", "numpy"], help="kernel backend override")
    p.add_argument("--k", type=int)
    p.add_argument("--delta", help="comma list, one per direction")
    p.add_argument("--t", dest="t_grid", help="comma list or log:START:STOP:COUNT")
    p.add_argument("--eps", help="comma list of mollification parameters")
    p.add_argument("--steps", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kolab", description="Derivative processes and Kolmogorov "
                                     "semigroup experiments on a diagonal spectral model.")
    parser.add_argument("--version", action="version", version=f"kolab {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("partitions", help="list set partitions of {1..k}")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--proper", action="store_true", help="exclude the one-block partition")

    for name in COMMANDS:
        _add_run_flags(sub.add_parser(name, help=f"{name} pipeline"))
    _add_run_flags(sub.add_parser("run", help="run the command named in the config [run] section"))

    p = sub.add_parser("accept", help="run the acceptance suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--only", help="comma list of criterion numbers")
    p.add_argument("--out", metavar="DIR")
    return parser


def _load_config(args) -> ExperimentConfig:
    overrides = {"seed": args.seed, "samples": args.samples, "jobs": args.jobs, "k": args.k,
                 "steps": args.steps, "fmt": args.format,
                 "delta": tuple(_floats(args.delta)) if args.delta is not None else None,
                 "t_grid": parse_grid(args.t_grid) if args.t_grid is not None else None,
                 "eps": _floats(args.eps) if args.eps is not None else None}
    if args.cmd != "run":
        overrides["command"] = args.cmd
    elif args.config is None:
        raise ConfigError("run needs --config PATH")
    if args.config is None:
        return ExperimentConfig.from_text(DEFAULT_CONFIG, **overrides)
    return ExperimentConfig.from_file(args.config, **overrides)


def _cmd_partitions(args, stdout):
    parts = proper_partitions(args.k) if args.proper else enumerate_partitions(args.k)
    for p in parts:
        print(p, file=stdout)
    print(f"count={len(parts)}", file=stdout)
    return 0


def _cmd_accept(args, stdout):
    from . import acceptance
    only = {int(s) for s in args.only.split(",")} if args.only else None
    results = acceptance.run_all(seed=args.seed, jobs=args.jobs, only=only, stream=stdout)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        rows = [{"criterion": r.number, "name": r.name, "passed": r.passed, "detail": r.detail} for r in results]
        (out / "accept.csv").write_text(render_csv(("criterion", "name", "passed", "detail"), rows,
                                                   {"kolab": __version__, "seed": args.seed}))
    return 0 if all(r.passed for r in results) else 1


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "partitions":
            return _cmd_partitions(args, stdout)
        if args.cmd == "accept":
            return _cmd_accept(args, stdout)
        cfg = _load_config(args)
        backend = args.backend or default_backend()
        text = execute(cfg, backend)
        out_dir = args.out or cfg.out_dir
        if out_dir:
            path = write_outputs(text, cfg, out_dir, backend)
            print(f"wrote {path}", file=stdout)
        else:
            stdout.write(text)
        return 0
    except (ConfigError, HypothesisError) as exc:
        print(f"kolab: error: {exc}", file=sys.stderr)
        return 2
    except NumericalGuardError as exc:
        print(f"kolab: numerical guard: {exc}", file=sys.stderr)
        return 3
    except (ValueError, IndexError) as exc:
        print(f"kolab: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"kolab: I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
