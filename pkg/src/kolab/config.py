"""INI-style experiment configuration.

Vectors accept ``ones``, ``zeros``, ``e<n>`` (1-based basis vector),
``const:<c>``, ``scaled:<c>:<spec>`` or a comma-separated list.  Matrices
accept ``zero``, ``identity``, ``scaled_identity:<c>``, ``diag:<list>`` or
rows separated by ``;``.  Time grids accept a comma list or
``log:<start>:<stop>:<count>``.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import coefficients as cf
from .errors import HypothesisError
from .hilbert import SpectralModel
from .semigroup import _check_lipschitz, check_delta

__all__ = ["ConfigError", "ExperimentConfig", "parse_vector", "parse_matrix", "parse_grid", "COMMANDS"]

COMMANDS = ("simulate", "value", "derivative", "fd-check", "regularity-scan", "lipschitz-scan",
            "mollified-scan", "bounds")


class ConfigError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise ConfigError(f"cannot parse number list {text!r}") from exc


def parse_vector(text: str, n: int) -> np.ndarray:
    text = text.strip()
    if text == "ones":
        return np.ones(n)
    if text == "zeros":
        return np.zeros(n)
    if text.startswith("scaled:"):
        _, c, rest = text.split(":", 2)
        return float(c) * parse_vector(rest, n)
    if text.startswith("const:"):
        return np.full(n, float(text.split(":", 1)[1]))
    if text.startswith("e") and text[1:].isdigit():
        i = int(text[1:])
        if not 1 <= i <= n:
            raise ConfigError(f"basis vector {text} out of range 1..{n}")
        v = np.zeros(n)
        v[i - 1] = 1.0
        return v
    vals = _floats(text)
    if len(vals) != n:
        raise ConfigError(f"vector {text!r} has {len(vals)} entries, expected {n}")
    return np.array(vals)


def parse_matrix(text: str, rows: int, cols: int) -> np.ndarray:
    text = text.strip()
    if text == "zero":
        return np.zeros((rows, cols))
    if text == "identity":
        return np.eye(rows, cols)
    if text.startswith("scaled_identity:"):
        return float(text.split(":", 1)[1]) * np.eye(rows, cols)
    if text.startswith("diag:"):
        vals = _floats(text.split(":", 1)[1])
        if len(vals) != min(rows, cols):
            raise ConfigError(f"diag needs {min(rows, cols)} entries")
        out = np.zeros((rows, cols))
        out[np.arange(len(vals)), np.arange(len(vals))] = vals
        return out
    mat = np.array([_floats(r) for r in text.split(";")])
    if mat.shape != (rows, cols):
        raise ConfigError(f"matrix has shape {mat.shape}, expected {(rows, cols)}")
    return mat


def parse_grid(text: str) -> list[float]:
    text = text.strip()
    if text.startswith("log:"):
        _, a, b, n = text.split(":")
        return [float(v) for v in np.logspace(math.log10(float(a)), math.log10(float(b)), int(n))]
    return _floats(text)


def build_model(sec) -> SpectralModel:
    n = sec.getint("dim_h", 8)
    eta = sec.getfloat("eta", 1.0)
    horizon = sec.getfloat("horizon", 1.0)
    dim_u = sec.getint("dim_u", n)
    rule = sec.get("eigenvalues", "laplacian").strip()
    if rule == "laplacian":
        return SpectralModel.laplacian(n, eta, horizon, dim_u)
    lam = _floats(rule)
    if len(lam) != n:
        raise ConfigError(f"eigenvalue list has {len(lam)} entries but dim_h = {n}")
    return SpectralModel(np.array(lam), eta, horizon, dim_u)


def build_drift(sec, n):
    fam = sec.get("family", "zero").strip()
    if fam == "zero":
        return cf.ZeroDrift(n)
    if fam == "linear":
        return cf.LinearDrift(parse_matrix(sec.get("matrix", "zero"), n, n))
    if fam == "smooth_bounded":
        return cf.SmoothBoundedDrift(sec.getfloat("scale", 1.0), parse_vector(sec.get("w", "e1"), n),
                                     parse_vector(sec.get("d", "e1"), n))
    if fam == "nemytskii":
        radius = sec.get("radius", "2.0").strip()
        return cf.NemytskiiPoly(n, sec.getfloat("amplitude", 1.0), math.inf if radius == "inf" else float(radius),
                                sec.getint("quad_points", 4 * n))
    raise ConfigError(f"unknown drift family {fam!r}")


def build_diffusion(sec, n, m):
    fam = sec.get("family", "constant").strip()
    if fam == "constant":
        return cf.ConstantDiffusion(parse_matrix(sec.get("q", "identity"), n, m))
    if fam == "linear":
        base = parse_matrix(sec.get("base", "zero"), n, m)
        c = sec.getfloat("coupling", 0.0)
        g = np.zeros((n, n, m))
        for j in range(min(n, m)):
            g[j, j, j] = c  # G_j = c e_j e_j^T: diagonal multiplicative noise
        return cf.LinearDiffusion(base, g)
    if fam == "smooth_bounded":
        return cf.SmoothBoundedDiffusion(parse_matrix(sec.get("base", "zero"), n, m), sec.getfloat("scale", 1.0),
                                         parse_vector(sec.get("w", "e1"), n),
                                         parse_matrix(sec.get("g", "identity"), n, m))
    raise ConfigError(f"unknown diffusion family {fam!r}")


def build_observable(sec, n):
    fam = sec.get("family", "quadratic").strip()
    if fam == "quadratic":
        return cf.QuadraticNorm()
    if fam == "linear":
        return cf.LinearFunctional(parse_vector(sec.get("v", "ones"), n))
    if fam == "cos":
        return cf.CosFunctional(parse_vector(sec.get("v", "ones"), n))
    raise ConfigError(f"unknown observable family {fam!r}")


@dataclass
class ExperimentConfig:
    model: SpectralModel
    drift: object
    diffusion: object
    observable: object
    command: str = "derivative"
    t_grid: list = field(default_factory=lambda: [1.0])
    eps: list = field(default_factory=lambda: [0.0])
    k: int = 1
    delta: tuple = ()
    samples: int = 1000
    steps: int = 256
    seed: int = 0
    jobs: int = 1
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    directions: list | None = None
    h: list = field(default_factory=lambda: [2.0 ** -j for j in range(3, 8)])
    bounds: dict = field(default_factory=dict)
    out_dir: str | None = None
    fmt: str = "csv"
    source_hash: str = ""

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        return cls.from_text(p.read_text(), **overrides)

    @classmethod
    def from_text(cls, text: str, **overrides) -> "ExperimentConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        for name in ("model", "drift", "diffusion", "observable", "run", "output"):
            if not cp.has_section(name):
                cp.add_section(name)
        try:
            model = build_model(cp["model"])
            n, m = model.dim_h, model.dim_u
            run = cp["run"]
            k = run.getint("k", 1)
            dirs_text = run.get("directions", "rough").strip()
            directions = None if dirs_text == "rough" else [parse_vector(s, n) for s in dirs_text.split(";")]
            cfg = cls(
                model=model,
                drift=build_drift(cp["drift"], n),
                diffusion=build_diffusion(cp["diffusion"], n, m),
                observable=build_observable(cp["observable"], n),
                command=run.get("command", "derivative").strip(),
                t_grid=parse_grid(run.get("t", "1.0")),
                eps=_floats(run.get("eps", "0")),
                k=k,
                delta=tuple(_floats(run.get("delta", ""))),
                samples=run.getint("samples", 1000),
                steps=run.getint("steps", 256),
                seed=run.getint("seed", 0),
                jobs=run.getint("jobs", 1),
                x=parse_vector(run.get("x", "ones"), n),
                y=parse_vector(run["y"], n) if "y" in run else None,
                directions=directions,
                h=_floats(run["h"]) if "h" in run else [2.0 ** -j for j in range(3, 8)],
                bounds={key: run[key] for key in ("lambdas", "L", "L_hat", "p", "alpha", "beta") if key in run},
                out_dir=cp["output"].get("dir"),
                fmt=cp["output"].get("format", "csv").strip(),
                source_hash=hashlib.sha256(text.encode()).hexdigest()[:16],
            )
        except (ValueError, KeyError) as exc:
            if isinstance(exc, (ConfigError, HypothesisError)):
                raise
            raise ConfigError(str(exc)) from exc
        for key, val in overrides.items():
            if val is not None:
                setattr(cfg, key, val)
        cfg.validate()
        return cfg

    def resolved_directions(self):
        if self.directions is None:
            return self.model.rough_directions(self.k)
        if len(self.directions) != self.k:
            raise ConfigError(f"{len(self.directions)} directions given for k = {self.k}")
        return self.directions

    def validate(self) -> None:
        """Check every precondition before any simulation starts."""
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; choose from {', '.join(COMMANDS)}")
        if self.fmt != "csv":
            raise ConfigError(f"unsupported output format {self.fmt!r}")
        if not 0 <= self.k <= 4:
            raise ConfigError("k must be in 0..4")
        if self.samples < 2:
            raise ConfigError("samples must be >= 2")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        T = self.model.horizon
        for t in self.t_grid:
            if not 0 <= t <= T:
                raise ConfigError(f"time {t} outside [0, T={T}]")
        for e in self.eps:
            if not 0 <= e <= T:
                raise ConfigError(f"mollification eps={e} outside [0, T={T}]")
        if any(h <= 0 for h in self.h):
            raise ConfigError("finite-difference steps h must be positive")
        if self.command in ("derivative", "fd-check", "regularity-scan", "lipschitz-scan", "mollified-scan",
                            "simulate"):
            self.resolved_directions()
        if self.command == "fd-check" and self.k not in (1, 2):
            raise ConfigError("fd-check needs k in {1, 2}")
        if self.command in ("regularity-scan", "lipschitz-scan", "mollified-scan"):
            if self.k < 1:
                raise ConfigError("scans need k >= 1")
            check_delta(self.delta, self.k)
            if min(self.t_grid) <= 0:
                raise ConfigError("scan times must be positive")
        if self.command == "lipschitz-scan":
            if self.y is None:
                raise ConfigError("lipschitz-scan needs a second base point y")
            _check_lipschitz(self.k, [("drift", self.drift), ("diffusion", self.diffusion),
                                      ("observable", self.observable)])
