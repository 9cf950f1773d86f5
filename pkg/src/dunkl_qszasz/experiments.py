"""Experiment configuration, runners and deterministic table output."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from typing import Iterable, Optional

import numpy as np

from . import bivariate as bi
from . import bounds
from . import operator as op
from .functions import REGISTRY, BiFunction, GridSpec, ScalarFunction, get_function, monomial, verify_flags
from .operator import OperatorParams
from .qcalc import TruncationPolicy

__all__ = [
    "ExperimentConfig",
    "SCHEDULES",
    "schedule_q",
    "parse_config",
    "serialize_config",
    "normalize_config_text",
    "run_moment_audit",
    "run_convergence",
    "run_bivariate",
    "run_bounds_audit",
    "format_table",
    "MOMENT_COLUMNS",
]

SCHEDULES = ("fixed", "one_minus_inv_n", "one_minus_inv_sqrt_n")


@dataclass(frozen=True)
class ExperimentConfig:
    n_list: tuple[int, ...] = (10, 40, 160)
    q_schedule: str = "one_minus_inv_n"
    q: Optional[float] = None
    mu: float = 0.5
    alpha: float = 0.0
    beta: float = 0.0
    x_max: float = 1.0
    grid_points: int = 21
    functions: tuple[str, ...] = ("t", "sqrt", "t_over_1pt", "one_minus_exp")
    tail_tol: float = 1e-14
    max_terms: int = 10_000
    audit_tol: float = 1e-8
    lambda_form: str = "printed"
    format: str = "csv"
    out: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if self.q_schedule not in SCHEDULES:
            raise ValueError(f"q_schedule must be one of {SCHEDULES}, got {self.q_schedule!r}")
        if self.q_schedule == "fixed" and self.q is None:
            raise ValueError("the fixed schedule needs q")
        if self.format not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.format!r}")
        if self.lambda_form not in bounds.LAMBDA_FORMS:
            raise ValueError(f"lambda_form must be one of {sorted(bounds.LAMBDA_FORMS)}")
        if not self.n_list or any(n < 1 for n in self.n_list):
            raise ValueError("n_list needs positive integers")
        for name in self.functions:
            f = get_function(name)
            failed = [flag for flag, ok in verify_flags(f, self.grid).items() if not ok]
            if failed:
                raise ValueError(f"registry function {name} fails {failed} on the configured grid")

    @property
    def trunc(self) -> TruncationPolicy:
        return TruncationPolicy(self.tail_tol, self.max_terms)

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.x_max, self.grid_points)

    def params(self, n: int) -> OperatorParams:
        return OperatorParams(n, schedule_q(n, self), self.mu, self.alpha, self.beta)


def schedule_q(n: int, cfg: ExperimentConfig) -> float:
    """``q_n`` for operator index ``n``: fixed, ``1 - 1/n`` or ``1 - 1/sqrt(n)``."""
    if cfg.q_schedule == "fixed":
        return float(cfg.q)
    if n < 2:
        raise ValueError(f"schedule {cfg.q_schedule} needs n >= 2 so that q_n lies in (0, 1)")
    if cfg.q_schedule == "one_minus_inv_n":
        return 1.0 - 1.0 / n
    return 1.0 - 1.0 / math.sqrt(n)


# --- config files -------------------------------------------------------------

_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_ORDER = [f.name for f in fields(ExperimentConfig)]


def _key(raw: str) -> str:
    key = raw.strip().lower().replace("-", "_")
    if key not in _FIELD_TYPES:
        raise ValueError(f"unknown config key {raw.strip()!r}")
    return key


def _coerce(key: str, raw: str):
    raw = raw.strip()
    if key in ("n_list",):
        return tuple(int(v) for v in raw.split(",") if v.strip())
    if key == "functions":
        return tuple(v.strip() for v in raw.split(",") if v.strip())
    if key in ("grid_points", "max_terms", "workers"):
        return int(raw)
    if key in ("q", "out"):
        if raw.lower() in ("", "none"):
            return None
        return float(raw) if key == "q" else raw
    if key in ("mu", "alpha", "beta", "x_max", "tail_tol", "audit_tol"):
        return float(raw)
    return raw


def _render(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ",".join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _pairs(text: str):
    for number, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {number}: expected 'key = value'")
        raw_key, raw_value = line.split("=", 1)
        yield _key(raw_key), raw_value


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse a flat ``key = value`` document (``#`` comments) over ``base``."""
    values = {key: _coerce(key, raw) for key, raw in _pairs(text)}
    return replace(base or ExperimentConfig(), **values)


def serialize_config(cfg: ExperimentConfig, keys: Iterable[str] | None = None) -> str:
    """Canonical text for ``cfg``; ``keys`` restricts (and is reordered to) field order."""
    wanted = set(_ORDER if keys is None else keys)
    data = asdict(cfg)
    lines = [f"{k} = {_render(tuple(data[k]) if isinstance(data[k], list) else data[k])}" for k in _ORDER if k in wanted]
    return "\n".join(lines) + "\n"


def normalize_config_text(text: str) -> str:
    """Comments and blanks dropped, keys canonicalised and put in field order."""
    seen = {}
    for key, raw in _pairs(text):
        seen[key] = raw.strip()
    return "".join(f"{k} = {seen[k]}\n" for k in _ORDER if k in seen)


# --- runners ------------------------------------------------------------------

MOMENT_COLUMNS = ("n", "q", "mu", "alpha", "beta", "x", "tau", "numeric", "closed_low", "closed_high", "discrepancy", "pass")
GATED_TAUS = ("0", "1", "t-1", "t-x")


def _shifted(c: float) -> ScalarFunction:
    return ScalarFunction(f"t-{c:g}", lambda t: t - c)


def _map(func, tasks, workers: int):
    if workers <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks))


def _moment_rows_for_n(task):
    cfg, n = task
    p = cfg.params(n)
    x = cfg.grid.nodes()
    tight = cfg.trunc.tightened()
    k0 = op.apply(monomial(0), x, p, tight)
    k1 = op.apply(monomial(1), x, p, tight)
    k2 = op.apply(monomial(2), x, p, tight)
    k_shift = op.apply(_shifted(1.0), x, p, tight)
    m1 = op.moment1_closed(x, p)
    lo2, hi2 = op.moment2_bounds(x, p)
    lam = bounds.lambda_n(x, p, cfg.lambda_form)
    central2 = k2 - 2 * x * k1 + x**2
    rel = 1e-6
    rows = []
    for i, xi in enumerate(x):
        cells = [
            ("0", k0[i], 1.0, 1.0, cfg.audit_tol),
            ("1", k1[i], m1[i], m1[i], rel * abs(m1[i])),
            ("t-1", k_shift[i], op.shifted1_closed(xi, p), op.shifted1_closed(xi, p), rel * max(1.0, abs(m1[i]))),
            ("t-x", k1[i] - xi, op.central1_closed(xi, p), op.central1_closed(xi, p), rel * max(1.0, abs(m1[i]))),
            ("2", k2[i], lo2[i], hi2[i], cfg.audit_tol),
            ("(t-x)^2", central2[i], -math.inf, lam[i], cfg.audit_tol),
        ]
        for tau, num, low, high, tol in cells:
            report = op.MomentReport(tau, float(xi), float(num), float(low), float(high), tol)
            rows.append(
                {
                    "n": n, "q": p.q, "mu": p.mu, "alpha": p.alpha, "beta": p.beta, "x": float(xi),
                    "tau": tau, "numeric": report.numeric, "closed_low": report.closed_low,
                    "closed_high": report.closed_high, "discrepancy": report.discrepancy,
                    "pass": report.satisfied,
                }
            )
    return rows


def run_moment_audit(cfg: ExperimentConfig):
    """Moment table and whether any equality audit (tau 0, 1, t-1, t-x) failed."""
    chunks = _map(_moment_rows_for_n, [(cfg, n) for n in cfg.n_list], cfg.workers)
    rows = [r for chunk in chunks for r in chunk]
    failed = any(not r["pass"] for r in rows if r["tau"] in GATED_TAUS)
    return rows, failed


CONVERGENCE_COLUMNS = (
    "n", "q", "mu", "alpha", "beta", "function", "sup_error", "weighted_error",
    "modulus_max_excess", "modulus_pass", "lipschitz_max_excess", "lipschitz_pass", "cb2_max_excess", "cb2_pass", "decreasing",
)


def _audit(error, bound, tol):
    excess = float(np.max(error - bound))
    return excess, bool(excess <= tol)


def _convergence_rows_for_n(task):
    cfg, n = task
    p = cfg.params(n)
    grid = cfg.grid
    x = grid.nodes()
    rows = []
    delta = bounds.modulus_delta(p)
    mgrid = GridSpec.with_spacing(grid.x_max + 2 * delta, delta / bounds.RESOLUTION)
    names = list(cfg.functions) + ["e0", "e1", "e2"]
    for name in names:
        f = monomial(int(name[1])) if name in ("e0", "e1", "e2") else get_function(name)
        values = op.apply(f, x, p, cfg.trunc)
        error = np.abs(values - f(x))
        row = {
            "n": n, "q": p.q, "mu": p.mu, "alpha": p.alpha, "beta": p.beta, "function": name,
            "sup_error": float(error.max()),
            "weighted_error": bounds.weighted_norm(values - f(x), grid),
            "modulus_max_excess": math.nan, "modulus_pass": None,
            "lipschitz_max_excess": math.nan, "lipschitz_pass": None,
            "cb2_max_excess": math.nan, "cb2_pass": None,
        }
        if f.nondecreasing and f.uniformly_continuous:
            b = bounds.bound_modulus(f, x, p, mgrid, cfg.lambda_form) + bounds.grid_slack(f, mgrid)
            row["modulus_max_excess"], row["modulus_pass"] = _audit(error, b, cfg.audit_tol)
        if f.lipschitz is not None:
            spec = bounds.LipschitzSpec(*f.lipschitz)
            b = bounds.bound_lipschitz(f, spec, x, p, grid, cfg.lambda_form)
            row["lipschitz_max_excess"], row["lipschitz_pass"] = _audit(error, b, cfg.audit_tol)
        if f.smooth_bounded:
            b = bounds.bound_cb2(f, x, p, grid, cfg.lambda_form)
            row["cb2_max_excess"], row["cb2_pass"] = _audit(error, b, cfg.audit_tol)
        rows.append(row)
    return rows


def run_convergence(cfg: ExperimentConfig):
    """Per ``n`` and function: sup-grid error, weighted error and rate-bound audits."""
    if cfg.q_schedule == "fixed":
        raise ValueError("convergence runs need q_n -> 1; use a non-fixed schedule")
    n_sorted = sorted(cfg.n_list)
    chunks = _map(_convergence_rows_for_n, [(cfg, n) for n in n_sorted], cfg.workers)
    rows = [r for chunk in chunks for r in chunk]
    previous = {}
    for r in rows:
        prev = previous.get(r["function"])
        metric = r["weighted_error"] if r["function"] in ("e0", "e1", "e2") else r["sup_error"]
        r["decreasing"] = None if prev is None else bool(metric < prev or metric <= cfg.audit_tol)
        previous[r["function"]] = metric
    return rows, False


BIVARIATE_COLUMNS = (
    "n", "q", "mu", "alpha", "beta", "x", "y", "quantity", "numeric",
    "closed_low", "closed_high", "discrepancy", "pass", "mode",
)


def _bivariate_rows_for_n(task):
    cfg, n = task
    p = cfg.params(n)
    bp = bi.BivariateParams(p, p)
    x = cfg.grid.nodes()
    X, Y = np.meshgrid(x, x, indexing="ij")
    X = X.reshape(-1)
    Y = Y.reshape(-1)
    tr = cfg.trunc
    t = REGISTRY["t"]
    one = monomial(0)
    uv = BiFunction.separable(t, t)
    e00 = bi.apply2(BiFunction.separable(one, one), X, Y, bp, tr)
    e10 = bi.apply2(BiFunction.separable(t, one), X, Y, bp, tr)
    e01 = bi.apply2(BiFunction.separable(one, t), X, Y, bp, tr)
    e20 = bi.apply2(BiFunction.separable(monomial(2), one), X, Y, bp, tr)
    e02 = bi.apply2(BiFunction.separable(one, monomial(2)), X, Y, bp, tr)
    kuv = bi.apply2(uv, X, Y, bp, tr)
    lam_x = bi.bi_central2_upper("x", X, Y, bp, cfg.lambda_form)
    lam_y = bi.bi_central2_upper("y", X, Y, bp, cfg.lambda_form)
    lip_uv = bi.bi_bound_lipschitz(uv, 1.0, 1.0, 1.0, X, Y, bp, form=cfg.lambda_form)
    d = bounds.modulus_delta(p)
    mg = GridSpec.with_spacing(cfg.x_max + 2 * d, d / bounds.RESOLUTION)
    omega = bi.bi_modulus(BiFunction("sqrt(u+v)", lambda u, v: np.sqrt(u + v)), d, d, mg, mg)
    rows = []
    rel = 1e-6
    for i in range(len(X)):
        xi, yi = float(X[i]), float(Y[i])
        m10 = float(bi.bi_moment_closed(1, 0, xi, yi, bp))
        m01 = float(bi.bi_moment_closed(0, 1, xi, yi, bp))
        cells = [
            ("e00", e00[i], 1.0, 1.0, cfg.audit_tol, "gate"),
            ("e10", e10[i], m10, m10, rel * abs(m10), "gate"),
            ("e01", e01[i], m01, m01, rel * abs(m01), "gate"),
            ("e10-x", e10[i] - xi, m10 - xi, m10 - xi, rel * max(1.0, abs(m10)), "gate"),
            ("e01-y", e01[i] - yi, m01 - yi, m01 - yi, rel * max(1.0, abs(m01)), "gate"),
            ("e20", e20[i], -math.inf, float(bi.bi_moment2_upper("x", xi, yi, bp)), cfg.audit_tol, "report"),
            ("e02", e02[i], -math.inf, float(bi.bi_moment2_upper("y", xi, yi, bp)), cfg.audit_tol, "report"),
            ("(e10-x)^2", e20[i] - 2 * xi * e10[i] + xi**2, -math.inf, lam_x[i], cfg.audit_tol, "report"),
            ("(e01-y)^2", e02[i] - 2 * yi * e01[i] + yi**2, -math.inf, lam_y[i], cfg.audit_tol, "report"),
            ("bi_lipschitz_uv", abs(kuv[i] - xi * yi), -math.inf, lip_uv[i], cfg.audit_tol, "report"),
            ("bi_modulus_bound", omega * lam_x[i] * lam_y[i], math.nan, math.nan, 0.0, "report"),
        ]
        for name, num, low, high, tol, mode in cells:
            if math.isnan(low):
                disc, ok = math.nan, None
            else:
                disc = max(low - num, num - high, 0.0)
                ok = disc <= tol
            rows.append(
                {
                    "n": n, "q": p.q, "mu": p.mu, "alpha": p.alpha, "beta": p.beta, "x": xi, "y": yi,
                    "quantity": name, "numeric": float(num), "closed_low": float(low), "closed_high": float(high),
                    "discrepancy": disc, "pass": ok, "mode": mode,
                }
            )
    return rows


def run_bivariate(cfg: ExperimentConfig):
    """Bivariate moments and bound audits on the square grid ``[0, x_max]**2``.

    Both axes share the configured parameters.  ``bi_modulus_bound`` rows carry the
    printed modulus bound for ``sqrt(u+v)`` without an audit.
    """
    chunks = _map(_bivariate_rows_for_n, [(cfg, n) for n in cfg.n_list], cfg.workers)
    rows = [r for chunk in chunks for r in chunk]
    failed = any(r["pass"] is False for r in rows if r["mode"] == "gate")
    return rows, failed


BOUNDS_COLUMNS = ("n", "q", "mu", "alpha", "beta", "x", "function", "bound_kind", "error", "bound", "pass")


def _bounds_rows_for_n(task):
    cfg, n = task
    p = cfg.params(n)
    grid = cfg.grid
    x = grid.nodes()
    delta = bounds.modulus_delta(p)
    mgrid = GridSpec.with_spacing(grid.x_max + 2 * delta, delta / bounds.RESOLUTION)
    rows = []
    for name in cfg.functions:
        f = get_function(name)
        error = np.abs(op.apply(f, x, p, cfg.trunc) - f(x))
        audits = []
        if f.nondecreasing and f.uniformly_continuous:
            audits.append(("modulus", bounds.bound_modulus(f, x, p, mgrid, cfg.lambda_form) + bounds.grid_slack(f, mgrid)))
        if f.lipschitz is not None:
            audits.append(("lipschitz", bounds.bound_lipschitz(f, bounds.LipschitzSpec(*f.lipschitz), x, p, grid, cfg.lambda_form)))
        if f.smooth_bounded:
            audits.append(("cb2", bounds.bound_cb2(f, x, p, grid, cfg.lambda_form)))
        peetre = np.array([bounds.peetre_surrogate(f, xi, p, grid, cfg.lambda_form) for xi in x]) if f.bounded else None
        for i, xi in enumerate(x):
            for kind, b in audits:
                rows.append({"n": n, "q": p.q, "mu": p.mu, "alpha": p.alpha, "beta": p.beta, "x": float(xi),
                             "function": name, "bound_kind": kind, "error": float(error[i]), "bound": float(b[i]),
                             "pass": bool(error[i] <= b[i] + cfg.audit_tol)})
            if peetre is not None:
                rows.append({"n": n, "q": p.q, "mu": p.mu, "alpha": p.alpha, "beta": p.beta, "x": float(xi),
                             "function": name, "bound_kind": "peetre_surrogate", "error": float(error[i]),
                             "bound": float(peetre[i]), "pass": None})
    return rows


def run_bounds_audit(cfg: ExperimentConfig):
    """Cell-level rate-bound audits; report mode, never a failing exit code."""
    chunks = _map(_bounds_rows_for_n, [(cfg, n) for n in cfg.n_list], cfg.workers)
    return [r for chunk in chunks for r in chunk], False


# --- output -------------------------------------------------------------------


def _cell(value) -> str:
    if value is None:
        return "na"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(value)


def _json_cell(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not math.isfinite(v):
            return json.dumps(_cell(v))
        return format(v, ".17g")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return json.dumps(str(value))


def format_table(rows: list[dict], columns: Iterable[str], fmt: str = "csv") -> str:
    """Render rows with fixed column order and 17-significant-digit numbers."""
    columns = list(columns)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow([_cell(r[c]) for c in columns])
        return buf.getvalue()
    if fmt == "json":
        body = ",\n".join(
            "  {" + ", ".join(f"{json.dumps(c)}: {_json_cell(r[c])}" for c in columns) + "}" for r in rows
        )
        return "[\n" + body + "\n]\n"
    raise ValueError(f"unknown format {fmt!r}")
