"""Experiment configuration, prediction-vs-oracle runs and reporting."""

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import BSPhaseError, ConfigError, DomainError, NumericalError
from .graph import assemble, build_graph
from .model import family_from_config
from .numeric import unitarity_defect
from .oracle import H_MAX, H_MIN, oracle_channel
from .spectral import DEFAULT_WINDOW, find_crossings

STOCHASTIC_TOL = 1e-9


@dataclass
class ExperimentConfig:
    family: object  # built-in name or inline mapping
    h_values: list
    mu_values: list
    interval: tuple | None = None
    oracle_tol: float = 1e-9
    output_path: str | None = None
    window: float = DEFAULT_WINDOW
    workers: int = 1

    def __post_init__(self):
        if not self.h_values:
            raise ConfigError("h_values is empty")
        if not self.mu_values:
            raise ConfigError("mu_values is empty")
        try:
            self.h_values = [float(h) for h in self.h_values]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad h value: {exc}") from exc
        for h in self.h_values:
            if not H_MIN <= h <= H_MAX:
                raise ConfigError(f"h = {h} outside [{H_MIN}, {H_MAX}]")
        mus = []
        for mu in self.mu_values:
            vec = np.atleast_1d(np.asarray(mu, dtype=float)).tolist()
            mus.append(tuple(vec))
        if len({len(m) for m in mus}) != 1:
            raise ConfigError("mu vectors of different lengths")
        self.mu_values = mus
        if not self.oracle_tol > 0:
            raise ConfigError("oracle_tol must be positive")
        if self.interval is not None:
            if len(self.interval) != 2:
                raise ConfigError("interval must have two endpoints")
            self.interval = (float(self.interval[0]), float(self.interval[1]))

    def build_family(self):
        f = family_from_config(self.family)
        if len(self.mu_values[0]) != f.d:
            raise ConfigError(f"mu vectors have length {len(self.mu_values[0])}, family needs {f.d}")
        return f


_KEYS = {"family", "h_values", "mu_values", "interval", "oracle_tol", "output_path", "window", "workers"}


def config_from_mapping(d):
    if not isinstance(d, dict):
        raise ConfigError("config must be a mapping")
    extra = set(d) - _KEYS
    if extra:
        raise ConfigError(f"unknown config keys {sorted(extra)}")
    for key in ("family", "h_values", "mu_values"):
        if key not in d:
            raise ConfigError(f"config lacks {key!r}")
    return ExperimentConfig(**d)


def load_config(path):
    """Read a YAML (or JSON) experiment file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        d = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    except (ValueError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return config_from_mapping(d)


@dataclass
class Record:
    h: float
    mu: tuple
    gamma0: tuple
    p_pred: np.ndarray
    p_oracle: np.ndarray
    sup_err: float
    defect_pred: float
    defect_oracle: float
    est_error: float
    flagged: bool
    s_pred: np.ndarray = field(repr=False, default=None)
    s_oracle: np.ndarray = field(repr=False, default=None)

    def to_json(self):
        return {
            "h": self.h,
            "mu": list(self.mu),
            "gamma0": list(self.gamma0),
            "p_pred": self.p_pred.tolist(),
            "p_oracle": self.p_oracle.tolist(),
            "sup_err": self.sup_err,
            "defect_pred": self.defect_pred,
            "defect_oracle": self.defect_oracle,
            "est_error": self.est_error,
            "flagged": self.flagged,
        }


@dataclass
class ValidationReport:
    records: list
    convergence_order: float | None = None

    def sup_err_by_h(self):
        out = {}
        for r in self.records:
            out[r.h] = max(out.get(r.h, 0.0), r.sup_err)
        return out

    def to_json(self):
        return {
            "records": [r.to_json() for r in self.records],
            "convergence_order": self.convergence_order,
        }


def _stochastic_defect(p):
    return max(float(np.max(np.abs(p.sum(axis=0) - 1))), float(np.max(np.abs(p.sum(axis=1) - 1))))


def _with_context(exc, h, mu):
    where = f"[h={h!r}, mu={list(mu)!r}]" if h is not None else f"[mu={list(mu)!r}]"
    exc.args = (f"{where} {exc.args[0] if exc.args else ''}",) + tuple(exc.args[1:])
    return exc


def _run_mu(family, mu, h_values, tol, interval, window, crossings):
    """All h-values of one mu (the graph is h-independent)."""
    try:
        g = build_graph(family, mu, interval=interval, window=window, crossings=crossings)
    except BSPhaseError as exc:
        raise _with_context(exc, None, mu)
    gammas = tuple(v.data.gamma0 for v in g.vertices)
    out = []
    for h in h_values:
        try:
            s_pred = assemble(g, h).s_pred
            r = oracle_channel(family, mu, h, tol=tol, interval=g.interval)
        except BSPhaseError as exc:
            raise _with_context(exc, h, mu)
        p_pred = np.abs(s_pred) ** 2
        p_oracle = np.abs(r.s_channel) ** 2
        out.append(
            Record(
                h=h,
                mu=tuple(mu),
                gamma0=gammas,
                p_pred=p_pred,
                p_oracle=p_oracle,
                sup_err=float(np.max(np.abs(p_pred - p_oracle))),
                defect_pred=unitarity_defect(s_pred),
                defect_oracle=unitarity_defect(r.s_raw),
                est_error=r.est_error,
                flagged=_stochastic_defect(p_oracle) > STOCHASTIC_TOL,
                s_pred=s_pred,
                s_oracle=r.s_channel,
            )
        )
    return out


def run_validation(cfg: ExperimentConfig) -> ValidationReport:
    """Prediction and oracle at every grid point; records ordered h outer, mu inner."""
    f = cfg.build_family()
    interval = cfg.interval or f.domain
    crossings = find_crossings(f, interval)
    args = [(f, mu, cfg.h_values, cfg.oracle_tol, interval, cfg.window, crossings) for mu in cfg.mu_values]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            per_mu = list(pool.map(_run_mu, *zip(*args)))
    else:
        per_mu = [_run_mu(*a) for a in args]
    records = [per_mu[i][k] for k in range(len(cfg.h_values)) for i in range(len(cfg.mu_values))]
    return ValidationReport(records)


def _prob_names(prefix, n):
    sep = "" if n <= 9 else "_"
    return [f"{prefix}_{k + 1}{sep}{j + 1}" for k in range(n) for j in range(n)]


def report_rows(report: ValidationReport):
    """Header and rows of the sweep table (floats kept as Python floats)."""
    first = report.records[0]
    n = first.p_pred.shape[0]
    d = len(first.mu)
    mu_names = ["mu"] if d == 1 else [f"mu_{i + 1}" for i in range(d)]
    header = (
        ["h"] + mu_names + [f"gamma0_{v + 1}" for v in range(len(first.gamma0))]
        + _prob_names("p_pred", n) + _prob_names("p_oracle", n)
        + ["sup_err", "defect_pred", "defect_oracle"]
    )
    rows = []
    for r in report.records:
        rows.append(
            [r.h] + list(r.mu) + list(r.gamma0)
            + [float(x) for x in r.p_pred.ravel()] + [float(x) for x in r.p_oracle.ravel()]
            + [r.sup_err, r.defect_pred, r.defect_oracle]
        )
    return header, rows


def sweep_csv(cfg: ExperimentConfig, path=None, report=None):
    """Write the sweep table as CSV plus a JSON mirror; returns the CSV path.

    Floats use ``repr`` (shortest round-trip decimal) so reruns are
    byte-identical.
    """
    path = path or cfg.output_path
    if not path:
        raise ConfigError("no output path given")
    if report is None:
        report = run_validation(cfg)
    header, rows = report_rows(report)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) for x in row])
    path = Path(path)
    try:
        path.write_text(buf.getvalue())
        path.with_suffix(".json").write_text(
            json.dumps({"header": header, "rows": rows}, indent=1) + "\n"
        )
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc
    return path


def fit_convergence(data, min_points=4, min_decades=1.0):
    """Least-squares slope of log(err) against log(h).

    ``data`` is a :class:`ValidationReport` (the sup error over all mu at each
    h is used) or a sequence of ``(h, err)`` pairs.
    """
    if isinstance(data, ValidationReport):
        pairs = sorted(data.sup_err_by_h().items())
    else:
        pairs = sorted((float(h), float(e)) for h, e in data)
    if len(pairs) < min_points:
        raise DomainError(f"need at least {min_points} h-values, got {len(pairs)}")
    h = np.array([p[0] for p in pairs])
    err = np.array([p[1] for p in pairs])
    if np.any(h <= 0) or np.any(err <= 0) or not np.all(np.isfinite(err)):
        raise NumericalError("degenerate fit: nonpositive or non-finite values")
    span = math.log10(h.max() / h.min())
    if span < min_decades - 1e-12:
        raise DomainError(f"h-values span {span:.2f} decades, need {min_decades}")
    slope = np.polyfit(np.log(h), np.log(err), 1)[0]
    return float(slope)
