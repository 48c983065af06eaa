"""Seeded scaling experiments: trial execution, slope fits and result files."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .config import ConfigError, ModelSpec, check_keys, parse_model, parse_sql
from .heisenberg import hhkt_learn
from .oracle import BudgetExceeded, OracleHandle
from .sql import SqlConfig, sql_learn

CSV_HEADER = ("epsilon", "trial", "seed", "total_time", "max_abs_error", "success", "wall_clock_s")
MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(master: int, *parts: int) -> int:
    h = splitmix64(master & MASK64)
    for p in parts:
        h = splitmix64(h ^ (p & MASK64))
    return h


# configuration ---------------------------------------------------------------


@dataclass(frozen=True)
class BenchConfig:
    model: ModelSpec
    protocol: str = "heisenberg"
    epsilons: tuple[float, ...] = (0.125, 0.0625)
    trials: int = 1
    seed: int = 0
    sql: SqlConfig = field(default_factory=SqlConfig)
    confidence: float = 1 / 24
    clamp: str = "clip"
    sql_delta: float = 0.05
    budget_cap: float = 1e13
    workers: int = 1
    record_wall_clock: bool = False
    out: str | None = None

    def __post_init__(self):
        if self.protocol not in ("heisenberg", "sql"):
            raise ConfigError(f"protocol must be 'heisenberg' or 'sql', got {self.protocol!r}")
        eps = self.epsilons
        if not eps or any(not 0 < e < 1 for e in eps):
            raise ConfigError("epsilons must lie in (0, 1)")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("epsilons must be strictly decreasing")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.clamp not in ("clip", "zero"):
            raise ConfigError(f"clamp must be 'clip' or 'zero', got {self.clamp!r}")


BENCH_KEYS = {
    "protocol", "epsilons", "trials", "seed", "confidence", "clamp", "sql_delta",
    "budget_cap", "workers", "record_wall_clock", "out",
}


def bench_config(data: dict, base: Path | None = None) -> BenchConfig:
    """Build a :class:`BenchConfig` from the ``[model]``, ``[bench]`` and ``[sql]`` tables."""
    if "model" not in data:
        raise ConfigError("missing [model] section")
    bench = dict(data.get("bench", {}))
    check_keys(bench, BENCH_KEYS, "bench")
    if "epsilons" in bench:
        bench["epsilons"] = tuple(float(x) for x in bench["epsilons"])
    model, sql = parse_model(data["model"], base), parse_sql(data.get("sql", {}))
    try:
        return BenchConfig(model=model, sql=sql, **bench)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad [bench] section: {exc}") from None


# trials ------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingRecord:
    epsilon: float
    trial: int
    seed: int
    total_time: float
    max_abs_error: float
    success: bool
    wall_clock_s: float | None = None


def run_trial(cfg: BenchConfig, eps_index: int, trial: int) -> ScalingRecord:
    eps = cfg.epsilons[eps_index]
    seed = derive_seed(cfg.seed, eps_index, trial)
    rng = np.random.default_rng(seed)
    base = cfg.model.build()
    u = rng.uniform(-1.0, 1.0, size=base.n_params)
    hidden = base.with_params(u)
    oracle = OracleHandle(hidden, seed=rng, budget_cap=cfg.budget_cap)
    sql_cfg = replace(cfg.sql, budget_cap=cfg.budget_cap)
    start = time.perf_counter()
    try:
        if cfg.protocol == "heisenberg":
            est = hhkt_learn(oracle, eps, cfg.confidence, sql_cfg, clamp=cfg.clamp).u_tilde
        else:
            est = sql_learn(oracle, eps, cfg.sql_delta, sql_cfg)
        err = float(np.max(np.abs(est - u)))
        ok = err <= eps
    except BudgetExceeded:
        err, ok = float("nan"), False
    wall = time.perf_counter() - start
    return ScalingRecord(eps, trial, seed, oracle.total_time(), err, ok, wall if cfg.record_wall_clock else None)


def _run_job(args):
    cfg, i, k = args
    return run_trial(cfg, i, k)


def run_scaling(cfg: BenchConfig) -> list[ScalingRecord]:
    jobs = [(cfg, i, k) for i in range(len(cfg.epsilons)) for k in range(cfg.trials)]
    if cfg.workers == 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(_run_job, jobs))


# fits and output --------------------------------------------------------------


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    n_points: int


def fit_slope(x: Sequence[float], y: Sequence[float]) -> SlopeFit:
    """OLS slope of ``y`` on ``x`` after averaging ``y`` over repeated abscissae."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xs = np.unique(x)
    if len(xs) < 3:
        raise ValueError("need at least three distinct abscissae")
    ys = np.array([y[x == v].mean() for v in xs])
    a = np.vstack([xs, np.ones_like(xs)]).T
    (slope, icpt), *_ = np.linalg.lstsq(a, ys, rcond=None)
    resid = ys - (slope * xs + icpt)
    sxx = np.sum((xs - xs.mean()) ** 2)
    stderr = math.sqrt(max(0.0, float(resid @ resid)) / (len(xs) - 2) / sxx)
    return SlopeFit(float(slope), stderr, float(icpt), len(xs))


def fit_records(records: Sequence[ScalingRecord]) -> SlopeFit:
    """Exponent of total time in ``1/eps`` (log2 axes, log-time averaged per eps)."""
    x = [math.log2(1 / r.epsilon) for r in records]
    y = [math.log2(r.total_time) for r in records]
    return fit_slope(x, y)


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def records_to_csv(records: Sequence[ScalingRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])
    return buf.getvalue()


def records_to_json(records: Sequence[ScalingRecord], fit: SlopeFit | None = None) -> str:
    rows = []
    for r in records:
        d = asdict(r)
        if isinstance(d["max_abs_error"], float) and math.isnan(d["max_abs_error"]):
            d["max_abs_error"] = None
        rows.append(d)
    out = {"records": rows}
    if fit is not None:
        out["fit"] = asdict(fit)
    return json.dumps(out, indent=2, sort_keys=True) + "\n"
