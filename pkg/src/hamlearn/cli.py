"""Command-line entry point: ``hamlearn <subcommand> [options]``.

Exit codes: 0 success, 1 usage error, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import bench as bench_mod
from .config import ConfigError, check_keys, load_toml, parse_model, parse_sql
from .eth import (
    EthError,
    EthReport,
    ThermalContext,
    energy_window,
    fit_envelope,
    gc_autocorr,
    level_stats,
    low_rank_search,
    od_sweep,
    rank_formula,
    effective_rank,
    a_d_vector,
    reflection_permutation,
    reflection_sectors,
)
from .estimators import METRIC_NAMES, convert_cost
from .fisher import (
    DegenerateSpectrum,
    a_operators,
    directional_qfi,
    eigen_derivatives,
    qfi_growth_bound,
    qfi_matrix,
    spectrum_preserving_directions,
)
from .heisenberg import hhkt_learn
from .models import single_qubit_xyz
from .oracle import BudgetExceeded, OracleError, OracleHandle
from .pauli import PauliError, PauliString, StabilizerProductState
from .sim import SimulationError, build_dense, eig, ghz_vector, random_state
from .sql import DesignError, sql_learn

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
SEED_ENV = "HAMLEARN_SEED"

NUMERICAL_ERRORS = (
    BudgetExceeded,
    DegenerateSpectrum,
    DesignError,
    EthError,
    OracleError,
    SimulationError,
    np.linalg.LinAlgError,
    FloatingPointError,
)

SECTION_KEYS = {
    "learn": {"protocol", "eps", "delta", "confidence", "clamp", "seed", "budget_cap"},
    "qfi": {"t", "state"},
    "nogo": {"t_max", "n_t", "n_states", "layers", "seed"},
    "eth": {"beta1", "beta2", "t_grid", "observable", "rank_beta1", "rank_beta2", "rank_t", "deltas"},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# helpers -------------------------------------------------------------------------


def _seed(args, section: dict) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return _u64(env)
        except argparse.ArgumentTypeError:
            raise ConfigError(f"{SEED_ENV}={env!r} is not an unsigned 64-bit integer") from None
    seed = section.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return seed


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _load(args, section: str, need_model: bool = True) -> tuple[dict, dict, Any]:
    """Return (whole config, subcommand table, ModelSpec or None)."""
    if args.config is None:
        if need_model:
            raise UsageError(f"{args.command} requires --config")
        return {}, {}, None
    data = load_toml(args.config)
    allowed = {"model", "sql", "bench"} | set(SECTION_KEYS)
    check_keys(data, allowed, "top level")
    base = Path(args.config).resolve().parent
    model = parse_model(data["model"], base) if "model" in data else None
    if need_model and model is None:
        raise ConfigError(f"{args.config}: missing [model] section")
    table = data.get(section, {})
    check_keys(table, SECTION_KEYS[section], section)
    return data, table, model


def _json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _state(spec: str, n: int) -> np.ndarray:
    spec = spec.strip()
    if spec == "plus":
        return StabilizerProductState(((1, "X"),) * n).to_vector()
    if spec == "zero":
        return StabilizerProductState.zeros(n).to_vector()
    if spec == "ghz":
        return ghz_vector(n)
    try:
        st = StabilizerProductState.parse(spec)
    except PauliError as exc:
        raise ConfigError(f"bad state {spec!r}: {exc}") from None
    if st.n != n:
        raise ConfigError(f"state {spec!r} has {st.n} qubits, model has {n}")
    return st.to_vector()


# subcommands ---------------------------------------------------------------------


def cmd_learn(args) -> int:
    data, table, spec = _load(args, "learn")
    protocol = args.protocol or table.get("protocol", "heisenberg")
    if protocol not in ("heisenberg", "sql"):
        raise ConfigError(f"protocol must be 'heisenberg' or 'sql', got {protocol!r}")
    eps = args.eps if args.eps is not None else table.get("eps", 0.125)
    if not 0 < eps < 1:
        raise ConfigError("eps must lie in (0, 1)")
    delta = table.get("delta", 0.05)
    seed = _seed(args, table)
    sql_cfg = parse_sql(data.get("sql", {}))
    if "budget_cap" in table:
        sql_cfg = replace(sql_cfg, budget_cap=float(table["budget_cap"]))
    base = spec.build()
    rng = np.random.default_rng(seed)
    # without explicit coefficients the hidden parameters are drawn from the seed
    u = base.u if spec.has_params else rng.uniform(-1, 1, base.n_params)
    hidden = base.with_params(u)
    o = OracleHandle(hidden, seed=rng, budget_cap=sql_cfg.budget_cap)
    if protocol == "heisenberg":
        est = hhkt_learn(
            o, eps, table.get("confidence", 1 / 24), sql_cfg, clamp=table.get("clamp", "clip")
        ).u_tilde
    else:
        est = sql_learn(o, eps, delta, sql_cfg)
    terms = [str(p) for p in hidden.terms]
    err = float(np.max(np.abs(est - u)))
    if args.format == "csv":
        rows = [(t, float(e), float(x)) for t, e, x in zip(terms, est, u)]
        text = _csv(("term", "estimate", "truth"), rows)
        print(f"total_time={o.total_time()!r} max_abs_error={err!r}", file=sys.stderr)
    else:
        text = _json(
            {
                "protocol": protocol,
                "epsilon": eps,
                "seed": seed,
                "terms": terms,
                "u_tilde": est.tolist(),
                "u_true": u.tolist(),
                "total_time": o.total_time(),
                "max_abs_error": err,
            }
        )
    _emit(args, text)
    return EXIT_OK


def cmd_qfi(args) -> int:
    _, table, spec = _load(args, "qfi")
    h = spec.build()
    t = args.t if args.t is not None else table.get("t", 1.0)
    psi = _state(args.state or table.get("state", "plus"), h.n)
    rep = qfi_matrix(a_operators(h, t), psi)
    terms = [str(p) for p in h.terms]
    if args.format == "csv":
        rows = [(terms[a], *map(float, rep.matrix[a])) for a in range(len(terms))]
        text = _csv(("term", *terms), rows)
    else:
        text = _json(
            {
                "t": t,
                "terms": terms,
                "matrix": rep.matrix.tolist(),
                "eigenvalues": rep.eigenvalues.tolist(),
                "per_param_bounds": rep.per_param_bounds.tolist(),
                "trace_bound": rep.trace_bound,
                "null_directions": rep.null_directions.T.tolist(),
            }
        )
    _emit(args, text)
    return EXIT_OK


def cmd_nogo(args) -> int:
    _, table, spec = _load(args, "nogo", need_model=False)
    h = spec.build() if spec is not None else single_qubit_xyz((0.0, 0.0, 1.0))
    t_max = float(table.get("t_max", 50.0))
    n_t = int(table.get("n_t", 100))
    n_states = int(table.get("n_states", 50))
    layers = int(table.get("layers", 1))
    rng = np.random.default_rng(_seed(args, table))
    null = spectrum_preserving_directions(h)
    t_grid = np.linspace(0.0, t_max, n_t)
    states = [random_state(h.n, rng) for _ in range(n_states)]
    sd = eig(build_dense(h))
    rows = []
    worst = np.zeros(null.shape[1])
    for t in t_grid:
        ops = a_operators(h, float(t), sd)
        for k in range(null.shape[1]):
            v = null[:, k]
            worst[k] = max(worst[k], max(directional_qfi(ops, psi, v) for psi in states))
    for k in range(null.shape[1]):
        v = null[:, k]
        dd = eigen_derivatives(h, v)
        rows.append(
            {
                "direction": v.tolist(),
                "max_qfi": float(worst[k]),
                "bound": qfi_growth_bound(dd, t_max, layers),
                "norm_dD": dd.norm_dD,
                "norm_dW": dd.norm_dW,
            }
        )
    if args.format == "csv":
        text = _csv(
            ("direction", "max_qfi", "bound", "norm_dD", "norm_dW"),
            [(" ".join(repr(x) for x in r["direction"]), r["max_qfi"], r["bound"], r["norm_dD"], r["norm_dW"]) for r in rows],
        )
    else:
        text = _json({"terms": [str(p) for p in h.terms], "t_max": t_max, "layers": layers, "directions": rows})
    _emit(args, text)
    return EXIT_OK


def _observable(h, name) -> PauliString:
    if isinstance(name, int):
        if not 0 <= name < h.n_params:
            raise ConfigError(f"observable index {name} out of range")
        return h.terms[name]
    try:
        p = PauliString(name)
    except PauliError as exc:
        raise ConfigError(f"bad observable {name!r}: {exc}") from None
    if p.n != h.n:
        raise ConfigError(f"observable {name!r} acts on {p.n} qubits, model has {h.n}")
    return p


def cmd_eth(args) -> int:
    _, table, spec = _load(args, "eth")
    h = spec.build()
    dense = build_dense(h)
    perm = reflection_permutation(h.n)
    if np.allclose(dense, dense[np.ix_(perm, perm)]):
        sectors = reflection_sectors(dense, h.n)
    else:
        sectors = [np.linalg.eigvalsh(dense)]
    try:
        r = level_stats(sectors)
    except EthError as exc:
        print(f"warning: r-ratio skipped: {exc}", file=sys.stderr)
        r = None
    ctx = ThermalContext.from_model(h)
    op = _observable(h, table.get("observable", 0))
    t_grid = [float(x) for x in table.get("t_grid", [10.0, 20.0, 50.0, 100.0, 200.0])]
    win = energy_window(ctx, table.get("beta1", -0.1), table.get("beta2", 0.1))
    sweep = od_sweep(ctx, op, win, t_grid)
    mid = int(win.indices[len(win.indices) // 2])
    gc = gc_autocorr(ctx, op, mid, t_grid)
    rank_win = energy_window(ctx, table.get("rank_beta1", 0.0), table.get("rank_beta2", 1.0))
    rank_t = float(table.get("rank_t", 10.0))
    a_d = a_d_vector(ctx, h.terms, rank_t, rank_win)
    fit = fit_envelope(ctx, h.terms, np.linspace(rank_win.beta1, rank_win.beta2, 5))
    weights = np.full(len(rank_win.indices), 1 / len(rank_win.indices))
    default_deltas = [rank_t * math.sqrt(h.n_params) * 2.0**-k for k in (2, 4, 6, 8, 10)]
    table_rows = []
    for delta in table.get("deltas", default_deltas):
        lr = low_rank_search(ctx, h.terms, rank_t, rank_win, delta, a_d=a_d)
        table_rows.append(
            {
                "delta": delta,
                "rank": None if lr is None else lr.rank,
                "achieved": None if lr is None else lr.delta,
                "count": effective_rank(a_d, weights, delta),
                "formula": rank_formula(fit.B, fit.gamma, rank_win.beta2 - rank_win.beta1, rank_t, h.n_params, delta),
            }
        )
    rep = EthReport(
        r_ratio=r,
        t_grid=t_grid,
        aod_norm_over_sqrt_t=(sweep.od_norm / np.sqrt(sweep.t)).tolist(),
        F=sweep.F.tolist(),
        gc_running_avg=gc.running_avg.tolist(),
        rank_error_table=table_rows,
    )
    if args.format == "csv":
        rows = list(zip(t_grid, rep.aod_norm_over_sqrt_t, rep.F, rep.gc_running_avg))
        text = _csv(("t", "aod_norm_over_sqrt_t", "F", "gc_running_avg"), [tuple(map(float, r_)) for r_ in rows])
    else:
        text = json.dumps(json.loads(rep.to_json()), indent=2, sort_keys=True) + "\n"
    _emit(args, text)
    return EXIT_OK


def cmd_bench(args) -> int:
    data = load_toml(args.config) if args.config else None
    if data is None:
        raise UsageError("bench requires --config")
    check_keys(data, {"model", "sql", "bench"} | set(SECTION_KEYS), "top level")
    for name in SECTION_KEYS:
        check_keys(data.get(name, {}), SECTION_KEYS[name], name)
    cfg = bench_mod.bench_config(data, Path(args.config).resolve().parent)
    cfg = replace(cfg, seed=_seed(args, data.get("bench", {})))
    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    records = bench_mod.run_scaling(cfg)
    fit = None
    if len(set(cfg.epsilons)) >= 3 and all(r.total_time > 0 for r in records):
        fit = bench_mod.fit_records(records)
        print(f"slope={fit.slope:.4f} stderr={fit.stderr:.4f}", file=sys.stderr)
    if args.format == "json":
        text = bench_mod.records_to_json(records, fit)
    else:
        text = bench_mod.records_to_csv(records)
    out = args.out or cfg.out
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_convert(args) -> int:
    if args.src not in METRIC_NAMES or args.dst not in METRIC_NAMES:
        raise UsageError(f"metrics must be one of {', '.join(METRIC_NAMES)}")
    try:
        conv = convert_cost(args.src, args.dst, args.T, args.eps, args.delta, args.np, args.delta_target)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.format == "csv":
        text = _csv(
            ("from", "to", "eps", "T", "delta", "eps_formula", "T_formula", "delta_formula"),
            [(args.src, args.dst, conv.eps, conv.T, conv.delta, conv.eps_formula, conv.T_formula, conv.delta_formula)],
        )
    else:
        text = _json(
            {
                "from": args.src,
                "to": args.dst,
                "eps": conv.eps,
                "T": conv.T,
                "delta": conv.delta,
                "formulas": {"eps": conv.eps_formula, "T": conv.T_formula, "delta": conv.delta_formula},
            }
        )
    _emit(args, text)
    return EXIT_OK


# parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--seed", type=_u64, help=f"master seed (overrides {SEED_ENV} and the config)")
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default=None)

    p = _Parser(prog="hamlearn", description="Hamiltonian learning experiments.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("learn", parents=[common], help="run one learning protocol")
    s.add_argument("--protocol", choices=("heisenberg", "sql"))
    s.add_argument("--eps", type=float)
    s.set_defaults(func=cmd_learn)

    s = sub.add_parser("qfi", parents=[common], help="Fisher information report")
    s.add_argument("--t", type=float)
    s.add_argument("--state", help="'plus', 'zero', 'ghz' or stabilizers like '+X -Z'")
    s.set_defaults(func=cmd_qfi)

    s = sub.add_parser("nogo", parents=[common], help="spectrum-preserving directions and bounded-QFI sweep")
    s.set_defaults(func=cmd_nogo)

    s = sub.add_parser("eth", parents=[common], help="thermalization diagnostics")
    s.set_defaults(func=cmd_eth)

    s = sub.add_parser("bench", parents=[common], help="seeded scaling benchmark")
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("convert", parents=[common], help="estimator conversion calculator")
    s.add_argument("--from", dest="src", required=True)
    s.add_argument("--to", dest="dst", required=True)
    s.add_argument("--np", type=int, default=1, help="number of parameters")
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--T", type=float, default=1.0, help="source cost")
    s.add_argument("--delta", type=float)
    s.add_argument("--delta-target", type=float)
    s.set_defaults(func=cmd_convert)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("hamlearn: a subcommand is required")
        if args.format is None:
            args.format = "csv" if args.command == "bench" else "json"
        if getattr(args, "workers", None) is not None and args.workers < 1:
            raise UsageError("--workers must be >= 1")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (ConfigError, PauliError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # remaining value errors come from out-of-range configuration values
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
