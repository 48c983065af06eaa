"""Adaptive zoom-in learner reaching the Heisenberg limit with continuous control.

Round ``d`` learns the rescaled residual ``(u - u_tilde) * 2**d`` to constant
accuracy with an SQL subroutine and halves the uncertainty. Total evolution
time is dominated by the last round and scales as ``1 / eps``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .oracle import RescaledOracle
from .sql import SqlConfig, sql_learn

ROUND_EPS = 0.5


@dataclass(frozen=True)
class Schedule:
    eps: float
    c: float
    D: int
    deltas: tuple[float, ...]

    def delta(self, d: int) -> float:
        return self.deltas[d]


def make_schedule(eps: float, c: float = 1 / 24) -> Schedule:
    if not 0 < eps < 1:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    if not 0 < c <= 1 / 24:
        raise ValueError(f"confidence c must be in (0, 1/24], got {c}")
    D = math.ceil(math.log2(1 / eps))
    if 2.0**-D > eps:  # guard against log2 rounding
        D += 1
    deltas = tuple(c / 8 ** (D - d) for d in range(D + 1))
    return Schedule(eps, c, D, deltas)


@dataclass
class RoundTrace:
    d: int
    delta_d: float
    u_tilde: np.ndarray
    g_raw: np.ndarray
    g: np.ndarray
    clamped: bool
    ledger_before: float
    ledger_after: float

    @property
    def scale(self) -> float:
        return math.ldexp(1.0, -self.d)

    def to_record(self) -> dict:
        return {
            "d": self.d,
            "delta_d": self.delta_d,
            "ledger_before": self.ledger_before,
            "ledger_after": self.ledger_after,
            "clamped": self.clamped,
            "g_norm_inf": float(np.max(np.abs(self.g_raw))),
        }


@dataclass
class LearnResult:
    u_tilde: np.ndarray
    traces: list[RoundTrace] = field(default_factory=list)
    schedule: Schedule | None = None

    def __iter__(self):
        # allows ``u, traces = hhkt_learn(...)``
        yield self.u_tilde
        yield self.traces

    @property
    def control_settings(self) -> int:
        return len({(tuple(t.u_tilde), t.d) for t in self.traces})


def _clamp(g: np.ndarray, mode: str) -> tuple[np.ndarray, bool]:
    big = bool(np.max(np.abs(g)) >= 1) if len(g) else False
    if mode == "clip":
        out = np.clip(g, -1.0, 1.0)
        return out, bool(np.any(out != g))
    if mode == "zero":
        return (np.zeros_like(g) if big else g), big
    raise ValueError(f"unknown clamp mode {mode!r}")


def hhkt_learn(
    o,
    eps: float,
    c: float = 1 / 24,
    cfg: SqlConfig | None = None,
    *,
    clamp: str = "clip",
    u0: Sequence[float] | None = None,
    override: Mapping[int, Sequence[float]] | None = None,
) -> LearnResult:
    """Learn all coefficients to max error ``eps``.

    ``clamp="clip"`` projects each round's estimate onto ``[-1, 1]``;
    ``clamp="zero"`` discards the whole estimate when any component reaches 1.
    ``override`` replaces the subroutine output of selected rounds (fault injection).
    """
    cfg = cfg or SqlConfig()
    sched = make_schedule(eps, c)
    u = np.zeros(o.n_params) if u0 is None else np.asarray(u0, dtype=float).copy()
    traces = []
    for d in range(sched.D + 1):
        scale = math.ldexp(1.0, -d)
        view = RescaledOracle(o, u, scale)
        before = o.total_time()
        if override is not None and d in override:
            g_raw = np.asarray(override[d], dtype=float)
        else:
            g_raw = sql_learn(view, ROUND_EPS, sched.delta(d), cfg)
        g, clamped = _clamp(g_raw, clamp)
        traces.append(RoundTrace(d, sched.delta(d), u.copy(), g_raw, g, clamped, before, o.total_time()))
        u = u + np.ldexp(g, -d)
    return LearnResult(u, traces, sched)


def export_traces(traces: Sequence[RoundTrace], path) -> None:
    with open(path, "w") as fh:
        for t in traces:
            fh.write(json.dumps(t.to_record()) + "\n")


@dataclass(frozen=True)
class FaultReport:
    first_failure: int | None
    final_error: float
    bound: float
    within_bound: bool
    round_bound_violations: tuple[int, ...]

    @property
    def bucket(self) -> str:
        return "success" if self.first_failure is None else f"fail@{self.first_failure}"


def round_succeeded(trace: RoundTrace, u_true: Sequence[float]) -> bool:
    """Whether the subroutine met its accuracy target on the rescaled residual."""
    target = (np.asarray(u_true) - trace.u_tilde) / trace.scale
    return bool(np.max(np.abs(trace.g_raw - target)) <= ROUND_EPS)


def fault_bound_check(traces: Sequence[RoundTrace], u_true: Sequence[float]) -> FaultReport:
    u_true = np.asarray(u_true, dtype=float)
    last = traces[-1]
    final = last.u_tilde + np.ldexp(last.g, -last.d)
    err = float(np.max(np.abs(final - u_true)))
    first = next((t.d for t in traces if not round_succeeded(t, u_true)), None)
    bound = 3 * math.ldexp(1.0, -(first if first is not None else last.d + 1))
    checked = traces if first is None else traces[: first + 1]
    violations = tuple(
        t.d for t in checked if np.max(np.abs(t.u_tilde - u_true)) > t.scale
    )
    return FaultReport(first, err, bound, err <= bound, violations)
