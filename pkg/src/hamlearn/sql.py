"""Short-time learner at the standard quantum limit.

Each Hamiltonian term gets one experiment: a product stabilizer state and a
single-qubit observable whose expectation has initial slope ``sum_b M_ab u_b``.
The slope is recovered from a low-degree polynomial fit over a short time
grid, boosted to high confidence by a term-wise median over repetitions, and
the linear system ``M g = slopes`` is solved by least squares.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .oracle import BudgetExceeded, ExperimentSpec, NoControl
from .pauli import PauliString, StabilizerProductState, commutator, stabilizer_expect
from .sim import ProductStabilizer

_NEXT_AXIS = {"X": "Y", "Y": "Z", "Z": "X"}


class DesignError(ValueError):
    pass


@dataclass(frozen=True)
class DesignRow:
    prep: StabilizerProductState
    observable: PauliString
    target: int


@dataclass(frozen=True)
class SqlConfig:
    """Tuning knobs for :func:`sql_learn`.

    ``t_c=None`` picks ``0.2 / max(1, dual degree)``. ``n_nodes=None`` uses
    ``d_fit + 1`` nodes. ``stat_fraction`` is the share of the error budget
    given to shot noise, the rest covering the fit bias. ``copy_failure`` is
    the failure probability allowed for one repetition before the median.
    """

    t_c: float | None = None
    d_fit: int = 4
    n_nodes: int | None = None
    stat_fraction: float = 0.5
    copy_failure: float = 0.25
    mom_const: float = 8.0
    budget_cap: float = 1e13

    def __post_init__(self):
        if self.t_c is not None and not self.t_c > 0:
            raise ValueError("t_c must be > 0")
        if self.d_fit < 1:
            raise ValueError("d_fit must be >= 1")
        if self.n_nodes is not None and self.n_nodes < self.d_fit + 1:
            raise ValueError("the grid needs at least d_fit + 1 nodes")
        if not 0 < self.stat_fraction <= 1:
            raise ValueError("stat_fraction must be in (0, 1]")
        if not 0 < self.copy_failure < 0.5:
            raise ValueError("copy_failure must be in (0, 1/2)")

    def horizon(self, dual_degree: int) -> float:
        return self.t_c if self.t_c is not None else 0.2 / max(1, dual_degree)

    @property
    def nodes(self) -> int:
        return self.n_nodes if self.n_nodes is not None else self.d_fit + 1


def build_design(terms: Sequence[PauliString]) -> tuple[list[DesignRow], np.ndarray]:
    terms = list(terms)
    if not terms:
        raise DesignError("empty term list")
    if len(set(terms)) != len(terms) or any(p.is_identity for p in terms):
        raise DesignError("terms must be distinct and non-identity")
    n = terms[0].n
    rows = []
    for a, p in enumerate(terms):
        q = min(p.support)
        obs = PauliString.single(n, q, _NEXT_AXIS[p.letters[q]])
        half = commutator(p, obs)
        # i[P, Q] / 2 = sigma R with sigma = +-1
        sigma = int(round((1j * half.coefficient / 2).real))
        stabs = []
        for k, c in enumerate(half.string.letters):
            if c == "I":
                stabs.append((1, "Z"))
            else:
                stabs.append((sigma if k == q else 1, c))
        rows.append(DesignRow(StabilizerProductState(tuple(stabs)), obs, a))
    m = np.array([[slope_coefficient(p, r) for p in terms] for r in rows])
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > 1e6:
        raise DesignError(f"design matrix is rank deficient or ill-conditioned (cond={cond:.3g})")
    return rows, m


def slope_coefficient(p: PauliString, row: DesignRow) -> float:
    """``i <[P, Q]>`` on the row's prep state."""
    comm = commutator(p, row.observable)
    if comm.is_zero:
        return 0.0
    val = 1j * comm.coefficient * stabilizer_expect(comm.string, row.prep)
    return float(val.real)


def chebyshev_nodes(t_c: float, k: int) -> np.ndarray:
    """Chebyshev extrema mapped to ``(0, t_c]``, excluding the origin."""
    j = np.arange(1, k + 1)
    return t_c * (1 - np.cos(j * np.pi / k)) / 2


def slope_weights(nodes: np.ndarray, d_fit: int) -> np.ndarray:
    """Weights ``w`` with ``w @ (f(nodes) - f(0))`` the least-squares slope at 0."""
    scale = nodes.max()
    v = np.vander(nodes / scale, d_fit + 1, increasing=True)[:, 1:]
    return np.linalg.pinv(v)[0] / scale


def hoeffding_shots(tol: float, failure: float) -> int:
    """Shots so a +-1 sample mean is within ``tol`` with probability ``1 - failure``."""
    return math.ceil(2 * math.log(2 / failure) / tol**2)


def median_groups(n_params: int, delta: float, const: float = 8.0) -> int:
    k = math.ceil(const * math.log(2 * n_params / delta))
    return k + 1 - k % 2


@dataclass(frozen=True)
class _Plan:
    nodes: np.ndarray
    weights: np.ndarray
    shots: int


def _plan(cfg: SqlConfig, dual_degree: int, slope_tol: float, delta_row: float) -> _Plan:
    nodes = chebyshev_nodes(cfg.horizon(dual_degree), cfg.nodes)
    w = slope_weights(nodes, cfg.d_fit)
    node_tol = slope_tol / np.abs(w).sum()
    return _Plan(nodes, w, hoeffding_shots(node_tol, delta_row / (2 * len(nodes))))


def estimate_derivative(o, row: DesignRow, cfg: SqlConfig, delta_row: float, slope_tol: float) -> float:
    """Fitted ``d<Q>/dt`` at ``t = 0`` for one design row."""
    plan = _plan(cfg, o.dual_degree, slope_tol, delta_row)
    return _fit_slope(o, row, plan)


def _fit_slope(o, row: DesignRow, plan: _Plan) -> float:
    f0 = stabilizer_expect(row.observable, row.prep)
    prep = ProductStabilizer(row.prep)
    vals = np.array(
        [o.probe(ExperimentSpec(prep, NoControl(float(t)), row.observable), plan.shots)[0] for t in plan.nodes]
    )
    return float(plan.weights @ (vals - f0))


def planned_cost(o, eps: float, delta: float, cfg: SqlConfig) -> float:
    """Ledger time one :func:`sql_learn` call will charge through ``o``."""
    _, m = build_design(o.terms)
    plan = _plan(cfg, o.dual_degree, _slope_tol(m, eps, cfg), cfg.copy_failure / len(m))
    k = median_groups(len(m), delta, cfg.mom_const)
    return k * len(m) * plan.shots * float(plan.nodes.sum()) * o.time_factor


def _slope_tol(m: np.ndarray, eps: float, cfg: SqlConfig) -> float:
    pinv_norm = np.abs(np.linalg.pinv(m)).sum(axis=1).max()
    return cfg.stat_fraction * eps / pinv_norm


def sql_learn(o, eps: float, delta: float, cfg: SqlConfig | None = None) -> np.ndarray:
    """Estimate the view's parameters to max error ``eps`` with probability ``1 - delta``."""
    cfg = cfg or SqlConfig()
    if not eps > 0:
        raise ValueError("eps must be > 0")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    rows, m = build_design(o.terms)
    plan = _plan(cfg, o.dual_degree, _slope_tol(m, eps, cfg), cfg.copy_failure / len(rows))
    k = median_groups(len(rows), delta, cfg.mom_const)
    projected = o.total_time() + planned_cost(o, eps, delta, cfg)
    if projected > cfg.budget_cap:
        raise BudgetExceeded(f"sql_learn would push the ledger to {projected:.3g} > cap {cfg.budget_cap:.3g}")
    copies = np.empty((k, len(rows)))
    for i in range(k):
        slopes = np.array([_fit_slope(o, row, plan) for row in rows])
        copies[i] = np.linalg.lstsq(m, slopes, rcond=None)[0]
    return np.median(copies, axis=0)
