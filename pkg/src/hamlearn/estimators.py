"""Error metrics, median-of-means boosting and the estimator conversion table."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.stats import binom


@dataclass(frozen=True)
class MaxRms:
    pass


@dataclass(frozen=True)
class TotalRms:
    pass


@dataclass(frozen=True)
class Prob2Norm:
    delta: float

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0, 1)")


@dataclass(frozen=True)
class ProbInfNorm:
    delta: float

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0, 1)")


ErrorMetric = Union[MaxRms, TotalRms, Prob2Norm, ProbInfNorm]

METRIC_NAMES = {"max-rms": MaxRms, "total-rms": TotalRms, "prob-2": Prob2Norm, "prob-inf": ProbInfNorm}


@dataclass(frozen=True)
class TrialEnsemble:
    estimates: np.ndarray  # (trials, N_p)
    u_true: np.ndarray
    seeds: tuple = ()

    def __post_init__(self):
        est = np.atleast_2d(np.asarray(self.estimates, dtype=float))
        u = np.asarray(self.u_true, dtype=float)
        if est.shape[1] != u.shape[-1]:
            raise ValueError("estimate vectors and u_true differ in length")
        object.__setattr__(self, "estimates", est)
        object.__setattr__(self, "u_true", u)

    @property
    def errors(self) -> np.ndarray:
        return self.estimates - self.u_true


def empirical_error(e: TrialEnsemble, m: ErrorMetric) -> float:
    err = e.errors
    if len(err) < 2:
        raise ValueError("need at least two trials")
    if isinstance(m, MaxRms):
        return float(np.sqrt((err**2).mean(axis=0)).max())
    if isinstance(m, TotalRms):
        return float(np.sqrt((err**2).mean(axis=0).sum()))
    if isinstance(m, Prob2Norm):
        return float(np.quantile(np.linalg.norm(err, axis=1), 1 - m.delta))
    if isinstance(m, ProbInfNorm):
        return float(np.quantile(np.abs(err).max(axis=1), 1 - m.delta))
    raise TypeError(f"unknown metric {m!r}")


def median_of_means(estimates: Sequence[Sequence[float]], groups: int) -> np.ndarray:
    """Term-wise median of the means of ``groups`` contiguous blocks."""
    est = np.atleast_2d(np.asarray(estimates, dtype=float))
    if groups < 1 or groups % 2 == 0:
        raise ValueError("the number of groups must be odd")
    if groups > len(est):
        raise ValueError(f"{groups} groups requested from {len(est)} estimates")
    # one contiguous row per parameter keeps each summation independent of the others
    cols = np.ascontiguousarray(est.T)
    means = np.array([blk.mean(axis=1) for blk in np.array_split(cols, groups, axis=1)])
    return np.median(means, axis=0)


def boosted_failure(p: float, groups: int) -> float:
    """Exact probability that a majority of ``groups`` independent copies fail."""
    return float(binom.sf(groups // 2, groups, p))


def simulate_boosting(p: float, groups: int, resamples: int, rng: np.random.Generator) -> float:
    fails = rng.random((resamples, groups)) < p
    return float(np.mean(fails.sum(axis=1) > groups // 2))


# conversion table ----------------------------------------------------------

# (from, to) -> (eps', T', delta'); expressions in eps, T, delta, delta_p, N_p
_TABLE = {
    ("total-rms", "max-rms"): ("eps", "T", None),
    ("prob-2", "max-rms"): ("eps", "T*log(1/eps)/log(1/delta)", None),
    ("prob-inf", "max-rms"): ("eps", "T*log(1/eps)/log(1/delta)", None),
    ("max-rms", "total-rms"): ("sqrt(N_p)*eps", "T", None),
    ("prob-2", "total-rms"): ("eps", "T*log(N_p)*log(1/eps)/log(1/delta)", None),
    ("prob-inf", "total-rms"): ("sqrt(N_p)*eps", "T*log(N_p)*log(1/eps)/log(1/delta)", None),
    ("max-rms", "prob-2"): ("sqrt(N_p)*eps", "T*log(N_p)*log(1/delta_p)", "delta_p"),
    ("total-rms", "prob-2"): ("eps", "T*log(1/delta_p)", "delta_p"),
    ("prob-inf", "prob-2"): ("sqrt(N_p)*eps", "T", "delta"),
    ("max-rms", "prob-inf"): ("eps", "T*log(N_p)*log(1/delta_p)", "delta_p"),
    ("total-rms", "prob-inf"): ("eps", "T*log(1/delta_p)", "delta_p"),
    ("prob-2", "prob-inf"): ("eps", "T", "delta"),
}


@dataclass(frozen=True)
class Conversion:
    eps: float
    T: float
    delta: float | None
    eps_formula: str
    T_formula: str
    delta_formula: str | None


def _log(x: float) -> float:
    # unit-constant asymptotics: a log factor never shrinks the cost
    return max(1.0, math.log(x))


def conversion_formula(src: str, dst: str) -> tuple[str, str, str | None]:
    try:
        return _TABLE[(src, dst)]
    except KeyError:
        raise ValueError(f"no conversion from {src!r} to {dst!r}") from None


def convert_cost(
    src: str,
    dst: str,
    T: float,
    eps: float,
    delta: float | None = None,
    n_params: int = 1,
    delta_target: float | None = None,
) -> Conversion:
    """Apply one table entry with all hidden constants set to 1."""
    eps_f, t_f, d_f = conversion_formula(src, dst)
    env = {
        "eps": eps,
        "T": T,
        "delta": delta if delta is not None else float("nan"),
        "delta_p": delta_target if delta_target is not None else float("nan"),
        "N_p": n_params,
        "sqrt": math.sqrt,
        "log": _log,
    }
    if "delta_p" in t_f and delta_target is None:
        raise ValueError("this conversion needs the target failure probability")
    if "delta" in t_f.replace("delta_p", "") and delta is None:
        raise ValueError("this conversion needs the source failure probability")
    ev = lambda expr: float(eval(expr, {"__builtins__": {}}, env))  # noqa: E731
    return Conversion(ev(eps_f), ev(t_f), ev(d_f) if d_f else None, eps_f, t_f, d_f)
