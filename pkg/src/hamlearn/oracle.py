"""Experiment oracle: hidden Hamiltonian, three control models, time ledger.

The oracle never exposes the hidden parameter vector. Every query charges its
evolution time to a ledger; the total is the cost of a learning protocol.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .pauli import HamiltonianModel, PauliString
from .sim import (
    SpectralDecomposition,
    StatePrep,
    build_dense,
    eig,
    evolve,
    plus_probability,
    prep_qubits,
    realize,
)

C_MAX = 2.0


class OracleError(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class NoControl:
    t: float

    def __post_init__(self):
        if not self.t >= 0:
            raise OracleError(f"evolution time must be >= 0, got {self.t}")


@dataclass(frozen=True)
class Discrete:
    """``V_L e^{-iH tau_L} ... V_1 e^{-iH tau_1}``; ``segments`` is ``((tau_1, V_1), ...)``."""

    segments: tuple

    def __post_init__(self):
        for tau, v in self.segments:
            if not tau >= 0:
                raise OracleError(f"segment durations must be >= 0, got {tau}")
            v = np.asarray(v)
            if v.ndim != 2 or v.shape[0] != v.shape[1]:
                raise OracleError("control unitaries must be square matrices")
            if np.max(np.abs(v.conj().T @ v - np.eye(len(v)))) > 1e-9:
                raise OracleError("control operation is not unitary")

    @property
    def L(self) -> int:
        return len(self.segments)

    @property
    def t(self) -> float:
        return math.fsum(tau for tau, _ in self.segments)


@dataclass(frozen=True)
class Continuous:
    c: tuple
    t: float

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(x) for x in self.c))
        if not self.t >= 0:
            raise OracleError(f"evolution time must be >= 0, got {self.t}")


ControlModel = Union[NoControl, Discrete, Continuous]


@dataclass(frozen=True)
class ExperimentSpec:
    prep: StatePrep
    control: ControlModel
    observable: PauliString

    def __post_init__(self):
        if self.observable.is_identity:
            raise OracleError("the observable must not be the identity")


def control_kind(control: ControlModel) -> str:
    return {NoControl: "none", Discrete: "discrete", Continuous: "continuous"}[type(control)]


class OracleHandle:
    """Single-owner experiment oracle for a hidden :class:`HamiltonianModel`.

    Parameters
    ----------
    model : HamiltonianModel
        Hidden Hamiltonian. Only its term list is public.
    seed : int or numpy Generator
        Source of measurement randomness.
    c_max : float
        Bound on ``|c_a|`` for continuous control.
    noiseless : bool
        If set, :meth:`probe` returns exact expectation values (still charging time).
    log : bool
        Keep a per-query log (see :meth:`export_log`).
    budget_cap : float, optional
        Queries that would push the ledger above this raise :class:`BudgetExceeded`.
    """

    def __init__(
        self,
        model: HamiltonianModel,
        seed=None,
        c_max: float = C_MAX,
        noiseless: bool = False,
        log: bool = False,
        budget_cap: float | None = None,
    ):
        self._model = model
        self._rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.c_max = c_max
        self.noiseless = noiseless
        self.budget_cap = budget_cap
        self._charges: list[float] = []
        self._running = 0.0
        self._log: list[dict] | None = [] if log else None
        self._cache: dict = {}
        self.max_control = 0.0
        self.relaxed_queries = 0
        self.control_settings: set = set()

    # public structure (not the parameters)
    @property
    def terms(self) -> tuple[PauliString, ...]:
        return self._model.terms

    @property
    def n(self) -> int:
        return self._model.n

    @property
    def n_params(self) -> int:
        return self._model.n_params

    @property
    def dual_degree(self) -> int:
        return self._model.dual_degree

    def total_time(self) -> float:
        return math.fsum(self._charges)

    @property
    def time_factor(self) -> float:
        """Inner-ledger time charged per unit of nominal evolution time."""
        return 1.0

    @property
    def n_queries(self) -> int:
        return len(self._charges)

    # internals
    def _decomposition(self, c: tuple | None) -> SpectralDecomposition:
        sd = self._cache.get(c)
        if sd is None:
            if len(self._cache) > 64:
                self._cache.clear()
            sd = eig(build_dense(self._model, c))
            self._cache[c] = sd
        return sd

    def _final_state(self, spec: ExperimentSpec) -> np.ndarray:
        if prep_qubits(spec.prep) != self.n or spec.observable.n != self.n:
            raise OracleError("experiment does not match the oracle's qubit count")
        psi = realize(spec.prep)
        ctl = spec.control
        if isinstance(ctl, NoControl):
            return evolve(psi, self._decomposition(None), ctl.t)
        if isinstance(ctl, Continuous):
            if len(ctl.c) != self.n_params:
                raise OracleError(f"control vector has length {len(ctl.c)}, expected {self.n_params}")
            cmax = max((abs(x) for x in ctl.c), default=0.0)
            if cmax > self.c_max:
                raise OracleError(f"control |c_a| = {cmax:.6g} exceeds c_max = {self.c_max}")
            return evolve(psi, self._decomposition(ctl.c), ctl.t)
        if isinstance(ctl, Discrete):
            sd = self._decomposition(None)
            for tau, v in ctl.segments:
                v = np.asarray(v)
                if v.shape[0] != len(psi):
                    raise OracleError("control unitary dimension mismatch")
                psi = v @ evolve(psi, sd, tau)
            return psi
        raise TypeError(f"unknown control model {ctl!r}")

    def _charge(self, duration: float) -> None:
        if self.budget_cap is not None and self._running + duration > self.budget_cap:
            raise BudgetExceeded(
                f"ledger would reach {self._running + duration:.6g} > budget cap {self.budget_cap:.6g}"
            )
        self._charges.append(duration)
        self._running += duration

    def _note_control(self, ctl: ControlModel) -> None:
        if isinstance(ctl, Continuous):
            cmax = max((abs(x) for x in ctl.c), default=0.0)
            self.max_control = max(self.max_control, cmax)
            if cmax > 1.0:
                self.relaxed_queries += 1
            self.control_settings.add(ctl.c)
        else:
            self.control_settings.add(None)

    def _record(self, spec: ExperimentSpec, duration: float, outcome, shots: int = 1) -> None:
        if self._log is not None:
            self._log.append(
                {
                    "control_kind": control_kind(spec.control),
                    "duration_charged": duration,
                    "observable": spec.observable.letters,
                    "outcome": outcome,
                    "shots": shots,
                    "ledger_after": self.total_time(),
                }
            )

    def _exact_plus_probability(self, spec: ExperimentSpec) -> float:
        """Test instrumentation: outcome probability without sampling or charging."""
        return plus_probability(self._final_state(spec), spec.observable)

    # queries
    def query(self, spec: ExperimentSpec) -> int:
        """Run one experiment and return the measured eigenvalue of the observable."""
        p = plus_probability(self._final_state(spec), spec.observable)
        duration = float(spec.control.t)
        self._charge(duration)
        self._note_control(spec.control)
        outcome = 1 if self._rng.random() < p else -1
        self._record(spec, duration, outcome)
        return outcome

    def probe(self, spec: ExperimentSpec, shots: int) -> tuple[float, float]:
        """Mean and standard error of ``shots`` independent repetitions of ``spec``.

        The count of +1 outcomes is drawn from its exact binomial law, which is
        distributionally identical to running the queries one by one.
        """
        if shots < 1:
            raise OracleError("shots must be >= 1")
        shots = int(shots)
        p = plus_probability(self._final_state(spec), spec.observable)
        duration = shots * float(spec.control.t)
        self._charge(duration)
        self._note_control(spec.control)
        if self.noiseless:
            mean, err = 2 * p - 1, 0.0
        else:
            k = int(self._rng.binomial(shots, p))
            mean = (2 * k - shots) / shots
            err = math.sqrt(max(0.0, 1 - mean * mean) / shots)
        self._record(spec, duration, mean, shots)
        return mean, err

    def rescale(self, u_tilde: Sequence[float], delta: float) -> "RescaledOracle":
        return RescaledOracle(self, u_tilde, delta)

    def export_log(self, path) -> None:
        if self._log is None:
            raise OracleError("query logging is disabled")
        with open(path, "w") as fh:
            for rec in self._log:
                fh.write(json.dumps(rec) + "\n")

    @property
    def query_log(self) -> list[dict]:
        return list(self._log or [])


def expectation_probe(o, spec: ExperimentSpec, shots: int) -> tuple[float, float]:
    return o.probe(spec, shots)


class RescaledOracle:
    """View of ``inner`` that behaves like the Hamiltonian with ``u' = (u - u_tilde) / delta``.

    A query with nominal time ``t`` runs on ``inner`` with continuous control
    ``c = -u_tilde`` for time ``t / delta``.
    """

    def __init__(self, inner, u_tilde: Sequence[float], delta: float):
        u_tilde = np.asarray(u_tilde, dtype=float)
        if not delta > 0:
            raise OracleError(f"rescaling factor must be > 0, got {delta}")
        if not np.all(np.isfinite(u_tilde)):
            raise OracleError("u_tilde must be finite")
        if len(u_tilde) != inner.n_params:
            raise OracleError(f"u_tilde has length {len(u_tilde)}, expected {inner.n_params}")
        cmax = float(np.max(np.abs(u_tilde))) if len(u_tilde) else 0.0
        if cmax > getattr(inner, "c_max", C_MAX):
            raise OracleError(f"control |c_a| = {cmax:.6g} exceeds c_max")
        self.inner = inner
        self.u_tilde = u_tilde
        self.delta = float(delta)

    @property
    def terms(self):
        return self.inner.terms

    @property
    def n(self) -> int:
        return self.inner.n

    @property
    def n_params(self) -> int:
        return self.inner.n_params

    @property
    def dual_degree(self) -> int:
        return self.inner.dual_degree

    @property
    def c_max(self) -> float:
        return self.inner.c_max

    @property
    def noiseless(self) -> bool:
        return self.inner.noiseless

    def total_time(self) -> float:
        return self.inner.total_time()

    @property
    def time_factor(self) -> float:
        return self.inner.time_factor / self.delta

    def _lift(self, spec: ExperimentSpec) -> ExperimentSpec:
        ctl = spec.control
        if isinstance(ctl, NoControl):
            c = tuple(-self.u_tilde)
        elif isinstance(ctl, Continuous):
            c = tuple(-self.u_tilde + self.delta * np.asarray(ctl.c, dtype=float))
        else:
            raise OracleError("a rescaled oracle supports no-control and continuous queries only")
        return ExperimentSpec(spec.prep, Continuous(c, ctl.t / self.delta), spec.observable)

    def query(self, spec: ExperimentSpec) -> int:
        return self.inner.query(self._lift(spec))

    def probe(self, spec: ExperimentSpec, shots: int) -> tuple[float, float]:
        return self.inner.probe(self._lift(spec), shots)

    def _exact_plus_probability(self, spec: ExperimentSpec) -> float:
        return self.inner._exact_plus_probability(self._lift(spec))

    def rescale(self, u_tilde: Sequence[float], delta: float) -> "RescaledOracle":
        return RescaledOracle(self, u_tilde, delta)


def rescale(o, u_tilde: Sequence[float], delta: float) -> RescaledOracle:
    return RescaledOracle(o, u_tilde, delta)


def total_time(o) -> float:
    return o.total_time()
