"""Hamiltonian learning toolkit: Pauli algebra, exact simulation, an experiment
oracle with a time ledger, SQL and Heisenberg-limited learners, quantum Fisher
information and eigenstate-thermalization diagnostics."""
from .oracle import (
    BudgetExceeded,
    Continuous,
    Discrete,
    ExperimentSpec,
    NoControl,
    OracleHandle,
    RescaledOracle,
)
from .pauli import HamiltonianModel, PauliString, StabilizerProductState

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded",
    "Continuous",
    "Discrete",
    "ExperimentSpec",
    "HamiltonianModel",
    "NoControl",
    "OracleHandle",
    "PauliString",
    "RescaledOracle",
    "StabilizerProductState",
]
