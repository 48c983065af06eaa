"""Dense exact simulation: Hamiltonian matrices, eigendecomposition, propagation, read-out."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .pauli import HamiltonianModel, PauliString, StabilizerProductState

DENSE_CUTOFF = 14


class SimulationError(ValueError):
    pass


def build_dense(
    h: HamiltonianModel, shift: Sequence[float] | None = None, cutoff: int = DENSE_CUTOFF
) -> np.ndarray:
    """Return ``sum_a (u_a + c_a) P_a`` as a dense matrix."""
    if h.n > cutoff:
        raise SimulationError(f"{h.n} qubits exceeds the dense cutoff of {cutoff}")
    coeffs = h.u
    if shift is not None:
        shift = np.asarray(shift, dtype=float)
        if shift.shape != coeffs.shape:
            raise SimulationError(f"shift has length {len(shift)}, expected {h.n_params}")
        coeffs = coeffs + shift
    return dense_from_terms(h.terms, coeffs)


def dense_from_terms(terms: Sequence[PauliString], coeffs: Sequence[float]) -> np.ndarray:
    n = terms[0].n
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    for p, c in zip(terms, coeffs):
        if c == 0:
            continue
        perm, phase = p.action()
        out[perm, cols] += c * phase
    return out


@dataclass(frozen=True)
class SpectralDecomposition:
    """``H = W diag(D) W^dagger`` with ascending ``D`` and eigenvectors as columns of ``W``."""

    D: np.ndarray
    W: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.D)

    def to_matrix(self) -> np.ndarray:
        return (self.W * self.D) @ self.W.conj().T

    def unitary(self, t: float) -> np.ndarray:
        return (self.W * np.exp(-1j * self.D * t)) @ self.W.conj().T

    def to_eigenbasis(self, op: np.ndarray) -> np.ndarray:
        return self.W.conj().T @ op @ self.W


def eig(h_dense: np.ndarray, tol: float = 1e-9) -> SpectralDecomposition:
    h_dense = np.asarray(h_dense)
    asym = np.max(np.abs(h_dense - h_dense.conj().T)) if h_dense.size else 0.0
    if asym > tol:
        raise SimulationError(f"matrix is not Hermitian (max asymmetry {asym:.3g})")
    d, w = np.linalg.eigh(h_dense)
    return SpectralDecomposition(d, w)


def evolve(psi: np.ndarray, sd: SpectralDecomposition, t: float) -> np.ndarray:
    """Apply ``exp(-i H t)`` to ``psi``."""
    psi = np.asarray(psi)
    if psi.shape[0] != sd.dim:
        raise SimulationError(f"state dimension {psi.shape[0]} does not match {sd.dim}")
    return sd.W @ (np.exp(-1j * sd.D * t) * (sd.W.conj().T @ psi))


def expect(psi: np.ndarray, q: Union[PauliString, np.ndarray], tol: float = 1e-10) -> float:
    if isinstance(q, PauliString):
        if (1 << q.n) != len(psi):
            raise SimulationError("observable and state dimensions differ")
        raw = np.vdot(psi, q.apply(psi))
    else:
        q = np.asarray(q)
        if q.shape != (len(psi), len(psi)):
            raise SimulationError("observable and state dimensions differ")
        if np.max(np.abs(q - q.conj().T)) > 1e-9:
            raise SimulationError("observable is not Hermitian")
        raw = np.vdot(psi, q @ psi)
    if abs(raw.imag) > tol * max(1.0, abs(raw)):
        raise SimulationError(f"expectation has imaginary part {raw.imag:.3g}")
    return float(raw.real)


def plus_probability(psi: np.ndarray, q: PauliString) -> float:
    """Probability of the +1 outcome when measuring ``q``."""
    return min(1.0, max(0.0, 0.5 * (1.0 + expect(psi, q))))


def sample_pauli(psi: np.ndarray, q: PauliString, rng: np.random.Generator) -> int:
    """One projective measurement of ``q``; consumes exactly one uniform draw."""
    return 1 if rng.random() < plus_probability(psi, q) else -1


# state preparations -------------------------------------------------------


@dataclass(frozen=True)
class ProductStabilizer:
    state: StabilizerProductState


@dataclass(frozen=True)
class GhzZ:
    n: int


@dataclass(frozen=True)
class Dense:
    vector: np.ndarray


@dataclass(frozen=True)
class EigenstateIndex:
    j: int
    model: HamiltonianModel


StatePrep = Union[ProductStabilizer, GhzZ, Dense, EigenstateIndex]


def ghz_vector(n: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = psi[-1] = 1 / np.sqrt(2)
    return psi


def realize(prep: StatePrep) -> np.ndarray:
    if isinstance(prep, ProductStabilizer):
        psi = prep.state.to_vector()
    elif isinstance(prep, GhzZ):
        psi = ghz_vector(prep.n)
    elif isinstance(prep, Dense):
        psi = np.asarray(prep.vector, dtype=complex)
        nrm = np.linalg.norm(psi)
        if abs(nrm - 1) > 1e-10:
            raise SimulationError(f"dense state has norm {nrm}")
    elif isinstance(prep, EigenstateIndex):
        sd = eig(build_dense(prep.model))
        psi = sd.W[:, prep.j].copy()
    else:
        raise TypeError(f"unknown state preparation {prep!r}")
    return psi


def prep_qubits(prep: StatePrep) -> int:
    if isinstance(prep, ProductStabilizer):
        return prep.state.n
    if isinstance(prep, GhzZ):
        return prep.n
    if isinstance(prep, Dense):
        return int(np.log2(len(prep.vector)))
    return prep.model.n


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return psi / np.linalg.norm(psi)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
