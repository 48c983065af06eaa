"""Quantum Fisher information for unitary encodings, Cramér-Rao bounds and
eigen-derivative bounds for spectrum-preserving directions.

Convention: ``A_a = -i U^dagger dU/du_a`` with ``U = exp(-i H t)``, i.e.
``A_a = -integral_0^t exp(iHs) P_a exp(-iHs) ds``. The QFI is insensitive to
the overall sign.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .pauli import HamiltonianModel
from .sim import SpectralDecomposition, build_dense, dense_from_terms, eig

DEGENERACY_TOL = 1e-9
NULL_TOL = 1e-8


class DegenerateSpectrum(ValueError):
    pass


@dataclass(frozen=True)
class AOperators:
    t: float
    ops: np.ndarray  # shape (N_p, dim, dim)
    sd: SpectralDecomposition | None = None

    def __len__(self) -> int:
        return len(self.ops)

    def __getitem__(self, a: int) -> np.ndarray:
        return self.ops[a]

    def directional(self, v: Sequence[float]) -> np.ndarray:
        return np.tensordot(np.asarray(v, dtype=float), self.ops, axes=1)


def integration_kernel(omega: np.ndarray, t: float) -> np.ndarray:
    """``(exp(i w t) - 1) / (i w)`` with the ``w -> 0`` limit ``t``."""
    out = np.full(omega.shape, complex(t))
    mask = np.abs(omega) >= 1e-12
    w = omega[mask]
    out[mask] = np.expm1(1j * w * t) / (1j * w)
    return out


def a_operators(h: HamiltonianModel, t: float, sd: SpectralDecomposition | None = None) -> AOperators:
    if t < 0:
        raise ValueError("t must be >= 0")
    sd = sd or eig(build_dense(h))
    omega = sd.D[:, None] - sd.D[None, :]
    kern = -integration_kernel(omega, t)
    ops = np.empty((h.n_params, sd.dim, sd.dim), dtype=complex)
    for a, p in enumerate(h.terms):
        pe = sd.to_eigenbasis(p.to_matrix())
        ops[a] = sd.W @ (pe * kern) @ sd.W.conj().T
    return AOperators(t, ops, sd)


def a_operator_fd(h: HamiltonianModel, a: int, t: float, step: float = 1e-5) -> np.ndarray:
    """Central-difference ``-i U^dagger dU/du_a``."""
    u = h.u
    e = np.zeros_like(u)
    e[a] = step
    plus = eig(dense_from_terms(h.terms, u + e)).unitary(t)
    minus = eig(dense_from_terms(h.terms, u - e)).unitary(t)
    base = eig(dense_from_terms(h.terms, u)).unitary(t)
    return -1j * base.conj().T @ (plus - minus) / (2 * step)


@dataclass(frozen=True)
class QfiReport:
    t: float
    matrix: np.ndarray
    eigenvalues: np.ndarray
    per_param_bounds: np.ndarray
    trace_bound: float
    null_directions: np.ndarray

    def to_json(self) -> str:
        return json.dumps(
            {
                "t": self.t,
                "eigenvalues": self.eigenvalues.tolist(),
                "per_param_bounds": self.per_param_bounds.tolist(),
                "trace_bound": self.trace_bound,
            }
        )


@dataclass(frozen=True)
class CrBounds:
    per_param: np.ndarray
    trace_bound: float
    null_directions: np.ndarray

    @property
    def singular(self) -> bool:
        return self.null_directions.shape[1] > 0


def qfi_from_ops(ops: np.ndarray, psi: np.ndarray) -> np.ndarray:
    phi = ops @ psi  # (N_p, dim)
    means = (phi @ psi.conj()).real
    gram = (phi.conj() @ phi.T).real
    out = 4 * (gram - np.outer(means, means))
    return (out + out.T) / 2


def qfi_matrix(a: AOperators, psi: np.ndarray) -> QfiReport:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[0] != a.ops.shape[-1]:
        raise ValueError("state dimension does not match the A-operators")
    mat = qfi_from_ops(a.ops, psi)
    cr = cr_bounds(mat)
    return QfiReport(a.t, mat, np.linalg.eigvalsh(mat), cr.per_param, cr.trace_bound, cr.null_directions)


def cr_bounds(fisher: np.ndarray, n_params: int | None = None, rtol: float = 1e-10) -> CrBounds:
    """Per-parameter RMS lower bounds ``sqrt(diag(I^+))`` and ``sqrt(tr(I^+) / N_p)``.

    Directions with eigenvalue below ``rtol * max`` are returned as unlearnable.
    """
    fisher = np.atleast_2d(np.asarray(fisher, dtype=float))
    n_params = n_params or len(fisher)
    vals, vecs = np.linalg.eigh(fisher)
    cut = rtol * max(vals.max(initial=0.0), 0.0)
    keep = vals > cut
    inv = (vecs[:, keep] / vals[keep]) @ vecs[:, keep].T
    diag = np.clip(np.diag(inv), 0.0, None)
    return CrBounds(np.sqrt(diag), float(np.sqrt(diag.sum() / n_params)), vecs[:, ~keep])


def directional_qfi(a: AOperators, psi: np.ndarray, v: Sequence[float]) -> float:
    av = a.directional(v)
    phi = av @ psi
    mean = np.vdot(psi, phi).real
    return float(4 * (np.vdot(phi, phi).real - mean**2))


@dataclass(frozen=True)
class DirectionalDerivatives:
    v: np.ndarray
    dD: np.ndarray
    dW: np.ndarray
    norm_dD: float
    norm_dW: float
    norm_dH: float
    gauge: str = "minimal"


def _check_gaps(d: np.ndarray) -> None:
    if len(d) < 2:
        return
    width = max(1.0, float(np.max(np.abs(d))))
    gap = float(np.min(np.diff(d)))
    if gap < DEGENERACY_TOL * width:
        raise DegenerateSpectrum(f"spectrum is (nearly) degenerate: min gap {gap:.3g}")


def eigen_derivatives(h: HamiltonianModel, v: Sequence[float]) -> DirectionalDerivatives:
    v = np.asarray(v, dtype=float)
    if len(v) != h.n_params:
        raise ValueError("direction length does not match the parameter count")
    sd = eig(build_dense(h))
    _check_gaps(sd.D)
    dh = dense_from_terms(h.terms, v)
    g = sd.to_eigenbasis(dh)
    dd = np.diag(g).real.copy()
    gaps = sd.D[None, :] - sd.D[:, None]  # (j, i) -> E_i - E_j
    np.fill_diagonal(gaps, 1.0)
    c = g / gaps
    np.fill_diagonal(c, 0.0)
    dw = sd.W @ c
    return DirectionalDerivatives(
        v,
        dd,
        dw,
        float(np.max(np.abs(dd))),
        float(np.linalg.norm(c, 2)),
        float(np.linalg.norm(dh, 2)),
    )


def qfi_growth_bound(dd: DirectionalDerivatives, t: float, L: int = 1) -> float:
    """Upper bound on ``v^T I v`` for experiments of duration ``t`` with ``L`` control layers."""
    if t < 0 or L < 1:
        raise ValueError("need t >= 0 and L >= 1")
    return 4 * min(t * dd.norm_dD + 2 * L * dd.norm_dW, t * dd.norm_dH) ** 2


def spectrum_jacobian(h: HamiltonianModel, sd: SpectralDecomposition | None = None) -> np.ndarray:
    sd = sd or eig(build_dense(h))
    cols = []
    for p in h.terms:
        pw = p.apply(sd.W)
        cols.append(np.einsum("ki,ki->i", sd.W.conj(), pw).real)
    return np.column_stack(cols)


def spectrum_preserving_directions(h: HamiltonianModel) -> np.ndarray:
    """Orthonormal columns spanning the first-order spectrum-preserving directions."""
    sd = eig(build_dense(h))
    _check_gaps(sd.D)
    jac = spectrum_jacobian(h, sd)
    _, s, vt = np.linalg.svd(jac)
    smax = s.max(initial=0.0)
    rank = int(np.sum(s >= NULL_TOL * smax)) if smax > 0 else 0
    return vt[rank:].T.copy()
