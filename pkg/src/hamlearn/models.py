"""Ready-made Hamiltonian models used by the tests, benchmarks and CLI."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .pauli import HamiltonianModel, PauliString

# chaotic point of the mixed-field Ising chain
MFIM_J = 1.0
MFIM_HX = 0.9045
MFIM_HZ = 0.8090


def chain_terms(n: int, coupling: str = "ZZ", field: str = "X") -> list[PauliString]:
    terms = [PauliString.from_sites(n, {i: coupling[0], i + 1: coupling[1]}) for i in range(n - 1)]
    terms += [PauliString.single(n, i, field) for i in range(n)]
    return terms


def transverse_chain(n: int, params: Sequence[float] | None = None) -> HamiltonianModel:
    """Open chain with ``n-1`` ZZ couplings and ``n`` X fields."""
    terms = chain_terms(n)
    return HamiltonianModel(tuple(terms), tuple(params) if params is not None else ())


def mixed_field_ising(
    n: int, j: float = MFIM_J, hx: float = MFIM_HX, hz: float = MFIM_HZ
) -> HamiltonianModel:
    """``J sum Z_i Z_{i+1} + hx sum X_i + hz sum Z_i`` on an open chain."""
    terms, params = [], []
    for i in range(n - 1):
        terms.append(PauliString.from_sites(n, {i: "Z", i + 1: "Z"}))
        params.append(j)
    for i in range(n):
        terms.append(PauliString.single(n, i, "X"))
        params.append(hx)
        terms.append(PauliString.single(n, i, "Z"))
        params.append(hz)
    return HamiltonianModel(tuple(terms), tuple(params))


def single_qubit_xyz(u: Sequence[float] = (0.0, 0.0, 1.0)) -> HamiltonianModel:
    """``u_x X + u_y Y + u_z Z``."""
    return HamiltonianModel(tuple(PauliString(c) for c in "XYZ"), tuple(u))


def xy_z_family(n: int, rng: np.random.Generator | None = None) -> HamiltonianModel:
    """Z fields plus XX, XY, YX, YY nearest-neighbour couplings on an open chain.

    The spectrum is invariant under local Z rotations, so this family has
    spectrum-preserving parameter directions at every point.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    terms = [PauliString.single(n, i, "Z") for i in range(n)]
    for i in range(n - 1):
        for a, b in ("XX", "XY", "YX", "YY"):
            terms.append(PauliString.from_sites(n, {i: a, i + 1: b}))
    params = rng.uniform(-1, 1, size=len(terms))
    return HamiltonianModel(tuple(terms), tuple(params))


def site_sum_matrix(n: int, letter: str) -> np.ndarray:
    """Dense ``sum_i sigma^letter_i``."""
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=complex)
    for i in range(n):
        out += PauliString.single(n, i, letter).to_matrix()
    return out


def random_model(n: int, n_terms: int, rng: np.random.Generator, max_weight: int = 2) -> HamiltonianModel:
    """Random distinct Pauli terms of weight ``<= max_weight`` with ``u ~ U[-1, 1]``."""
    w_max = min(max_weight, n)
    available = sum(math.comb(n, w) * 3**w for w in range(1, w_max + 1))
    if not 1 <= n_terms <= available:
        raise ValueError(f"cannot draw {n_terms} distinct terms of weight <= {w_max} on {n} qubits")
    seen: set[PauliString] = set()
    while len(seen) < n_terms:
        w = int(rng.integers(1, w_max + 1))
        sites = rng.choice(n, size=w, replace=False)
        seen.add(PauliString.from_sites(n, {int(q): "XYZ"[int(rng.integers(3))] for q in sites}))
    terms = sorted(seen)
    return HamiltonianModel(tuple(terms), tuple(rng.uniform(-1, 1, size=n_terms)))
