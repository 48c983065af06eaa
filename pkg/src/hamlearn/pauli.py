"""Pauli-string algebra, Hamiltonian term models and product stabilizer states.

Letters are stored as integer codes ``0, 1, 2, 3`` for ``I, X, Y, Z``. Products
track their phase as an exponent of ``i`` modulo 4 so that no floating point
enters the group law. Internally ``Y = iXZ``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

LETTERS = "IXYZ"
_CODE = {c: k for k, c in enumerate(LETTERS)}

# _MUL[a][b] = (exponent of i, letter code) with sigma_a sigma_b = i**e sigma_c
_MUL = [[(0, 0)] * 4 for _ in range(4)]
for _a in range(4):
    _MUL[0][_a] = (0, _a)
    _MUL[_a][0] = (0, _a)
    _MUL[_a][_a] = (0, 0)
for _a, _b, _c in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
    _MUL[_a][_b] = (1, _c)
    _MUL[_b][_a] = (3, _c)

_PHASES = (1, 1j, -1, -1j)


class PauliError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class PauliString:
    """Tensor product of single-qubit Paulis, e.g. ``PauliString("ZZI")``.

    Qubit 0 is the leftmost letter and the most significant bit of a
    computational-basis index.
    """

    letters: str

    def __post_init__(self):
        if not self.letters:
            raise PauliError("a Pauli string needs at least one qubit")
        bad = set(self.letters) - set(LETTERS)
        if bad:
            raise PauliError(f"invalid Pauli letters {sorted(bad)} in {self.letters!r}")

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls("I" * n)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliString":
        s = ["I"] * n
        s[qubit] = letter
        return cls("".join(s))

    @classmethod
    def from_sites(cls, n: int, sites: dict[int, str]) -> "PauliString":
        s = ["I"] * n
        for q, c in sites.items():
            s[q] = c
        return cls("".join(s))

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def codes(self) -> tuple[int, ...]:
        return tuple(_CODE[c] for c in self.letters)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(q for q, c in enumerate(self.letters) if c != "I")

    @property
    def is_identity(self) -> bool:
        return not self.support

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return self.letters

    def commutes_with(self, other: "PauliString") -> bool:
        _check_same_n(self, other)
        anti = sum(
            1 for a, b in zip(self.letters, other.letters) if a != "I" and b != "I" and a != b
        )
        return anti % 2 == 0

    def masks(self) -> tuple[int, int, int]:
        """Return ``(xmask, zmask, n_y)`` in the basis-index bit convention."""
        xm = zm = 0
        ny = 0
        n = self.n
        for q, c in enumerate(self.letters):
            bit = 1 << (n - 1 - q)
            if c in "XY":
                xm |= bit
            if c in "ZY":
                zm |= bit
            if c == "Y":
                ny += 1
        return xm, zm, ny

    def action(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(perm, phase)`` with ``P|k> = phase[k] |perm[k]>``."""
        xm, zm, ny = self.masks()
        k = np.arange(1 << self.n, dtype=np.int64)
        parity = _popcount(k & zm) & 1
        # Y = iXZ: Z acts first, then X flips the bit
        phase = (1j**ny) * (1 - 2 * parity)
        return k ^ xm, phase.astype(complex)

    def to_matrix(self) -> np.ndarray:
        perm, phase = self.action()
        dim = 1 << self.n
        m = np.zeros((dim, dim), dtype=complex)
        m[perm, np.arange(dim)] = phase
        return m

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Apply to a state vector, or column-wise to a matrix."""
        perm, phase = self.action()
        out = np.empty_like(psi, dtype=complex)
        out[perm] = phase.reshape((-1,) + (1,) * (psi.ndim - 1)) * psi
        return out


def _popcount(a: np.ndarray) -> np.ndarray:
    a = a.copy()
    c = np.zeros_like(a)
    while np.any(a):
        c += a & 1
        a >>= 1
    return c


def _check_same_n(p: PauliString, q: PauliString) -> None:
    if p.n != q.n:
        raise PauliError(f"qubit count mismatch: {p.n} vs {q.n}")


@dataclass(frozen=True)
class ScaledPauli:
    """``coefficient * string``; the zero operator has coefficient 0."""

    coefficient: complex
    string: PauliString

    @property
    def is_zero(self) -> bool:
        return self.coefficient == 0

    def __neg__(self) -> "ScaledPauli":
        return ScaledPauli(-self.coefficient, self.string)

    def to_matrix(self) -> np.ndarray:
        return self.coefficient * self.string.to_matrix()


def pauli_mul_exponent(p: PauliString, q: PauliString) -> tuple[int, PauliString]:
    """Return ``(e, R)`` with ``P Q = i**e R`` and ``e`` in ``0..3``."""
    _check_same_n(p, q)
    e = 0
    out = []
    for a, b in zip(p.codes, q.codes):
        de, c = _MUL[a][b]
        e += de
        out.append(LETTERS[c])
    return e % 4, PauliString("".join(out))


def pauli_mul(p: PauliString, q: PauliString) -> ScaledPauli:
    e, r = pauli_mul_exponent(p, q)
    return ScaledPauli(_PHASES[e], r)


def commutator(p: PauliString, q: PauliString) -> ScaledPauli:
    """``[P, Q] = PQ - QP``: zero if they commute, else ``2 PQ``."""
    e, r = pauli_mul_exponent(p, q)
    if p.commutes_with(q):
        return ScaledPauli(0, r)
    return ScaledPauli(2 * _PHASES[e], r)


@dataclass(frozen=True)
class StabilizerProductState:
    """Product state with one signed single-qubit Pauli stabilizer per qubit.

    ``stabilizers`` is a sequence of ``(sign, axis)`` with sign in ``{+1, -1}``
    and axis in ``"XYZ"``; e.g. ``((1, "Z"), (-1, "X"))`` is ``|0>|->``.
    """

    stabilizers: tuple[tuple[int, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "stabilizers", tuple((int(s), a) for s, a in self.stabilizers))
        for s, a in self.stabilizers:
            if s not in (1, -1) or a not in "XYZ" or len(a) != 1:
                raise PauliError(f"bad stabilizer ({s}, {a!r})")

    @classmethod
    def zeros(cls, n: int) -> "StabilizerProductState":
        return cls(tuple((1, "Z") for _ in range(n)))

    @classmethod
    def parse(cls, text: str) -> "StabilizerProductState":
        """Parse ``"+Z -X +Y"``."""
        out = []
        for tok in text.split():
            sign = -1 if tok[0] == "-" else 1
            out.append((sign, tok.lstrip("+-")))
        return cls(tuple(out))

    @property
    def n(self) -> int:
        return len(self.stabilizers)

    def to_vector(self) -> np.ndarray:
        vecs = {
            (1, "Z"): np.array([1, 0], dtype=complex),
            (-1, "Z"): np.array([0, 1], dtype=complex),
            (1, "X"): np.array([1, 1], dtype=complex) / np.sqrt(2),
            (-1, "X"): np.array([1, -1], dtype=complex) / np.sqrt(2),
            (1, "Y"): np.array([1, 1j], dtype=complex) / np.sqrt(2),
            (-1, "Y"): np.array([1, -1j], dtype=complex) / np.sqrt(2),
        }
        psi = np.array([1], dtype=complex)
        for st in self.stabilizers:
            psi = np.kron(psi, vecs[st])
        return psi


def stabilizer_expect(r: PauliString, rho: StabilizerProductState) -> int:
    """Closed-form ``<R>`` on a product stabilizer state; one of -1, 0, +1."""
    if r.n != rho.n:
        raise PauliError(f"qubit count mismatch: {r.n} vs {rho.n}")
    val = 1
    for c, (sign, axis) in zip(r.letters, rho.stabilizers):
        if c == "I":
            continue
        if c != axis:
            return 0
        val *= sign
    return val


@dataclass(frozen=True)
class HamiltonianModel:
    """``H(u) = sum_a u_a P_a`` with distinct, non-identity terms and ``|u_a| <= 1``.

    Terms are kept in canonical lexicographic order (``I < X < Y < Z``);
    ``params`` are permuted along with them.
    """

    terms: tuple[PauliString, ...]
    params: tuple[float, ...] = field(default=())
    bound: float = 1.0

    def __post_init__(self):
        terms = tuple(PauliString(t) if isinstance(t, str) else t for t in self.terms)
        params = tuple(float(u) for u in self.params) if self.params else (0.0,) * len(terms)
        if not terms:
            raise PauliError("a model needs at least one term")
        if len(params) != len(terms):
            raise PauliError(f"{len(terms)} terms but {len(params)} parameters")
        n = terms[0].n
        for t in terms:
            if t.n != n:
                raise PauliError(f"term {t} has {t.n} qubits, expected {n}")
            if t.is_identity:
                raise PauliError("identity terms are not allowed")
        if len(set(terms)) != len(terms):
            raise PauliError("terms must be pairwise distinct")
        if self.bound is not None and any(abs(u) > self.bound + 1e-12 for u in params):
            raise PauliError(f"parameters must satisfy |u_a| <= {self.bound}")
        order = sorted(range(len(terms)), key=lambda a: _sort_key(terms[a]))
        object.__setattr__(self, "terms", tuple(terms[a] for a in order))
        object.__setattr__(self, "params", tuple(params[a] for a in order))

    @classmethod
    def from_strings(cls, terms: Iterable[str], params: Sequence[float] | None = None, bound: float | None = 1.0):
        terms = [PauliString(t) for t in terms]
        return cls(tuple(terms), tuple(params) if params is not None else (), bound=bound)

    @property
    def n(self) -> int:
        return self.terms[0].n

    @property
    def n_params(self) -> int:
        return len(self.terms)

    @property
    def u(self) -> np.ndarray:
        return np.array(self.params, dtype=float)

    def with_params(self, params: Sequence[float], bound: float | None = None) -> "HamiltonianModel":
        # terms are already canonical, so no reordering happens
        return HamiltonianModel(self.terms, tuple(params), bound=self.bound if bound is None else bound)

    def index(self, term: PauliString | str) -> int:
        return self.terms.index(PauliString(term) if isinstance(term, str) else term)

    @cached_property
    def dual_degree(self) -> int:
        return dual_degree(self)

    @property
    def degree(self) -> int:
        """Maximum number of terms acting on a single qubit."""
        return max(sum(1 for t in self.terms if q in t.support) for q in range(self.n))

    @property
    def max_strength(self) -> float:
        return float(np.max(np.abs(self.u)))


def _sort_key(p: PauliString) -> tuple[int, ...]:
    return p.codes


def dual_degree(h: HamiltonianModel) -> int:
    """Maximum number of other terms whose support overlaps a given term."""
    supports = [t.support for t in h.terms]
    deg = [0] * len(supports)
    for a, b in combinations(range(len(supports)), 2):
        if supports[a] & supports[b]:
            deg[a] += 1
            deg[b] += 1
    return max(deg)


def parse_hamiltonian(text: str, bound: float | None = 1.0) -> HamiltonianModel:
    """Parse one ``<coeff> <letters>`` term per line; ``#`` starts a comment line."""
    terms, params = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise PauliError(f"line {lineno}: expected '<coeff> <letters>', got {line!r}")
        try:
            coeff = float(parts[0])
        except ValueError:
            raise PauliError(f"line {lineno}: bad coefficient {parts[0]!r}") from None
        terms.append(PauliString(parts[1]))
        params.append(coeff)
    return HamiltonianModel(tuple(terms), tuple(params), bound=bound)


def format_hamiltonian(h: HamiltonianModel) -> str:
    return "".join(f"{u:.17g} {t}\n" for u, t in zip(h.params, h.terms))
