"""Eigenstate-thermalization diagnostics on exactly diagonalized chains.

Everything works in the energy eigenbasis of a dense Hamiltonian: thermal
averages, connected correlators, level statistics, the split of the
time-integrated operator ``A_H(t) = int_0^t exp(iHs) P exp(-iHs) ds`` into
ETH-diagonal, off-diagonal and deviation parts, and the piecewise-Taylor
low-rank construction for the diagonal part.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.optimize import brentq

from .fisher import integration_kernel, qfi_from_ops
from .pauli import HamiltonianModel, PauliString
from .sim import SpectralDecomposition, build_dense, eig

Observable = Union[PauliString, np.ndarray]

BETA_MAX = 50.0
GOE_R = 0.5307
POISSON_R = 2 * math.log(2) - 1


class EthError(ValueError):
    pass


@dataclass(frozen=True)
class ThermalContext:
    sd: SpectralDecomposition
    model: HamiltonianModel | None = None
    beta_max: float = BETA_MAX
    _diag_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_model(cls, h: HamiltonianModel, beta_max: float = BETA_MAX) -> "ThermalContext":
        return cls(eig(build_dense(h)), h, beta_max)

    @property
    def energies(self) -> np.ndarray:
        return self.sd.D

    @property
    def dim(self) -> int:
        return self.sd.dim

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.sd.D)))

    @property
    def width(self) -> float:
        return float(self.sd.D[-1] - self.sd.D[0])

    def weights(self, beta: float) -> np.ndarray:
        expo = -beta * self.sd.D
        if not np.all(np.isfinite(expo)):
            raise EthError(f"non-finite Boltzmann exponent at beta={beta}")
        expo -= expo.max()
        w = np.exp(expo)
        return w / w.sum()

    def energy(self, beta: float) -> float:
        return float(self.weights(beta) @ self.sd.D)

    def matrix(self, op: Observable) -> np.ndarray:
        """Operator in the energy eigenbasis."""
        if isinstance(op, PauliString):
            return self.sd.W.conj().T @ op.apply(self.sd.W)
        return self.sd.to_eigenbasis(np.asarray(op))

    def diagonal(self, op: Observable) -> np.ndarray:
        """``<E_i|op|E_i>`` for every eigenstate."""
        key = op if isinstance(op, PauliString) else None
        if key is not None and key in self._diag_cache:
            return self._diag_cache[key]
        w = self.sd.W
        applied = op.apply(w) if isinstance(op, PauliString) else np.asarray(op) @ w
        d = np.einsum("ki,ki->i", w.conj(), applied).real
        if key is not None:
            self._diag_cache[key] = d
        return d


def thermal_expect(ctx: ThermalContext, op: Observable, beta: float) -> float:
    return float(ctx.weights(beta) @ ctx.diagonal(op))


def beta_of_energy(ctx: ThermalContext, e: float, beta_max: float | None = None) -> float:
    bmax = ctx.beta_max if beta_max is None else beta_max
    lo, hi = ctx.energy(bmax), ctx.energy(-bmax)
    if not lo < e < hi:
        raise EthError(f"energy {e:.6g} is outside the attainable range ({lo:.6g}, {hi:.6g})")
    tol = 1e-8 * max(ctx.norm, 1e-300)
    beta = brentq(lambda b: ctx.energy(b) - e, -bmax, bmax, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    if abs(ctx.energy(beta) - e) > tol:
        raise EthError("inverse-temperature solve did not converge")
    return float(beta)


# connected correlators -----------------------------------------------------


def _set_partitions(items: list[int]):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1 :]


def connected_correlator(ctx: ThermalContext, ops: Sequence[Observable], beta: float) -> float:
    """``C^m = -sum_pi (-1)^{m+|pi|} (|pi|-1)! prod_{B in pi} <prod_{k in B} O_k>_beta``."""
    m = len(ops)
    if not 1 <= m <= 4:
        raise EthError("connected correlators are supported for 1 <= m <= 4")
    p = ctx.weights(beta)
    mats = [ctx.matrix(o) for o in ops]

    def moment(block: list[int]) -> float:
        prod = mats[block[0]]
        for k in sorted(block)[1:]:
            prod = prod @ mats[k]
        return float(np.real(np.diag(prod) @ p))

    total = 0.0
    for part in _set_partitions(list(range(m))):
        k = len(part)
        total += (-1) ** (m + k) * math.factorial(k - 1) * math.prod(moment(b) for b in part)
    return -total


def _diag_cumulant(pd: np.ndarray, e: np.ndarray, p: np.ndarray, nh: int) -> float:
    # moments with a single non-commuting factor reduce to diagonal sums because
    # the thermal state and H are both diagonal in the eigenbasis
    mp = [float(p @ (pd * e**k)) for k in range(nh + 1)]
    mh = [float(p @ e**k) for k in range(nh + 1)]
    total = 0.0
    for part in _set_partitions(list(range(nh + 1))):
        k = len(part)
        val = 1.0
        for block in part:
            n_h = len(block) - (0 in block)
            val *= mp[n_h] if 0 in block else mh[n_h]
        total += (-1) ** (k - 1) * math.factorial(k - 1) * val
    return total


def thermal_derivative(ctx: ThermalContext, op: Observable, beta: float, n: int = 1) -> float:
    """``d^n <op>_beta / d beta^n = -C^{n+1}(op, H, ..., H)``."""
    if not 0 <= n <= 3:
        raise EthError("thermal derivatives are supported for n <= 3")
    if n == 0:
        return thermal_expect(ctx, op, beta)
    e = ctx.energies - (ctx.weights(beta) @ ctx.energies)  # shift improves conditioning
    kappa = _diag_cumulant(ctx.diagonal(op), e, ctx.weights(beta), n)
    return (-1) ** n * kappa


def thermal_derivative_fd(ctx: ThermalContext, op: Observable, beta: float, n: int, h: float = 1e-4) -> float:
    """Central finite difference of ``<op>_beta`` (stencils for ``n <= 4``)."""
    f = lambda b: thermal_expect(ctx, op, b)  # noqa: E731
    if n == 1:
        return (f(beta + h) - f(beta - h)) / (2 * h)
    if n == 2:
        return (f(beta + h) - 2 * f(beta) + f(beta - h)) / h**2
    if n == 3:
        return (f(beta + 2 * h) - 2 * f(beta + h) + 2 * f(beta - h) - f(beta - 2 * h)) / (2 * h**3)
    if n == 4:
        return (f(beta + 2 * h) - 4 * f(beta + h) + 6 * f(beta) - 4 * f(beta - h) + f(beta - 2 * h)) / h**4
    raise EthError("finite-difference stencils exist for n <= 4")


# autocorrelation and F -------------------------------------------------------


@dataclass(frozen=True)
class GcCurve:
    t: np.ndarray
    values: np.ndarray
    running_avg: np.ndarray


def gc_autocorr(ctx: ThermalContext, op: Observable, i: int, t_grid: Sequence[float]) -> GcCurve:
    t = np.asarray(t_grid, dtype=float)
    if not 0 <= i < ctx.dim:
        raise EthError(f"eigenstate index {i} out of range")
    row = np.abs(ctx.matrix(op)[i]) ** 2
    row[i] = 0.0
    omega = ctx.energies[i] - ctx.energies
    vals = (row[None, :] * np.exp(1j * np.outer(t, omega))).sum(axis=1).real
    avg = np.zeros_like(vals)
    if len(t) > 1:
        cum = np.concatenate([[0.0], np.cumsum(np.diff(t) * (vals[1:] + vals[:-1]) / 2)])
        span = t - t[0]
        avg[1:] = cum[1:] / span[1:]
        avg[0] = vals[0]
    return GcCurve(t, vals, avg)


def fejer_integral(omega: np.ndarray, t: float) -> np.ndarray:
    """``int_{-t}^{t} (1 - |s|/t) exp(i w s) ds = 4 sin^2(w t / 2) / (w^2 t)``."""
    out = np.full(omega.shape, float(t))
    mask = np.abs(omega) > 1e-12
    w = omega[mask]
    out[mask] = 4 * np.sin(w * t / 2) ** 2 / (w**2 * t)
    return out


def f_constant(
    ctx: ThermalContext,
    op_eig: np.ndarray,
    t: float,
    rows: Sequence[int],
    method: str = "exact",
    n_points: int = 4001,
) -> float:
    """``8 sqrt(2) max_i int_{-t}^{t} (1 - |s|/t) G^c(s; E_i) ds`` over eigenstates ``rows``.

    ``method="exact"`` integrates the triangular window in closed form;
    ``"trapezoid"`` samples ``G^c`` on a uniform grid.
    """
    if t <= 0:
        raise EthError("t must be > 0")
    rows = np.asarray(rows)
    mags = np.abs(op_eig[rows]) ** 2
    mags[np.arange(len(rows)), rows] = 0.0
    omega = ctx.energies[rows][:, None] - ctx.energies[None, :]
    if method == "exact":
        vals = (mags * fejer_integral(omega, t)).sum(axis=1)
    elif method == "trapezoid":
        s = np.linspace(0.0, t, n_points)
        tri = 1 - s / t
        # the integrand is even in s once the real part of G^c is taken
        vals = np.empty(len(rows))
        for k in range(len(rows)):
            gc = (mags[k][None, :] * np.cos(np.outer(s, omega[k]))).sum(axis=1)
            vals[k] = 2 * np.trapezoid(tri * gc, s)
    else:
        raise EthError(f"unknown quadrature {method!r}")
    return float(8 * math.sqrt(2) * vals.max())


# windows and the A_H split -----------------------------------------------------


@dataclass(frozen=True)
class Window:
    beta1: float
    beta2: float
    indices: np.ndarray
    betas: np.ndarray  # beta(E_i) per window state


def energy_window(ctx: ThermalContext, beta1: float, beta2: float) -> Window:
    """Eigenstates with ``beta(E_i)`` in ``[beta1, beta2]``."""
    if not beta1 < beta2:
        raise EthError("need beta1 < beta2")
    e_hi, e_lo = ctx.energy(beta1), ctx.energy(beta2)
    idx = np.flatnonzero((ctx.energies >= e_lo) & (ctx.energies <= e_hi))
    if len(idx) == 0:
        raise EthError("empty energy window")
    betas = np.array([beta_of_energy(ctx, ctx.energies[i]) for i in idx])
    return Window(beta1, beta2, idx, betas)


def a_h(ctx: ThermalContext, op_eig: np.ndarray, t: float) -> np.ndarray:
    """``int_0^t exp(iHs) P exp(-iHs) ds`` in the eigenbasis."""
    omega = ctx.energies[:, None] - ctx.energies[None, :]
    return op_eig * integration_kernel(omega, t)


@dataclass(frozen=True)
class ASplit:
    """Window block of ``A_H(t)`` for one operator, in eigenbasis coordinates."""

    t: float
    window: Window
    projected: np.ndarray
    a_d: np.ndarray  # diagonal entries
    a_od: np.ndarray
    delta_a: np.ndarray  # diagonal entries

    @property
    def od_norm(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvalsh(self.a_od))))

    def reassembled(self) -> np.ndarray:
        return self.a_od + np.diag(self.a_d + self.delta_a)


def decompose_a(ctx: ThermalContext, op: Observable, t: float, window: Window) -> ASplit:
    idx = window.indices
    op_eig = ctx.matrix(op)
    omega = ctx.energies[idx][:, None] - ctx.energies[idx][None, :]
    block = op_eig[np.ix_(idx, idx)] * integration_kernel(omega, t)
    diag = np.real(np.diag(block)).copy()
    eth_diag = t * np.array([thermal_expect(ctx, op, b) for b in window.betas])
    od = block.copy()
    np.fill_diagonal(od, 0.0)
    return ASplit(t, window, block, eth_diag, od, diag - eth_diag)


@dataclass(frozen=True)
class OdSweep:
    t: np.ndarray
    od_norm: np.ndarray
    F: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        return self.od_norm / np.sqrt(self.F * self.t)

    @property
    def holds(self) -> bool:
        return bool(np.all(self.od_norm <= np.sqrt(self.F * self.t)))


def od_sweep(ctx: ThermalContext, op: Observable, window: Window, t_grid: Sequence[float]) -> OdSweep:
    """``||A_od(t)||_s`` against ``sqrt(F t)`` with ``F`` from the same operator and window."""
    idx = window.indices
    op_eig = ctx.matrix(op)
    sub = op_eig[np.ix_(idx, idx)].copy()
    np.fill_diagonal(sub, 0.0)
    omega = ctx.energies[idx][:, None] - ctx.energies[idx][None, :]
    norms, fs = [], []
    for t in t_grid:
        a_od = sub * integration_kernel(omega, t)
        norms.append(np.max(np.abs(np.linalg.eigvalsh(a_od))))
        fs.append(f_constant(ctx, op_eig, t, idx))
    return OdSweep(np.asarray(t_grid, dtype=float), np.array(norms), np.array(fs))


# low-rank construction ------------------------------------------------------


@dataclass(frozen=True)
class EnvelopeFit:
    B: float
    gamma: float


def fit_envelope(ctx: ThermalContext, ops: Sequence[Observable], betas: Sequence[float], max_order: int = 3) -> EnvelopeFit:
    """Smallest ``B`` (for the fitted ``gamma``) with ``|d^m <P>| / m! <= (m^gamma B)^m``, ``m <= max_order``."""
    c = np.zeros(max_order)
    for op in ops:
        for b in betas:
            for m in range(1, max_order + 1):
                val = abs(thermal_derivative(ctx, op, b, m)) / math.factorial(m)
                c[m - 1] = max(c[m - 1], val)
    m = np.arange(1, max_order + 1)
    roots = np.maximum(c, 1e-300) ** (1 / m)
    if max_order > 1:
        gamma = max(0.0, float(np.polyfit(np.log(m), np.log(roots), 1)[0]))
    else:
        gamma = 0.0
    B = float(np.max(roots / m**gamma))
    return EnvelopeFit(B, gamma)


def rank_formula(B: float, gamma: float, beta_span: float, t: float, n_params: int, delta: float) -> float:
    """``2 B |beta2 - beta1| log2(t sqrt(N_p) / delta)^(gamma + 1)``."""
    return 2 * B * abs(beta_span) * math.log2(t * math.sqrt(n_params) / delta) ** (gamma + 1)


@dataclass(frozen=True)
class LowRankApprox:
    b: np.ndarray  # (R, N_p) orthonormal rows
    B: np.ndarray  # (R, n_window) diagonal operators
    E: np.ndarray  # (N_p, n_window) diagonal residuals
    delta: float
    order: int
    width: float
    n_windows: int

    @property
    def rank(self) -> int:
        return len(self.b)

    def sup_residual(self, rng: np.random.Generator, n_dirs: int = 200) -> float:
        """Largest ``||v^T E||_s`` over random unit directions."""
        v = rng.normal(size=(n_dirs, self.E.shape[0]))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return float(np.max(np.abs(v @ self.E)))


def a_d_vector(ctx: ThermalContext, terms: Sequence[Observable], t: float, window: Window) -> np.ndarray:
    """Diagonal entries of the ETH-diagonal operators, shape ``(N_p, n_window)``."""
    out = np.empty((len(terms), len(window.betas)))
    for a, p in enumerate(terms):
        diag = ctx.diagonal(p)
        for k, b in enumerate(window.betas):
            out[a, k] = thermal_expect_from_diag(ctx, diag, b)
    return t * out


def thermal_expect_from_diag(ctx: ThermalContext, diag: np.ndarray, beta: float) -> float:
    return float(ctx.weights(beta) @ diag)


def low_rank_build(
    ctx: ThermalContext,
    terms: Sequence[Observable],
    t: float,
    window: Window,
    order: int,
    width: float,
    a_d: np.ndarray | None = None,
    rtol: float = 1e-12,
) -> LowRankApprox:
    """Piecewise Taylor approximation of ``A_d`` with ``order`` terms per beta sub-window."""
    if not width > 0:
        raise EthError("sub-window width must be > 0")
    if not 1 <= order <= 4:
        raise EthError("Taylor order must be in 1..4")
    a_d = a_d_vector(ctx, terms, t, window) if a_d is None else a_d
    span = window.beta2 - window.beta1
    n_win = max(1, math.ceil(span / width - 1e-12))
    centers = window.beta1 + width * (np.arange(n_win) + 0.5)
    vecs = np.array([[thermal_derivative(ctx, p, c, m) for p in terms] for c in centers for m in range(order)])
    u, s, vt = np.linalg.svd(vecs, full_matrices=False)
    keep = s > rtol * max(s.max(initial=0.0), 1e-300)
    b = vt[keep]
    # exact projection: B = b A_d, E = (1 - b^T b) A_d, so b E = 0
    B = b @ a_d
    E = a_d - b.T @ B
    delta = float(np.max(np.linalg.norm(E, axis=0))) if E.size else 0.0
    return LowRankApprox(b, B, E, delta, order, width, n_win)


def low_rank_search(
    ctx: ThermalContext,
    terms: Sequence[Observable],
    t: float,
    window: Window,
    delta: float,
    a_d: np.ndarray | None = None,
    max_windows: int = 16,
) -> LowRankApprox | None:
    """Smallest-rank piecewise Taylor approximation whose measured error is ``<= delta``."""
    a_d = a_d_vector(ctx, terms, t, window) if a_d is None else a_d
    span = window.beta2 - window.beta1
    best = None
    for k in range(1, max_windows + 1):
        for order in range(1, 5):
            lr = low_rank_build(ctx, terms, t, window, order, span / k, a_d=a_d)
            if lr.delta <= delta and (best is None or lr.rank < best.rank):
                best = lr
    return best


def taylor_recipe(fit: EnvelopeFit, t: float, n_params: int, delta: float) -> tuple[int, float]:
    """Taylor order and sub-window width that meet error ``delta``."""
    n = max(1, math.ceil(math.log2(t * math.sqrt(n_params) / delta)))
    return n, 1 / (2 * n**fit.gamma * fit.B)


def taylor_error_bound(fit: EnvelopeFit, t: float, n_params: int, order: int, width: float) -> float:
    return t * math.sqrt(n_params) * (order**fit.gamma * fit.B * width) ** order


def effective_rank(a_d: np.ndarray, weights: np.ndarray, delta: float) -> int:
    """Eigenvalues of ``4 <A_d A_d^T>_rho`` above ``4 delta^2`` for diagonal ``rho``."""
    m = (a_d * weights) @ a_d.T
    return int(np.sum(4 * np.linalg.eigvalsh(m) > 4 * delta**2))


# level statistics -------------------------------------------------------------


def r_ratio(levels: np.ndarray) -> float:
    levels = np.sort(np.asarray(levels, dtype=float))
    s = np.diff(levels)
    if len(s) < 2:
        raise EthError("need at least three levels")
    lo, hi = np.minimum(s[:-1], s[1:]), np.maximum(s[:-1], s[1:])
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(hi > 0, lo / hi, 1.0)
    return float(r.mean())


def central_slice(levels: np.ndarray, fraction: float = 1 / 3) -> np.ndarray:
    levels = np.sort(levels)
    n = len(levels)
    k = int(round(n * (1 - fraction) / 2))
    return levels[k : n - k]


def level_stats(sectors: Sequence[np.ndarray], fraction: float = 1 / 3, min_levels: int = 100) -> float:
    """Mean r-ratio over the central ``fraction`` of each symmetry sector, pooled by gap count."""
    total, count = 0.0, 0
    for lev in sectors:
        mid = central_slice(lev, fraction)
        if len(mid) < 3:
            continue
        total += r_ratio(mid) * (len(mid) - 2)
        count += len(mid) - 2
    if count + 2 * len(sectors) < min_levels:
        raise EthError(f"too few levels for spacing statistics ({count} ratios)")
    return total / count


def reflection_permutation(n: int) -> np.ndarray:
    """Basis-index permutation for the site reversal ``q -> n-1-q``."""
    k = np.arange(1 << n)
    out = np.zeros_like(k)
    for q in range(n):
        out |= ((k >> q) & 1) << (n - 1 - q)
    return out


def reflection_isometries(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases (as columns) of the even and odd site-reversal sectors."""
    perm = reflection_permutation(n)
    dim = 1 << n
    fixed = np.flatnonzero(perm == np.arange(dim))
    pairs = np.flatnonzero(perm > np.arange(dim))
    even = np.zeros((dim, len(fixed) + len(pairs)))
    even[fixed, np.arange(len(fixed))] = 1.0
    cols = len(fixed) + np.arange(len(pairs))
    even[pairs, cols] = even[perm[pairs], cols] = 1 / math.sqrt(2)
    odd = np.zeros((dim, len(pairs)))
    odd[pairs, np.arange(len(pairs))] = 1 / math.sqrt(2)
    odd[perm[pairs], np.arange(len(pairs))] = -1 / math.sqrt(2)
    return even, odd


def reflection_sectors(h_dense: np.ndarray, n: int) -> list[np.ndarray]:
    """Eigenvalues of a reflection-symmetric ``h_dense`` in the even and odd sectors."""
    return [np.linalg.eigvalsh(q.T @ h_dense @ q) for q in reflection_isometries(n)]


def sector_contexts(h: HamiltonianModel) -> list[ThermalContext]:
    """One context per reflection sector, eigenvectors embedded in the full space.

    Sector-resolved eigenvectors avoid arbitrary mixing of levels that are
    (nearly) degenerate across sectors.
    """
    dense = build_dense(h)
    out = []
    for q in reflection_isometries(h.n):
        d, w = np.linalg.eigh(q.T @ dense @ q)
        out.append(ThermalContext(SpectralDecomposition(d, q @ w), h))
    return out


def goe_levels(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(dim, dim))
    return np.linalg.eigvalsh((a + a.T) / 2)


# diagonal ETH -----------------------------------------------------------------


def microcanonical_deviation(
    ctx: ThermalContext,
    op: Observable,
    fraction: float = 1 / 3,
    width_frac: float = 0.05,
    metric: str = "max",
) -> float:
    """``max_i |<E_i|P|E_i> - mean over |E_j - E_i| <= w/2|`` over the central ``fraction`` of levels by count.

    ``metric="rms"`` reports the root-mean-square deviation instead of the maximum.
    """
    e = ctx.energies
    d = ctx.diagonal(op)
    w = width_frac * ctx.width
    csum = np.concatenate([[0.0], np.cumsum(d)])
    left = np.searchsorted(e, e - w / 2, side="left")
    right = np.searchsorted(e, e + w / 2, side="right")
    avg = (csum[right] - csum[left]) / (right - left)
    n = len(e)
    k = int(round(n * (1 - fraction) / 2))
    dev = np.abs(d - avg)[k : n - k]
    if metric == "max":
        return float(dev.max())
    if metric == "rms":
        return float(np.sqrt(np.mean(dev**2)))
    raise EthError(f"unknown deviation metric {metric!r}")


def diagonal_eth_deviations(
    contexts: Sequence[ThermalContext], terms: Sequence[Observable], metric: str = "max"
) -> np.ndarray:
    """Per-term deviation, worst case over symmetry sectors."""
    return np.array(
        [max(microcanonical_deviation(ctx, p, metric=metric) for ctx in contexts) for p in terms]
    )


# single-parameter GHZ demo ----------------------------------------------------


@dataclass(frozen=True)
class GhzDemo:
    t: np.ndarray
    qfi: dict
    exponents: dict

    def ratio(self, a: str, b: str) -> np.ndarray:
        return self.qfi[a] / self.qfi[b]


def single_parameter_qfi(sd: SpectralDecomposition, generator: np.ndarray, psi: np.ndarray, t: float) -> float:
    g = sd.to_eigenbasis(generator)
    omega = sd.D[:, None] - sd.D[None, :]
    a = sd.W @ (g * integration_kernel(omega, t)) @ sd.W.conj().T
    return float(qfi_from_ops(a[None], psi)[0, 0])


def ghz_qfi_demo(
    h: HamiltonianModel | np.ndarray,
    generator: np.ndarray,
    t_grid: Sequence[float],
    preps: dict,
    fit_from: float | None = None,
) -> GhzDemo:
    """QFI of the single parameter multiplying ``generator`` for each named prep state.

    ``fit_from`` restricts the log-log power-law fits to ``t >= fit_from``.
    """
    dense = build_dense(h) if isinstance(h, HamiltonianModel) else np.asarray(h)
    sd = eig(dense)
    t = np.asarray(t_grid, dtype=float)
    qfi = {name: np.array([single_parameter_qfi(sd, generator, psi, x) for x in t]) for name, psi in preps.items()}
    mask = t >= (fit_from if fit_from is not None else t[len(t) // 2])
    mask &= t > 0
    exps = {}
    for name, vals in qfi.items():
        ok = mask & (vals > 0)
        exps[name] = float(np.polyfit(np.log(t[ok]), np.log(vals[ok]), 1)[0]) if ok.sum() >= 2 else float("nan")
    return GhzDemo(t, qfi, exps)


def product_plus(n: int) -> np.ndarray:
    """``|+>^n``: one layer of Hadamards on ``|0...0>``."""
    return np.full(1 << n, 1 / math.sqrt(1 << n), dtype=complex)


# report export ----------------------------------------------------------------


@dataclass
class EthReport:
    r_ratio: float
    t_grid: list
    aod_norm_over_sqrt_t: list
    F: list
    gc_running_avg: list
    rank_error_table: list

    def to_json(self) -> str:
        return json.dumps(
            {
                "t_grid": self.t_grid,
                "aod_norm_over_sqrt_t": self.aod_norm_over_sqrt_t,
                "gc_running_avg": self.gc_running_avg,
                "rank_error_table": self.rank_error_table,
                "r_ratio": self.r_ratio,
                "F": self.F,
            },
            sort_keys=True,
        )
