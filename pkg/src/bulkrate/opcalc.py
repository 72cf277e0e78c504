"""Nystrom discretization of integral operators and their norms.

An operator with kernel K on [lo, hi] is represented by the symmetric
weighting  M_ij = sqrt(w_i) K(x_i, x_j) sqrt(w_j)  on a Gauss-Legendre grid.
Matrix products of these represent operator products, singular values of M
approximate the operator's singular values, and the Frobenius norm of M is the
L2 norm of the kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import series
from .kernels import a_kernel, a_prime_kernel, cj_kernel, sj_kernel

__all__ = [
    "QuadratureGrid",
    "DiscretizedOperator",
    "QuadratureError",
    "Residual",
    "gauss_legendre",
    "discretize",
    "compose",
    "trace_norm",
    "hs_norm",
    "hs_norm_kernel",
    "converged_trace_norm",
    "verify_decomposition_A",
    "verify_decomposition_K23",
    "cauchy_schwarz_check",
    "a_norm_bound",
    "a_norm_bound_check",
    "cs_block_bound",
    "cs_block_bound_check",
    "cue_trace_norm_bound",
    "DEFAULT_GRID",
]

Kernel = Callable[[np.ndarray, np.ndarray], np.ndarray]

DEFAULT_GRID = 80
_SYM_RTOL = 1e-13


class QuadratureError(RuntimeError):
    """Quadrature did not resolve the operator, or the eigensolver failed."""


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    lo: float
    hi: float
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        for arr in (self.nodes, self.weights):
            arr.setflags(write=False)

    @property
    def s(self) -> float:
        """Half-width of the interval."""
        return 0.5 * (self.hi - self.lo)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def same_as(self, other: "QuadratureGrid") -> bool:
        return self is other or (
            self.size == other.size
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.weights, other.weights)
        )


def gauss_legendre(n: int, s: float = 1.0, *, lo: float | None = None, hi: float | None = None) -> QuadratureGrid:
    """n-point Gauss-Legendre rule on [-s, s], or on [lo, hi] when both are given."""
    if n < 1:
        raise ValueError(f"need at least one node, got n={n}")
    if lo is None and hi is None:
        if s <= 0:
            raise ValueError(f"s must be positive, got {s}")
        lo, hi = -float(s), float(s)
    elif lo is None or hi is None:
        raise ValueError("give both lo and hi, or neither")
    if not hi > lo:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    t, w = leggauss(n)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    return QuadratureGrid(float(lo), float(hi), mid + half * t, half * w)


@dataclass(frozen=True, eq=False)
class DiscretizedOperator:
    grid: QuadratureGrid
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.matrix.setflags(write=False)

    @property
    def is_symmetric(self) -> bool:
        m = self.matrix
        scale = np.max(np.abs(m)) if m.size else 0.0
        return bool(np.max(np.abs(m - m.T), initial=0.0) <= _SYM_RTOL * max(scale, 1e-300))

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    def _check(self, other: "DiscretizedOperator") -> None:
        if not self.grid.same_as(other.grid):
            raise ValueError("operators live on different quadrature grids")

    def __add__(self, other: "DiscretizedOperator") -> "DiscretizedOperator":
        self._check(other)
        return DiscretizedOperator(self.grid, self.matrix + other.matrix)

    def __sub__(self, other: "DiscretizedOperator") -> "DiscretizedOperator":
        self._check(other)
        return DiscretizedOperator(self.grid, self.matrix - other.matrix)

    def __mul__(self, alpha: float) -> "DiscretizedOperator":
        return DiscretizedOperator(self.grid, float(alpha) * self.matrix)

    __rmul__ = __mul__

    def __neg__(self) -> "DiscretizedOperator":
        return DiscretizedOperator(self.grid, -self.matrix)

    def eigenvalues(self) -> np.ndarray:
        """Real spectrum (ascending) of a symmetric discretization."""
        if not self.is_symmetric:
            raise ValueError("eigenvalues() requires a symmetric discretization")
        try:
            return np.linalg.eigvalsh(self.matrix)
        except np.linalg.LinAlgError as exc:
            raise QuadratureError(f"eigensolver failed: {exc}") from exc


def discretize(kernel: Kernel, grid: QuadratureGrid) -> DiscretizedOperator:
    """Weighted Nystrom matrix sqrt(w_i) K(x_i, x_j) sqrt(w_j)."""
    X, Y = np.meshgrid(grid.nodes, grid.nodes, indexing="ij")
    K = np.asarray(kernel(X, Y), dtype=float)
    if K.shape != X.shape:
        K = np.broadcast_to(K, X.shape).copy()
    bad = ~np.isfinite(K)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise ValueError(f"kernel is not finite at ({grid.nodes[i]!r}, {grid.nodes[j]!r}): {K[i, j]!r}")
    sw = np.sqrt(grid.weights)
    return DiscretizedOperator(grid, sw[:, None] * K * sw[None, :])


def compose(a: DiscretizedOperator, b: DiscretizedOperator) -> DiscretizedOperator:
    """Operator product a b, i.e. the kernel int A(x, t) B(t, y) dt."""
    a._check(b)
    return DiscretizedOperator(a.grid, a.matrix @ b.matrix)


def trace_norm(op: DiscretizedOperator) -> float:
    """Sum of singular values (|eigenvalues| for symmetric input)."""
    try:
        if op.is_symmetric:
            vals = np.abs(np.linalg.eigvalsh(op.matrix))
        else:
            vals = np.linalg.svd(op.matrix, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise QuadratureError(f"eigensolver failed: {exc}") from exc
    return float(np.sum(vals))


def hs_norm(op: DiscretizedOperator) -> float:
    """Hilbert-Schmidt norm, from the singular values (Frobenius norm)."""
    return float(np.linalg.norm(op.matrix, "fro"))


def hs_norm_kernel(kernel: Kernel, grid: QuadratureGrid) -> float:
    """L2 norm of the kernel on grid x grid, by tensor quadrature."""
    X, Y = np.meshgrid(grid.nodes, grid.nodes, indexing="ij")
    K = np.broadcast_to(np.asarray(kernel(X, Y), dtype=float), X.shape)
    W = np.outer(grid.weights, grid.weights)
    return float(math.sqrt(np.sum(W * K * K)))


def converged_trace_norm(kernel: Kernel, s: float, n: int = DEFAULT_GRID, rtol: float = 1e-6) -> float:
    """Trace norm at n nodes, cross-checked against 2n nodes.

    Raises QuadratureError when the two disagree by more than ``rtol``
    (relative) -- the grid is too coarse for this kernel.
    """
    coarse = trace_norm(discretize(kernel, gauss_legendre(n, s)))
    fine = trace_norm(discretize(kernel, gauss_legendre(2 * n, s)))
    if abs(coarse - fine) > rtol * max(fine, 1e-300):
        raise QuadratureError(
            f"trace norm not converged on [-{s}, {s}]: n={n} gives {coarse!r}, "
            f"n={2 * n} gives {fine!r} (rtol {rtol}); increase the grid"
        )
    return fine


class Residual(NamedTuple):
    max_abs: float
    relative: float


def _residual(assembled: np.ndarray, direct: np.ndarray) -> Residual:
    diff = float(np.max(np.abs(assembled - direct)))
    scale = float(np.max(np.abs(direct)))
    return Residual(diff, diff / scale if scale > 0 else diff)


class _Blocks:
    """Lazily discretized C_j / S_j operators on one grid."""

    def __init__(self, grid: QuadratureGrid):
        self.grid = grid
        self._cache: dict = {}

    def C(self, j: int) -> np.ndarray:
        key = ("C", j)
        if key not in self._cache:
            s = self.grid.s
            self._cache[key] = discretize(lambda x, y: cj_kernel(j, s, x, y), self.grid).matrix
        return self._cache[key]

    def S(self, j: int) -> np.ndarray:
        key = ("S", j)
        if key not in self._cache:
            s = self.grid.s
            self._cache[key] = discretize(lambda x, y: sj_kernel(j, s, x, y), self.grid).matrix
        return self._cache[key]


def _assemble_A(k: int, blocks: _Blocks, prime: bool) -> np.ndarray:
    C, S = blocks.C, blocks.S
    m = 2 * k + 2
    ss = 1.0 if not prime else -1.0  # cos(X - Y) vs cos(X + Y)
    out = np.zeros((blocks.grid.size, blocks.grid.size))
    for j in range(k + 2):
        c = math.comb(m, j) * (1.0 if prime else (-1.0) ** j)
        out += c * (C(j) @ C(m - j) + ss * S(j) @ S(m - j))
    for j in range(k + 1):
        c = math.comb(m, j) * (1.0 if prime else (-1.0) ** j)
        out += c * (C(m - j) @ C(j) + ss * S(m - j) @ S(j))
    for j in range(k + 1):
        c = math.comb(m - 1, j) * m * (1.0 if prime else (-1.0) ** j)
        r = m - 1 - j
        if prime:
            out += c * (S(r) @ C(j) + C(j) @ S(r) + C(r) @ S(j) + S(j) @ C(r))
        else:
            out += c * (S(r) @ C(j) + C(j) @ S(r) - C(r) @ S(j) - S(j) @ C(r))
    return out


def verify_decomposition_A(k: int, s: float, grid_size: int = DEFAULT_GRID, prime: bool = False) -> Residual:
    """Compare A_{2k+1} (or A'_{2k+1}) with its assembly from C_j / S_j products.

    Both sides are Nystrom matrices on the same grid; returns the max-abs entry
    difference and the same divided by the largest entry of the direct side.
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    grid = gauss_legendre(grid_size, s)
    kern = a_prime_kernel if prime else a_kernel
    direct = discretize(lambda x, y: kern(k, x, y), grid).matrix
    return _residual(_assemble_A(k, _Blocks(grid), prime), direct)


def verify_decomposition_K23(s: float, grid_size: int = DEFAULT_GRID) -> Tuple[Residual, Residual]:
    """Check the C/S product forms of cos(pi(x - y)) and cos(pi(x + y))."""
    grid = gauss_legendre(grid_size, s)
    b = _Blocks(grid)
    C0, C1, S0, S1 = b.C(0), b.C(1), b.S(0), b.S(1)
    k2 = C0 @ C0 + S0 @ S0 - C0 @ S1 - S1 @ C0 + S0 @ C1 + C1 @ S0
    k3 = C0 @ C0 - S0 @ S0 - C0 @ S1 - S1 @ C0 - S0 @ C1 - C1 @ S0
    d2 = discretize(lambda x, y: np.cos(np.pi * (x - y)), grid).matrix
    d3 = discretize(lambda x, y: np.cos(np.pi * (x + y)), grid).matrix
    return _residual(k2, d2), _residual(k3, d3)


def cauchy_schwarz_check(a: DiscretizedOperator, b: DiscretizedOperator) -> Tuple[float, float]:
    """(||a b||_1, ||a||_2 ||b||_2); the first never exceeds the second."""
    return trace_norm(compose(a, b)), hs_norm(a) * hs_norm(b)


def a_norm_bound(k: int, s: float) -> float:
    """8 s (2 pi s)^{2k+1} (2 pi s / (4k+5) + (2k+2) / (4k+3))."""
    tps = 2.0 * math.pi * s
    return 8.0 * s * tps ** (2 * k + 1) * (tps / (4 * k + 5) + (2 * k + 2) / (4 * k + 3))


def a_norm_bound_check(k: int, s: float, grid_size: int = DEFAULT_GRID) -> Tuple[float, float]:
    """Measured trace norm of A_{2k+1} on [-s, s] alongside its closed-form bound."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    grid = gauss_legendre(grid_size, s)
    measured = trace_norm(discretize(lambda x, y: a_kernel(k, x, y), grid))
    return measured, a_norm_bound(k, s)


def cs_block_bound(j: int, s: float) -> float:
    return math.sqrt(2.0 * s) * (math.pi * s) ** j / (2 * j + 1)


def cs_block_bound_check(j: int, s: float, grid_size: int = DEFAULT_GRID) -> Tuple[float, float, float]:
    """HS norms of C_j and S_j on [-s, s] and the common bound sqrt(2s)(pi s)^j/(2j+1)."""
    if j < 0:
        raise ValueError(f"j must be >= 0, got {j}")
    grid = gauss_legendre(grid_size, s)
    c = hs_norm(discretize(lambda x, y: cj_kernel(j, s, x, y), grid))
    sn = hs_norm(discretize(lambda x, y: sj_kernel(j, s, x, y), grid))
    return c, sn, cs_block_bound(j, s)


def cue_trace_norm_bound(N: int, s: float, k_max: int = 200) -> float:
    """Explicit upper bound on ||K_U^bulk - K_sine||_1 over [-s, s].

    Sums |c_{2k+1}| / N^{2k+2} times the closed-form bound on ||A_{2k+1}||_1;
    the terms decay like (2s/N)^{2k}, so this needs 2s/N < 1.
    """
    if not 2.0 * s / N < 1.0:
        raise ValueError(f"bulk restriction 2s/N < 1 violated (s={s}, N={N})")
    tps = 2.0 * math.pi * s
    total = 0.0
    for k in range(k_max + 1):
        c = series.csc_coeff(k)
        log_term = (
            math.log(abs(c.numerator)) - math.log(c.denominator)
            + math.log(8.0 * s) + (2 * k + 1) * math.log(tps)
            + math.log(tps / (4 * k + 5) + (2 * k + 2) / (4 * k + 3))
            - (2 * k + 2) * math.log(N)
        )
        term = math.exp(log_term)
        total += term
        if term < 1e-17 * total:
            break
    return total
