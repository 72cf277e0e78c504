"""Eigenangle kernels of the classical compact groups and related kernels.

All kernel functions broadcast over numpy arrays and return ``numpy.ndarray``
(0-d arrays for scalar input; use ``float()`` if a Python float is wanted).

Raw kernels live on the eigenangle domain ([0, 2pi) for the unitary group,
[0, pi) otherwise).  Bulk kernels are recentred at the middle of the spectrum
and rescaled to unit mean spacing, so they live on (-N/2, N/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from . import series

__all__ = [
    "Ensemble",
    "KernelSpec",
    "DomainError",
    "dirichlet_ratio",
    "ensemble_kernel",
    "bulk_kernel",
    "sine_kernel",
    "cj_kernel",
    "sj_kernel",
    "a_kernel",
    "a_prime_kernel",
    "so_even_bulk_split",
    "cue_difference_series",
    "so_even_k1_series",
    "so_even_k4_series",
    "bulk_to_angle",
]

TWO_PI = 2.0 * math.pi

# |sin(x/2)| below this switches dirichlet_ratio to its Taylor branch
_DIRICHLET_GUARD = 1e-6


class DomainError(ValueError):
    """A kernel was evaluated outside the domain of its ensemble."""


class Ensemble(str, Enum):
    U = "U"
    SO_EVEN = "SO_even"          # SO(2N)
    SO_ODD = "SO_odd"            # SO(2N+1)
    SOMINUS_ODD = "SOminus_odd"  # SO^-(2N+1)
    SOMINUS_EVEN = "SOminus_even"  # SO^-(2N+2), same kernel as Sp(2N)
    SP = "SP"                    # Sp(2N)
    SINE = "SINE"

    @classmethod
    def parse(cls, value: "str | Ensemble") -> "Ensemble":
        if isinstance(value, Ensemble):
            return value
        for member in cls:
            if member.value.lower() == str(value).lower():
                return member
        raise ValueError(f"unknown ensemble {value!r}; expected one of {[m.value for m in cls]}")

    @property
    def is_unitary(self) -> bool:
        return self is Ensemble.U

    def matrix_dim(self, N: int) -> int:
        """Size of the matrices whose nontrivial eigenangles give N points."""
        return {
            Ensemble.U: N,
            Ensemble.SO_EVEN: 2 * N,
            Ensemble.SO_ODD: 2 * N + 1,
            Ensemble.SOMINUS_ODD: 2 * N + 1,
            Ensemble.SOMINUS_EVEN: 2 * N + 2,
            Ensemble.SP: 2 * N,
        }[self]


GROUP_ENSEMBLES = tuple(e for e in Ensemble if e is not Ensemble.SINE)

# (Dirichlet order as a function of N, sign of the x+y term)
_ROW = {
    Ensemble.SO_EVEN: (lambda N: 2 * N - 1, +1.0),
    Ensemble.SO_ODD: (lambda N: 2 * N, -1.0),
    Ensemble.SOMINUS_ODD: (lambda N: 2 * N, +1.0),
    Ensemble.SOMINUS_EVEN: (lambda N: 2 * N + 1, -1.0),
    Ensemble.SP: (lambda N: 2 * N + 1, -1.0),
}


@dataclass(frozen=True)
class KernelSpec:
    """Which kernel to evaluate: ensemble, size parameter N, and scaling."""

    ensemble: Ensemble
    N: int = 1
    scaling: str = "bulk"

    def __post_init__(self) -> None:
        object.__setattr__(self, "ensemble", Ensemble.parse(self.ensemble))
        if self.scaling not in ("raw", "bulk"):
            raise ValueError(f"scaling must be 'raw' or 'bulk', got {self.scaling!r}")
        if self.ensemble is not Ensemble.SINE and int(self.N) < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")

    @property
    def domain(self) -> Tuple[float, float]:
        """Half-open [lo, hi) for raw scaling, open (lo, hi) for bulk."""
        if self.ensemble is Ensemble.SINE:
            return (-math.inf, math.inf)
        if self.scaling == "bulk":
            return (-self.N / 2.0, self.N / 2.0)
        return (0.0, TWO_PI) if self.ensemble.is_unitary else (0.0, math.pi)

    def __call__(self, x, y) -> np.ndarray:
        if self.scaling == "bulk" or self.ensemble is Ensemble.SINE:
            return bulk_kernel(self, x, y)
        return ensemble_kernel(self, x, y)


def dirichlet_ratio(N: int, x) -> np.ndarray:
    """S_N(x) = sin(N x / 2) / sin(x / 2), with the removable singularities filled.

    Near x = 2 pi m the ratio is replaced by its 4th-order Taylor expansion
    (-1)^{(N-1) m} N (1 - (N^2-1) e^2 / 24 + (N^2-1)(3N^2-7) e^4 / 5760),
    e = x - 2 pi m.
    """
    x = np.asarray(x, dtype=float)
    half = 0.5 * x
    den = np.sin(half)
    small = np.abs(den) < _DIRICHLET_GUARD
    safe_den = np.where(small, 1.0, den)
    out = np.sin(N * half) / safe_den
    if np.any(small):
        m = np.round(x / TWO_PI)
        eps = x - TWO_PI * m
        n2 = N * N - 1.0
        e2 = eps * eps
        taylor = N * (1.0 - n2 * e2 / 24.0 + n2 * (3.0 * N * N - 7.0) * e2 * e2 / 5760.0)
        sign = np.where(((N - 1) * m.astype(np.int64)) % 2 == 0, 1.0, -1.0)
        out = np.where(small, sign * taylor, out)
    return out


def _check_domain(spec: KernelSpec, *arrays) -> None:
    lo, hi = spec.domain
    for a in arrays:
        a = np.asarray(a, dtype=float)
        if spec.scaling == "raw":
            bad = (a < lo) | (a >= hi)
        else:
            bad = (a <= lo) | (a >= hi)
        if np.any(bad) or not np.all(np.isfinite(a)):
            v = a[bad].flat[0] if np.any(bad) else a[~np.isfinite(a)].flat[0]
            bracket = "[{}, {})" if spec.scaling == "raw" else "({}, {})"
            raise DomainError(
                f"{spec.ensemble.value} {spec.scaling} kernel (N={spec.N}) evaluated at {v!r}, "
                f"outside {bracket.format(lo, hi)}"
            )


def _raw(ensemble: Ensemble, N: int, x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if ensemble is Ensemble.U:
        return dirichlet_ratio(N, x - y) / TWO_PI
    order_of, sign = _ROW[ensemble]
    M = order_of(N)
    return (dirichlet_ratio(M, x - y) + sign * dirichlet_ratio(M, x + y)) / TWO_PI


def ensemble_kernel(spec: KernelSpec, x, y) -> np.ndarray:
    """Raw eigenangle kernel K_N(x, y) of one of the compact-group ensembles."""
    if spec.ensemble is Ensemble.SINE:
        return sine_kernel(x, y)
    _check_domain(KernelSpec(spec.ensemble, spec.N, "raw"), x, y)
    return _raw(spec.ensemble, spec.N, x, y)


def bulk_to_angle(ensemble: Ensemble, N: int, x) -> np.ndarray:
    """Inverse of the bulk rescaling: bulk coordinate -> raw eigenangle."""
    x = np.asarray(x, dtype=float)
    if Ensemble.parse(ensemble).is_unitary:
        return TWO_PI * x / N + math.pi
    return math.pi * x / N + 0.5 * math.pi


def bulk_kernel(spec: KernelSpec, x, y) -> np.ndarray:
    """Bulk-scaled kernel; the sine kernel for ``Ensemble.SINE``."""
    if spec.ensemble is Ensemble.SINE:
        return sine_kernel(x, y)
    _check_domain(KernelSpec(spec.ensemble, spec.N, "bulk"), x, y)
    N = spec.N
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if spec.ensemble.is_unitary:
        # 2pi/N K(2pi x/N + pi, .) depends only on x - y; skip the shift
        return dirichlet_ratio(N, TWO_PI * (x - y) / N) / N
    order_of, sign = _ROW[spec.ensemble]
    M = order_of(N)
    diff = math.pi * (x - y) / N
    tot = math.pi * (x + y) / N + math.pi
    return (dirichlet_ratio(M, diff) + sign * dirichlet_ratio(M, tot)) / (2.0 * N)


def sine_kernel(x, y) -> np.ndarray:
    """sin(pi (x - y)) / (pi (x - y)), equal to 1 on the diagonal."""
    return np.sinc(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))


def cj_kernel(j: int, s: float, x, y) -> np.ndarray:
    """C_j(x, y) = cos(pi x y / s) (pi x y / s)^j / sqrt(2 s)."""
    z = math.pi * np.asarray(x, dtype=float) * np.asarray(y, dtype=float) / s
    return np.cos(z) * z**j / math.sqrt(2.0 * s)


def sj_kernel(j: int, s: float, x, y) -> np.ndarray:
    """S_j(x, y) = sin(pi x y / s) (pi x y / s)^j / sqrt(2 s)."""
    z = math.pi * np.asarray(x, dtype=float) * np.asarray(y, dtype=float) / s
    return np.sin(z) * z**j / math.sqrt(2.0 * s)


def a_kernel(k: int, x, y) -> np.ndarray:
    """A_{2k+1}(x, y) = (pi (x - y))^{2k+1} sin(pi (x - y))."""
    u = math.pi * (np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    return u ** (2 * k + 1) * np.sin(u)


def a_prime_kernel(k: int, x, y) -> np.ndarray:
    """A'_{2k+1}(x, y) = (pi (x + y))^{2k+1} sin(pi (x + y))."""
    u = math.pi * (np.asarray(x, dtype=float) + np.asarray(y, dtype=float))
    return u ** (2 * k + 1) * np.sin(u)


def so_even_bulk_split(N: int, x, y) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Four-term split of the bulk SO(2N) kernel.

    Returns (K1, K2, K3, K4) with
    bulk_kernel(SO_even, N) = K1 - K2 - (-1)^N K3 - (-1)^N K4.
    """
    _check_domain(KernelSpec(Ensemble.SO_EVEN, N, "bulk"), x, y)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = math.pi * (x - y)
    t = math.pi * (x + y)
    zero = d == 0.0
    half = np.where(zero, 1.0, d / (2 * N))
    k1 = np.where(zero, 1.0, np.sin(d) / np.tan(half) / (2 * N))
    k2 = np.cos(d) / (2 * N)
    k3 = np.cos(t) / (2 * N)
    k4 = np.sin(t) * np.tan(t / (2 * N)) / (2 * N)
    return k1, k2, k3, k4


def _odd_series(coeffs, scale: float, u: np.ndarray, k_max: int) -> np.ndarray:
    # sum_k coeffs[k] * u^{2k+1} * sin(u) / scale^{2k+2}
    total = np.zeros_like(u)
    su = np.sin(u)
    for k in range(k_max + 1):
        total = total + float(coeffs(k)) * u ** (2 * k + 1) / scale ** (2 * k + 2)
    return total * su


def cue_difference_series(N: int, k_max: int, x, y) -> np.ndarray:
    """Truncated expansion of bulk_kernel(U, N) - sine_kernel in the A_{2k+1} kernels.

    sum_{k=0}^{k_max} c_{2k+1} A_{2k+1}(x, y) / N^{2k+2}; needs |x - y| < N.
    """
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")
    u = math.pi * (np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    if np.any(np.abs(u) >= math.pi * N):
        raise DomainError(f"cue_difference_series needs |x - y| < N = {N}")
    return _odd_series(series.csc_coeff, float(N), u, k_max)


def so_even_k1_series(N: int, k_max: int, x, y) -> np.ndarray:
    """Truncated expansion of K1 - sine_kernel: sum_k b_{2k+1} A_{2k+1} / N^{2k+2}."""
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")
    u = math.pi * (np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    if np.any(np.abs(u) >= 2 * math.pi * N):
        raise DomainError(f"so_even_k1_series needs |x - y| < 2N = {2 * N}")
    return _odd_series(series.cot_coeff, float(N), u, k_max)


def so_even_k4_series(N: int, k_max: int, x, y) -> np.ndarray:
    """Truncated expansion of K4: sum_k a_{2k+1} A'_{2k+1} / (2N)^{2k+2}."""
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")
    u = math.pi * (np.asarray(x, dtype=float) + np.asarray(y, dtype=float))
    if np.any(np.abs(u) >= math.pi * N):
        raise DomainError(f"so_even_k4_series needs |x + y| < N = {N}")
    return _odd_series(series.tan_coeff, 2.0 * N, u, k_max)
