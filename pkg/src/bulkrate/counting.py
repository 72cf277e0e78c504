"""Counting-number laws of determinantal processes on an interval.

The number of points of a determinantal process in A is distributed as a sum
of independent Bernoulli variables whose success probabilities are the
eigenvalues of the kernel operator restricted to A.  Here those eigenvalues
come from a Nystrom discretization, and the law is assembled by convolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Tuple

import numpy as np

from .kernels import Ensemble, KernelSpec
from .opcalc import DEFAULT_GRID, discretize, gauss_legendre, trace_norm

__all__ = [
    "IntegerLaw",
    "SpectrumSummary",
    "ClampError",
    "ChainResult",
    "spectrum_to_law",
    "w1_integer",
    "tv_integer",
    "dpp_count_law",
    "distance_chain_check",
    "CLAMP_TOL",
]

CLAMP_TOL = 1e-8


class ClampError(ValueError):
    """An operator eigenvalue fell outside [0, 1] by more than the tolerance."""


@dataclass(frozen=True, eq=False)
class IntegerLaw:
    """Probability mass function on {0, 1, 2, ...}."""

    pmf: np.ndarray

    def __post_init__(self) -> None:
        p = np.array(self.pmf, dtype=float).ravel()
        if p.size == 0:
            raise ValueError("empty pmf")
        if np.any(p < -1e-15):
            raise ValueError(f"negative probability {p.min()!r}")
        p = np.clip(p, 0.0, None)
        if abs(p.sum() - 1.0) > 1e-10:
            raise ValueError(f"pmf sums to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "pmf", p)

    @classmethod
    def point_mass(cls, k: int) -> "IntegerLaw":
        p = np.zeros(k + 1)
        p[k] = 1.0
        return cls(p)

    @classmethod
    def from_counts(cls, counts: Sequence[int]) -> "IntegerLaw":
        c = np.bincount(np.asarray(counts, dtype=np.int64))
        return cls(c / c.sum())

    @property
    def support_size(self) -> int:
        return len(self.pmf)

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.pmf)), self.pmf))

    @property
    def variance(self) -> float:
        k = np.arange(len(self.pmf))
        m = self.mean
        return float(np.dot((k - m) ** 2, self.pmf))

    def cdf(self, length: int | None = None) -> np.ndarray:
        return np.cumsum(self.padded(length or len(self.pmf)))

    def padded(self, length: int) -> np.ndarray:
        out = np.zeros(max(length, len(self.pmf)))
        out[: len(self.pmf)] = self.pmf
        return out


@dataclass(frozen=True, eq=False)
class SpectrumSummary:
    eigenvalues: np.ndarray
    trace: float
    clamped_count: int


def spectrum_to_law(eigenvalues: Sequence[float], clamp_tol: float = CLAMP_TOL) -> IntegerLaw:
    """Poisson-binomial law with the given success probabilities.

    Values within ``clamp_tol`` of [0, 1] are clamped; anything further out
    raises ClampError (it means the discretization is not a valid DPP kernel).
    """
    lam = np.asarray(eigenvalues, dtype=float).ravel()
    bad = (lam < -clamp_tol) | (lam > 1.0 + clamp_tol) | ~np.isfinite(lam)
    if np.any(bad):
        raise ClampError(f"eigenvalue {lam[bad][0]!r} outside [0, 1] beyond tolerance {clamp_tol}")
    lam = np.clip(lam, 0.0, 1.0)
    pmf = np.ones(1)
    for p in lam:
        nxt = np.empty(len(pmf) + 1)
        nxt[:-1] = pmf * (1.0 - p)
        nxt[-1] = 0.0
        nxt[1:] += pmf * p
        pmf = nxt
    return IntegerLaw(pmf)


def w1_integer(a: IntegerLaw, b: IntegerLaw) -> float:
    """Wasserstein-1 distance on the integers: sum_k |F_a(k) - F_b(k)|."""
    n = max(a.support_size, b.support_size)
    return float(np.sum(np.abs(a.cdf(n) - b.cdf(n))))


def tv_integer(a: IntegerLaw, b: IntegerLaw) -> float:
    n = max(a.support_size, b.support_size)
    return float(0.5 * np.sum(np.abs(a.padded(n) - b.padded(n))))


def _check_bulk(spec: KernelSpec, lo: float, hi: float) -> None:
    if spec.ensemble is Ensemble.SINE or spec.scaling != "bulk":
        return
    reach = 2.0 * max(abs(lo), abs(hi))
    if not reach / spec.N < 1.0:
        raise ValueError(
            f"bulk restriction 2s/N < 1 violated: interval [{lo}, {hi}] with N={spec.N}"
        )


def dpp_count_law(
    spec: KernelSpec,
    interval: Tuple[float, float] = (-1.0, 1.0),
    grid_size: int = DEFAULT_GRID,
    clamp_tol: float = CLAMP_TOL,
) -> Tuple[IntegerLaw, SpectrumSummary]:
    """Law of the number of points in ``interval`` for the process with kernel ``spec``."""
    lo, hi = map(float, interval)
    if hi == lo:
        return IntegerLaw.point_mass(0), SpectrumSummary(np.zeros(0), 0.0, 0)
    _check_bulk(spec, lo, hi)
    grid = gauss_legendre(grid_size, lo=lo, hi=hi)
    lam = discretize(spec, grid).eigenvalues()
    clamped = int(np.count_nonzero((lam < 0.0) | (lam > 1.0)))
    law = spectrum_to_law(lam, clamp_tol)
    lam = np.clip(lam, 0.0, 1.0)
    return law, SpectrumSummary(lam, float(np.sum(lam)), clamped)


class ChainResult(NamedTuple):
    dtv: float
    w1: float
    tnorm: float

    @property
    def holds(self) -> bool:
        return self.dtv <= self.w1 + 1e-15 and self.w1 <= self.tnorm + 1e-9


def distance_chain_check(
    spec: KernelSpec,
    s: float = 1.0,
    grid_size: int = DEFAULT_GRID,
    reference: KernelSpec | None = None,
    interval: Tuple[float, float] | None = None,
) -> ChainResult:
    """(d_TV, W1, trace norm) between ``spec`` and the sine process on [-s, s].

    The three should satisfy d_TV <= W1 <= ||K - K_sine||_1.  ``interval``
    replaces [-s, s] by an arbitrary sub-interval.
    """
    reference = reference or KernelSpec(Ensemble.SINE)
    lo, hi = interval if interval is not None else (-s, s)
    _check_bulk(spec, lo, hi)
    grid = gauss_legendre(grid_size, lo=lo, hi=hi)
    op = discretize(spec, grid)
    ref = discretize(reference, grid)
    law = spectrum_to_law(op.eigenvalues())
    ref_law = spectrum_to_law(ref.eigenvalues())
    return ChainResult(tv_integer(law, ref_law), w1_integer(law, ref_law), trace_norm(op - ref))
