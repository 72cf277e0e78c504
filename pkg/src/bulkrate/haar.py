"""Haar-random matrices on U(N), O(N) cosets and Sp(2N), and their eigenangles.

Samplers take either an integer seed or a ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, NamedTuple, Tuple, Union

import numpy as np

from .counting import IntegerLaw
from .kernels import TWO_PI, Ensemble

__all__ = [
    "GroupElement",
    "AngleSample",
    "SamplingError",
    "MCResult",
    "sample_unitary",
    "sample_orthogonal_coset",
    "sample_symplectic",
    "sample_ensemble",
    "symplectic_form",
    "eigenangles",
    "bulk_rescale",
    "mc_count_law",
    "mc_counts",
]

Seed = Union[int, np.random.Generator, np.random.SeedSequence, None]

TRIVIAL_TOL = 1e-6
_CHUNK = 500


class SamplingError(RuntimeError):
    """A sampler or eigen-decomposition produced an invalid result."""


def _rng(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class GroupElement:
    """A sampled matrix together with the ensemble it was drawn from.

    ``N`` is the kernel-row parameter (number of nontrivial eigenangles), so
    e.g. an SO_odd element with N = 3 is a 7 x 7 matrix.
    """

    ensemble: Ensemble
    N: int
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class AngleSample:
    angles: np.ndarray
    ensemble: Ensemble
    N: int


def _ginibre(rng: np.random.Generator, shape, complex_: bool) -> np.ndarray:
    if complex_:
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    return rng.standard_normal(shape)


def _haar_qr(z: np.ndarray) -> np.ndarray:
    # Fix the phases of R's diagonal so the factorization (and hence Q) is unique.
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[..., None, :]


def _unitary_batch(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    return _haar_qr(_ginibre(rng, (count, dim, dim), True))


def _orthogonal_batch(rng: np.random.Generator, count: int, dim: int, det_sign: int) -> np.ndarray:
    # rejection: each Haar draw on O(dim) lands in either coset with probability 1/2
    kept: List[np.ndarray] = []
    have = 0
    while have < count:
        q = _haar_qr(_ginibre(rng, (2 * (count - have) + 4, dim, dim), False))
        q = q[np.sign(np.linalg.det(q)) == det_sign][: count - have]
        kept.append(q)
        have += len(q)
    return np.concatenate(kept)


def _partner(v: np.ndarray, N: int) -> np.ndarray:
    # v = [a; c]  ->  [-conj(c); conj(a)], the column k+N of a quaternionic matrix
    return np.concatenate([-np.conj(v[..., N:]), np.conj(v[..., :N])], axis=-1)


def _symplectic_batch(rng: np.random.Generator, count: int, N: int, max_tries: int = 10) -> np.ndarray:
    # Columns of a quaternionic Ginibre matrix [[A, B], [-conj(B), conj(A)]]:
    # the first N columns are i.i.d. complex Gaussian, the rest are partners.
    out = np.empty((count, 2 * N, 2 * N), dtype=complex)
    todo = np.arange(count)
    for _ in range(max_tries):
        z = _ginibre(rng, (len(todo), 2 * N, N), True)
        q = np.zeros((len(todo), 2 * N, 2 * N), dtype=complex)
        ok = np.ones(len(todo), dtype=bool)
        for k in range(N):
            v = z[:, :, k]
            for _pass in range(2):  # second pass restores orthogonality lost to rounding
                for j in (*range(k), *range(N, N + k)):
                    qj = q[:, :, j]
                    v = v - qj * np.sum(np.conj(qj) * v, axis=1, keepdims=True)
            nrm = np.linalg.norm(v, axis=1)
            ok &= nrm > 1e-10
            v = v / np.where(nrm > 1e-10, nrm, 1.0)[:, None]
            q[:, :, k] = v
            q[:, :, N + k] = _partner(v, N)
        out[todo[ok]] = q[ok]
        todo = todo[~ok]
        if len(todo) == 0:
            return out
    raise SamplingError(f"symplectic orthonormalization broke down {max_tries} times (N={N})")


def sample_unitary(N: int, seed: Seed = None) -> GroupElement:
    """Haar-distributed element of U(N)."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return GroupElement(Ensemble.U, N, _unitary_batch(_rng(seed), 1, N)[0])


def sample_orthogonal_coset(dim: int, det_sign: int, seed: Seed = None) -> np.ndarray:
    """Haar-distributed element of O(dim) conditioned on det = det_sign."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if det_sign not in (1, -1):
        raise ValueError(f"det_sign must be +1 or -1, got {det_sign}")
    return _orthogonal_batch(_rng(seed), 1, dim, det_sign)[0]


def symplectic_form(N: int) -> np.ndarray:
    """J = [[0, I], [-I, 0]] of size 2N."""
    eye = np.eye(N)
    zero = np.zeros((N, N))
    return np.block([[zero, eye], [-eye, zero]])


def sample_symplectic(N: int, seed: Seed = None) -> np.ndarray:
    """Haar-distributed element of Sp(2N), the unitary symplectic group.

    Gram-Schmidt over the quaternions: each new Gaussian column is
    orthogonalized against all previous columns and their quaternionic
    partners, normalized, and its partner fills the matching column of the
    second half.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return _symplectic_batch(_rng(seed), 1, N)[0]


def _batch(ens: Ensemble, N: int, count: int, rng: np.random.Generator) -> np.ndarray:
    if ens is Ensemble.U:
        return _unitary_batch(rng, count, N)
    if ens is Ensemble.SP:
        return _symplectic_batch(rng, count, N)
    if ens is Ensemble.SINE:
        raise ValueError("the sine process has no matrix model to sample")
    sign = 1 if ens in (Ensemble.SO_EVEN, Ensemble.SO_ODD) else -1
    return _orthogonal_batch(rng, count, ens.matrix_dim(N), sign)


def sample_ensemble(ensemble: "Ensemble | str", N: int, seed: Seed = None) -> GroupElement:
    """Draw one matrix whose nontrivial eigenangles form the given ensemble with N points."""
    ens = Ensemble.parse(ensemble)
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return GroupElement(ens, N, _batch(ens, N, 1, _rng(seed))[0])


def _remove_nearest(vals: np.ndarray, target: float) -> np.ndarray:
    # vals: (count, m) -> (count, m - 1), dropping the entry nearest ``target`` per row
    dist = np.abs(vals - target)
    idx = np.argmin(dist, axis=1)
    worst = float(np.max(dist[np.arange(len(vals)), idx]))
    if worst > TRIVIAL_TOL:
        raise SamplingError(f"expected a trivial eigenvalue at {target:+g}; nearest is {worst:.3e} away")
    keep = np.ones(vals.shape, dtype=bool)
    keep[np.arange(len(vals)), idx] = False
    return vals[keep].reshape(len(vals), -1)


def _angles(ens: Ensemble, N: int, mats: np.ndarray) -> np.ndarray:
    vals = np.linalg.eigvals(mats)
    if ens is Ensemble.U:
        return np.sort(np.mod(np.angle(vals), TWO_PI), axis=1)
    if ens is Ensemble.SO_ODD:
        vals = _remove_nearest(vals, 1.0)
    elif ens is Ensemble.SOMINUS_ODD:
        vals = _remove_nearest(vals, -1.0)
    elif ens is Ensemble.SOMINUS_EVEN:
        vals = _remove_nearest(_remove_nearest(vals, 1.0), -1.0)
    if vals.shape[1] != 2 * N:
        raise SamplingError(f"expected {2 * N} paired eigenvalues, got {vals.shape[1]}")
    theta = np.sort(np.abs(np.angle(vals)), axis=1)
    # sorted |arg| values come in equal pairs (theta, theta)
    return 0.5 * (theta[:, 0::2] + theta[:, 1::2])


def eigenangles(g: GroupElement) -> AngleSample:
    """Nontrivial eigenangles of a sampled element.

    Unitary: all N angles in [0, 2pi).  Otherwise the forced +-1 eigenvalues
    are removed and one angle in [0, pi] is kept per conjugate pair.
    """
    return AngleSample(_angles(g.ensemble, g.N, g.entries[None])[0], g.ensemble, g.N)


def _bulk(ens: Ensemble, N: int, angles: np.ndarray) -> np.ndarray:
    if ens is Ensemble.U:
        return N * (angles - math.pi) / TWO_PI
    return N * (angles - 0.5 * math.pi) / math.pi


def bulk_rescale(sample: AngleSample) -> np.ndarray:
    """Map eigenangles to unit mean spacing, centred on the middle of the spectrum."""
    return _bulk(sample.ensemble, sample.N, sample.angles)


def _count_chunk(ens: Ensemble, N: int, lo: float, hi: float, n: int, seq: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.default_rng(seq)
    x = _bulk(ens, N, _angles(ens, N, _batch(ens, N, n, rng)))
    return np.count_nonzero((x >= lo) & (x <= hi), axis=1).astype(np.int64)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("BULKRATE_THREADS", "1")))
    except ValueError:
        return 1


def mc_counts(
    ensemble: "Ensemble | str",
    N: int,
    interval: Tuple[float, float],
    num_samples: int,
    seed: int = 0,
) -> np.ndarray:
    """Counts of bulk-rescaled nontrivial eigenangles in ``interval``, one per sample.

    Samples are drawn in fixed-size chunks, each with its own stream spawned
    from ``seed``, so the result does not depend on the thread count
    (``BULKRATE_THREADS``).
    """
    ens = Ensemble.parse(ensemble)
    if num_samples < 1:
        raise ValueError(f"num_samples must be >= 1, got {num_samples}")
    lo, hi = map(float, interval)
    if not (-N / 2.0 < lo <= hi < N / 2.0):
        raise ValueError(f"interval [{lo}, {hi}] must lie inside (-N/2, N/2) = ({-N / 2}, {N / 2})")
    if lo == hi:
        return np.zeros(num_samples, dtype=np.int64)
    sizes = [min(_CHUNK, num_samples - i) for i in range(0, num_samples, _CHUNK)]
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(ens, N, lo, hi, n, sq) for n, sq in zip(sizes, seqs)]
    workers = _threads()
    if workers == 1:
        parts = [_count_chunk(*job) for job in jobs]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda job: _count_chunk(*job), jobs))
    return np.concatenate(parts)


class MCResult(NamedTuple):
    law: IntegerLaw
    mean: float
    mean_se: float
    variance: float
    num_samples: int


def mc_count_law(
    ensemble: "Ensemble | str",
    N: int,
    interval: Tuple[float, float],
    num_samples: int,
    seed: int = 0,
) -> MCResult:
    """Empirical law of the bulk counting number, with the standard error of its mean."""
    counts = mc_counts(ensemble, N, interval, num_samples, seed)
    sd = float(np.std(counts, ddof=1)) if num_samples > 1 else 0.0
    return MCResult(
        law=IntegerLaw.from_counts(counts),
        mean=float(np.mean(counts)),
        mean_se=sd / math.sqrt(num_samples),
        variance=sd * sd,
        num_samples=num_samples,
    )
