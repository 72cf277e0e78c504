"""Bernoulli numbers and the csc / cot / tan expansion coefficients.

Everything is computed in exact rational arithmetic (``fractions.Fraction``);
float views are derived from the rationals, never computed independently.

The three coefficient families are

* ``csc_coeff(k)``:  csc(x) - 1/x = sum_k c_{2k+1} x^{2k+1},           0 < |x| < pi
* ``cot_coeff(k)``:  cot(u/2N)/(2N) - 1/u = sum_k b_{2k+1} u^{2k+1} / N^{2k+2}
* ``tan_coeff(k)``:  tan(z) = sum_k a_{2k+1} z^{2k+1},                 |z| < pi/2
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Tuple

import mpmath

__all__ = [
    "CoeffTable",
    "bernoulli",
    "zeta_even",
    "csc_coeff",
    "cot_coeff",
    "tan_coeff",
    "coeff_table",
    "bernoulli_growth_ratio",
    "COEFF_KINDS",
]

COEFF_KINDS = ("csc", "cot", "tan", "bernoulli")

_PRECOMPUTE_K = 40

_lock = threading.Lock()
_bernoulli: List[Fraction] = [Fraction(1)]


def _extend_bernoulli(n: int) -> None:
    # sum_{k=0}^{m} binom(m+1, k) B_k = 0  for m >= 1  (convention B_1 = -1/2)
    with _lock:
        for m in range(len(_bernoulli), n + 1):
            if m >= 3 and m % 2 == 1:
                _bernoulli.append(Fraction(0))
                continue
            acc = Fraction(0)
            for k in range(m):
                bk = _bernoulli[k]
                if bk:
                    acc += math.comb(m + 1, k) * bk
            _bernoulli.append(-acc / (m + 1))


def bernoulli(n: int) -> Fraction:
    """Return the Bernoulli number B_n as an exact fraction (B_1 = -1/2)."""
    if n < 0:
        raise ValueError(f"bernoulli: n must be >= 0, got {n}")
    if n >= len(_bernoulli):
        _extend_bernoulli(n)
    return _bernoulli[n]


def zeta_even(n: int) -> float:
    """zeta(2n) from the Bernoulli closed form.

    The power of 2*pi is evaluated in extended precision so the result is
    correctly rounded even where (2 pi)^{2n} is far outside double range.
    """
    if n < 1:
        raise ValueError(f"zeta_even: n must be >= 1, got {n}")
    b = bernoulli(2 * n)
    with mpmath.workprec(64 + 8 * n.bit_length()):
        val = (
            (-1) ** (n + 1)
            * (2 * mpmath.pi) ** (2 * n)
            * mpmath.mpf(b.numerator)
            / b.denominator
            / (2 * mpmath.factorial(2 * n))
        )
        return float(val)


def csc_coeff(k: int) -> Fraction:
    """c_{2k+1} = (-1)^k 2 (2^{2k+1} - 1) B_{2k+2} / (2k+2)!."""
    _check_k(k)
    return Fraction((-1) ** k * 2 * (2 ** (2 * k + 1) - 1)) * bernoulli(2 * k + 2) / math.factorial(2 * k + 2)


def cot_coeff(k: int) -> Fraction:
    """b_{2k+1} = (-1)^{k+1} B_{2k+2} / (2k+2)!.

    With this normalization cot(u/(2N))/(2N) - 1/u expands as
    sum_k b_{2k+1} u^{2k+1} / N^{2k+2}.
    """
    _check_k(k)
    return (-1) ** (k + 1) * bernoulli(2 * k + 2) / math.factorial(2 * k + 2)


def tan_coeff(k: int) -> Fraction:
    """a_{2k+1} = (-4)^{k+1} (1 - 4^{k+1}) B_{2k+2} / (2k+2)!."""
    _check_k(k)
    return Fraction((-4) ** (k + 1) * (1 - 4 ** (k + 1))) * bernoulli(2 * k + 2) / math.factorial(2 * k + 2)


def _check_k(k: int) -> None:
    if k < 0:
        raise ValueError(f"coefficient index must be >= 0, got {k}")


_COEFF_FUNCS = {"csc": csc_coeff, "cot": cot_coeff, "tan": tan_coeff, "bernoulli": bernoulli}


@dataclass(frozen=True)
class CoeffTable:
    """Immutable table of (k, exact, float) triples, indexed from k = 0."""

    kind: str
    entries: Tuple[Tuple[int, Fraction, float], ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Tuple[int, Fraction, float]]:
        return iter(self.entries)

    def __getitem__(self, k: int) -> Fraction:
        return self.entries[k][1]

    def floats(self) -> List[float]:
        return [e[2] for e in self.entries]


def coeff_table(kind: str, max_k: int) -> CoeffTable:
    """Build the table for ``kind`` in {csc, cot, tan, bernoulli} with k = 0..max_k.

    For ``bernoulli`` the index is the plain Bernoulli index n.
    """
    try:
        fn = _COEFF_FUNCS[kind]
    except KeyError:
        raise ValueError(f"unknown coefficient kind {kind!r}; expected one of {COEFF_KINDS}") from None
    if max_k < 0:
        raise ValueError(f"max_k must be >= 0, got {max_k}")
    entries = tuple((k, fn(k), float(fn(k))) for k in range(max_k + 1))
    return CoeffTable(kind=kind, entries=entries)


def _log_abs_fraction(q: Fraction) -> float:
    # math.log accepts arbitrarily large ints, Fraction -> float would overflow
    return math.log(abs(q.numerator)) - math.log(q.denominator)


def bernoulli_growth_ratio(n: int) -> float:
    """|B_{2n}| (pi e)^{2n} / n^{2n + 1/2}, evaluated in log space.

    Tends to 4*sqrt(pi) from above as n grows.
    """
    if n < 1:
        raise ValueError(f"bernoulli_growth_ratio: n must be >= 1, got {n}")
    log_b = _log_abs_fraction(bernoulli(2 * n))
    log_ratio = log_b + 2 * n * math.log(math.pi * math.e) - (2 * n + 0.5) * math.log(n)
    return math.exp(log_ratio)


_extend_bernoulli(2 * _PRECOMPUTE_K + 2)
