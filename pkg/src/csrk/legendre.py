"""Normalized shifted Legendre polynomials on [0, 1] with exact algebra.

The basis P_0, P_1, ... is orthonormal for the L2 inner product on [0, 1]
and P_i has exact degree i.  Univariate polynomials are stored by their
coefficients in this basis; all structural constants (the xi ladder, the
per-degree normalizations sqrt(2*i+1)) live in the exact Scalar field, so
basis conversions, antiderivatives and inner products are exact.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Iterable, Sequence

import numpy as np

from .exact import Scalar, ScalarLike, as_scalar

__all__ = [
    "CAP",
    "BasisCapExceeded",
    "UnivariatePoly",
    "eval_legendre",
    "xi",
    "antiderivative",
    "monomial_to_legendre",
    "inner_product",
    "legendre_monomial",
    "legendre_table",
    "ONE",
    "TAU",
]

# Highest admissible basis index; exceeding it is an error, never truncation.
CAP = 32


class BasisCapExceeded(ValueError):
    """A construction needs basis indices beyond the supported cap."""


def _check_index(i: int) -> None:
    if i < 0:
        raise ValueError(f"basis index must be nonnegative, got {i}")
    if i > CAP:
        raise BasisCapExceeded(f"basis index {i} exceeds cap {CAP}")


def xi(i: int) -> Scalar:
    """The ladder constant 1 / (2*sqrt(4*i**2 - 1)), defined for i >= 1."""
    if i < 1:
        raise ValueError(f"xi is defined for indices >= 1, got {i}")
    m = 4 * i * i - 1
    return Scalar.sqrt(m, Fraction(1, 2 * m))


@lru_cache(maxsize=None)
def _shifted_mono(i: int) -> tuple[Fraction, ...]:
    """Monomial coefficients of the unnormalized shifted Legendre polynomial.

    Normalized so the value at x = 1 is 1; multiply by sqrt(2*i+1) for the
    orthonormal basis element.
    """
    return tuple(
        Fraction((-1) ** (i + k) * comb(i, k) * comb(i + k, k)) for k in range(i + 1)
    )


@lru_cache(maxsize=None)
def legendre_monomial(i: int) -> tuple[Scalar, ...]:
    """Exact monomial coefficients of the orthonormal basis element P_i."""
    _check_index(i)
    norm = Scalar.sqrt(2 * i + 1)
    return tuple(norm * c for c in _shifted_mono(i))


def eval_legendre(i: int, x):
    """Evaluate P_i at x.

    Exact inputs (Scalar, Fraction, int) take the exact three-term
    recurrence and return a Scalar; floats and numpy arrays take the same
    recurrence in double precision.
    """
    _check_index(i)
    exact = isinstance(x, (Scalar, Fraction, int))
    if exact:
        t = as_scalar(x) * 2 - 1
        prev, cur = Scalar(1), t
    else:
        t = 2.0 * x - 1.0
        prev, cur = (np.ones_like(t) if isinstance(t, np.ndarray) else 1.0), t
    if i == 0:
        val = prev
    elif i == 1:
        val = cur
    else:
        for n in range(1, i):
            prev, cur = cur, ((2 * n + 1) * t * cur - n * prev) / (n + 1)
        val = cur
    if exact:
        return Scalar.sqrt(2 * i + 1) * val
    return float(np.sqrt(2 * i + 1)) * val


def legendre_table(n_max: int, x: np.ndarray) -> np.ndarray:
    """Float table vals[i, m] = P_i(x[m]) for i = 0..n_max."""
    _check_index(n_max)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = 2.0 * x - 1.0
    vals = np.empty((n_max + 1, x.size))
    vals[0] = 1.0
    if n_max >= 1:
        vals[1] = t
    for n in range(1, n_max):
        vals[n + 1] = ((2 * n + 1) * t * vals[n] - n * vals[n - 1]) / (n + 1)
    return vals * np.sqrt(2 * np.arange(n_max + 1) + 1)[:, None]


def _trim(coeffs: Sequence[Scalar]) -> tuple[Scalar, ...]:
    n = len(coeffs)
    while n > 0 and not coeffs[n - 1]:
        n -= 1
    return tuple(coeffs[:n])


class UnivariatePoly:
    """Polynomial stored by coefficients in the orthonormal shifted basis."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[ScalarLike] = ()):
        trimmed = _trim([as_scalar(c) for c in coeffs])
        if len(trimmed) > CAP + 1:
            raise BasisCapExceeded(
                f"polynomial degree {len(trimmed) - 1} exceeds cap {CAP}"
            )
        object.__setattr__(self, "coeffs", trimmed)

    @property
    def degree(self) -> int:
        return max(len(self.coeffs) - 1, 0)

    def coeff(self, i: int) -> Scalar:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else Scalar(0)

    def __eq__(self, other):
        return isinstance(other, UnivariatePoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __bool__(self):
        return bool(self.coeffs)

    def __add__(self, other: "UnivariatePoly") -> "UnivariatePoly":
        n = max(len(self.coeffs), len(other.coeffs))
        return UnivariatePoly([self.coeff(i) + other.coeff(i) for i in range(n)])

    def __sub__(self, other: "UnivariatePoly") -> "UnivariatePoly":
        n = max(len(self.coeffs), len(other.coeffs))
        return UnivariatePoly([self.coeff(i) - other.coeff(i) for i in range(n)])

    def __neg__(self) -> "UnivariatePoly":
        return UnivariatePoly([-c for c in self.coeffs])

    def __mul__(self, scalar: ScalarLike) -> "UnivariatePoly":
        s = as_scalar(scalar)
        return UnivariatePoly([c * s for c in self.coeffs])

    __rmul__ = __mul__

    def __call__(self, x):
        if isinstance(x, (Scalar, Fraction, int)):
            total = Scalar(0)
            for i, c in enumerate(self.coeffs):
                total = total + c * eval_legendre(i, x)
            return total
        if not self.coeffs:
            return np.zeros_like(np.asarray(x, dtype=float)) if isinstance(x, np.ndarray) else 0.0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        table = legendre_table(len(self.coeffs) - 1, xs)
        vals = self.float_coeffs() @ table
        return vals if isinstance(x, np.ndarray) else float(vals[0])

    def float_coeffs(self, n: int | None = None) -> np.ndarray:
        m = len(self.coeffs) if n is None else n
        out = np.zeros(m)
        for i, c in enumerate(self.coeffs[:m]):
            out[i] = float(c)
        return out

    def antiderivative(self) -> "UnivariatePoly":
        return antiderivative(self)

    def derivative(self) -> "UnivariatePoly":
        mono = self.to_monomial()
        dmono = [k * mono[k] for k in range(1, len(mono))]
        return UnivariatePoly.from_monomial(dmono)

    def to_monomial(self) -> tuple[Scalar, ...]:
        """Exact monomial coefficients (index k = coefficient of x**k)."""
        out = [Scalar(0)] * (len(self.coeffs) or 1)
        for i, c in enumerate(self.coeffs):
            for k, m in enumerate(legendre_monomial(i)):
                out[k] = out[k] + c * m
        return _trim(out)

    @classmethod
    def from_monomial(cls, mono: Sequence[ScalarLike]) -> "UnivariatePoly":
        poly = cls()
        for m, c in enumerate(mono):
            c = as_scalar(c)
            if c:
                poly = poly + monomial_to_legendre(m) * c
        return poly

    def __repr__(self):
        return f"UnivariatePoly([{', '.join(str(c) for c in self.coeffs)}])"


def antiderivative(p: UnivariatePoly) -> UnivariatePoly:
    """The antiderivative q(x) = integral of p from 0 to x, exactly.

    Termwise: the antiderivative of P_0 is xi_1*P_1 + P_0/2, and of P_i
    (i >= 1) is xi_{i+1}*P_{i+1} - xi_i*P_{i-1}.
    """
    if not p.coeffs:
        return UnivariatePoly()
    n = len(p.coeffs)
    if n > CAP:
        raise BasisCapExceeded(f"antiderivative would exceed basis cap {CAP}")
    out = [Scalar(0)] * (n + 1)
    for i, c in enumerate(p.coeffs):
        if not c:
            continue
        if i == 0:
            out[0] = out[0] + c * Fraction(1, 2)
            out[1] = out[1] + c * xi(1)
        else:
            out[i + 1] = out[i + 1] + c * xi(i + 1)
            out[i - 1] = out[i - 1] - c * xi(i)
    return UnivariatePoly(out)


@lru_cache(maxsize=None)
def monomial_to_legendre(m: int) -> UnivariatePoly:
    """Legendre-basis coefficients of x**m via m-fold antidifferentiation."""
    if m < 0:
        raise ValueError(f"monomial exponent must be nonnegative, got {m}")
    if m > CAP:
        raise BasisCapExceeded(f"monomial degree {m} exceeds cap {CAP}")
    poly = UnivariatePoly([1])
    for _ in range(m):
        poly = antiderivative(poly)
    return poly * factorial(m)


def inner_product(u: UnivariatePoly, v: UnivariatePoly) -> Scalar:
    """L2 inner product on [0, 1]; by orthonormality a coefficient dot."""
    total = Scalar(0)
    for i in range(min(len(u.coeffs), len(v.coeffs))):
        total = total + u.coeffs[i] * v.coeffs[i]
    return total


# -- exact monomial-basis helpers (used by the verifiers) -------------------


def mono_mul(a: Sequence[Scalar], b: Sequence[Scalar]) -> tuple[Scalar, ...]:
    if not a or not b:
        return ()
    out = [Scalar(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if not ai:
            continue
        for j, bj in enumerate(b):
            if bj:
                out[i + j] = out[i + j] + ai * bj
    return _trim(out)


def mono_pow(a: Sequence[Scalar], k: int) -> tuple[Scalar, ...]:
    out: tuple[Scalar, ...] = (Scalar(1),)
    for _ in range(k):
        out = mono_mul(out, a)
    return out


def mono_int01(a: Sequence[Scalar]) -> Scalar:
    """Exact integral over [0, 1] of a monomial-coefficient polynomial."""
    total = Scalar(0)
    for k, c in enumerate(a):
        total = total + c * Fraction(1, k + 1)
    return total


ONE = UnivariatePoly([1])
TAU = monomial_to_legendre(1)
