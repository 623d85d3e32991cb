"""Truncated multivariate Taylor polynomials.

A :class:`TaylorPoly` stores the coefficients of all monomials of total degree
at most ``order`` in ``dim`` variables. Arithmetic is truncated at ``order``,
which makes it an exact algebra of jets: products, powers, substitutions and
compositions with analytic univariate functions are all correct through the
truncation order.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Callable, Sequence

import numpy as np


@lru_cache(maxsize=None)
def monomials(dim: int, order: int) -> tuple[tuple[int, ...], ...]:
    """Exponent tuples of degree <= order, graded then lexicographic."""
    out = []
    for deg in range(order + 1):
        for combo in combinations_with_replacement(range(dim), deg):
            exp = [0] * dim
            for i in combo:
                exp[i] += 1
            out.append(tuple(exp))
    return tuple(out)


@lru_cache(maxsize=None)
def _index(dim: int, order: int) -> dict[tuple[int, ...], int]:
    return {m: i for i, m in enumerate(monomials(dim, order))}


@lru_cache(maxsize=None)
def _degrees(dim: int, order: int) -> np.ndarray:
    return np.array([sum(m) for m in monomials(dim, order)], dtype=int)


@lru_cache(maxsize=None)
def _product_table(dim: int, order: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mons = monomials(dim, order)
    index = _index(dim, order)
    degs = _degrees(dim, order)
    left, right, target = [], [], []
    for i, a in enumerate(mons):
        for j, b in enumerate(mons):
            if degs[i] + degs[j] > order:
                continue
            left.append(i)
            right.append(j)
            target.append(index[tuple(x + y for x, y in zip(a, b))])
    return np.array(left), np.array(right), np.array(target)


class TaylorPoly:
    """Polynomial in ``dim`` variables truncated at total degree ``order``."""

    __slots__ = ("dim", "order", "coeffs")

    def __init__(self, dim: int, order: int, coeffs=None):
        self.dim = int(dim)
        self.order = int(order)
        size = len(monomials(self.dim, self.order))
        if coeffs is None:
            self.coeffs = np.zeros(size)
        else:
            coeffs = np.asarray(coeffs, dtype=float)
            if coeffs.shape != (size,):
                raise ValueError(f"expected {size} coefficients, got {coeffs.shape}")
            self.coeffs = coeffs.copy()

    # construction -----------------------------------------------------------

    @classmethod
    def constant(cls, dim: int, order: int, value: float) -> "TaylorPoly":
        p = cls(dim, order)
        p.coeffs[0] = value
        return p

    @classmethod
    def variable(cls, dim: int, order: int, i: int) -> "TaylorPoly":
        p = cls(dim, order)
        if order >= 1:
            exp = [0] * dim
            exp[i] = 1
            p.coeffs[_index(dim, order)[tuple(exp)]] = 1.0
        return p

    @classmethod
    def from_dict(cls, dim: int, order: int, terms: dict) -> "TaylorPoly":
        p = cls(dim, order)
        index = _index(dim, order)
        for exp, c in terms.items():
            if sum(exp) <= order:
                p.coeffs[index[tuple(exp)]] += c
        return p

    def like(self, coeffs=None) -> "TaylorPoly":
        return TaylorPoly(self.dim, self.order, coeffs)

    # access -------------------------------------------------------------------

    def __getitem__(self, exp) -> float:
        return float(self.coeffs[_index(self.dim, self.order)[tuple(exp)]])

    def homogeneous(self, degree: int) -> "TaylorPoly":
        mask = _degrees(self.dim, self.order) == degree
        return self.like(np.where(mask, self.coeffs, 0.0))

    def truncate(self, order: int) -> "TaylorPoly":
        """Re-express in a (possibly smaller or larger) truncation order."""
        out = TaylorPoly(self.dim, order)
        index = _index(self.dim, order)
        for m, c in zip(monomials(self.dim, self.order), self.coeffs):
            if sum(m) <= order:
                out.coeffs[index[m]] = c
        return out

    def derivative(self, exp: Sequence[int]) -> float:
        """Partial derivative at the origin for the multi-exponent ``exp``."""
        return self[exp] * math.prod(math.factorial(e) for e in exp)

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        mons = np.array(monomials(self.dim, self.order))
        return float(np.sum(self.coeffs * np.prod(x[None, :] ** mons, axis=1)))

    # arithmetic ---------------------------------------------------------------

    def _coerce(self, other) -> "TaylorPoly":
        if isinstance(other, TaylorPoly):
            if other.dim != self.dim or other.order != self.order:
                raise ValueError("incompatible Taylor polynomials")
            return other
        return TaylorPoly.constant(self.dim, self.order, float(other))

    def __add__(self, other):
        return self.like(self.coeffs + self._coerce(other).coeffs)

    __radd__ = __add__

    def __neg__(self):
        return self.like(-self.coeffs)

    def __sub__(self, other):
        return self.like(self.coeffs - self._coerce(other).coeffs)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, TaylorPoly):
            return self.like(self.coeffs * float(other))
        other = self._coerce(other)
        left, right, target = _product_table(self.dim, self.order)
        vals = self.coeffs[left] * other.coeffs[right]
        return self.like(np.bincount(target, weights=vals, minlength=self.coeffs.size))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TaylorPoly):
            return self * other.reciprocal()
        return self.like(self.coeffs / float(other))

    def __pow__(self, k: int):
        if int(k) != k or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = TaylorPoly.constant(self.dim, self.order, 1.0)
        base = self
        k = int(k)
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def apply(self, derivs: Sequence[float]) -> "TaylorPoly":
        """Compose with a univariate function given its derivatives at c0.

        ``derivs[k]`` is the k-th derivative of the function at the constant
        term c0 of ``self``; at least ``order + 1`` entries are required.
        """
        if len(derivs) < self.order + 1:
            raise ValueError("not enough derivatives for the truncation order")
        c0 = self.coeffs[0]
        h = self - c0
        out = TaylorPoly.constant(self.dim, self.order, derivs[0])
        power = TaylorPoly.constant(self.dim, self.order, 1.0)
        for k in range(1, self.order + 1):
            power = power * h
            out = out + power * (derivs[k] / math.factorial(k))
        return out

    def reciprocal(self) -> "TaylorPoly":
        c0 = self.coeffs[0]
        if c0 == 0:
            raise ZeroDivisionError("constant term vanishes")
        derivs = [(-1) ** k * math.factorial(k) / c0 ** (k + 1) for k in range(self.order + 1)]
        return self.apply(derivs)

    def sin(self) -> "TaylorPoly":
        c0 = self.coeffs[0]
        cycle = [math.sin(c0), math.cos(c0), -math.sin(c0), -math.cos(c0)]
        return self.apply([cycle[k % 4] for k in range(self.order + 1)])

    def cos(self) -> "TaylorPoly":
        c0 = self.coeffs[0]
        cycle = [math.cos(c0), -math.sin(c0), -math.cos(c0), math.sin(c0)]
        return self.apply([cycle[k % 4] for k in range(self.order + 1)])

    def exp(self) -> "TaylorPoly":
        e = math.exp(self.coeffs[0])
        return self.apply([e] * (self.order + 1))

    def compose(self, args: Sequence["TaylorPoly"]) -> "TaylorPoly":
        """Substitute polynomials ``args`` (one per variable) into ``self``.

        The arguments must have zero constant term unless ``self`` is a true
        polynomial of degree <= order (always the case here), so the
        substitution is exact through the arguments' truncation order.
        """
        if len(args) != self.dim:
            raise ValueError("one argument per variable required")
        dim, order = args[0].dim, args[0].order
        out = TaylorPoly(dim, order)
        # powers of each argument, computed lazily
        powers = [[TaylorPoly.constant(dim, order, 1.0)] for _ in args]
        for m, c in zip(monomials(self.dim, self.order), self.coeffs):
            if c == 0.0:
                continue
            term = TaylorPoly.constant(dim, order, c)
            for i, e in enumerate(m):
                while len(powers[i]) <= e:
                    powers[i].append(powers[i][-1] * args[i])
                if e:
                    term = term * powers[i][e]
            out = out + term
        return out

    def partial(self, i: int) -> "TaylorPoly":
        """Partial derivative in variable i (exact through degree order - 1)."""
        index = _index(self.dim, self.order)
        out = TaylorPoly(self.dim, self.order)
        for m, c in zip(monomials(self.dim, self.order), self.coeffs):
            if m[i] == 0 or c == 0.0:
                continue
            lower = list(m)
            lower[i] -= 1
            out.coeffs[index[tuple(lower)]] += c * m[i]
        return out

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def __repr__(self) -> str:
        terms = [
            f"{c:+.6g}*x^{m}" for m, c in zip(monomials(self.dim, self.order), self.coeffs) if c
        ]
        return f"TaylorPoly(dim={self.dim}, order={self.order}, {' '.join(terms) or '0'})"


def variables(dim: int, order: int) -> list[TaylorPoly]:
    return [TaylorPoly.variable(dim, order, i) for i in range(dim)]


def solve_implicit_height(
    residual: Callable[[TaylorPoly], TaylorPoly],
    dim: int,
    order: int,
    slope: float,
) -> TaylorPoly:
    """Power series h(s) with h(0) = 0 solving residual(h)(s) = 0.

    ``residual`` maps a candidate height polynomial to the polynomial
    G(s, h(s)); ``slope`` is dG/dh at the origin. Each chord sweep fixes at
    least one more order, so ``order`` sweeps suffice.
    """
    if slope == 0.0:
        raise ZeroDivisionError("implicit equation is not solvable for the height")
    h = TaylorPoly(dim, order)
    for _ in range(order + 1):
        h = h - residual(h) / slope
        h.coeffs[0] = 0.0
    return h
