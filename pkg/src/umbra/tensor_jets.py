"""Symmetric multilinear forms and boundary jets.

Convention: the order-k tensor of a jet is the k-th derivative D^k f at the
base point, never the Taylor coefficient D^k f / k!. Multi-indices are 0-based
sorted tuples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement, permutations
from typing import Iterable, Sequence

import numpy as np

from .errors import ArgumentError
from .taylor import TaylorPoly, monomials, variables


def _exponent(index: Sequence[int], dim: int) -> tuple[int, ...]:
    exp = [0] * dim
    for i in index:
        exp[i] += 1
    return tuple(exp)


def _sorted_index(exp: Sequence[int]) -> tuple[int, ...]:
    return tuple(i for i, e in enumerate(exp) for _ in range(e))


def symmetrize(arr: np.ndarray) -> np.ndarray:
    """Average of an array over all permutations of its axes."""
    k = arr.ndim
    if k < 2:
        return np.array(arr, dtype=float)
    out = np.zeros_like(arr, dtype=float)
    perms = list(permutations(range(k)))
    for p in perms:
        out += np.transpose(arr, p)
    return out / len(perms)


class SymTensor:
    """Order-k symmetric form on R^d stored by sorted multi-index."""

    __slots__ = ("order", "dim", "entries", "_full")

    def __init__(self, order: int, dim: int, entries: dict | None = None):
        if order < 0 or dim < 1:
            raise ArgumentError(f"invalid tensor shape order={order}, dim={dim}")
        self.order = int(order)
        self.dim = int(dim)
        self.entries = {idx: 0.0 for idx in combinations_with_replacement(range(dim), order)}
        if entries:
            for idx, val in entries.items():
                key = tuple(sorted(idx))
                if key not in self.entries:
                    raise ArgumentError(f"multi-index {idx} out of range for dim {dim}")
                self.entries[key] = float(val)
        self._full = None

    # conversions --------------------------------------------------------------

    @classmethod
    def zeros(cls, order: int, dim: int) -> "SymTensor":
        return cls(order, dim)

    @classmethod
    def from_array(cls, arr, check: bool = True, tol: float = 1e-12, dim: int | None = None) -> "SymTensor":
        arr = np.asarray(arr, dtype=float)
        k = arr.ndim
        if k:
            dim = arr.shape[0]
        elif dim is None:
            dim = 1
        if check and k >= 2:
            sym = symmetrize(arr)
            if np.max(np.abs(sym - arr), initial=0.0) > tol * max(1.0, np.max(np.abs(arr))):
                raise ArgumentError("array is not symmetric")
        t = cls(k, dim)
        for idx in t.entries:
            t.entries[idx] = float(arr[idx]) if k else float(arr)
        return t

    @classmethod
    def identity(cls, dim: int) -> "SymTensor":
        return cls.from_array(np.eye(dim))

    @classmethod
    def from_polynomial(cls, poly: TaylorPoly, order: int) -> "SymTensor":
        """D^order of ``poly`` at the origin."""
        t = cls(order, poly.dim)
        for idx in t.entries:
            t.entries[idx] = poly.derivative(_exponent(idx, poly.dim))
        return t

    def to_polynomial(self, truncation: int | None = None) -> TaylorPoly:
        """Homogeneous polynomial T[x,...,x] / k!."""
        order = self.order if truncation is None else truncation
        terms = {}
        for idx, val in self.entries.items():
            exp = _exponent(idx, self.dim)
            terms[exp] = val / math.prod(math.factorial(e) for e in exp)
        return TaylorPoly.from_dict(self.dim, order, terms)

    def full(self) -> np.ndarray:
        if self._full is None:
            arr = np.zeros((self.dim,) * self.order)
            for idx, val in self.entries.items():
                for p in set(permutations(idx)):
                    arr[p] = val
            arr.flags.writeable = False
            self._full = arr
        return self._full

    # algebra ------------------------------------------------------------------

    def __add__(self, other: "SymTensor") -> "SymTensor":
        self._check_like(other)
        return SymTensor(self.order, self.dim, {k: v + other.entries[k] for k, v in self.entries.items()})

    def __sub__(self, other: "SymTensor") -> "SymTensor":
        self._check_like(other)
        return SymTensor(self.order, self.dim, {k: v - other.entries[k] for k, v in self.entries.items()})

    def __mul__(self, s: float) -> "SymTensor":
        return SymTensor(self.order, self.dim, {k: v * s for k, v in self.entries.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "SymTensor":
        return self * -1.0

    def _check_like(self, other: "SymTensor") -> None:
        if (self.order, self.dim) != (other.order, other.dim):
            raise ArgumentError("tensor shapes differ")

    def norm(self) -> float:
        """Frobenius norm of the full array."""
        return float(np.sqrt(np.sum(self.full() ** 2)))

    def max_abs(self) -> float:
        return max((abs(v) for v in self.entries.values()), default=0.0)

    def transform(self, M) -> "SymTensor":
        """The form (v_1, ..., v_k) -> T(M v_1, ..., M v_k)."""
        M = np.asarray(M, dtype=float)
        if M.shape[0] != self.dim:
            raise ArgumentError("matrix does not match tensor dimension")
        arr = self.full()
        for axis in range(self.order):
            arr = np.tensordot(arr, M, axes=([0], [0]))
        return SymTensor.from_array(arr, check=False, dim=M.shape[1])

    def __repr__(self) -> str:
        return f"SymTensor(order={self.order}, dim={self.dim}, max={self.max_abs():.3g})"


def sym_apply(T: SymTensor, vectors: Sequence) -> float:
    """Evaluate T on ``vectors``."""
    if len(vectors) != T.order:
        raise ArgumentError(f"expected {T.order} vectors, got {len(vectors)}")
    arr = T.full()
    for v in vectors:
        v = np.asarray(v, dtype=float)
        if v.shape != (T.dim,):
            raise ArgumentError(f"vector of shape {v.shape} does not match dim {T.dim}")
        arr = np.tensordot(v, arr, axes=([0], [0]))
    return float(arr)


def contract(T: SymTensor, u) -> SymTensor:
    """Insert ``u`` into the first slot: (v...) -> T(u, v...)."""
    if T.order == 0:
        raise ArgumentError("cannot contract an order-0 tensor")
    u = np.asarray(u, dtype=float)
    if u.shape != (T.dim,):
        raise ArgumentError("vector does not match tensor dimension")
    return SymTensor.from_array(np.tensordot(u, T.full(), axes=([0], [0])), check=False, dim=T.dim)


def restrict(T: SymTensor, basis) -> SymTensor:
    """Pull back T along the columns of ``basis`` (d x m)."""
    return T.transform(np.asarray(basis, dtype=float))


# -- jets ---------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryJet:
    """Derivative tensors D^0 f .. D^K f of a graph function at the origin."""

    tensors: tuple

    def __post_init__(self):
        if not self.tensors:
            raise ArgumentError("a jet needs at least one tensor")
        dim = self.tensors[0].dim
        for k, t in enumerate(self.tensors):
            if t.order != k or t.dim != dim:
                raise ArgumentError(f"tensor {k} has order {t.order}, dim {t.dim}")

    @property
    def dim(self) -> int:
        return self.tensors[0].dim

    @property
    def order(self) -> int:
        return len(self.tensors) - 1

    def __getitem__(self, k: int) -> SymTensor:
        return self.tensors[k]

    def is_canonical(self, tol: float = 1e-10) -> bool:
        if self.order < 2:
            return False
        return (
            abs(self.tensors[0].entries[()]) <= tol
            and self.tensors[1].max_abs() <= tol
            and np.max(np.abs(self.tensors[2].full() - np.eye(self.dim))) <= tol
        )

    def polynomial(self, truncation: int | None = None) -> TaylorPoly:
        order = self.order if truncation is None else truncation
        out = TaylorPoly(self.dim, order)
        for t in self.tensors[: order + 1]:
            out = out + t.to_polynomial(order)
        return out

    @classmethod
    def from_polynomial(cls, poly: TaylorPoly) -> "BoundaryJet":
        return cls(tuple(SymTensor.from_polynomial(poly, k) for k in range(poly.order + 1)))

    @classmethod
    def canonical(cls, dim: int, higher: Iterable[SymTensor] = ()) -> "BoundaryJet":
        """Canonical jet with the given tensors of order 3, 4, ..."""
        return cls((SymTensor(0, dim), SymTensor(1, dim), SymTensor.identity(dim), *higher))

    def truncate(self, order: int) -> "BoundaryJet":
        if order > self.order:
            raise ArgumentError("cannot extend a jet")
        return BoundaryJet(self.tensors[: order + 1])

    def __call__(self, x) -> float:
        """Value of the truncated Taylor polynomial at x."""
        x = np.asarray(x, dtype=float)
        total = 0.0
        for k, t in enumerate(self.tensors):
            total += sym_apply(t, [x] * k) / math.factorial(k)
        return total

    def max_diff(self, other: "BoundaryJet", upto: int | None = None) -> float:
        upto = min(self.order, other.order) if upto is None else upto
        return max(
            float(np.max(np.abs(self.tensors[k].full() - other.tensors[k].full()), initial=0.0))
            for k in range(upto + 1)
        )

    # serialization ----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "order": self.order,
            "tensors": {
                str(k): [[list(idx), val] for idx, val in t.entries.items()]
                for k, t in enumerate(self.tensors)
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BoundaryJet":
        dim = int(data["dim"])
        order = int(data["order"])
        tensors = []
        for k in range(order + 1):
            entries = {tuple(idx): float(val) for idx, val in data["tensors"][str(k)]}
            tensors.append(SymTensor(k, dim, entries))
        return cls(tuple(tensors))


def _check_orthogonal(R, dim: int, tol: float = 1e-12) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if R.shape != (dim, dim):
        raise ArgumentError(f"rotation must be {dim}x{dim}")
    if np.max(np.abs(R.T @ R - np.eye(dim))) > tol:
        raise ArgumentError("matrix is not orthogonal")
    return R


def rotate_domain(J: BoundaryJet, R) -> BoundaryJet:
    """Jet of f o R for an orthogonal R."""
    R = _check_orthogonal(R, J.dim)
    return BoundaryJet(tuple(t.transform(R) for t in J.tensors))


def shear_jet(J: BoundaryJet, eta) -> BoundaryJet:
    """Jet after the ambient map (x, z) -> (x + z*eta, z) applied to the graph.

    The sheared graph height F satisfies F(y) = f(y - eta F(y)); the series is
    solved by fixed-point substitution, exact through the jet's order.
    """
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (J.dim,):
        raise ArgumentError("shear vector does not match jet dimension")
    if not np.all(np.isfinite(eta)):
        raise ArgumentError("shear vector must be finite")
    f = J.polynomial()
    ys = variables(J.dim, J.order)
    F = f
    for _ in range(J.order):
        F = f.compose([y - F * e for y, e in zip(ys, eta)])
    return BoundaryJet.from_polynomial(F)


def gauge_cubic(dim: int, eta) -> SymTensor:
    """The trilinear form <a,b><c,eta> + <b,c><a,eta> + <a,c><b,eta>.

    As a cubic polynomial this is 3<x,x><x,eta>; it is exactly the change
    that shear_jet(J, eta) subtracts from the order-3 tensor.
    """
    eta = np.asarray(eta, dtype=float)
    I = np.eye(dim)
    arr = np.einsum("ab,c->abc", I, eta) + np.einsum("bc,a->abc", I, eta) + np.einsum("ac,b->abc", I, eta)
    return SymTensor.from_array(arr, check=False)


def random_symtensor(order: int, dim: int, rng: np.random.Generator, scale: float = 1.0) -> SymTensor:
    t = SymTensor(order, dim)
    for idx in t.entries:
        t.entries[idx] = float(rng.normal(scale=scale))
    return t


def random_canonical_jet(dim: int, order: int, rng: np.random.Generator, scale: float = 1.0) -> BoundaryJet:
    return BoundaryJet.canonical(dim, [random_symtensor(k, dim, rng, scale) for k in range(3, order + 1)])


__all__ = [
    "BoundaryJet",
    "SymTensor",
    "contract",
    "monomials",
    "random_canonical_jet",
    "random_symtensor",
    "restrict",
    "rotate_domain",
    "gauge_cubic",
    "shear_jet",
    "sym_apply",
    "symmetrize",
]
