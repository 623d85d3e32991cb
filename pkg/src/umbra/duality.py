"""Projective polarity with respect to the unit sphere.

A point p is represented by homogeneous coordinates (p, 1) and a hyperplane
{<a, x> = b} by dual coordinates (a, -b), so incidence is the vanishing of the
dot product. The polar of p is {<x, p> = 1}, i.e. dual coordinates (p, -1):
in homogeneous terms the correlation is the fixed matrix J' = diag(1,...,1,-1)
in both directions. The polar of 0 is the hyperplane at infinity (0,...,0,1)
and hyperplanes through 0 have poles at infinity.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .bodies import QuadricBody
from .errors import ArgumentError

INCIDENCE_TOL = 1e-12


def _normalize(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.ndim != 1 or h.size < 2:
        raise ArgumentError("homogeneous coordinates need at least two entries")
    if not np.any(h):
        raise ArgumentError("homogeneous coordinates must not all vanish")
    scale = np.max(np.abs(h))
    if abs(h[-1]) > 1e-14 * scale:
        return h / h[-1]
    h = h / np.linalg.norm(h)
    k = np.flatnonzero(np.abs(h) > 1e-14)[0]
    return h if h[k] > 0 else -h


@dataclass(frozen=True, eq=False)
class ProjPoint:
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _normalize(self.coords))

    @classmethod
    def affine(cls, p) -> "ProjPoint":
        p = np.asarray(p, dtype=float)
        return cls(np.append(p, 1.0))

    @classmethod
    def at_infinity(cls, direction) -> "ProjPoint":
        return cls(np.append(np.asarray(direction, dtype=float), 0.0))

    @property
    def is_infinite(self) -> bool:
        return self.coords[-1] == 0.0

    @property
    def affine_coords(self) -> np.ndarray:
        if self.is_infinite:
            raise ArgumentError("point at infinity has no affine coordinates")
        return self.coords[:-1].copy()

    def __eq__(self, other) -> bool:
        return isinstance(other, ProjPoint) and _proportional(self.coords, other.coords)


@dataclass(frozen=True, eq=False)
class ProjHyperplane:
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _normalize(self.coords))

    @classmethod
    def affine(cls, a, b: float) -> "ProjHyperplane":
        """The hyperplane {<a, x> = b}."""
        return cls(np.append(np.asarray(a, dtype=float), -float(b)))

    @classmethod
    def at_infinity(cls, n: int) -> "ProjHyperplane":
        return cls(np.append(np.zeros(n), 1.0))

    @property
    def is_infinite(self) -> bool:
        return not np.any(self.coords[:-1])

    @property
    def normal(self) -> np.ndarray:
        return self.coords[:-1].copy()

    @property
    def offset(self) -> float:
        return float(-self.coords[-1])

    def __eq__(self, other) -> bool:
        return isinstance(other, ProjHyperplane) and _proportional(self.coords, other.coords)


def _proportional(a: np.ndarray, b: np.ndarray, tol: float = 1e-10) -> bool:
    if a.shape != b.shape:
        return False
    M = np.stack([a, b])
    s = np.linalg.svd(M, compute_uv=False)
    return s[1] <= tol * s[0]


def _jprime(n1: int) -> np.ndarray:
    return np.diag(np.append(np.ones(n1 - 1), -1.0))


def polar_of_point(p) -> ProjHyperplane:
    P = p if isinstance(p, ProjPoint) else ProjPoint.affine(p)
    return ProjHyperplane(_jprime(P.coords.size) @ P.coords)


def polar_of_hyperplane(H: ProjHyperplane) -> ProjPoint:
    return ProjPoint(_jprime(H.coords.size) @ H.coords)


def incidence(p: ProjPoint, H: ProjHyperplane) -> float:
    """Scale-free incidence defect |<p, H>| / (|p| |H|)."""
    return float(abs(p.coords @ H.coords) / (np.linalg.norm(p.coords) * np.linalg.norm(H.coords)))


def apply_to_point(A, p: ProjPoint) -> ProjPoint:
    return ProjPoint(np.asarray(A, dtype=float) @ p.coords)


def apply_to_hyperplane(A, H: ProjHyperplane) -> ProjHyperplane:
    """Image of H under the point map A: dual coordinates transform by A^{-T}."""
    return ProjHyperplane(np.linalg.solve(np.asarray(A, dtype=float).T, H.coords))


def automorphism_dual(A) -> np.ndarray:
    """Matrix A' with (A p)° = A' p° for every point p.

    In homogeneous coordinates A' = J' A^{-T} J'; for maps fixing the origin
    (block-diagonal A) this is A^{-T}.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ArgumentError("automorphism must be a square matrix")
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] <= 1e-12 * s[0]:
        raise ArgumentError("automorphism matrix is singular")
    Jp = _jprime(A.shape[0])
    return Jp @ np.linalg.inv(A).T @ Jp


# -- polytopes --------------------------------------------------------------------


@dataclass
class Polytope:
    """Convex hull of a vertex list, with the origin strictly inside."""

    vertices: np.ndarray

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if V.shape[0] < V.shape[1] + 1:
            raise ArgumentError("a full-dimensional polytope needs at least n + 1 vertices")
        self.vertices = V

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def facets(self, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
        """Facet normals a_k and offsets b_k with P = {<a_k, x> <= b_k}, |a_k| = 1."""
        return _facets(self.vertices, tol)

    def extreme_vertices(self, tol: float = 1e-10) -> np.ndarray:
        A, b = self.facets(tol)
        scale = 1 + np.max(np.abs(self.vertices))
        tight = np.abs(self.vertices @ A.T - b) <= tol * scale
        keep = [i for i in range(len(self.vertices)) if np.linalg.matrix_rank(A[tight[i]], tol=1e-9) == self.dim]
        return _unique_rows(self.vertices[keep], tol * scale)

    def contains(self, x, tol: float = 1e-10) -> bool:
        A, b = self.facets()
        return bool(np.all(A @ np.asarray(x, dtype=float) <= b + tol))

    def support(self, u) -> float:
        return float(np.max(self.vertices @ np.asarray(u, dtype=float)))

    def to_dict(self) -> dict:
        return {"vertices": self.vertices.tolist()}


def _unique_rows(X: np.ndarray, tol: float) -> np.ndarray:
    out: list[np.ndarray] = []
    for x in X:
        if all(np.max(np.abs(x - y)) > tol for y in out):
            out.append(x)
    return np.array(out).reshape(-1, X.shape[1])


def _facets(V: np.ndarray, tol: float):
    """Facet enumeration by testing every hyperplane spanned by n vertices."""
    m, n = V.shape
    scale = 1 + np.max(np.abs(V))
    normals, offsets = [], []
    for idx in combinations(range(m), n):
        P = V[list(idx)]
        D = P[1:] - P[0]
        if n > 1:
            _, s, vt = np.linalg.svd(D)
            if s[-1] <= 1e-12 * scale:
                continue
            a = vt[-1]
        else:
            a = np.array([1.0])
        b = float(a @ P[0])
        side = V @ a - b
        if np.all(side <= tol * scale):
            pass
        elif np.all(side >= -tol * scale):
            a, b = -a, -b
        else:
            continue
        if not any(np.max(np.abs(a - a2)) <= 1e-9 and abs(b - b2) <= 1e-9 * scale for a2, b2 in zip(normals, offsets)):
            normals.append(a)
            offsets.append(b)
    if len(normals) < n + 1:
        raise ArgumentError("vertices do not span a full-dimensional polytope")
    return np.array(normals), np.array(offsets)


def origin_interior(P: Polytope, tol: float = 1e-12) -> bool:
    _, b = P.facets()
    return bool(np.all(b > tol * (1 + np.max(np.abs(P.vertices)))))


def polar_polytope(P: Polytope) -> Polytope:
    """Vertices of P° = {y : <x, y> <= 1 on P}: facet a.x <= b maps to a / b.

    Each polar vertex is recomputed by solving <v, y> = 1 over n affinely
    independent vertices of its facet, which is exact for integer data such
    as the cube and the cross-polytope.
    """
    A, b = P.facets()
    V = P.vertices
    scale = 1 + np.max(np.abs(V))
    if not np.all(b > 1e-12 * scale):
        raise ArgumentError("the origin must lie strictly inside the polytope")
    out = []
    for a, off in zip(A, b):
        tight = V[np.abs(V @ a - off) <= 1e-10 * scale]
        basis: list[np.ndarray] = []
        for v in tight:
            if np.linalg.matrix_rank(np.array(basis + [v]), tol=1e-9 * scale) == len(basis) + 1:
                basis.append(v)
            if len(basis) == P.dim:
                break
        out.append(np.linalg.solve(np.array(basis), np.ones(P.dim)))
    return Polytope(np.array(out))


def cube(n: int, half: float = 1.0) -> Polytope:
    corners = np.array(np.meshgrid(*[[-half, half]] * n, indexing="ij")).reshape(n, -1).T
    return Polytope(corners)


def cross_polytope(n: int) -> Polytope:
    return Polytope(np.vstack([np.eye(n), -np.eye(n)]))


def same_vertex_set(X, Y, tol: float = 1e-10) -> bool:
    X = np.atleast_2d(X)
    Y = np.atleast_2d(Y)
    if X.shape != Y.shape:
        return False
    used = set()
    for x in X:
        d = np.max(np.abs(Y - x), axis=1)
        j = int(np.argmin(d))
        if d[j] > tol or j in used:
            return False
        used.add(j)
    return True


# -- quadrics ---------------------------------------------------------------------


def quadric_support(Q: QuadricBody, y) -> float:
    """h_Q(y) = <c, y> + sqrt(y^T A^{-1} y) for Q = {(x-c)^T A (x-c) <= 1}."""
    y = np.asarray(y, dtype=float)
    return float(Q.center @ y + np.sqrt(y @ np.linalg.solve(Q.A, y)))


def polar_quadric(Q: QuadricBody) -> QuadricBody:
    """The polar ellipsoid {y : h_Q(y) <= 1}.

    h_Q(y) <= 1 iff y^T (A^{-1} - c c^T) y + 2 <c, y> <= 1, an ellipsoid
    whenever the origin is interior (c^T A c < 1).
    """
    c = Q.center
    if not c @ Q.A @ c < 1.0:
        raise ArgumentError("the origin must lie strictly inside the quadric")
    B = np.linalg.inv(Q.A) - np.outer(c, c)
    y0 = -np.linalg.solve(B, c)
    k = 1.0 + c @ np.linalg.solve(B, c)
    return QuadricBody(B / k, y0)


def section_points(Q: QuadricBody, H: ProjHyperplane, samples: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Points of the boundary of Q on the affine hyperplane H (random directions)."""
    if H.is_infinite:
        raise ArgumentError("the hyperplane at infinity misses the body")
    a, b = H.normal, H.offset
    n = a.size
    A, c = Q.A, Q.center
    # minimizer of (x-c)^T A (x-c) on <a, x> = b
    Ainv_a = np.linalg.solve(A, a)
    x0 = c + (b - a @ c) / (a @ Ainv_a) * Ainv_a
    level = 1.0 - (x0 - c) @ A @ (x0 - c)
    if level <= 0:
        raise ArgumentError("the hyperplane misses the interior of the body")
    _, _, vt = np.linalg.svd(a.reshape(1, -1))
    E = vt[1:].T
    M = E.T @ A @ E
    rng = np.random.default_rng(0) if rng is None else rng
    S = rng.normal(size=(samples, n - 1))
    norms = np.sqrt(np.einsum("ki,ij,kj->k", S, M, S))
    S = S / norms[:, None] * np.sqrt(level)
    return x0 + S @ E.T


def section_cone_duality_check(Q: QuadricBody, H: ProjHyperplane, samples: int = 64, rng=None) -> dict:
    """Sections of Q by H correspond to hyperplanes supporting Q° through H°.

    For each sampled x on the boundary of Q within H, the polar hyperplane of
    x must support Q° (h_{Q°}(x) = 1) and pass through the pole of H.
    """
    X = section_points(Q, H, samples, rng)
    Qp = polar_quadric(Q)
    pole = polar_of_hyperplane(H)
    support = max(abs(quadric_support(Qp, x) - 1.0) for x in X)
    inc = max(incidence(pole, polar_of_point(x)) for x in X)
    return {
        "samples": int(samples),
        "support_residual": float(support),
        "incidence_residual": float(inc),
        "max_residual": float(max(support, inc)),
        "pole": pole.coords.tolist(),
        "section_level": float(1.0 - _center_level(Q, H)),
    }


def _center_level(Q: QuadricBody, H: ProjHyperplane) -> float:
    a, b = H.normal, H.offset
    Ainv_a = np.linalg.solve(Q.A, a)
    x0 = Q.center + (b - a @ Q.center) / (a @ Ainv_a) * Ainv_a
    return float((x0 - Q.center) @ Q.A @ (x0 - Q.center))


__all__ = [
    "Polytope",
    "ProjHyperplane",
    "ProjPoint",
    "apply_to_hyperplane",
    "apply_to_point",
    "automorphism_dual",
    "cross_polytope",
    "cube",
    "incidence",
    "origin_interior",
    "polar_of_hyperplane",
    "polar_of_point",
    "polar_polytope",
    "polar_quadric",
    "quadric_support",
    "same_vertex_set",
    "section_cone_duality_check",
    "section_points",
]
