"""Normal fields built from flat-shadow foliations, and their integrability.

Given submersions H_1..H_{n-1} whose level sets are hyperplanes and source
curves p_1..p_{n-1}, the field N(x) = (x - p_1(H_1(x))) x ... x
(x - p_{n-1}(H_{n-1}(x))) is normal to a hypersurface foliation iff the
1-form w = N^flat satisfies w ^ dw = 0. The residual is evaluated from
finite differences of N. A second probe checks the line construction that
makes tangent vectors toward two fixed lines orthogonal on the unit sphere.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError, DegenerateConfiguration, DegeneratePointError
from .numerics import richardson

FD_STEP = 1e-5
DEGENERATE_NORM = 1e-6


def cross_product_n(vectors) -> np.ndarray:
    """Generalized cross product of n-1 vectors in R^n.

    Component i is the cofactor det[v_1; ...; v_{n-1}; e_i], so that
    <cross, w> = det[v_1; ...; v_{n-1}; w]; in R^3 this is the usual a x b.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    k, n = V.shape
    if k != n - 1:
        raise ArgumentError(f"need {n - 1} vectors in R^{n}, got {k}")
    out = np.empty(n)
    for i in range(n):
        M = np.vstack([V, np.eye(n)[i]])
        out[i] = np.linalg.det(M)
    return out


@dataclass
class FoliationField:
    """Submersions H_i with source curves p_i: R -> R^n."""

    n: int
    H: Sequence[Callable[[np.ndarray], float]]
    p: Sequence[Callable[[float], np.ndarray]]

    def __post_init__(self):
        if self.n < 2:
            raise ArgumentError("dimension must be at least 2")
        if len(self.H) != self.n - 1 or len(self.p) != self.n - 1:
            raise ArgumentError(f"need {self.n - 1} submersions and source curves")

    def vectors(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([x - np.asarray(pi(Hi(x)), dtype=float) for Hi, pi in zip(self.H, self.p)])


def normal_field(F: FoliationField, x) -> np.ndarray:
    return cross_product_n(F.vectors(x))


def coordinate_example(n: int = 3, perturb: float = 0.0, freq: float = 3.0) -> FoliationField:
    """H_i(x) = x_i with p_i(t) = t e_i - e_n (+ perturb sin(freq t) in a rotated direction)."""
    e = np.eye(n)
    H = [lambda x, i=i: float(x[i]) for i in range(n - 1)]
    def curve(i):
        w = e[(i + 1) % (n - 1)] + e[n - 1]
        return lambda t: t * e[i] - e[n - 1] + perturb * np.sin(freq * t + i) * w
    return FoliationField(n, H, [curve(i) for i in range(n - 1)])


def _jacobian(N: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> np.ndarray:
    cols = []
    for e in np.eye(x.size):
        est = lambda s, e=e: (np.asarray(N(x + s * e)) - np.asarray(N(x - s * e))) / (2 * s)
        val, _ = richardson(est, h, levels=2)
        cols.append(val)
    return np.stack(cols, axis=-1)  # J[a, b] = dN_a / dx_b


def wedge_d(N: Callable[[np.ndarray], np.ndarray], x, h: float = FD_STEP) -> tuple[np.ndarray, np.ndarray]:
    """(N(x), coefficients of w ^ dw on the basis dx_a ^ dx_b ^ dx_c, a < b < c)."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(N(x), dtype=float)
    scale = max(1.0, float(np.max(np.abs(x))))
    J = _jacobian(N, x, h * scale)
    dw = J.T - J  # dw = sum_{b<c} (d_b N_c - d_c N_b) dx_b ^ dx_c
    coeffs = np.array([v[a] * dw[b, c] - v[b] * dw[a, c] + v[c] * dw[a, b] for a, b, c in combinations(range(x.size), 3)])
    return v, coeffs


def frobenius_residual(N, x, h: float = FD_STEP) -> float:
    """|w ^ dw| / |N|^2 at x, invariant under rescaling N by any positive function."""
    field = (lambda y: normal_field(N, y)) if isinstance(N, FoliationField) else N
    v, coeffs = wedge_d(field, x, h)
    nv = float(np.linalg.norm(v))
    if nv < DEGENERATE_NORM:
        raise DegeneratePointError(f"normal field vanishes at {np.asarray(x).tolist()}")
    return float(np.linalg.norm(coeffs)) / nv**2


@dataclass
class ResidualField:
    points: np.ndarray
    residuals: np.ndarray  # nan where skipped
    skipped: np.ndarray

    @property
    def max_residual(self) -> float:
        vals = self.residuals[~self.skipped]
        return float(np.max(vals)) if vals.size else float("nan")

    def to_rows(self) -> list[list[float]]:
        return [list(p) + [r, int(s)] for p, r, s in zip(self.points.tolist(), self.residuals.tolist(), self.skipped.tolist())]


def grid_points(n: int, lo: float = -0.45, hi: float = 0.45, num: int = 10) -> np.ndarray:
    axis = np.linspace(lo, hi, num)
    return np.array(np.meshgrid(*[axis] * n, indexing="ij")).reshape(n, -1).T


def residual_field(N, points) -> ResidualField:
    """Frobenius residual on a point set; points with |N| < 1e-6 are skipped."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    res = np.full(len(pts), np.nan)
    skipped = np.zeros(len(pts), dtype=bool)
    for k, x in enumerate(pts):
        try:
            res[k] = frobenius_residual(N, x)
        except DegeneratePointError:
            skipped[k] = True
    return ResidualField(pts, res, skipped)


# -- line probe on the unit sphere ---------------------------------------------------


def probe_lines(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """(direction, base) of the lines through e_i - e_n with direction 1 - 2 e_i."""
    out = []
    for i in range(n - 1):
        d = np.ones(n)
        d[i] -= 2.0
        b = np.zeros(n)
        b[i] += 1.0
        b[n - 1] -= 1.0
        out.append((d, b))
    return out


def sphere_lines_probe(p, tol: float = 1e-12) -> np.ndarray:
    """Gram matrix of u_i - p, u_i the intersection of line i with the tangent plane at p.

    On the unit sphere the second fundamental form is the Euclidean product on
    the tangent plane {<x, p> = 1}, so off-diagonal entries measure the
    failure of orthogonality.
    """
    p = np.asarray(p, dtype=float)
    if abs(np.linalg.norm(p) - 1.0) > 1e-9:
        raise ArgumentError("p must lie on the unit sphere")
    vecs = []
    for i, (d, b) in enumerate(probe_lines(p.size)):
        denom = float(d @ p)
        if abs(denom) <= tol:
            raise DegenerateConfiguration(f"line {i} is parallel to the tangent hyperplane")
        s = (1.0 - b @ p) / denom
        u = s * d + b
        if np.linalg.norm(u - p) <= tol:
            raise DegenerateConfiguration(f"line {i} meets the tangent hyperplane at p")
        vecs.append(u - p)
    V = np.array(vecs)
    return V @ V.T


def probe_offdiagonal(p) -> float:
    G = sphere_lines_probe(p)
    off = G[~np.eye(len(G), dtype=bool)]
    return float(np.max(np.abs(off))) if off.size else 0.0


def cap_points(n: int, radius: float, rings: int = 10, per_ring: int = 64, center=None) -> np.ndarray:
    """Points of the unit sphere within geodesic distance ``radius`` of the south pole."""
    if n != 3:
        raise ArgumentError("cap sampling is implemented for n = 3")
    pts = [np.array([0.0, 0.0, -1.0])]
    for r in np.linspace(radius / rings, radius, rings):
        for a in np.linspace(0, 2 * np.pi, per_ring, endpoint=False):
            pts.append(np.array([np.sin(r) * np.cos(a), np.sin(r) * np.sin(a), -np.cos(r)]))
    return np.array(pts)


def cap_probe(radius: float = 0.1, rings: int = 10, per_ring: int = 64) -> dict:
    """Largest off-diagonal probe value on cap samples, per ring radius."""
    per = []
    for r in np.linspace(radius / rings, radius, rings):
        vals = [probe_offdiagonal(np.array([np.sin(r) * np.cos(a), np.sin(r) * np.sin(a), -np.cos(r)]))
                for a in np.linspace(0, 2 * np.pi, per_ring, endpoint=False)]
        per.append((float(r), float(max(vals))))
    return {"radius": radius, "max_offdiagonal": max(v for _, v in per), "rings": per}


__all__ = [
    "FoliationField",
    "ResidualField",
    "cap_points",
    "cap_probe",
    "coordinate_example",
    "cross_product_n",
    "frobenius_residual",
    "grid_points",
    "normal_field",
    "probe_lines",
    "probe_offdiagonal",
    "residual_field",
    "sphere_lines_probe",
    "wedge_d",
]
