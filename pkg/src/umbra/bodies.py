"""Convex test bodies and their canonical local parametrizations.

Every body is given implicitly, F(x) <= 0 inside and F(x) = 0 on the
boundary, and can expand F(p + dx) as a truncated Taylor series. The
canonical jet at a boundary point is then obtained exactly (to rounding) by
solving the implicit equation for the graph height in Taylor arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import (
    ArgumentError,
    DegeneratePointError,
    NonConvergenceError,
    OrderUnavailableError,
    SourceAtInfinity,
)
from .taylor import TaylorPoly, solve_implicit_height, variables
from .tensor_jets import BoundaryJet

MAX_ORDER = 5
BOUNDARY_TOL = 1e-10


class Body:
    """Smooth convex body {F <= 0} in R^n."""

    kind = "body"
    n: int

    def implicit(self, x) -> float:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def taylor(self, point, dx: Sequence[TaylorPoly]) -> TaylorPoly:
        """F(point + dx) as a truncated series in the variables of ``dx``."""
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError

    def contains(self, x) -> bool:
        return self.implicit(x) < 0.0

    def boundary_distance(self, x) -> float:
        """First-order estimate of the distance from x to the boundary."""
        return abs(self.implicit(x)) / np.linalg.norm(self.gradient(x))

    def project_to_boundary(self, x, steps: int = 50) -> np.ndarray:
        """Newton projection along the gradient onto {F = 0}."""
        x = np.asarray(x, dtype=float).copy()
        for _ in range(steps):
            g = self.gradient(x)
            val = self.implicit(x)
            x = x - val * g / (g @ g)
            if abs(self.implicit(x)) <= 1e-14 * (1 + abs(val)):
                break
        return x

    def ray_boundary_point(self, direction, center=None) -> np.ndarray:
        """Boundary point on the ray from an interior ``center`` along ``direction``."""
        center = self.interior_point() if center is None else np.asarray(center, dtype=float)
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        lo, hi = 0.0, 1.0
        while self.implicit(center + hi * d) < 0:
            hi *= 2.0
            if hi > 1e12:
                raise ArgumentError("body is unbounded along the ray")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.implicit(center + mid * d) < 0:
                lo = mid
            else:
                hi = mid
        return self.project_to_boundary(center + 0.5 * (lo + hi) * d)

    def interior_point(self) -> np.ndarray:
        return np.zeros(self.n)

    def max_order(self) -> int:
        return MAX_ORDER

    def check_boundary(self, x, tol: float = BOUNDARY_TOL) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ArgumentError(f"expected a point in R^{self.n}")
        if self.boundary_distance(x) > tol * (1.0 + np.linalg.norm(x)):
            raise ArgumentError("point is not on the boundary")
        return x


class QuadricBody(Body):
    """Ellipsoid {(x-c)^T A (x-c) <= 1}."""

    kind = "quadric"

    def __init__(self, A, center=None):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ArgumentError("A must be square")
        if np.max(np.abs(A - A.T)) > 1e-12 * max(1.0, np.max(np.abs(A))):
            raise ArgumentError("A must be symmetric")
        A = 0.5 * (A + A.T)
        if np.min(np.linalg.eigvalsh(A)) <= 0:
            raise ArgumentError("A must be positive definite")
        self.A = A
        self.n = A.shape[0]
        self.center = np.zeros(self.n) if center is None else np.asarray(center, dtype=float)
        if self.center.shape != (self.n,):
            raise ArgumentError("center has the wrong dimension")

    def implicit(self, x) -> float:
        y = np.asarray(x, dtype=float) - self.center
        return float(y @ self.A @ y - 1.0)

    def gradient(self, x) -> np.ndarray:
        return 2.0 * self.A @ (np.asarray(x, dtype=float) - self.center)

    def taylor(self, point, dx):
        y = [d + (pi - ci) for d, pi, ci in zip(dx, point, self.center)]
        out = -1.0 + 0 * y[0]
        for i in range(self.n):
            for j in range(self.n):
                if self.A[i, j] != 0.0:
                    out = out + y[i] * y[j] * self.A[i, j]
        return out

    def interior_point(self):
        return self.center.copy()

    def descriptor(self):
        return {"type": self.kind, "n": self.n, "A": self.A.tolist(), "center": self.center.tolist()}


class ShearedQuadricBody(QuadricBody):
    """Image of an ellipsoid under the shear (x', z) -> (x' + z*eta, z) of R^n."""

    kind = "sheared_quadric"

    def __init__(self, A, center=None, eta=None):
        base = QuadricBody(A, center)
        n = base.n
        self.base = base
        self.eta = np.zeros(n - 1) if eta is None else np.asarray(eta, dtype=float)
        if self.eta.shape != (n - 1,):
            raise ArgumentError("eta must have n-1 components")
        S = np.eye(n)
        S[:-1, -1] = self.eta
        self.shear = S
        Sinv = np.linalg.inv(S)
        super().__init__(Sinv.T @ base.A @ Sinv, S @ base.center)

    def descriptor(self):
        return {
            "type": self.kind,
            "n": self.n,
            "A": self.base.A.tolist(),
            "center": self.base.center.tolist(),
            "eta": self.eta.tolist(),
        }


class PerturbedQuadricBody(QuadricBody):
    """Ellipsoid with a small smooth bump: F = quadric + eps * sum_k a_k sin(<w_k, x> + phi_k).

    The perturbation is drawn deterministically from ``seed``.
    """

    kind = "perturbed_quadric"

    def __init__(self, A, center=None, eps: float = 1e-2, seed: int = 0, modes: int = 3):
        super().__init__(A, center)
        rng = np.random.default_rng(seed)
        self.eps = float(eps)
        self.seed = int(seed)
        self.modes = int(modes)
        self.amps = rng.uniform(0.5, 1.0, size=modes)
        self.freqs = rng.normal(size=(modes, self.n)) * 1.5
        self.phases = rng.uniform(0, 2 * math.pi, size=modes)

    def implicit(self, x) -> float:
        x = np.asarray(x, dtype=float)
        bump = np.sum(self.amps * np.sin(self.freqs @ x + self.phases))
        return super().implicit(x) + self.eps * float(bump)

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        coef = self.amps * np.cos(self.freqs @ x + self.phases)
        return super().gradient(x) + self.eps * (coef @ self.freqs)

    def taylor(self, point, dx):
        out = super().taylor(point, dx)
        for a, w, phi in zip(self.amps, self.freqs, self.phases):
            arg = float(w @ np.asarray(point) + phi) + sum(d * wi for d, wi in zip(dx, w))
            out = out + arg.sin() * (self.eps * a)
        return out

    def descriptor(self):
        return {
            "type": self.kind,
            "n": self.n,
            "A": self.A.tolist(),
            "center": self.center.tolist(),
            "eps": self.eps,
            "seed": self.seed,
            "modes": self.modes,
        }


class LpBallBody(Body):
    """Unit ball of the l^p norm, p an even integer >= 4."""

    kind = "lp_ball"

    def __init__(self, p: int = 4, n: int = 3):
        if int(p) != p or p % 2 or p < 2:
            raise ArgumentError("p must be an even integer")
        if n < 2:
            raise ArgumentError("dimension must be at least 2")
        self.p = int(p)
        self.n = int(n)

    def implicit(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.sum(x**self.p) - 1.0)

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.p * x ** (self.p - 1)

    def taylor(self, point, dx):
        out = -1.0 + 0 * dx[0]
        for d, pi in zip(dx, point):
            out = out + (d + float(pi)) ** self.p
        return out

    def normalize(self, x) -> np.ndarray:
        """Radial projection of a nonzero x onto the boundary."""
        x = np.asarray(x, dtype=float)
        return x / np.sum(np.abs(x) ** self.p) ** (1.0 / self.p)

    def flat_source(self, x, i: int) -> float:
        return lp_flat_source(x, i, self.p)

    def descriptor(self):
        return {"type": self.kind, "n": self.n, "p": self.p}


def random_spd(n: int, rng: np.random.Generator, cond: float = 4.0) -> np.ndarray:
    """Random symmetric positive definite matrix with eigenvalues in [1, cond]."""
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    eig = rng.uniform(1.0, cond, size=n)
    return Q @ np.diag(eig) @ Q.T


def random_ellipsoid(n: int, rng: np.random.Generator, cond: float = 4.0, center_scale: float = 0.5) -> QuadricBody:
    return QuadricBody(random_spd(n, rng, cond), rng.normal(size=n) * center_scale)


def body_from_descriptor(desc: dict) -> Body:
    """Rebuild a body from its descriptor; a ``seed`` replaces explicit matrices."""
    kind = desc.get("type")
    try:
        n = int(desc["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ArgumentError("descriptor needs an integer 'n'") from exc
    if kind == "lp_ball":
        return LpBallBody(int(desc.get("p", 4)), n)
    if kind == "sphere":
        return QuadricBody(np.eye(n) / float(desc.get("radius", 1.0)) ** 2, desc.get("center"))
    if kind in ("quadric", "sheared_quadric", "perturbed_quadric"):
        if "A" in desc:
            A, center = np.asarray(desc["A"], dtype=float), desc.get("center")
        elif "seed" in desc:
            rng = np.random.default_rng(int(desc["seed"]))
            A = random_spd(n, rng, float(desc.get("cond", 4.0)))
            center = rng.normal(size=n) * float(desc.get("center_scale", 0.5))
        else:
            raise ArgumentError("quadric descriptor needs 'A' or 'seed'")
        if A.shape != (n, n):
            raise ArgumentError("descriptor matrix does not match n")
        if kind == "quadric":
            return QuadricBody(A, center)
        if kind == "sheared_quadric":
            return ShearedQuadricBody(A, center, desc.get("eta"))
        return PerturbedQuadricBody(
            A, center, float(desc.get("eps", 1e-2)), int(desc.get("perturbation_seed", desc.get("seed", 0))),
            int(desc.get("modes", 3)),
        )
    raise ArgumentError(f"unknown body type {kind!r}")


# -- local geometry -----------------------------------------------------------


def outward_normal(B: Body, x) -> np.ndarray:
    """Unit outward normal at a boundary point."""
    x = B.check_boundary(x)
    g = B.gradient(x)
    norm = np.linalg.norm(g)
    if norm == 0.0:
        raise DegeneratePointError("vanishing gradient")
    return g / norm


def _signed_columns(M: np.ndarray) -> np.ndarray:
    """Flip columns so that each column's first nonzero entry is positive."""
    M = M.copy()
    for j in range(M.shape[1]):
        col = M[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * np.max(np.abs(col)))
        if nz.size and col[nz[0]] < 0:
            M[:, j] = -col
    return M


def tangent_basis(normal) -> np.ndarray:
    """Orthonormal basis (columns) of the hyperplane orthogonal to ``normal``."""
    normal = np.asarray(normal, dtype=float)
    _, _, vt = np.linalg.svd(normal.reshape(1, -1))
    return vt[1:].T


@dataclass(frozen=True)
class CanonicalFrame:
    """Affine chart X = base + M @ (x, z) in which the body is the graph z = f(x).

    The last column of M is the inward unit normal; the first n-1 columns span
    the tangent hyperplane and are scaled so that the Hessian of f at 0 is the
    identity.
    """

    base: np.ndarray
    M: np.ndarray
    curvatures: np.ndarray = field(default=None)

    @property
    def n(self) -> int:
        return self.base.size

    @property
    def tangent(self) -> np.ndarray:
        return self.M[:, :-1]

    @property
    def normal(self) -> np.ndarray:
        """Inward unit normal."""
        return self.M[:, -1]

    def to_ambient(self, xz) -> np.ndarray:
        return self.base + self.M @ np.asarray(xz, dtype=float)

    def to_canonical(self, X) -> np.ndarray:
        return np.linalg.solve(self.M, np.asarray(X, dtype=float) - self.base)

    def tangent_to_canonical(self, X) -> np.ndarray:
        """Canonical domain coordinates of a point of the tangent hyperplane."""
        xz = self.to_canonical(X)
        if abs(xz[-1]) > 1e-9 * (1 + np.linalg.norm(xz)):
            raise ArgumentError("point is not on the tangent hyperplane")
        return xz[:-1]

    def to_dict(self) -> dict:
        return {"base": self.base.tolist(), "M": self.M.tolist()}


def _height_series(B: Body, p, columns: np.ndarray, normal: np.ndarray, order: int) -> TaylorPoly:
    d = columns.shape[1]
    xs = variables(d, order)
    tangent_part = [sum((x * columns[i, j] for j, x in enumerate(xs)), 0 * xs[0]) for i in range(B.n)]
    slope = float(B.gradient(p) @ normal)

    def residual(h):
        return B.taylor(p, [t + h * normal[i] for i, t in enumerate(tangent_part)])

    return solve_implicit_height(residual, d, order, slope)


def canonical_jet(B: Body, p, K: int = 3, order_perm: Sequence[int] | None = None):
    """Canonical jet of order K at boundary point p, with its frame.

    ``order_perm`` reorders the principal directions (default: curvature
    eigenvalues in descending order), which changes the jet by a rotation of
    the domain.
    """
    if K < 2:
        raise ArgumentError("jet order must be at least 2")
    if K > B.max_order():
        raise OrderUnavailableError(f"order {K} exceeds the supported order {B.max_order()}")
    p = B.check_boundary(p)
    g = B.gradient(p)
    if np.linalg.norm(g) == 0:
        raise DegeneratePointError("vanishing gradient")
    nu = -g / np.linalg.norm(g)
    T = tangent_basis(nu)
    h2 = _height_series(B, p, T, nu, 2)
    d = B.n - 1
    H = np.array([[h2.derivative(tuple(int(k == i) + int(k == j) for k in range(d))) for j in range(d)] for i in range(d)])
    eig, V = np.linalg.eigh(0.5 * (H + H.T))
    scale = max(1.0, float(np.max(np.abs(eig))))
    if np.min(eig) <= 1e-10 * scale:
        raise DegeneratePointError(f"second fundamental form is not positive definite (eigenvalues {eig})")
    idx = np.argsort(eig)[::-1]
    eig, V = eig[idx], V[:, idx]
    directions = _signed_columns(T @ V)
    if order_perm is not None:
        perm = list(order_perm)
        if sorted(perm) != list(range(d)):
            raise ArgumentError("order_perm must be a permutation")
        directions, eig = directions[:, perm], eig[perm]
    cols = directions / np.sqrt(eig)
    f = _height_series(B, p, cols, nu, K)
    jet = BoundaryJet.from_polynomial(f)
    # rounding residue in the fixed low orders is removed explicitly
    low = BoundaryJet.canonical(d)
    jet = BoundaryJet(low.tensors[:3] + jet.tensors[3:])
    M = np.column_stack([cols, nu])
    return jet, CanonicalFrame(p.copy(), M, eig.copy())


def canonical_height(B: Body, frame: CanonicalFrame, x, tol: float = 1e-15, maxiter: int = 50) -> float:
    """Graph height z(x) of the body in a canonical frame (Newton solve)."""
    x = np.asarray(x, dtype=float)
    z = 0.5 * float(x @ x)
    nu = frame.normal
    base = frame.base + frame.tangent @ x
    for _ in range(maxiter):
        X = base + z * nu
        val = B.implicit(X)
        slope = float(B.gradient(X) @ nu)
        if slope == 0:
            break
        step = val / slope
        z -= step
        if abs(step) <= tol * (1 + abs(z)):
            return z
    raise NonConvergenceError("height solve did not converge")


def lp_flat_source(x, i: int, p: int = 4) -> float:
    """Position lambda of the source lambda*e_i whose shadow on the l^p ball is the plane x_i = const."""
    x = np.asarray(x, dtype=float)
    if not 0 <= i < x.size:
        raise ArgumentError("axis index out of range")
    if x[i] == 0.0:
        raise SourceAtInfinity(f"coordinate {i} vanishes; the source lies at infinity")
    return float(abs(x[i]) ** (1 - p) * np.sign(x[i]))


def check_general_position(points, p, rel_tol: float = 1e-10) -> bool:
    """True iff no d of the points lie on a hyperplane through p (d = ambient dimension)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    p = np.asarray(p, dtype=float)
    d = p.size
    if pts.shape[1] != d:
        raise ArgumentError("points and base point have different dimensions")
    if pts.shape[0] < d:
        raise ArgumentError(f"need at least {d} points")
    vecs = pts - p
    norms = np.linalg.norm(vecs, axis=1)
    if np.any(norms == 0):
        return False
    for subset in combinations(range(len(vecs)), d):
        sub = vecs[list(subset)]
        if abs(np.linalg.det(sub)) <= rel_tol * np.prod(norms[list(subset)]):
            return False
    return True


__all__ = [
    "Body",
    "CanonicalFrame",
    "LpBallBody",
    "PerturbedQuadricBody",
    "QuadricBody",
    "ShearedQuadricBody",
    "body_from_descriptor",
    "canonical_height",
    "canonical_jet",
    "check_general_position",
    "lp_flat_source",
    "outward_normal",
    "random_ellipsoid",
    "random_spd",
    "tangent_basis",
]
