"""Shadow boundaries and hyperplane sections near a boundary point.

Conventions. In a canonical frame the body is the graph z = f(x), x in R^d,
d = n - 1, and the light source lies on the tangent hyperplane at distance r
along e_1. The shadow boundary and a section through the base point are both
graphs x_1 = g(y) over the transverse coordinates y in R^(d-1); the jets of g
at y = 0 are given in closed form by :func:`shadow_jets` and
:func:`section_jets`, and equating them yields :func:`flatness_constraints`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from .bodies import Body, CanonicalFrame, canonical_height, canonical_jet
from .errors import ArgumentError, DegenerateCurveError, NonConvergenceError
from .taylor import TaylorPoly, solve_implicit_height, variables
from .tensor_jets import BoundaryJet, SymTensor, contract, restrict, rotate_domain, symmetrize

FLAT_THRESHOLD = 1e-6


# -- light sources ------------------------------------------------------------


@dataclass(frozen=True)
class LightSource:
    """A point source, or a source at infinity given by a direction."""

    position: np.ndarray | None = None
    direction: np.ndarray | None = None

    def __post_init__(self):
        if (self.position is None) == (self.direction is None):
            raise ArgumentError("give exactly one of position or direction")
        if self.position is not None:
            object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        else:
            d = np.asarray(self.direction, dtype=float)
            if np.linalg.norm(d) == 0:
                raise ArgumentError("direction must be nonzero")
            object.__setattr__(self, "direction", d / np.linalg.norm(d))

    @property
    def at_infinity(self) -> bool:
        return self.position is None

    @classmethod
    def point(cls, q) -> "LightSource":
        return cls(position=q)

    @classmethod
    def infinity(cls, direction) -> "LightSource":
        return cls(direction=direction)

    def to_dict(self) -> dict:
        if self.at_infinity:
            return {"direction": self.direction.tolist()}
        return {"position": self.position.tolist()}


def _as_source(q) -> LightSource:
    return q if isinstance(q, LightSource) else LightSource.point(q)


def shadow_residual(B: Body, q, x) -> float:
    """<n(x), x - q> for the unit outward normal n; zero exactly on the shadow boundary.

    Positive values are on the dark side. For a source at infinity in
    direction delta the residual is -<n(x), delta>.
    """
    q = _as_source(q)
    x = np.asarray(x, dtype=float)
    g = B.gradient(x)
    nrm = g / np.linalg.norm(g)
    if q.at_infinity:
        return float(-nrm @ q.direction)
    return float(nrm @ (x - q.position))


# -- tracing ------------------------------------------------------------------


def householder_to(u) -> np.ndarray:
    """Orthogonal (symmetric) matrix R with R e_1 = u / |u|."""
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    e1 = np.zeros_like(u)
    e1[0] = 1.0
    v = e1 - u
    if np.linalg.norm(v) < 1e-14:
        return np.eye(u.size)
    return np.eye(u.size) - 2.0 * np.outer(v, v) / (v @ v)


def transverse_directions(m: int) -> np.ndarray:
    """Deterministic set of unit directions in R^m (rows)."""
    if m == 1:
        return np.array([[1.0], [-1.0]])
    if m == 2:
        t = np.linspace(0, 2 * math.pi, 12, endpoint=False)
        return np.column_stack([np.cos(t), np.sin(t)])
    dirs = list(np.eye(m)) + list(-np.eye(m))
    for signs in product((1.0, -1.0), repeat=m):
        dirs.append(np.array(signs) / math.sqrt(m))
    return np.array(dirs)


def radial_grid(m: int, radius: float = 0.2, rings: int = 3) -> np.ndarray:
    """Radial-by-angle grid of transverse parameters, including the origin."""
    if not 0 < radius <= 0.2 + 1e-15:
        raise ArgumentError("grid radius must be in (0, 0.2] (canonical units)")
    pts = [np.zeros(m)]
    for k in range(1, rings + 1):
        pts.extend(radius * k / rings * transverse_directions(m))
    return np.array(pts)


@dataclass
class ShadowCurve:
    """Samples (g(y), y, f(g(y), y)) of a traced shadow boundary."""

    y: np.ndarray
    g: np.ndarray
    f: np.ndarray
    residual: np.ndarray
    converged: np.ndarray
    ambient: np.ndarray
    frame: CanonicalFrame
    rotation: np.ndarray
    r: float
    extra: dict = field(default_factory=dict)

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))

    def to_csv(self, path) -> None:
        m = self.y.shape[1]
        n = self.ambient.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"y{i + 1}" for i in range(m)] + ["g", "f", "residual", "converged"] + [f"X{i + 1}" for i in range(n)])
            for k in range(len(self.g)):
                w.writerow(
                    [repr(float(v)) for v in self.y[k]]
                    + [repr(float(self.g[k])), repr(float(self.f[k])), repr(float(self.residual[k])), int(self.converged[k])]
                    + [repr(float(v)) for v in self.ambient[k]]
                )


class _ShadowProblem:
    """Residual of the shadow condition in the rotated canonical frame."""

    def __init__(self, B: Body, frame: CanonicalFrame, R: np.ndarray, r: float):
        self.B, self.frame, self.R, self.r = B, frame, R, r

    def point(self, g: float, y: np.ndarray):
        x = self.R @ np.concatenate([[g], y])
        z = canonical_height(self.B, self.frame, x)
        return x, z

    def residual(self, g: float, y: np.ndarray) -> float:
        x, z = self.point(g, y)
        X = self.frame.to_ambient(np.append(x, z))
        G = self.frame.M.T @ self.B.gradient(X)  # gradient of F(frame(x, z))
        gx, gz = G[:-1], G[-1]
        xr = self.R.T @ x
        if math.isinf(self.r):
            # divide the finite-r condition by r and let r -> infinity
            return float(gx @ self.R[:, 0] / gz)
        rel = xr.copy()
        rel[0] -= self.r
        return float(-(gx @ (self.R @ rel) + gz * z) / gz)


def _solve_scalar(fun, x0: float, step: float, tol: float, maxiter: int = 50):
    """Newton with a bisection safeguard on a bracket grown from x0.

    Trial points where ``fun`` fails (outside the height chart) are treated
    as missing, so the bracket can still close on the other side.
    """
    def safe(t):
        try:
            v = float(fun(t))
        except NonConvergenceError:
            return math.nan
        return v

    f0 = fun(x0)
    if abs(f0) <= tol:
        return x0, f0, True
    lo, hi = x0, x0
    flo = fhi = f0
    s = step
    for _ in range(40):
        lo, hi = x0 - s, x0 + s
        flo, fhi = safe(lo), safe(hi)
        if flo * f0 <= 0:
            hi, fhi = x0, f0
            break
        if fhi * f0 <= 0:
            lo, flo = x0, f0
            break
        if math.isnan(flo) and math.isnan(fhi):
            return x0, f0, False
        s *= 1.6
    else:
        return x0, f0, False
    x, fx = (lo, flo) if abs(flo) < abs(fhi) else (hi, fhi)
    for _ in range(maxiter):
        if abs(fx) <= tol:
            return x, fx, True
        h = 1e-7 * max(1.0, abs(x))
        deriv = (fun(x + h) - fun(x - h)) / (2 * h)
        cand = x - fx / deriv if deriv != 0 else None
        if cand is None or not (min(lo, hi) < cand < max(lo, hi)):
            cand = 0.5 * (lo + hi)
        fc = fun(cand)
        if fc * flo <= 0:
            hi, fhi = cand, fc
        else:
            lo, flo = cand, fc
        x, fx = cand, fc
        if abs(hi - lo) <= 1e-16 * max(1.0, abs(x)):
            break
    return x, fx, abs(fx) <= tol


def source_in_frame(frame: CanonicalFrame, q: LightSource):
    """Canonical tangent vector u of the source and its distance r (inf at infinity)."""
    if q.at_infinity:
        u = np.linalg.solve(frame.M, q.direction)
        if abs(u[-1]) > 1e-9 * np.linalg.norm(u):
            raise ArgumentError("source direction is not tangent at the base point")
        u = u[:-1]
        return u / np.linalg.norm(u), math.inf
    u = frame.tangent_to_canonical(q.position)
    r = float(np.linalg.norm(u))
    if r == 0:
        raise ArgumentError("source coincides with the base point")
    return u / r, r


def trace_shadow(
    B: Body,
    p,
    q,
    grid: np.ndarray | None = None,
    radius: float = 0.2,
    rings: int = 3,
    tol: float = 1e-10,
) -> ShadowCurve:
    """Trace the shadow boundary of source q through base point p.

    ``grid`` holds transverse parameters y (rows) in canonical units, where
    the local curvature radius is 1; the default is a radial grid of radius
    0.2. Each solve starts from the converged value at the grid point nearest
    to it among those already solved (continuation outward along rays).
    """
    q = _as_source(q)
    if not q.at_infinity and B.contains(q.position):
        raise ArgumentError("the light source is interior to the body")
    p = B.check_boundary(p)
    if abs(shadow_residual(B, q, p)) > 1e-8 * (1 + (0 if q.at_infinity else np.linalg.norm(q.position - p))):
        raise ArgumentError("the base point is not on the shadow boundary (source not on the tangent hyperplane)")
    _, frame = canonical_jet(B, p, 2)
    u, r = source_in_frame(frame, q)
    R = householder_to(u)
    d = B.n - 1
    grid = radial_grid(d - 1, radius, rings) if grid is None else np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.shape[1] != d - 1:
        raise ArgumentError(f"grid rows must have {d - 1} components")
    prob = _ShadowProblem(B, frame, R, r)
    gs, fs, res, conv, amb = [], [], [], [], []
    for k, y in enumerate(grid):
        g0 = 0.0
        done = [j for j in range(k) if conv[j]]
        if done:
            j = min(done, key=lambda j: float(np.linalg.norm(grid[j] - y)))
            if np.linalg.norm(grid[j] - y) < np.linalg.norm(y):
                g0 = gs[j]
        try:
            g, val, ok = _solve_scalar(lambda t: prob.residual(t, y), g0, 0.05, tol)
            x, z = prob.point(g, y)
        except (NonConvergenceError, FloatingPointError, np.linalg.LinAlgError):
            g, val, ok, x, z = math.nan, math.nan, False, np.full(d, math.nan), math.nan
        gs.append(g)
        fs.append(z)
        res.append(val)
        conv.append(ok)
        amb.append(frame.to_ambient(np.append(x, z)))
    return ShadowCurve(grid, np.array(gs), np.array(fs), np.array(res), np.array(conv), np.array(amb), frame, R, r)


def graze_point(B: Body, q, hint=None, tol: float = 1e-14, maxiter: int = 200) -> np.ndarray:
    """A boundary point on the shadow boundary of q.

    Works in the plane through an interior point c spanned by the source
    direction and ``hint`` (random if omitted): boundary points along rays
    from c facing the source are lit and those facing away are dark, so
    bisection in the ray angle finds a grazing point.
    """
    q = _as_source(q)
    c = B.interior_point()
    if q.at_infinity:
        a = -q.direction
    else:
        if B.contains(q.position):
            raise ArgumentError("the light source is interior to the body")
        a = q.position - c
        a = a / np.linalg.norm(a)
    if hint is None:
        hint = np.random.default_rng(0).normal(size=B.n)
    b = np.asarray(hint, dtype=float) - (np.asarray(hint, dtype=float) @ a) * a
    if np.linalg.norm(b) < 1e-12:
        raise ArgumentError("hint direction is parallel to the source direction")
    b = b / np.linalg.norm(b)
    point = lambda t: B.ray_boundary_point(math.cos(t) * a + math.sin(t) * b, c)
    lo, hi = 0.0, math.pi
    flo = shadow_residual(B, q, point(lo))
    if flo >= 0 or shadow_residual(B, q, point(hi)) <= 0:
        raise NonConvergenceError("could not bracket a grazing point")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fm = shadow_residual(B, q, point(mid))
        if fm < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return point(0.5 * (lo + hi))


@dataclass(frozen=True)
class FlatnessReport:
    normal: np.ndarray
    offset: float
    max_deviation: float
    threshold: float

    @property
    def flat(self) -> bool:
        return self.max_deviation <= self.threshold

    @property
    def verdict(self) -> str:
        return "flat" if self.flat else "non-flat"

    def to_dict(self) -> dict:
        return {
            "normal": self.normal.tolist(),
            "offset": self.offset,
            "max_deviation": self.max_deviation,
            "threshold": self.threshold,
            "verdict": self.verdict,
        }


def flatness_test(C, threshold: float = FLAT_THRESHOLD) -> FlatnessReport:
    """Total-least-squares hyperplane through the converged samples.

    Accepts a :class:`ShadowCurve` or an array of ambient points. The
    deviation is the largest orthogonal distance to the plane divided by the
    diameter of the sample set.
    """
    pts = C.ambient[C.converged] if isinstance(C, ShadowCurve) else np.atleast_2d(np.asarray(C, dtype=float))
    n = pts.shape[1]
    if pts.shape[0] < n:
        raise DegenerateCurveError(f"need at least {n} converged samples, got {pts.shape[0]}")
    centroid = pts.mean(axis=0)
    X = pts - centroid
    _, s, vt = np.linalg.svd(X, full_matrices=True)
    diam = max(np.max(np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)), 1e-300)
    if len(s) < n - 1 or s[n - 2] <= 1e-9 * diam * math.sqrt(len(pts)):
        raise DegenerateCurveError("samples do not span an (n-1)-dimensional affine set")
    normal = vt[n - 1]
    k = int(np.flatnonzero(np.abs(normal) > 1e-12)[0])
    if normal[k] < 0:
        normal = -normal
    offset = float(normal @ centroid)
    dev = float(np.max(np.abs(X @ normal)) / diam)
    return FlatnessReport(normal, offset, dev, threshold)


# -- closed-form jets ---------------------------------------------------------


def _perm_sum(arr: np.ndarray, stabilizer: int) -> np.ndarray:
    """Sum of a term over all argument permutations, normalized by its stabilizer order.

    The normalization applies to each expanded monomial separately, so a
    factor such as (X[a,b] + m<a,b>)<c,d> is split into two sums with
    stabilizers 4 and 8.
    """
    k = arr.ndim
    return symmetrize(arr) * (math.factorial(k) / stabilizer)


class _Parts:
    """Derivatives of f split along e_1 and the transverse space, as arrays."""

    def __init__(self, J: BoundaryJet):
        if J.dim < 2:
            raise ArgumentError("jets must have dimension at least 2")
        self.J = J
        d = J.dim
        e1 = np.eye(d)[0]
        E = np.eye(d)[:, 1:]
        self.m = d - 1
        self.I = np.eye(self.m)
        T3 = J[3]
        self.D3f = restrict(T3, E).full()
        self.D2f1 = restrict(contract(T3, e1), E).full()
        self.Df11 = restrict(contract(contract(T3, e1), e1), E).full()
        self.f111 = T3.entries[(0, 0, 0)]
        if J.order >= 4:
            T4 = J[4]
            c4 = contract(T4, e1)
            self.D4f = restrict(T4, E).full()
            self.D3f1 = restrict(c4, E).full()
            self.D2f11 = restrict(contract(c4, e1), E).full()
        if J.order >= 5:
            self.D4f1 = restrict(contract(J[5], e1), E).full()


def _inv(r: float) -> float:
    if not r > 0:
        raise ArgumentError("r must be positive")
    return 0.0 if math.isinf(r) else 1.0 / r


def _outer(*arrs):
    out = arrs[0]
    for a in arrs[1:]:
        out = np.multiply.outer(out, a)
    return out


def shadow_jets(J: BoundaryJet, r: float) -> dict:
    """Derivatives of the shadow-boundary graph g at 0 for a source at r*e_1.

    Returns arrays on the transverse space: 'Dg', 'D2g', and, when the jet is
    deep enough, 'D3g' (order >= 4) and 'D4g' (order >= 5). r = inf gives
    parallel illumination along e_1.
    """
    ri = _inv(r)
    P = _Parts(J)
    I = P.I
    A = P.D2f1 - ri * I  # recurring combination D^2 f_1 - r^-1 <.,.>
    out = {"Dg": np.zeros(P.m), "D2g": -P.D2f1 + ri * I}
    if J.order >= 4:
        out["D3g"] = -P.D3f1 + 2 * ri * P.D3f + _perm_sum(_outer(A, P.Df11), 2)
    if J.order >= 5:
        out["D4g"] = (
            -P.D4f1
            + 3 * ri * P.D4f
            + _perm_sum(_outer(P.D3f1, P.Df11), 6)
            + _perm_sum(_outer(P.D2f11, A), 4)
            - 2 * ri * _perm_sum(_outer(P.D3f, P.Df11), 6)
            - (P.f111 + 3 * ri) * _perm_sum(_outer(P.D2f1, P.D2f1), 8)
            - 2 * _perm_sum(_outer(A, P.Df11, P.Df11), 4)
            + ri * (P.f111 + ri) * (_perm_sum(_outer(P.D2f1, I), 4) - ri * _perm_sum(_outer(I, I), 8))
            + 2 * ri**3 * _perm_sum(_outer(I, I), 8)
        )
    return out


def section_jets(J: BoundaryJet, m: float) -> dict:
    """Derivatives of the graph g of the section by (-e_1 + m e_n)^perp."""
    if not m > 0:
        raise ArgumentError("m must be positive")
    P = _Parts(J)
    I = P.I
    out = {"Dg": np.zeros(P.m), "D2g": m * I, "D3g": m * P.D3f}
    if J.order >= 4:
        out["D4g"] = m * P.D4f + m**2 * (_perm_sum(_outer(P.D2f1, I), 4) + m * _perm_sum(_outer(I, I), 8))
    return out


def fourth_order_scalar(f111: float, m: float, ri: float, variant: str = "classical") -> float:
    """Coefficient of sum <a,b><c,d> in the fourth-order flatness constraint.

    'classical' is the classical closed form; 'consistent' is the value
    obtained by equating the fourth-order shadow and section jets, which is
    what genuine flat shadow boundaries (e.g. of ellipsoids) satisfy.
    """
    if variant == "classical":
        return -((-m + ri) * (-4 * m + ri) * ri + f111 * (m * m - m * ri + ri * ri))
    if variant == "consistent":
        return -f111 * m * m + m * (m - ri) * (m - 4 * ri)
    raise ArgumentError("variant must be 'classical' or 'consistent'")


def flatness_constraints(J: BoundaryJet, m: float, r: float) -> dict:
    """Residual arrays (left minus right side) of the flatness constraints.

    'order2' needs jet order 3, 'order3' jet order 4; 'order4' (classical
    form) and 'order4_consistent' need order 5 because they involve D^4 f_1. Unavailable
    residuals are None.
    """
    if not m > 0:
        raise ArgumentError("m must be positive")
    ri = _inv(r)
    P = _Parts(J)
    I = P.I
    out = {"order2": P.D2f1 - (-m + ri) * I, "order3": None, "order4": None, "order4_consistent": None}
    if J.order >= 4:
        out["order3"] = P.D3f1 - ((-m + 2 * ri) * P.D3f - m * _perm_sum(_outer(P.Df11, I), 2))
    if J.order >= 5:
        common = P.D4f1 - (
            (-m + 3 * ri) * P.D4f
            - m * _perm_sum(_outer(P.D2f11, I), 4)
            - m * _perm_sum(_outer(P.D3f, P.Df11), 6)
        )
        II = _perm_sum(_outer(I, I), 8)
        out["order4"] = common - fourth_order_scalar(P.f111, m, ri, "classical") * II
        out["order4_consistent"] = common - fourth_order_scalar(P.f111, m, ri, "consistent") * II
    return out


def constraint_norms(res: dict) -> dict:
    return {k: (None if v is None else float(np.max(np.abs(v), initial=0.0))) for k, v in res.items()}


# -- series oracles -----------------------------------------------------------


def _graph_series(J: BoundaryJet, equation: str, param: float) -> TaylorPoly:
    """Series solution g(y) of the shadow (param = r) or section (param = m) condition."""
    f = J.polynomial()
    d, K = J.dim, J.order
    m = d - 1
    ys = variables(m, K)

    def compose(poly, g):
        return poly.compose([g] + ys)

    f1 = f.partial(0)
    Df = [f.partial(i) for i in range(1, d)]

    if equation == "shadow":
        ri = _inv(param)

        def residual(g):
            F1, F = compose(f1, g), compose(f, g)
            DfY = sum((compose(Dfi, g) * y for Dfi, y in zip(Df, ys)), 0 * ys[0])
            return F1 * (g * ri - 1.0) + (DfY - F) * ri

        slope = -1.0
    elif equation == "section":

        def residual(g):
            return -1.0 * g + compose(f, g) * param

        slope = -1.0
    else:
        raise ArgumentError("equation must be 'shadow' or 'section'")
    return solve_implicit_height(residual, m, K, slope)


def series_jets(J: BoundaryJet, equation: str, param: float) -> dict:
    """Jets of g from a direct series solve; an independent check of the closed forms.

    The shadow condition is divided by r, so orders up to K - 1 are exact.
    """
    g = _graph_series(J, equation, param)
    m = J.dim - 1
    out = {}
    for k, name in [(1, "Dg"), (2, "D2g"), (3, "D3g"), (4, "D4g")]:
        if k <= J.order - 1:
            out[name] = SymTensor.from_polynomial(g, k).full()
    return out


def rotate_to_source(J: BoundaryJet, u) -> tuple[BoundaryJet, np.ndarray]:
    """Rotate the domain so that direction u becomes e_1."""
    R = householder_to(u)
    return rotate_domain(J, R), R


__all__ = [
    "FLAT_THRESHOLD",
    "FlatnessReport",
    "LightSource",
    "ShadowCurve",
    "constraint_norms",
    "fourth_order_scalar",
    "flatness_constraints",
    "flatness_test",
    "graze_point",
    "householder_to",
    "radial_grid",
    "rotate_to_source",
    "section_jets",
    "series_jets",
    "shadow_jets",
    "shadow_residual",
    "source_in_frame",
    "trace_shadow",
]
