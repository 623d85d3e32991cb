import math

import numpy as np
import pytest
from scipy.optimize import minimize

from oracles import apply_k, traced_section_derivatives, traced_shadow_derivatives
from umbra.bodies import Body, LpBallBody, PerturbedQuadricBody, QuadricBody, canonical_jet, random_ellipsoid, random_spd
from umbra.errors import ArgumentError, DegenerateCurveError
from umbra.shadow import (
    LightSource,
    constraint_norms,
    flatness_constraints,
    flatness_test,
    fourth_order_scalar,
    graze_point,
    radial_grid,
    rotate_to_source,
    section_jets,
    series_jets,
    shadow_jets,
    shadow_residual,
    source_in_frame,
    trace_shadow,
)
from umbra.tensor_jets import BoundaryJet, SymTensor, random_canonical_jet, rotate_domain


class AffineImage(Body):
    """The body {M x + t : x in base}."""

    kind = "affine_image"

    def __init__(self, base, M, t):
        self.base, self.M, self.t = base, np.asarray(M, float), np.asarray(t, float)
        self.Minv = np.linalg.inv(self.M)
        self.n = base.n

    def _pre(self, x):
        return self.Minv @ (np.asarray(x, float) - self.t)

    def implicit(self, x):
        return self.base.implicit(self._pre(x))

    def gradient(self, x):
        return self.Minv.T @ self.base.gradient(self._pre(x))

    def taylor(self, point, dx):
        y0 = self._pre(point)
        dy = [sum((dx[j] * self.Minv[i, j] for j in range(self.n)), 0 * dx[0]) for i in range(self.n)]
        return self.base.taylor(y0, dy)

    def interior_point(self):
        return self.M @ self.base.interior_point() + self.t


def tangent_source(B, x, rng, dist=2.0):
    nrm = B.gradient(x)
    w = rng.normal(size=B.n)
    w -= (w @ nrm) / (nrm @ nrm) * nrm
    return x + dist * w / np.linalg.norm(w)


# -- shadow residual and tracing ------------------------------------------------------


def test_shadow_residual_examples():
    S = QuadricBody(np.eye(3))
    q = [2.0, 0, 0]
    assert shadow_residual(S, q, [0.5, math.sqrt(3) / 2, 0]) == pytest.approx(0.0, abs=1e-15)
    assert shadow_residual(S, q, [1.0, 0, 0]) == pytest.approx(-1.0)
    B = LpBallBody(4, 3)
    x = B.normalize(np.array([0.7, 0.5, 0.4]))
    lam = abs(x[0]) ** (1 - 4) * np.sign(x[0])
    assert shadow_residual(B, lam * np.eye(3)[0], x) == pytest.approx(0.0, abs=1e-13)


def test_sphere_shadow_is_a_circle(rng):
    S = QuadricBody(np.eye(3))
    q = np.array([0.0, 0.0, 3.0])
    p = graze_point(S, q, rng.normal(size=3))
    C = trace_shadow(S, p, q)
    assert C.all_converged
    rep = flatness_test(C)
    assert rep.max_deviation <= 1e-9
    # the grazing circle lies on z = 1/3 with radius sqrt(8)/3
    assert np.allclose(C.ambient[:, 2], 1 / 3, atol=1e-10)
    assert np.allclose(np.linalg.norm(C.ambient[:, :2], axis=1), math.sqrt(8) / 3, atol=1e-10)


def test_ellipsoid_shadows_are_flat(rng):
    for n in (3, 4):
        B = random_ellipsoid(n, rng)
        x = B.ray_boundary_point(rng.normal(size=n))
        C = trace_shadow(B, x, tangent_source(B, x, rng))
        assert flatness_test(C).max_deviation <= 1e-8


def test_parallel_illumination_is_flat(rng):
    B = random_ellipsoid(3, rng)
    x = B.ray_boundary_point(rng.normal(size=3))
    nrm = B.gradient(x)
    w = rng.normal(size=3)
    w -= (w @ nrm) / (nrm @ nrm) * nrm
    C = trace_shadow(B, x, LightSource.infinity(w))
    assert C.all_converged and math.isinf(C.r)
    assert flatness_test(C).max_deviation <= 1e-8


@pytest.mark.parametrize("lam", [2.0, 3.0])
def test_lp_axis_source_shadow_plane(rng, lam):
    B = LpBallBody(4, 3)
    q = lam * np.eye(3)[0]
    p = graze_point(B, q, rng.normal(size=3))
    C = trace_shadow(B, p, q)
    assert C.all_converged
    assert np.max(np.abs(C.ambient[:, 0] - lam ** (1 / (1 - 4)))) <= 1e-8


def test_lp_off_axis_shadow_is_not_flat():
    B = LpBallBody(4, 4)
    q = 2.5 * np.array([0.6, 0.5, -0.45, 0.43])
    p = graze_point(B, q, [0.3, -1.0, 0.2, 0.5])
    C = trace_shadow(B, p, q)
    assert C.all_converged
    rep = flatness_test(C)
    assert rep.max_deviation >= 1e-3
    assert rep.verdict == "non-flat"


def test_affine_invariance_of_verdict(rng):
    M = random_spd(3, rng) + 0.3 * rng.normal(size=(3, 3))
    t = rng.normal(size=3)
    for base, q0, flat in [
        (random_ellipsoid(3, rng), None, True),
        (LpBallBody(4, 3), 2.5 * np.array([0.62, 0.55, -0.56]), False),
    ]:
        if q0 is None:
            x0 = base.ray_boundary_point(rng.normal(size=3))
            q0 = tangent_source(base, x0, rng)
        else:
            x0 = graze_point(base, q0, [0.2, -1.0, 0.4])
        img = AffineImage(base, M, t)
        d0 = flatness_test(trace_shadow(base, x0, q0)).max_deviation
        d1 = flatness_test(trace_shadow(img, M @ x0 + t, M @ q0 + t)).max_deviation
        if flat:
            assert d0 <= 1e-8 and d1 <= 1e-8
        else:
            assert d0 >= 1e-3 and d1 >= 1e-3


def test_trace_argument_errors():
    S = QuadricBody(np.eye(3))
    with pytest.raises(ArgumentError):
        trace_shadow(S, [1.0, 0, 0], [0.1, 0, 0])  # interior source
    with pytest.raises(ArgumentError):
        trace_shadow(S, [1.0, 0, 0], [0.0, 3.0, 3.0])  # not on the tangent plane
    with pytest.raises(ArgumentError):
        radial_grid(2, radius=0.5)


def test_graze_point_lies_on_shadow_boundary(rng):
    B = LpBallBody(4, 3)
    q = np.array([1.5, 2.0, -1.0])
    x = graze_point(B, q, rng.normal(size=3))
    assert abs(B.implicit(x)) <= 1e-12
    assert abs(shadow_residual(B, q, x)) <= 1e-10


def test_flatness_test_on_exact_planar_samples(rng):
    E = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    pts = rng.normal(size=(20, 2)) @ E[:, :2].T + 0.7 * E[:, 2]
    rep = flatness_test(pts)
    assert rep.max_deviation <= 1e-14
    assert abs(abs(rep.normal @ E[:, 2]) - 1) <= 1e-12


def test_flatness_test_degenerate():
    with pytest.raises(DegenerateCurveError):
        flatness_test(np.outer(np.linspace(0, 1, 5), [1.0, 2.0, 3.0]))
    with pytest.raises(DegenerateCurveError):
        flatness_test(np.zeros((2, 3)))


# -- closed-form jets -------------------------------------------------------------------


def test_shadow_jets_with_vanishing_cubic():
    J = BoundaryJet.canonical(3, [SymTensor.zeros(3, 3), SymTensor.zeros(4, 3)])
    out = shadow_jets(J, 2.0)
    assert np.allclose(out["D2g"], 0.5 * np.eye(2))
    assert np.max(np.abs(out["D3g"])) == 0.0


def test_parallel_limit_of_shadow_jets(rng):
    J = random_canonical_jet(3, 5, rng)
    inf = shadow_jets(J, math.inf)
    far = shadow_jets(J, 1e9)
    assert np.allclose(inf["D2g"], -J[3].full()[0, 1:, 1:])
    for k in ("D2g", "D3g", "D4g"):
        assert np.max(np.abs(inf[k] - far[k])) <= 1e-7


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("r", [1.7, math.inf])
def test_shadow_jets_match_series_solution(rng, d, r):
    J = random_canonical_jet(d, 5, rng)
    closed = shadow_jets(J, r)
    series = series_jets(J, "shadow", r)
    for k in series:
        assert np.max(np.abs(closed[k] - series[k])) <= 1e-10, k


@pytest.mark.parametrize("d", [2, 3])
def test_section_jets_match_series_solution(rng, d):
    J = random_canonical_jet(d, 5, rng)
    closed = section_jets(J, 0.8)
    series = series_jets(J, "section", 0.8)
    for k in series:
        assert np.max(np.abs(closed[k] - series[k])) <= 1e-10, k


def test_section_jets_simple_cases(rng):
    J = random_canonical_jet(3, 4, rng)
    assert np.allclose(section_jets(J, 1.0)["D3g"], J[3].full()[1:, 1:, 1:])
    Q = BoundaryJet.canonical(3, [SymTensor.zeros(3, 3)])
    assert np.max(np.abs(section_jets(Q, 0.6)["D3g"])) == 0.0
    with pytest.raises(ArgumentError):
        section_jets(J, 0.0)


def test_shadow_jets_match_traced_curve(rng):
    B = PerturbedQuadricBody(random_spd(3, rng), rng.normal(size=3) * 0.3, eps=0.05, seed=11)
    x = B.ray_boundary_point(rng.normal(size=3))
    q = tangent_source(B, x, rng, dist=2.5)
    fd, C = traced_shadow_derivatives(B, x, q, np.array([1.0]))
    J, _ = canonical_jet(B, x, 4)
    Jr = rotate_domain(J, C.rotation)
    jets = shadow_jets(Jr, C.r)
    e = np.array([1.0])
    assert fd[2] == pytest.approx(apply_k(jets["D2g"], e), abs=1e-5)
    assert fd[3] == pytest.approx(apply_k(jets["D3g"], e), abs=1e-5)


def test_section_jets_match_plane_intersection(rng):
    B = PerturbedQuadricBody(random_spd(4, rng), rng.normal(size=4) * 0.3, eps=0.05, seed=2)
    x = B.ray_boundary_point(rng.normal(size=4))
    J, frame = canonical_jet(B, x, 5)
    u = rng.normal(size=3)
    Jr, R = rotate_to_source(J, u)
    m = 0.7
    jets = section_jets(Jr, m)
    e = rng.normal(size=2)
    e /= np.linalg.norm(e)
    fd = traced_section_derivatives(B, frame, R, m, e, orders=(2, 3, 4))
    for k, key in [(2, "D2g"), (3, "D3g"), (4, "D4g")]:
        assert fd[k] == pytest.approx(apply_k(jets[key], e), abs=1e-5), key


# -- flatness constraints ---------------------------------------------------------------


def test_second_order_constraint_on_quadric(rng):
    B = random_ellipsoid(4, rng)
    J, _ = canonical_jet(B, B.ray_boundary_point(rng.normal(size=4)), 5)
    Jr, _ = rotate_to_source(J, rng.normal(size=3))
    lam = Jr[3].full()[0, 1, 1]
    r = 1.5
    m = 1 / r - lam
    if m <= 0:
        r, m = 1 / (lam + 1.0), 1.0
    res = flatness_constraints(Jr, m, r)
    assert np.max(np.abs(res["order2"])) <= 1e-10
    norms = constraint_norms(flatness_constraints(Jr, m + 0.05, r))
    assert norms["order2"] == pytest.approx(0.05, rel=1e-8)


def test_sphere_satisfies_all_constraints():
    J = BoundaryJet.canonical(3, [SymTensor.zeros(k, 3) for k in (3, 4, 5)])
    norms = constraint_norms(flatness_constraints(J, 0.5, 2.0))
    assert all(v <= 1e-14 for v in norms.values())


def test_quadric_satisfies_consistent_fourth_order_constraint(rng):
    """Genuine flat shadows of an ellipsoid satisfy the consistent scalar, not the classical one."""
    B = random_ellipsoid(3, rng)
    J, _ = canonical_jet(B, B.ray_boundary_point(rng.normal(size=3)), 5)
    Jr, _ = rotate_to_source(J, rng.normal(size=2))
    lam = Jr[3].full()[0, 1, 1]
    m = 0.8
    r = 1 / (m + lam)
    assert r > 0
    norms = constraint_norms(flatness_constraints(Jr, m, r))
    assert norms["order2"] <= 1e-10 and norms["order3"] <= 1e-10
    assert norms["order4_consistent"] <= 1e-9
    assert norms["order4"] > 1e-6


def test_fourth_order_scalar_variants():
    assert fourth_order_scalar(0.0, 1.0, 1.0, "consistent") == 0.0
    assert fourth_order_scalar(3.0, 1.0, 0.0, "consistent") == pytest.approx(-3.0 + 1.0)
    with pytest.raises(ArgumentError):
        fourth_order_scalar(0.0, 1.0, 1.0, "other")


def test_lp_ball_off_axis_constraints_fail():
    """At a generic point of the l^4 ball no (m, r) satisfies the constraints off-axis."""
    B = LpBallBody(4, 3)
    x = B.normalize(np.array([0.8, 0.6, 0.5]))
    J, frame = canonical_jet(B, x, 5)
    Jr, _ = rotate_to_source(J, [0.6, 0.8])

    def worst(params):
        m, ri = np.exp(params[0]), params[1]
        if ri <= 0:
            return 1e6
        return max(v for v in constraint_norms(flatness_constraints(Jr, m, 1 / ri)).values() if v is not None)

    best = min(minimize(worst, x0, method="Nelder-Mead").fun for x0 in ([0.0, 0.5], [-1.0, 1.0], [0.5, 0.2]))
    assert best >= 1e-3


def test_source_in_frame_distance(rng):
    B = random_ellipsoid(3, rng)
    x = B.ray_boundary_point(rng.normal(size=3))
    _, frame = canonical_jet(B, x, 2)
    q = tangent_source(B, x, rng, dist=2.0)
    u, r = source_in_frame(frame, LightSource.point(q))
    assert np.linalg.norm(u) == pytest.approx(1.0)
    assert np.allclose(frame.to_ambient(np.append(r * u, 0.0)), q, atol=1e-10)
