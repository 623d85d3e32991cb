"""Pointwise reconstruction of the cubic form from flat shadow boundaries.

Each light source u on the tangent hyperplane that casts a flat shadow forces

    D^3f[u, a, b] = lam <a,b> + <a,u><b,v> + <a,v><b,u>     (all a, b)

for some scalar lam and vector v. Pairs of sources are then related by a
vector identity (non-orthogonal pair) or two scalar identities (orthogonal
pair). Depending on the orthogonality graph, the data determine a common
vector w with v_i = mu_i u_i + w, and the shear by eta = w removes the cubic
form entirely. All vectors here are in canonical coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .bodies import check_general_position
from .errors import ArgumentError, DegenerateConfiguration, InconclusiveConfiguration
from .ortho_graphs import Graph, build_ortho_graph, ear_decomposition_bounded, max_clique, max_independent_set
from .shadow import flatness_constraints, rotate_to_source
from .tensor_jets import BoundaryJet, SymTensor, contract, shear_jet

ORTHO_TAU = 1e-9
DECOMP_TOL = 1e-10
RECON_TOL = 1e-9
FINAL_TOL = 1e-9


@dataclass(frozen=True)
class SourceEntry:
    u: np.ndarray
    lam: float
    v: np.ndarray
    residual: float

    def to_dict(self) -> dict:
        return {"u": self.u.tolist(), "lambda": self.lam, "v": self.v.tolist(), "residual": self.residual}


def _orth_complement(u: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of u^perp."""
    _, _, vt = np.linalg.svd(u.reshape(1, -1))
    return vt[1:].T


def decomposition_tensor(d: int, u, lam: float, v) -> np.ndarray:
    """The bilinear form lam <a,b> + <a,u><b,v> + <a,v><b,u> as a matrix."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return lam * np.eye(d) + np.outer(u, v) + np.outer(v, u)


def extract_lambda_v(D3f: SymTensor, u) -> SourceEntry:
    """Split the slice D^3f[u, ., .] into (lam, v) and report the mismatch.

    lam is the average of D^3f[u, a, a] over an orthonormal basis of u^perp;
    the components of v follow from D^3f[u, a, u] and D^3f[u, u, u].
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (D3f.dim,):
        raise ArgumentError("source vector has the wrong dimension")
    nu2 = float(u @ u)
    if nu2 == 0.0:
        raise ArgumentError("source vector must be nonzero")
    S = contract(D3f, u).full()
    d = D3f.dim
    if d == 1:
        lam = 0.0
        v = np.array([S[0, 0] / (2 * u[0])])
    else:
        E = _orth_complement(u)
        lam = float(np.trace(E.T @ S @ E) / (d - 1))
        v_perp = E @ (E.T @ S @ u) / nu2
        uSu = float(u @ S @ u)
        along = (uSu / nu2 - lam) / 2.0  # <u, v>
        v = v_perp + along * u / nu2
    mismatch = S - decomposition_tensor(d, u, lam, v)
    return SourceEntry(u.copy(), lam, v, float(np.linalg.norm(mismatch)))


def pairwise_relation(ei: SourceEntry, ej: SourceEntry, tau: float = ORTHO_TAU) -> dict:
    """Check the pair identity appropriate for the angle between u_i and u_j."""
    ui, uj = ei.u, ej.u
    dot = float(ui @ uj)
    if abs(dot) > tau * np.linalg.norm(ui) * np.linalg.norm(uj):
        rhs = (ej.lam - uj @ ei.v) / dot * ui - (ei.lam - ui @ ej.v) / dot * uj
        res = float(np.linalg.norm(ei.v - ej.v - rhs))
        return {"kind": "non_orthogonal", "residual": res}
    r1 = abs(float(uj @ ei.v) - ej.lam)
    r2 = abs(float(ui @ ej.v) - ei.lam)
    return {"kind": "orthogonal", "residuals": (r1, r2), "residual": max(r1, r2)}


@dataclass
class Reconstruction:
    w: np.ndarray
    mu: np.ndarray
    residual: float
    route: str
    gauge_eta: np.ndarray | None = None
    gauge_residual: float | None = None
    diagnostics: dict = field(default_factory=dict)


def _fit_mu(entries: Sequence[SourceEntry], w: np.ndarray):
    """Best mu_i with v_i ~ mu_i u_i + w, and the worst leftover norm."""
    mu, worst = [], 0.0
    for e in entries:
        vt = e.v - w
        m = float(vt @ e.u / (e.u @ e.u))
        mu.append(m)
        worst = max(worst, float(np.linalg.norm(vt - m * e.u)))
    return np.array(mu), worst


def _scale(entries) -> float:
    return 1.0 + max(max(abs(e.lam), np.linalg.norm(e.v)) for e in entries)


def reconstruct_complete(entries: Sequence[SourceEntry], tau: float = ORTHO_TAU) -> Reconstruction:
    """Common vector w from pairwise non-orthogonal sources in general position.

    Fixes the first source as anchor: each other source gives
    v_i - v_1 = mu_i u_i - nu_i u_1, and the nu_i must agree.
    """
    entries = list(entries)
    if len(entries) < 2:
        raise DegenerateConfiguration("need at least two sources")
    d = entries[0].u.size
    for (i, a), (j, b) in combinations(enumerate(entries), 2):
        if abs(a.u @ b.u) <= tau * np.linalg.norm(a.u) * np.linalg.norm(b.u):
            raise DegenerateConfiguration(f"sources {i} and {j} are orthogonal; the complete-graph route needs non-orthogonal pairs")
    pts = np.array([e.u for e in entries])
    if len(entries) >= d and not check_general_position(pts, np.zeros(d)):
        raise DegenerateConfiguration("sources are not in general position")
    e1 = entries[0]
    mus, nus = [0.0], []
    for e in entries[1:]:
        dot = float(e.u @ e1.u)
        mus.append((e1.lam - e1.u @ e.v) / dot)
        nus.append((e.lam - e.u @ e1.v) / dot)
    nus = np.array(nus)
    nu = float(np.mean(nus))
    w = e1.v - nu * e1.u
    mu, resid = _fit_mu(entries, w)
    resid = max(resid, float(np.max(np.abs(nus - nu))) if nus.size else 0.0)
    # gauge: shear so that <u_i, eta> = lam_i, least squares over all sources
    U = np.array([e.u for e in entries])
    lam = np.array([e.lam for e in entries])
    eta, *_ = np.linalg.lstsq(U, lam, rcond=None)
    gauge_res = float(np.max(np.abs(U @ eta - lam)))
    gauged = [SourceEntry(e.u, e.lam - float(e.u @ eta), e.v - eta, e.residual) for e in entries]
    mu_g, _ = _fit_mu(gauged, w - eta)
    return Reconstruction(
        w, mu, resid, "complete", eta, gauge_res,
        {"nu_spread": float(np.ptp(nus)) if nus.size else 0.0, "mu_after_gauge": mu_g.tolist(),
         "w_after_gauge": (w - eta).tolist()},
    )


def reconstruct_independent(entries: Sequence[SourceEntry], independent: Sequence[int], tau: float = ORTHO_TAU) -> Reconstruction:
    """Common vector w from an independent (pairwise orthogonal) set of size d.

    w solves <u_i, w> = lam_i on the independent set; every v_i - w must then
    be parallel to u_i.
    """
    entries = list(entries)
    d = entries[0].u.size
    idx = list(independent)
    if len(idx) != d:
        raise DegenerateConfiguration(f"independent set must have exactly {d} sources")
    U = np.array([entries[i].u for i in idx])
    if np.linalg.matrix_rank(U, tol=1e-10 * np.max(np.abs(U))) < d:
        raise DegenerateConfiguration("independent set does not span the tangent space")
    for a, b in combinations(idx, 2):
        if abs(entries[a].u @ entries[b].u) > tau * np.linalg.norm(entries[a].u) * np.linalg.norm(entries[b].u):
            raise DegenerateConfiguration(f"sources {a} and {b} are not orthogonal")
    for k in range(len(entries)):
        if k in idx:
            continue
        for i in idx:
            if abs(entries[k].u @ entries[i].u) <= tau * np.linalg.norm(entries[k].u) * np.linalg.norm(entries[i].u):
                raise DegenerateConfiguration(f"source {k} is orthogonal to independent source {i}")
    lam = np.array([entries[i].lam for i in idx])
    w = np.linalg.solve(U, lam)
    mu, resid = _fit_mu(entries, w)
    return Reconstruction(w, mu, resid, "independent")


def gram_diagnostics(entries: Sequence[SourceEntry], w: np.ndarray, mu: np.ndarray, tol: float) -> dict:
    """Quantities behind the |X| <= n and |Y| = n+1 arguments.

    X = sources with mu_i != 0, Y = the rest; xi_ij = <mu_i u_i, mu_j u_j>
    must be a common value on X, and lam_i = <u_i, w> must hold on Y.
    """
    d = entries[0].u.size
    X = [i for i, m in enumerate(mu) if abs(m) > tol]
    Y = [i for i, m in enumerate(mu) if abs(m) <= tol]
    vecs = np.array([m * e.u for m, e in zip(mu, entries)])
    gram = vecs @ vecs.T
    off = [gram[i, j] for i, j in combinations(range(len(entries)), 2)]
    two_xi = [e.lam * m - m * float(e.u @ w) for e, m in zip(entries, mu)]
    rank = int(np.linalg.matrix_rank(gram, tol=1e-8 * (1 + np.max(np.abs(gram))))) if len(entries) else 0
    y_res = max((abs(entries[i].lam - float(entries[i].u @ w)) for i in Y), default=0.0)
    return {
        "X": X,
        "Y": Y,
        "gram_rank": rank,
        "gram_rank_bound": d,
        "xi_spread": float(np.ptp(off)) if off else 0.0,
        "two_xi_spread": float(np.ptp(two_xi)) if two_xi else 0.0,
        "Y_lambda_residual": y_res,
        "X_claim_holds": len(X) <= d + 1,
    }


@dataclass
class CertificationReport:
    success: bool
    route: str
    eta: np.ndarray
    final_cubic_norm: float
    initial_cubic_norm: float
    entries: list
    graph: Graph
    reconstruction: Reconstruction | None
    diagnostics: dict

    def to_dict(self) -> dict:
        rec = self.reconstruction
        return {
            "success": self.success,
            "route": self.route,
            "eta": self.eta.tolist(),
            "initial_cubic_norm": self.initial_cubic_norm,
            "final_cubic_norm": self.final_cubic_norm,
            "sources": [e.to_dict() for e in self.entries],
            "graph_edges": self.graph.edges(),
            "w": None if rec is None else rec.w.tolist(),
            "mu": None if rec is None else rec.mu.tolist(),
            "reconstruction_residual": None if rec is None else rec.residual,
            "gauge_eta": None if rec is None or rec.gauge_eta is None else rec.gauge_eta.tolist(),
            "gauge_residual": None if rec is None else rec.gauge_residual,
            "diagnostics": self.diagnostics,
        }


def _route(entries, graph: Graph, d: int, tau: float):
    """Choose a reconstruction path from the orthogonality graph, or None."""
    need = d + 2  # n + 1 sources, n = d + 1
    clique = max_clique(graph)
    if len(clique) >= need:
        chosen = sorted(clique)[:need]
        sub = [entries[i] for i in chosen]
        rec = reconstruct_complete(sub, tau)
        w = rec.w
        mu, resid = _fit_mu(entries, w)
        rec = Reconstruction(w, mu, max(resid, rec.residual), "complete", rec.gauge_eta, rec.gauge_residual,
                             dict(rec.diagnostics, clique=chosen))
        return rec
    if len(entries) >= need:
        indep = max_independent_set(graph)
        if len(indep) >= d:
            chosen = sorted(indep)[:d]
            try:
                return reconstruct_independent(entries, chosen, tau)
            except DegenerateConfiguration:
                pass
        ears = ear_decomposition_bounded(graph, d)
        if ears is not None:
            rec = _reconstruct_from_ears(entries, ears)
            if rec is not None:
                return rec
    return None


def _reconstruct_from_ears(entries, ears) -> Reconstruction | None:
    """Least-squares common w along a bounded ear decomposition.

    An ear decomposition guarantees v_i = mu_i u_i + w on the whole graph; the
    unknowns (w, mu_1..mu_L) are fitted jointly and the fit residual reported.
    """
    d = entries[0].u.size
    L = len(entries)
    A = np.zeros((L * d, d + L))
    b = np.zeros(L * d)
    for i, e in enumerate(entries):
        A[i * d:(i + 1) * d, :d] = np.eye(d)
        A[i * d:(i + 1) * d, d + i] = e.u
        b[i * d:(i + 1) * d] = e.v
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    resid = float(np.max(np.abs(A @ sol - b)))
    return Reconstruction(sol[:d], sol[d:], resid, "ears", diagnostics={"ears": ears.to_dict()})


def certify_vanishing(J: BoundaryJet, sources, tau: float = ORTHO_TAU) -> CertificationReport:
    """Find the shear that removes the cubic form, using flat-shadow sources.

    ``sources`` are tangent vectors u_i in canonical coordinates. Sources
    whose slice does not decompose (no flat shadow) are excluded; at least
    n + 1 = d + 2 valid sources in general position are needed, plus a graph
    structure for which the reconstruction applies. Otherwise an
    InconclusiveConfiguration is raised.
    """
    d = J.dim
    if J.order < 3:
        raise ArgumentError("jet order must be at least 3")
    U = np.atleast_2d(np.asarray(sources, dtype=float))
    if U.shape[1] != d:
        raise ArgumentError(f"sources must be {d}-vectors")
    D3 = J[3]
    scale = 1.0 + D3.norm()
    entries = [extract_lambda_v(D3, u) for u in U]
    valid = [i for i, e in enumerate(entries) if e.residual <= DECOMP_TOL * scale * (1 + np.linalg.norm(e.u)) ** 2]
    rejected = [i for i in range(len(entries)) if i not in valid]
    good = [entries[i] for i in valid]
    graph = build_ortho_graph([e.u for e in good], tau) if good else Graph(0)
    diag = {"valid_sources": valid, "rejected_sources": rejected, "required_sources": d + 2}
    if len(good) < d + 2:
        raise InconclusiveConfiguration(
            f"only {len(good)} sources cast flat shadows; at least {d + 2} are required", diag
        )
    if not check_general_position(np.array([e.u for e in good]), np.zeros(d)):
        raise InconclusiveConfiguration("sources are not in general position", diag)
    rec = _route(good, graph, d, tau)
    if rec is None:
        raise InconclusiveConfiguration("no reconstruction applies to this orthogonality graph", diag)
    mu_tol = RECON_TOL * _scale(good)
    diag.update(gram_diagnostics(good, rec.w, rec.mu, mu_tol))
    eta = rec.w
    sheared = shear_jet(J.truncate(3), eta)
    final = sheared[3].norm()
    success = rec.residual <= RECON_TOL * _scale(good) and final <= FINAL_TOL * scale
    return CertificationReport(success, rec.route, eta, final, D3.norm(), entries, graph, rec, diag)


def synthesize_entries(D3f: SymTensor, sources) -> list[SourceEntry]:
    return [extract_lambda_v(D3f, u) for u in np.atleast_2d(np.asarray(sources, dtype=float))]


# -- collinear sources --------------------------------------------------------


def collinear_resolution(J: BoundaryJet, params: Sequence[tuple[float, float]], direction=None, tol: float = 1e-9) -> dict:
    """Gauge from three collinear sources p + r_i u with section slopes m_i.

    All three sources share lam = -m_i + 1/r_i. Substituting 1/r = m + lam
    makes the third-order constraint affine and the fourth-order constraint
    quadratic in m; vanishing at three distinct m_i forces every coefficient
    to vanish. The m-coefficient of the third-order constraint gives
    D^3 f = sym(grad f_11 (x) I) on u^perp, and the leading coefficient of the
    fourth-order one gives f_111 = 3 lam. The returned
    eta = (f_111 e_1 + 3 grad f_11) / 3 (frame with e_1 = u) then removes the
    cubic form. Requires an order-5 jet.
    """
    if J.order < 5:
        raise ArgumentError("collinear resolution needs a jet of order at least 5")
    params = [(float(m), float(r)) for m, r in params]
    if len(params) != 3:
        raise ArgumentError("exactly three sources are required")
    if any(not r > 0 for _, r in params) or any(not m > 0 for m, _ in params):
        raise ArgumentError("section slopes and source distances must be positive")
    ms = np.array([m for m, _ in params])
    if min(abs(a - b) for a, b in combinations(ms, 2)) <= tol * (1 + np.max(np.abs(ms))):
        raise DegenerateConfiguration("the section slopes m_i must be pairwise distinct")
    lams = np.array([-m + 1.0 / r for m, r in params])
    lam = float(np.mean(lams))
    if np.ptp(lams) > tol * (1 + abs(lam)):
        raise DegenerateConfiguration(f"values -m_i + 1/r_i disagree: {lams.tolist()}")
    d = J.dim
    u = np.eye(d)[0] if direction is None else np.asarray(direction, dtype=float)
    Jr, R = rotate_to_source(J, u)
    # constraint tensors at the three sources; fit coefficients in m exactly
    res = [flatness_constraints(Jr, m, r) for m, r in params]
    V = np.vander(ms, 3, increasing=True)  # columns 1, m, m^2
    Vinv = np.linalg.inv(V)

    def coeffs(key):
        stack = np.stack([r_[key] for r_ in res])
        return np.tensordot(Vinv, stack, axes=(1, 0))

    c3 = coeffs("order3")
    c4 = coeffs("order4_consistent")
    c4c = coeffs("order4")
    T3 = Jr[3].full()
    f111 = float(T3[0, 0, 0])
    grad_f11 = T3[0, 0, 1:]
    eta_local = np.concatenate([[f111], 3 * grad_f11]) / 3.0
    eta = R @ eta_local
    sheared = shear_jet(J.truncate(3), eta)
    amax = lambda a: float(np.max(np.abs(a), initial=0.0))
    return {
        "lambda": lam,
        "f111": f111,
        "eta": eta,
        "hypothesis_residual": max(
            max(amax(r_["order2"]), amax(r_["order3"]), amax(r_["order4_consistent"])) for r_ in res
        ),
        "third_order_constancy": amax(c3[1]),
        "leading_mismatch": abs(f111 - 3 * lam),
        "fourth_order_coefficients": [amax(c) for c in c4],
        "fourth_order_classical_coefficients": [amax(c) for c in c4c],
        "final_cubic_norm": sheared[3].norm(),
    }


__all__ = [
    "CertificationReport",
    "Reconstruction",
    "SourceEntry",
    "certify_vanishing",
    "collinear_resolution",
    "decomposition_tensor",
    "extract_lambda_v",
    "gram_diagnostics",
    "pairwise_relation",
    "reconstruct_complete",
    "reconstruct_independent",
    "synthesize_entries",
]
