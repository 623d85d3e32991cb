"""Command-line entry point.

    umbra <trace|certify|graphs|dim3|dual|foliate> [action] [--config PATH] [--seed N] [--out DIR]

Each command reads an optional JSON config (defaults give a self-contained
fixture), writes a JSON report plus CSV data and a PNG figure into --out, and
prints a one-line summary. Exit codes: 0 result (including negative results
such as a non-flat verdict), 2 argument error, 3 numerical non-convergence,
4 hypothesis failure (inconclusive configuration).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import HypothesisError, UmbraError
from .io import read_config, write_csv, write_graph6, write_json

log = logging.getLogger("umbra")

EXIT_OK = 0
EXIT_ARGUMENT = 2
EXIT_NONCONVERGENCE = 3
EXIT_INCONCLUSIVE = 4


# -- trace --------------------------------------------------------------------------


def _body(cfg: dict, rng: np.random.Generator, n_default: int = 3):
    from .bodies import body_from_descriptor, random_ellipsoid

    desc = cfg.get("body")
    if desc is None:
        return random_ellipsoid(int(cfg.get("n", n_default)), rng)
    return body_from_descriptor(desc)


def cmd_trace(cfg: dict, seed: int, out: Path) -> int:
    from .plotting import plot_shadow_curve
    from .shadow import LightSource, flatness_test, graze_point, trace_shadow

    rng = np.random.default_rng(seed)
    B = _body(cfg, rng)
    src = cfg.get("source")
    if src is None:
        q = LightSource.point(B.interior_point() + 3.0 * np.eye(B.n)[0] * (1 + np.max(np.abs(B.interior_point()))))
    elif "position" in src:
        q = LightSource.point(src["position"])
    elif "direction" in src:
        q = LightSource.infinity(src["direction"])
    else:
        from .errors import ArgumentError

        raise ArgumentError("source needs 'position' or 'direction'")
    hint = cfg.get("hint", rng.normal(size=B.n))
    p = np.asarray(cfg["base"], dtype=float) if "base" in cfg else graze_point(B, q, hint)
    grid = cfg.get("grid", {})
    C = trace_shadow(B, p, q, radius=float(grid.get("radius", 0.2)), rings=int(grid.get("rings", 3)),
                     tol=float(cfg.get("tol", 1e-10)))
    ok = C.all_converged
    out.mkdir(parents=True, exist_ok=True)
    C.to_csv(out / "shadow_curve.csv")
    report = {
        "command": "trace",
        "seed": seed,
        "body": B.descriptor(),
        "source": q.to_dict(),
        "base_point": p,
        "converged": ok,
        "max_residual": float(np.nanmax(np.abs(C.residual))) if ok else None,
    }
    if ok:
        rep = flatness_test(C, float(cfg.get("threshold", 1e-6)))
        report["flatness"] = rep.to_dict()
        plot_shadow_curve(C, rep, out / "trace.png")
        print(f"trace: {rep.verdict} (deviation {rep.max_deviation:.3e})")
    else:
        print("trace: tracing did not converge at every grid point")
    write_json(out / "trace_report.json", report)
    return EXIT_OK if ok else EXIT_NONCONVERGENCE


# -- certify --------------------------------------------------------------------------


def cmd_certify(cfg: dict, seed: int, out: Path) -> int:
    from .bodies import LpBallBody, canonical_jet, lp_flat_source
    from .cubic_solver import certify_vanishing
    from .plotting import plot_certification
    from .shadow import LightSource, source_in_frame

    rng = np.random.default_rng(seed)
    B = _body(cfg, rng, n_default=4)
    p = np.asarray(cfg["point"], dtype=float) if "point" in cfg else B.ray_boundary_point(rng.normal(size=B.n))
    if isinstance(B, LpBallBody) and "point" not in cfg:
        p = B.normalize(np.abs(rng.normal(size=B.n)) + 0.3)
    J, frame = canonical_jet(B, p, 3)
    sources = cfg.get("sources", "random")
    if sources == "lp_axes":
        U = []
        for i in range(B.n):
            q = np.zeros(B.n)
            q[i] = lp_flat_source(p, i, getattr(B, "p", 4))
            U.append(source_in_frame(frame, LightSource.point(q))[0])
        U = np.array(U)
    elif sources == "random":
        U = rng.normal(size=(int(cfg.get("count", B.n + 1)), B.n - 1))
    else:
        U = np.asarray(sources, dtype=float)
    tau = float(cfg.get("tau", 1e-9))
    base = {"command": "certify", "seed": seed, "body": B.descriptor(), "point": p, "sources_canonical": U}
    try:
        rep = certify_vanishing(J, U, tau)
    except HypothesisError as exc:
        write_json(out / "certify_report.json", dict(base, verdict="inconclusive configuration", reason=str(exc), details=exc.details))
        print(f"certify: inconclusive configuration ({exc})")
        return EXIT_INCONCLUSIVE
    write_json(out / "certify_report.json", dict(base, verdict="success" if rep.success else "failure", **rep.to_dict()))
    plot_certification(rep, out / "certify.png")
    print(f"certify: {'success' if rep.success else 'failure'} via {rep.route}, final |D3f| = {rep.final_cubic_norm:.3e}")
    return EXIT_OK


# -- graphs ---------------------------------------------------------------------------


def cmd_graphs(cfg: dict, seed: int, out: Path, args) -> int:
    from .errors import ArgumentError
    from .ortho_graphs import (
        Graph,
        L_constant,
        ear_decomposition_bounded,
        enumerate_edge_minimal_k_connected,
        enumeration_table,
        independence_number,
        recognize,
        vertex_connectivity,
    )
    from .plotting import plot_graphs

    action = args.action or cfg.get("action", "enumerate")
    if action == "enumerate":
        v = int(args.v if args.v is not None else cfg.get("v", 6))
        k = int(args.k if args.k is not None else cfg.get("k", 3))
        graphs = enumerate_edge_minimal_k_connected(v, k)
        table = enumeration_table(graphs)
        ears = cfg.get("ear_bound")
        if ears is not None:
            for row, g in zip(table, graphs):
                row["ear_decomposition"] = ear_decomposition_bounded(g, float(ears)) is not None
        write_json(out / "graphs_report.json", {"command": "graphs", "action": action, "v": v, "k": k,
                                                "count": len(graphs), "graphs": table})
        write_graph6(out / "graphs.g6", graphs)
        plot_graphs(graphs, [row["name"] for row in table], out / "graphs.png")
        print(f"graphs: {len(graphs)} edge-minimal {k}-connected graphs on {v} vertices: "
              + ", ".join(row["name"] for row in table))
        return EXIT_OK
    if action == "inspect":
        text = args.graph6 or cfg.get("graph6")
        if not text:
            raise ArgumentError("inspect needs --graph6")
        g = Graph.from_graph6(text)
        L = args.L if args.L is not None else cfg.get("L")
        ears = ear_decomposition_bounded(g, None if L is None else float(L))
        report = {"command": "graphs", "action": action, "graph6": g.to_graph6(), "name": recognize(g),
                  "vertices": g.v, "edges": g.edges(), "connectivity": vertex_connectivity(g),
                  "independence_number": independence_number(g), "ear_bound": L,
                  "ear_decomposition": None if ears is None else ears.to_dict()}
        write_json(out / "graphs_report.json", report)
        plot_graphs([g], [report["name"]], out / "graphs.png")
        print(f"graphs: {report['name']} connectivity {report['connectivity']}, ears {'found' if ears else 'absent'}")
        return EXIT_OK
    if action == "L":
        n_values = [int(args.n)] if args.n is not None else list(cfg.get("n", range(3, 11)))
        table = {str(n): L_constant(n) for n in n_values}
        write_json(out / "graphs_report.json", {"command": "graphs", "action": action, "L": table})
        print("graphs: " + ", ".join(f"L({n})={v}" for n, v in table.items()))
        return EXIT_OK
    raise ArgumentError(f"unknown graphs action {action!r}")


# -- dim3 -----------------------------------------------------------------------------


def _surface_jet(cfg: dict, rng: np.random.Generator):
    from .bodies import body_from_descriptor, canonical_jet, random_ellipsoid
    from .dim3 import Jet2D5

    kind = cfg.get("jet", "quadric")
    if isinstance(kind, dict):
        return Jet2D5.from_dict(kind)
    if kind == "random":
        return Jet2D5.random(rng)
    if kind == "quadric":
        B = random_ellipsoid(3, rng)
    elif kind == "body":
        B = body_from_descriptor(cfg["body"])
    else:
        from .errors import ArgumentError

        raise ArgumentError("jet must be 'quadric', 'random', 'body' or an explicit table")
    p = np.asarray(cfg["point"], dtype=float) if "point" in cfg else B.ray_boundary_point(rng.normal(size=3))
    J, _ = canonical_jet(B, p, 5)
    return Jet2D5.from_jet(J)


def cmd_dim3(cfg: dict, seed: int, out: Path, args) -> int:
    from .dim3 import aperture_profile, leading_coefficient, root_capacity_check, rotation_profile
    from .plotting import plot_profile

    rng = np.random.default_rng(seed)
    J = _surface_jet(cfg, rng)
    variant = cfg.get("variant", "classical")
    prof = rotation_profile(J, int(cfg.get("samples", 64)), variant)
    roots = root_capacity_check(J, variant=variant)
    N = len(prof.coefficients)
    ks = np.fft.fftfreq(N, 1.0 / N).astype(int)
    cp, cm = aperture_profile(J)
    report = {
        "command": "dim3",
        "seed": seed,
        "variant": variant,
        "jet": J.to_dict(),
        "coefficients": [{"k": int(k), "re": float(c.real), "im": float(c.imag)} for k, c in sorted(zip(ks, prof.coefficients))],
        "max_coefficient": float(np.max(np.abs(prof.coefficients))),
        "max_above_15": prof.max_above(15),
        "predicted_leading": leading_coefficient(J),
        "aperture_profile": {"c_plus": cp, "c_minus": cm},
        "roots": roots.to_dict(),
    }
    write_csv(out / "profile.csv", ["t", "residual"], prof.to_rows())
    write_json(out / "dim3_report.json", report)
    plot_profile(prof, out / "profile.png")
    print(f"dim3: max |c_k| = {report['max_coefficient']:.3e}, sign changes {roots.count}"
          + (" (identically zero)" if roots.identically_zero else ""))
    return EXIT_OK


# -- dual -----------------------------------------------------------------------------


def cmd_dual(cfg: dict, seed: int, out: Path) -> int:
    from .bodies import QuadricBody, random_ellipsoid
    from .duality import Polytope, ProjHyperplane, cross_polytope, cube, polar_polytope, section_cone_duality_check, same_vertex_set
    from .plotting import plot_polar_pair

    rng = np.random.default_rng(seed)
    n = int(cfg.get("n", 2))
    poly = cfg.get("polytope", "cube")
    if poly == "cube":
        P = cube(n)
    elif poly == "random":
        V = rng.normal(size=(int(cfg.get("vertices", 10)), n))
        P = Polytope(V / np.linalg.norm(V, axis=1)[:, None])
    else:
        P = Polytope(np.asarray(poly, dtype=float))
    Pp = polar_polytope(P)
    Ppp = polar_polytope(Pp)
    report = {
        "command": "dual",
        "seed": seed,
        "polytope": P.vertices,
        "polar": Pp.extreme_vertices(),
        "double_polar_matches": same_vertex_set(Ppp.extreme_vertices(), P.extreme_vertices()),
    }
    if poly == "cube":
        report["polar_is_cross_polytope"] = same_vertex_set(Pp.extreme_vertices(), cross_polytope(n).vertices)
    qd = cfg.get("quadric")
    Q = QuadricBody(np.asarray(qd["A"]), qd.get("center")) if qd else random_ellipsoid(n, rng, center_scale=0.1)
    hp = cfg.get("hyperplane")
    H = ProjHyperplane.affine(hp["normal"], hp["offset"]) if hp else ProjHyperplane.affine(rng.normal(size=Q.n), 0.1)
    report["section_cone"] = section_cone_duality_check(Q, H, int(cfg.get("samples", 64)), rng)
    write_json(out / "dual_report.json", report)
    if n == 2:
        plot_polar_pair(P, Pp, out / "dual.png")
    print(f"dual: double polar {'matches' if report['double_polar_matches'] else 'DIFFERS'}, "
          f"section/cone residual {report['section_cone']['max_residual']:.3e}")
    return EXIT_OK


# -- foliate --------------------------------------------------------------------------


def cmd_foliate(cfg: dict, seed: int, out: Path) -> int:
    from .foliation import cap_probe, coordinate_example, grid_points, probe_offdiagonal, residual_field, sphere_lines_probe
    from .plotting import plot_residual_field

    field = cfg.get("field", "coordinate")
    if field == "coordinate":
        N = coordinate_example(3)
    elif field == "perturbed":
        N = coordinate_example(3, perturb=float(cfg.get("perturb", 0.1)))
    elif field == "radial":
        N = lambda x: np.asarray(x, dtype=float)
    else:
        from .errors import ArgumentError

        raise ArgumentError("field must be 'coordinate', 'perturbed' or 'radial'")
    g = cfg.get("grid", {})
    pts = grid_points(3, float(g.get("lo", -0.45)), float(g.get("hi", 0.45)), int(g.get("num", 10)))
    rf = residual_field(N, pts)
    write_csv(out / "residual_field.csv", ["x1", "x2", "x3", "residual", "skipped"], rf.to_rows())
    cap = cap_probe(float(cfg.get("cap_radius", 0.1)))
    report = {
        "command": "foliate",
        "field": field,
        "grid_points": len(pts),
        "skipped": int(rf.skipped.sum()),
        "max_residual": rf.max_residual,
        "probe": {
            "south_pole": probe_offdiagonal(np.array([0.0, 0.0, -1.0])),
            "north_pole": float(sphere_lines_probe(np.array([0.0, 0.0, 1.0]))[0, 1]),
            "cap": cap,
        },
    }
    write_json(out / "foliate_report.json", report)
    plot_residual_field(rf, out / "foliate.png")
    print(f"foliate: max residual {rf.max_residual:.3e} ({report['skipped']} skipped), "
          f"cap probe {cap['max_offdiagonal']:.3e}")
    return EXIT_OK


# -- driver ---------------------------------------------------------------------------


COMMANDS = ("trace", "certify", "graphs", "dim3", "dual", "foliate")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="umbra", description="Flat shadow boundaries: verification pipelines.")
    ap.add_argument("--version", action="version", version=f"umbra {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("action", nargs="?", help="sub-action (graphs: enumerate|inspect|L; dim3: profile)")
    ap.add_argument("--config", type=Path, help="JSON configuration file")
    ap.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    ap.add_argument("--out", type=Path, default=Path("umbra_out"), help="output directory")
    ap.add_argument("--v", type=int, help="graphs enumerate: vertex count")
    ap.add_argument("--k", type=int, help="graphs enumerate: connectivity")
    ap.add_argument("--n", type=int, help="graphs L: dimension")
    ap.add_argument("--L", type=int, help="graphs inspect: ear vertex-length bound")
    ap.add_argument("--graph6", help="graphs inspect: graph in graph6 format")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = read_config(args.config) if args.config else {}
        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "graphs":
            return cmd_graphs(cfg, args.seed, out, args)
        if args.command == "dim3":
            if args.action not in (None, "profile"):
                from .errors import ArgumentError

                raise ArgumentError("dim3 supports the 'profile' action")
            return cmd_dim3(cfg, args.seed, out, args)
        if args.action is not None:
            from .errors import ArgumentError

            raise ArgumentError(f"{args.command} takes no action argument")
        return {"trace": cmd_trace, "certify": cmd_certify, "dual": cmd_dual, "foliate": cmd_foliate}[args.command](cfg, args.seed, out)
    except UmbraError as exc:
        print(f"umbra {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (KeyError, TypeError, ValueError) as exc:
        print(f"umbra {args.command}: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_ARGUMENT


if __name__ == "__main__":
    sys.exit(main())
