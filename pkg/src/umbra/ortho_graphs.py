"""Orthogonality graphs and the small-graph combinatorics behind them.

Vertices are light sources; two are adjacent iff their directions are not
orthogonal. The reconstruction routes need graph properties that are checked
here by exhaustive search: induced connectivity, vertex connectivity, bounded
proper ear decompositions, independence and clique numbers. Graphs have at
most 16 vertices and store adjacency as integer bit rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations, product
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from .errors import ArgumentError, OutOfRangeError

MAX_VERTICES = 16
MAX_ENUM_VERTICES = 8


class Graph:
    """Simple undirected graph on vertices 0..v-1 with bitmask adjacency."""

    __slots__ = ("v", "adj")

    def __init__(self, v: int, edges: Iterable[tuple[int, int]] = ()):
        if not 0 <= v <= MAX_VERTICES:
            raise OutOfRangeError(f"graphs have at most {MAX_VERTICES} vertices")
        self.v = v
        self.adj = [0] * v
        for a, b in edges:
            self.add_edge(a, b)

    @classmethod
    def from_adjacency(cls, rows: Sequence[int]) -> "Graph":
        g = cls(len(rows))
        g.adj = [int(r) for r in rows]
        return g

    @classmethod
    def from_matrix(cls, A) -> "Graph":
        A = np.asarray(A)
        return cls(A.shape[0], [(i, j) for i in range(A.shape[0]) for j in range(i + 1, A.shape[0]) if A[i, j]])

    def copy(self) -> "Graph":
        return Graph.from_adjacency(self.adj)

    def add_edge(self, a: int, b: int) -> None:
        if a == b:
            raise ArgumentError("self-loops are not allowed")
        if not (0 <= a < self.v and 0 <= b < self.v):
            raise ArgumentError(f"edge ({a}, {b}) out of range")
        self.adj[a] |= 1 << b
        self.adj[b] |= 1 << a

    def remove_edge(self, a: int, b: int) -> None:
        self.adj[a] &= ~(1 << b)
        self.adj[b] &= ~(1 << a)

    def has_edge(self, a: int, b: int) -> bool:
        return bool(self.adj[a] >> b & 1)

    def edges(self) -> list[tuple[int, int]]:
        return [(a, b) for a in range(self.v) for b in range(a + 1, self.v) if self.adj[a] >> b & 1]

    def num_edges(self) -> int:
        return sum(bin(r).count("1") for r in self.adj) // 2

    def degree(self, a: int) -> int:
        return bin(self.adj[a]).count("1")

    def neighbors(self, a: int) -> list[int]:
        return [b for b in range(self.v) if self.adj[a] >> b & 1]

    def matrix(self) -> np.ndarray:
        return np.array([[self.adj[i] >> j & 1 for j in range(self.v)] for i in range(self.v)], dtype=np.uint8)

    def induced(self, vertices: Sequence[int]) -> "Graph":
        vs = list(vertices)
        return Graph(len(vs), [(i, j) for i, j in combinations(range(len(vs)), 2) if self.has_edge(vs[i], vs[j])])

    def complement(self) -> "Graph":
        full = (1 << self.v) - 1
        return Graph.from_adjacency([full & ~r & ~(1 << i) for i, r in enumerate(self.adj)])

    def to_graph6(self) -> str:
        g = nx.Graph()
        g.add_nodes_from(range(self.v))
        g.add_edges_from(self.edges())
        return nx.to_graph6_bytes(g, header=False).decode().strip()

    @classmethod
    def from_graph6(cls, text: str) -> "Graph":
        try:
            g = nx.from_graph6_bytes(text.strip().encode())
        except (nx.NetworkXError, ValueError) as exc:
            raise ArgumentError(f"invalid graph6 string {text!r}: {exc}") from None
        return cls(g.number_of_nodes(), g.edges())

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self.v == other.v and self.adj == other.adj

    def __hash__(self) -> int:
        return hash((self.v, tuple(self.adj)))

    def __repr__(self) -> str:
        return f"Graph(v={self.v}, edges={self.edges()})"


# -- construction -------------------------------------------------------------


def build_ortho_graph(vectors, tau: float = 1e-9) -> Graph:
    """Edge iff |<u_i, u_j>| > tau |u_i| |u_j|."""
    U = np.atleast_2d(np.asarray(vectors, dtype=float))
    norms = np.linalg.norm(U, axis=1)
    if np.any(norms == 0):
        raise ArgumentError("source directions must be nonzero")
    G = U @ U.T
    return Graph(len(U), [(i, j) for i, j in combinations(range(len(U)), 2) if abs(G[i, j]) > tau * norms[i] * norms[j]])


def complete_graph(v: int) -> Graph:
    return Graph(v, combinations(range(v), 2))


def cycle_graph(v: int) -> Graph:
    return Graph(v, [(i, (i + 1) % v) for i in range(v)])


def path_graph(v: int) -> Graph:
    return Graph(v, [(i, i + 1) for i in range(v - 1)])


def empty_graph(v: int) -> Graph:
    return Graph(v)


def join(g: Graph, h: Graph) -> Graph:
    """Disjoint union of g and h plus all edges between them."""
    out = Graph(g.v + h.v, g.edges() + [(a + g.v, b + g.v) for a, b in h.edges()])
    for a in range(g.v):
        for b in range(h.v):
            out.add_edge(a, g.v + b)
    return out


def complete_multipartite(*sizes: int) -> Graph:
    g = Graph(0)
    for s in sizes:
        g = join(g, empty_graph(s))
    return g


def wheel_graph(v: int) -> Graph:
    """W_v: a hub joined to a cycle on v - 1 vertices."""
    return join(Graph(1), cycle_graph(v - 1))


def prism_graph() -> Graph:
    """Y_3, the triangular prism."""
    return Graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 5)])


# -- connectivity -------------------------------------------------------------


def _connected_mask(g: Graph, mask: int) -> bool:
    """Whether the subgraph induced on the vertex bitmask is connected."""
    if mask == 0:
        return True
    start = mask & -mask
    seen = start
    frontier = start
    while frontier:
        low = frontier & -frontier
        frontier ^= low
        nbrs = g.adj[low.bit_length() - 1] & mask & ~seen
        seen |= nbrs
        frontier |= nbrs
    return seen == mask


def is_connected(g: Graph) -> bool:
    return _connected_mask(g, (1 << g.v) - 1)


def induced_connectivity_check(g: Graph, n: int) -> bool:
    """True iff every induced subgraph on n vertices is connected."""
    if n > g.v or n < 1:
        raise ArgumentError(f"subgraph size {n} out of range for {g.v} vertices")
    return all(_connected_mask(g, sum(1 << i for i in s)) for s in combinations(range(g.v), n))


def vertex_connectivity(g: Graph) -> int:
    """Minimum number of vertices whose removal disconnects g (v - 1 for K_v)."""
    full = (1 << g.v) - 1
    for k in range(g.v - 1):
        for cut in combinations(range(g.v), k):
            mask = full & ~sum(1 << i for i in cut)
            if not _connected_mask(g, mask):
                return k
    return max(g.v - 1, 0)


def is_k_connected(g: Graph, k: int) -> bool:
    if g.v <= k:
        return False
    full = (1 << g.v) - 1
    for s in range(k):
        for cut in combinations(range(g.v), s):
            if not _connected_mask(g, full & ~sum(1 << i for i in cut)):
                return False
    return True


# -- cliques and independent sets ---------------------------------------------


def max_clique(g: Graph) -> list[int]:
    """A maximum clique (exhaustive branch and bound)."""
    best: list[int] = []

    def grow(current: list[int], cand: int):
        nonlocal best
        if len(current) > len(best):
            best = current[:]
        while cand:
            if len(current) + bin(cand).count("1") <= len(best):
                return
            low = cand & -cand
            cand ^= low
            i = low.bit_length() - 1
            grow(current + [i], cand & g.adj[i])

    grow([], (1 << g.v) - 1)
    return sorted(best)


def max_independent_set(g: Graph) -> list[int]:
    return max_clique(g.complement())


def independence_number(g: Graph) -> int:
    return len(max_independent_set(g))


# -- ear decompositions -------------------------------------------------------


@dataclass(frozen=True)
class EarDecomposition:
    """Initial cycle (closed vertex sequence without repetition) and ears (paths)."""

    cycle: tuple[int, ...]
    ears: tuple[tuple[int, ...], ...]

    def max_vertex_length(self) -> int:
        return max([len(self.cycle)] + [len(e) for e in self.ears])

    def to_dict(self) -> dict:
        return {"cycle": list(self.cycle), "ears": [list(e) for e in self.ears]}

    def validate(self, g: Graph, L: float | None = None) -> None:
        """Raise ArgumentError unless this is a proper ear decomposition of g."""
        used: set[tuple[int, int]] = set()

        def take(a, b):
            e = (min(a, b), max(a, b))
            if not g.has_edge(a, b):
                raise ArgumentError(f"{e} is not an edge")
            if e in used:
                raise ArgumentError(f"edge {e} used twice")
            used.add(e)

        c = self.cycle
        if len(c) < 3 or len(set(c)) != len(c):
            raise ArgumentError("initial cycle must have at least 3 distinct vertices")
        for i in range(len(c)):
            take(c[i], c[(i + 1) % len(c)])
        covered = set(c)
        for ear in self.ears:
            if len(ear) < 2 or ear[0] == ear[-1]:
                raise ArgumentError(f"ear {ear} is not proper")
            if ear[0] not in covered or ear[-1] not in covered:
                raise ArgumentError(f"ear {ear} does not start and end on the built subgraph")
            inner = ear[1:-1]
            if len(set(inner)) != len(inner) or covered & set(inner):
                raise ArgumentError(f"ear {ear} reuses vertices")
            for a, b in zip(ear, ear[1:]):
                take(a, b)
            covered |= set(inner)
        if used != set(g.edges()) or covered != set(range(g.v)):
            raise ArgumentError("decomposition does not cover the graph")
        if L is not None and self.max_vertex_length() > L:
            raise ArgumentError(f"an ear exceeds vertex-length {L}")


def _bits(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def _find_ear(g: Graph, S: int, max_inner: int):
    """Path a, p_1..p_k, b with a != b in S, p_i outside S, 1 <= k <= max_inner."""
    for a in _bits(S):
        stack = [(a, (a,), 0)]
        while stack:
            x, path, used = stack.pop()
            for y in _bits(g.adj[x]):
                if S >> y & 1:
                    if len(path) >= 2 and y != a:
                        return path + (y,)
                    continue
                if used >> y & 1 or len(path) - 1 >= max_inner:
                    continue
                stack.append((y, path + (y,), used | 1 << y))
    return None


def _cycles(g: Graph, max_len: int):
    """Simple cycles of vertex-length <= max_len, shortest first, each once."""
    for length in range(3, min(max_len, g.v) + 1):
        for start in range(g.v):
            # vertices > start only, so each cycle is generated from its minimum
            stack = [(start, (start,))]
            while stack:
                x, path = stack.pop()
                if len(path) == length:
                    if g.has_edge(x, start) and path[1] < path[-1]:
                        yield path
                    continue
                for y in _bits(g.adj[x]):
                    if y > start and y not in path:
                        stack.append((y, path + (y,)))


def ear_decomposition_bounded(g: Graph, L: float | None = None) -> EarDecomposition | None:
    """Proper ear decomposition with every ear (and the cycle) of vertex-length <= L.

    Vertex-length counts both endpoints. Reachability only depends on the
    covered vertex set and is monotone in it (a long ear through already
    covered vertices splits into shorter proper ears), so a greedy closure from
    each candidate initial cycle decides existence exactly.
    """
    if g.v < 3:
        return None
    L = math.inf if L is None else L
    if L < 3:
        return None
    full = (1 << g.v) - 1
    max_inner = int(min(L - 2, g.v))
    failed: list[int] = []
    for cyc in _cycles(g, int(min(L, g.v))):
        cmask = sum(1 << i for i in cyc)
        if any(cmask & ~f == 0 for f in failed):
            continue
        S, ears = cmask, []
        while S != full:
            ear = _find_ear(g, S, max_inner)
            if ear is None:
                break
            ears.append(ear)
            S |= sum(1 << i for i in ear)
        if S != full:
            failed.append(S)
            continue
        cyc_edges = {(min(a, b), max(a, b)) for a, b in zip(cyc, cyc[1:] + cyc[:1])}
        ear_edges = {(min(a, b), max(a, b)) for e in ears for a, b in zip(e, e[1:])}
        rest = [e for e in g.edges() if e not in cyc_edges and e not in ear_edges]
        return EarDecomposition(tuple(cyc), tuple(tuple(e) for e in ears) + tuple(rest))
    return None


# -- vertex splitting -----------------------------------------------------------


def split_vertex(g: Graph, v: int, part: Iterable[int]) -> Graph:
    """Replace v by adjacent v1 (keeps label v) and v2 (new label g.v).

    ``part`` lists the neighbors that move to v2; the others stay with v1.
    Each side must receive at least two of v's original edges.
    """
    nbrs = set(g.neighbors(v))
    part = set(part)
    if len(nbrs) < 4:
        raise ArgumentError(f"vertex {v} has degree {len(nbrs)} < 4")
    if not part <= nbrs:
        raise ArgumentError("partition must consist of neighbors of the split vertex")
    if len(part) < 2 or len(nbrs - part) < 2:
        raise ArgumentError("each side of the split needs at least two edges")
    out = Graph(g.v + 1, g.edges())
    for u in part:
        out.remove_edge(v, u)
        out.add_edge(g.v, u)
    out.add_edge(v, g.v)
    return out


def contract_edge(g: Graph, a: int, b: int) -> Graph:
    """Merge b into a and relabel the remaining vertices in order."""
    if not g.has_edge(a, b):
        raise ArgumentError(f"({a}, {b}) is not an edge")
    keep = [i for i in range(g.v) if i != b]
    pos = {x: i for i, x in enumerate(keep)}
    out = Graph(g.v - 1)
    for x, y in g.edges():
        x = a if x == b else x
        y = a if y == b else y
        if x != y:
            out.add_edge(pos[x], pos[y])
    return out


# -- canonical forms and enumeration ----------------------------------------------


@lru_cache(maxsize=None)
def _pair_index(v: int) -> tuple[np.ndarray, np.ndarray]:
    iu = np.triu_indices(v, 1)
    return iu


def canonical_form(g: Graph) -> tuple[int, int]:
    """Isomorphism invariant: minimal upper-triangle bit string over relabelings.

    Only relabelings that list vertices by non-increasing degree are tried,
    which is still a complete invariant because degrees are preserved.
    """
    v = g.v
    if v == 0:
        return (0, 0)
    degs = [g.degree(i) for i in range(v)]
    classes = [[i for i in range(v) if degs[i] == d] for d in sorted(set(degs), reverse=True)]
    perms = np.array([sum(p, ()) for p in product(*(permutations(c) for c in classes))], dtype=np.intp)
    A = g.matrix()
    iu = _pair_index(v)
    sub = A[perms[:, :, None], perms[:, None, :]][:, iu[0], iu[1]]
    weights = 1 << np.arange(sub.shape[1] - 1, -1, -1, dtype=np.uint64)
    codes = (sub.astype(np.uint64) * weights).sum(axis=1)
    return (v, int(codes.max()))


def from_canonical(form: tuple[int, int]) -> Graph:
    v, code = form
    iu = _pair_index(v)
    m = len(iu[0])
    return Graph(v, [(int(iu[0][k]), int(iu[1][k])) for k in range(m) if code >> (m - 1 - k) & 1])


def is_isomorphic(g: Graph, h: Graph) -> bool:
    return g.v == h.v and g.num_edges() == h.num_edges() and canonical_form(g) == canonical_form(h)


def is_edge_minimal_k_connected(g: Graph, k: int) -> bool:
    if not is_k_connected(g, k):
        return False
    for a, b in g.edges():
        h = g.copy()
        h.remove_edge(a, b)
        if is_k_connected(h, k):
            return False
    return True


def enumerate_edge_minimal_k_connected(v: int, k: int) -> list[Graph]:
    """All edge-minimal k-connected graphs on v vertices, up to isomorphism.

    Search descends from K_v by single-edge deletions that keep the graph
    k-connected, visiting each isomorphism class once; the classes with no
    such deletion are exactly the edge-minimal ones. Output is sorted by
    (edge count, canonical code).
    """
    if v > MAX_ENUM_VERTICES:
        raise OutOfRangeError(f"enumeration supports at most {MAX_ENUM_VERTICES} vertices")
    if k < 1 or v <= k:
        return []
    start = complete_graph(v)
    seen = {canonical_form(start)}
    stack = [start]
    minimal = []
    while stack:
        g = stack.pop()
        leaf = True
        for a, b in g.edges():
            h = g.copy()
            h.remove_edge(a, b)
            if min(h.degree(a), h.degree(b)) < k or not is_k_connected(h, k):
                continue
            leaf = False
            cf = canonical_form(h)
            if cf not in seen:
                seen.add(cf)
                stack.append(h)
        if leaf:
            minimal.append(g)
    out = [from_canonical(canonical_form(g)) for g in minimal]
    return sorted(out, key=lambda g: (g.num_edges(), canonical_form(g)[1]))


def enumerate_k_connected(v: int, k: int) -> list[Graph]:
    """All k-connected graphs on v vertices up to isomorphism (same search, all nodes)."""
    if v > MAX_ENUM_VERTICES:
        raise OutOfRangeError(f"enumeration supports at most {MAX_ENUM_VERTICES} vertices")
    if v <= k:
        return []
    start = complete_graph(v)
    seen = {canonical_form(start): start}
    stack = [start]
    while stack:
        g = stack.pop()
        for a, b in g.edges():
            h = g.copy()
            h.remove_edge(a, b)
            if is_k_connected(h, k):
                cf = canonical_form(h)
                if cf not in seen:
                    seen[cf] = h
                    stack.append(h)
    return [from_canonical(cf) for cf in sorted(seen)]


def contains_spanning_subgraph(g: Graph, h: Graph) -> bool:
    """Whether some relabeling of h is a spanning subgraph of g (brute force)."""
    if g.v != h.v or h.num_edges() > g.num_edges():
        return False
    he = h.edges()
    for p in permutations(range(g.v)):
        if all(g.has_edge(p[a], p[b]) for a, b in he):
            return True
    return False


# -- naming ---------------------------------------------------------------------


def _named_graphs(v: int) -> list[tuple[str, Graph]]:
    names: list[tuple[str, Graph]] = [(f"K{v}", complete_graph(v))]
    if v == 6:
        names.append(("Y3", prism_graph()))
    if v == 7:
        names += [
            ("K1 v Y3", join(Graph(1), prism_graph())),
            ("P4 v 3K1", join(path_graph(4), empty_graph(3))),
            ("2K1 v C5", join(empty_graph(2), cycle_graph(5))),
        ]
    if v >= 3:
        names += [(f"C{v}", cycle_graph(v)), (f"complement of C{v}", cycle_graph(v).complement())]
    if v >= 4:
        names.append((f"W{v}", wheel_graph(v)))
    for a in range(1, v // 2 + 1):
        names.append((f"K{{{a},{v - a}}}", complete_multipartite(a, v - a)))
    for a in range(1, v):
        for b in range(a, v):
            c = v - a - b
            if c >= b:
                names.append((f"K{{{a},{b},{c}}}", complete_multipartite(a, b, c)))
    return names


def recognize(g: Graph) -> str:
    """Name of a recognized small graph, or its graph6 string."""
    cf = canonical_form(g)
    for name, h in _named_graphs(g.v):
        if h.num_edges() == g.num_edges() and canonical_form(h) == cf:
            return name
    return g.to_graph6()


def L_constant(n: int) -> int:
    """Number of flat-shadow sources sufficient for the pointwise argument."""
    if n < 3:
        raise ArgumentError("n must be at least 3")
    if n == 3:
        return 31
    if n == 4:
        return 7
    return n + 2


def enumeration_table(graphs: Sequence[Graph]) -> list[dict]:
    return [
        {
            "name": recognize(g),
            "graph6": g.to_graph6(),
            "vertices": g.v,
            "edges": g.num_edges(),
            "connectivity": vertex_connectivity(g),
            "independence_number": independence_number(g),
        }
        for g in graphs
    ]


__all__ = [
    "EarDecomposition",
    "Graph",
    "L_constant",
    "build_ortho_graph",
    "canonical_form",
    "complete_graph",
    "complete_multipartite",
    "contains_spanning_subgraph",
    "contract_edge",
    "cycle_graph",
    "ear_decomposition_bounded",
    "enumerate_edge_minimal_k_connected",
    "enumerate_k_connected",
    "enumeration_table",
    "independence_number",
    "induced_connectivity_check",
    "is_isomorphic",
    "is_k_connected",
    "join",
    "max_clique",
    "max_independent_set",
    "prism_graph",
    "recognize",
    "split_vertex",
    "vertex_connectivity",
    "wheel_graph",
]
