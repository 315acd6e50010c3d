"""Feedback graphs, observability classification, and the combinatorial solvers.

Vertices are 1-indexed in the public API. A directed edge (u, v) means that
playing action u reveals the loss of action v; self-loops are allowed and
mean the player observes his own loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import combinations
from typing import Iterable

import numpy as np

ALPHA_EXACT_CAP = 40  # branch-and-bound independent-set solver refuses larger graphs
DELTA_EXACT_CAP = 20  # above this the dominating-set solver falls back to greedy


class GraphFormatError(ValueError):
    """Malformed graph text; ``line`` is the offending 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class VertexClass(Enum):
    STRONG = "strong"
    WEAK = "weak"
    UNOBSERVABLE = "unobservable"


class GraphClass(Enum):
    STRONGLY_OBSERVABLE = "strongly_observable"
    WEAKLY_OBSERVABLE = "weakly_observable"
    NOT_OBSERVABLE = "not_observable"


class FeedbackGraph:
    """Immutable directed graph over actions 1..K with self-loops allowed."""

    __slots__ = ("_k", "_edges", "_in", "_out", "_in_matrix", "_out_index", "_sym")

    def __init__(self, num_vertices: int, edges: Iterable[tuple[int, int]]):
        if num_vertices < 1:
            raise ValueError(f"num_vertices must be >= 1, got {num_vertices}")
        k = int(num_vertices)
        edge_set = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if not (1 <= u <= k and 1 <= v <= k):
                raise ValueError(f"edge ({u}, {v}) out of range for K={k}")
            edge_set.add((u, v))
        self._k = k
        self._edges = frozenset(edge_set)
        in_masks = [0] * k
        out_masks = [0] * k
        for u, v in edge_set:
            out_masks[u - 1] |= 1 << (v - 1)
            in_masks[v - 1] |= 1 << (u - 1)
        self._in = tuple(in_masks)
        self._out = tuple(out_masks)
        self._in_matrix = None
        self._out_index = None
        self._sym = None

    @property
    def num_vertices(self) -> int:
        return self._k

    @property
    def edges(self) -> frozenset:
        return self._edges

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._edges

    def _check_vertex(self, i: int):
        if not 1 <= i <= self._k:
            raise ValueError(f"vertex {i} out of range 1..{self._k}")

    def in_neighbors(self, i: int) -> frozenset:
        self._check_vertex(i)
        return _mask_to_vertices(self._in[i - 1])

    def out_neighbors(self, i: int) -> frozenset:
        self._check_vertex(i)
        return _mask_to_vertices(self._out[i - 1])

    def in_mask(self, i: int) -> int:
        """Bitmask of in-neighbors of vertex i (bit v-1 set for vertex v)."""
        self._check_vertex(i)
        return self._in[i - 1]

    def out_mask(self, i: int) -> int:
        self._check_vertex(i)
        return self._out[i - 1]

    @property
    def in_matrix(self) -> np.ndarray:
        """K x K float matrix M with M[i-1, j-1] = 1 iff (j, i) is an edge.

        Lets the in-neighborhood mass of every vertex be computed at once
        as M @ p.
        """
        if self._in_matrix is None:
            m = np.zeros((self._k, self._k))
            for u, v in self._edges:
                m[v - 1, u - 1] = 1.0
            m.setflags(write=False)
            self._in_matrix = m
        return self._in_matrix

    @property
    def out_index(self) -> tuple:
        """Per vertex, the ascending array of observed actions (1-indexed)."""
        if self._out_index is None:
            idx = []
            for i in range(self._k):
                arr = np.array(sorted(_mask_to_vertices(self._out[i])), dtype=np.int64)
                arr.setflags(write=False)
                idx.append(arr)
            self._out_index = tuple(idx)
        return self._out_index

    @property
    def symmetric_masks(self) -> tuple:
        """Undirected adjacency: bit u-1 of entry v-1 set iff (u,v) or (v,u) is
        an edge and u != v. Self-loops are dropped; this is the graph whose
        independent sets match the directed definition."""
        if self._sym is None:
            sym = [0] * self._k
            for u, v in self._edges:
                if u != v:
                    sym[u - 1] |= 1 << (v - 1)
                    sym[v - 1] |= 1 << (u - 1)
            self._sym = tuple(sym)
        return self._sym

    def __eq__(self, other):
        if not isinstance(other, FeedbackGraph):
            return NotImplemented
        return self._k == other._k and self._edges == other._edges

    def __hash__(self):
        return hash((self._k, self._edges))

    def __repr__(self):
        return f"FeedbackGraph(K={self._k}, edges={len(self._edges)})"

    def __reduce__(self):
        return (FeedbackGraph, (self._k, tuple(sorted(self._edges))))


def _mask_to_vertices(mask: int) -> frozenset:
    out = []
    while mask:
        b = mask & -mask
        out.append(b.bit_length())
        mask ^= b
    return frozenset(out)


# ---------------------------------------------------------------------------
# observability classification


def classify_vertex(g: FeedbackGraph, i: int) -> VertexClass:
    """Tag a vertex: unobservable (no in-edges), strong (self-loop or in-edges
    from all other vertices), weak otherwise."""
    g._check_vertex(i)
    in_mask = g.in_mask(i)
    if in_mask == 0:
        return VertexClass.UNOBSERVABLE
    self_bit = 1 << (i - 1)
    others = ((1 << g.num_vertices) - 1) ^ self_bit
    if in_mask & self_bit or (in_mask & others) == others:
        return VertexClass.STRONG
    return VertexClass.WEAK


def weakly_observable_set(g: FeedbackGraph) -> frozenset:
    """The set W of weakly observable vertices (excludes unobservable ones)."""
    return frozenset(
        i for i in range(1, g.num_vertices + 1)
        if classify_vertex(g, i) is VertexClass.WEAK
    )


def classify_graph(g: FeedbackGraph) -> GraphClass:
    tags = [classify_vertex(g, i) for i in range(1, g.num_vertices + 1)]
    if any(t is VertexClass.UNOBSERVABLE for t in tags):
        return GraphClass.NOT_OBSERVABLE
    if all(t is VertexClass.STRONG for t in tags):
        return GraphClass.STRONGLY_OBSERVABLE
    return GraphClass.WEAKLY_OBSERVABLE


# ---------------------------------------------------------------------------
# independence number (exact branch and bound on the symmetrized graph)


def _clique_cover_bound(adj, cand: int) -> int:
    """Greedy clique partition of `cand`; its size bounds the independence
    number from above (an independent set meets each clique at most once)."""
    bound = 0
    rest = cand
    while rest:
        v = (rest & -rest).bit_length() - 1
        rest &= ~(1 << v)
        grow = rest & adj[v]
        while grow:
            u = (grow & -grow).bit_length() - 1
            rest &= ~(1 << u)
            grow &= adj[u]
        bound += 1
    return bound


def _mis_size(adj, cand: int, target=None) -> int:
    """Maximum independent set size within the vertex bitmask `cand`.

    With `target` set, the search stops as soon as an independent set of
    that size is found (the return value is then only a lower bound, but
    always >= target when one exists).
    """
    best = 0

    def visit(sub: int, size: int):
        nonlocal best
        if target is not None and best >= target:
            return
        # strip vertices isolated inside `sub`: always taken
        while sub:
            iso = 0
            scan = sub
            while scan:
                b = scan & -scan
                v = b.bit_length() - 1
                if adj[v] & sub == 0:
                    iso |= b
                scan ^= b
            if not iso:
                break
            size += bin(iso).count("1")
            sub &= ~iso
        if sub == 0:
            if size > best:
                best = size
            return
        if size + _clique_cover_bound(adj, sub) <= best:
            return
        # pivot on a maximum-degree vertex
        pivot, pivot_deg = -1, -1
        scan = sub
        while scan:
            b = scan & -scan
            v = b.bit_length() - 1
            d = bin(adj[v] & sub).count("1")
            if d > pivot_deg:
                pivot, pivot_deg = v, d
            scan ^= b
        visit(sub & ~adj[pivot] & ~(1 << pivot), size + 1)
        visit(sub & ~(1 << pivot), size)

    visit(cand, 0)
    return best


def independence_number(g: FeedbackGraph, exact_cap: int = ALPHA_EXACT_CAP):
    """Largest set of vertices with no directed edge between distinct members.

    Returns (alpha, witness) where the witness is the lexicographically
    smallest maximum independent set. Graphs beyond `exact_cap` vertices are
    rejected rather than solved approximately.
    """
    k = g.num_vertices
    if k > exact_cap:
        raise ValueError(f"K={k} exceeds the exact independence-solver cap {exact_cap}")
    adj = g.symmetric_masks
    full = (1 << k) - 1
    alpha = _mis_size(adj, full)
    chosen = []
    allowed = full
    for v in range(k):
        if not (allowed >> v) & 1:
            continue
        rest = allowed & ~adj[v] & ~((1 << (v + 1)) - 1)
        need = alpha - len(chosen) - 1
        if need <= _mis_size(adj, rest, target=need):
            chosen.append(v + 1)
            allowed = rest
            if len(chosen) == alpha:
                break
        else:
            allowed &= ~(1 << v)
    return alpha, frozenset(chosen)


# ---------------------------------------------------------------------------
# weak domination number


def weak_domination_number(g: FeedbackGraph, exact_cap: int = DELTA_EXACT_CAP):
    """Size of the smallest set whose out-neighborhoods cover all weakly
    observable vertices.

    Returns (delta, witness, exact). When W is empty the answer is 0 with an
    empty witness. Up to `exact_cap` vertices the subsets are enumerated by
    increasing size (so the witness is the lexicographically smallest
    optimum); beyond the cap a greedy set cover runs and `exact` is False.
    """
    w = weakly_observable_set(g)
    if not w:
        return 0, frozenset(), True
    k = g.num_vertices
    wmask = 0
    for v in w:
        wmask |= 1 << (v - 1)
    cover = [g.out_mask(v + 1) & wmask for v in range(k)]
    cand = [v for v in range(k) if cover[v]]
    union = 0
    for v in cand:
        union |= cover[v]
    if union != wmask:
        # cannot happen: every observable vertex has an in-neighbor
        raise RuntimeError("weakly observable vertex without a dominator")
    if k <= exact_cap:
        for size in range(1, len(cand) + 1):
            for combo in combinations(cand, size):
                m = 0
                for v in combo:
                    m |= cover[v]
                if m == wmask:
                    return size, frozenset(v + 1 for v in combo), True
        raise RuntimeError("unreachable: union of candidate covers equals W")
    remaining = wmask
    picked = []
    while remaining:
        best_v, best_gain = -1, 0
        for v in cand:
            gain = bin(cover[v] & remaining).count("1")
            if gain > best_gain:
                best_v, best_gain = v, gain
        picked.append(best_v + 1)
        remaining &= ~cover[best_v]
    return len(picked), frozenset(picked), False


# ---------------------------------------------------------------------------
# profiles and rate prediction


@dataclass(frozen=True)
class GraphProfile:
    """Observability class plus the combinatorial quantities that set the
    learning rate of the induced game."""

    graph_class: GraphClass
    num_vertices: int
    alpha: int
    alpha_witness: frozenset
    delta: int
    delta_witness: frozenset
    delta_exact: bool
    weak_set: frozenset


@lru_cache(maxsize=512)
def profile(g: FeedbackGraph) -> GraphProfile:
    cls = classify_graph(g)
    alpha, alpha_witness = independence_number(g)
    delta, delta_witness, exact = weak_domination_number(g)
    return GraphProfile(
        graph_class=cls,
        num_vertices=g.num_vertices,
        alpha=alpha,
        alpha_witness=alpha_witness,
        delta=delta,
        delta_witness=delta_witness,
        delta_exact=exact,
        weak_set=weakly_observable_set(g),
    )


@dataclass(frozen=True)
class RatePrediction:
    graph_class: GraphClass
    formula: str
    value: float


def predict_rate(prof: GraphProfile, horizon: int) -> RatePrediction:
    """Minimax regret growth implied by the observability class, up to
    constants and log factors."""
    if prof.num_vertices < 2:
        raise ValueError("rate prediction needs at least 2 actions")
    if horizon < 1:
        raise ValueError("horizon must be positive")
    t = float(horizon)
    if prof.graph_class is GraphClass.STRONGLY_OBSERVABLE:
        return RatePrediction(prof.graph_class, "sqrt(alpha*T)", math.sqrt(prof.alpha * t))
    if prof.graph_class is GraphClass.WEAKLY_OBSERVABLE:
        return RatePrediction(
            prof.graph_class, "delta^(1/3)*T^(2/3)", prof.delta ** (1 / 3) * t ** (2 / 3)
        )
    return RatePrediction(prof.graph_class, "T", t)


# ---------------------------------------------------------------------------
# catalog of named graphs

CATALOG_NAMES = (
    "full",
    "bandit",
    "loopless_clique",
    "apple_tasting",
    "revealing_action",
    "clique_minus",
    "loopy_star",
)


def catalog(name: str, num_vertices: int) -> FeedbackGraph:
    """Named feedback graphs generalized to K vertices.

    full             -- directed clique with all self-loops
    bandit           -- self-loops only
    loopless_clique  -- directed clique minus the self-loops
    apple_tasting    -- K=2 only: {(1,1), (1,2)}
    revealing_action -- vertex 1 observes everything, no one else observes anything
    clique_minus     -- full clique minus vertex 1's self-loop and the edge (2,1)
    loopy_star       -- revealing action plus all self-loops
    """
    k = int(num_vertices)
    if k < 1:
        raise ValueError("num_vertices must be >= 1")
    if name == "full":
        edges = [(u, v) for u in range(1, k + 1) for v in range(1, k + 1)]
    elif name == "bandit":
        edges = [(u, u) for u in range(1, k + 1)]
    elif name == "loopless_clique":
        if k < 2:
            raise ValueError("loopless_clique needs K >= 2")
        edges = [(u, v) for u in range(1, k + 1) for v in range(1, k + 1) if u != v]
    elif name == "apple_tasting":
        if k != 2:
            raise ValueError("apple_tasting is a K=2 graph")
        edges = [(1, 1), (1, 2)]
    elif name == "revealing_action":
        edges = [(1, v) for v in range(1, k + 1)]
    elif name == "clique_minus":
        if k < 3:
            raise ValueError("clique_minus needs K >= 3")
        edges = [
            (u, v)
            for u in range(1, k + 1)
            for v in range(1, k + 1)
            if (u, v) != (1, 1) and (u, v) != (2, 1)
        ]
    elif name == "loopy_star":
        edges = [(1, v) for v in range(1, k + 1)] + [(u, u) for u in range(1, k + 1)]
    else:
        raise ValueError(f"unknown catalog graph {name!r}; choose from {CATALOG_NAMES}")
    return FeedbackGraph(k, edges)


# ---------------------------------------------------------------------------
# weighted in-neighborhood ratio and its independence bound


def weight_ratio_sum(g: FeedbackGraph, weights, eps: float) -> float:
    """Sum over vertices of w_i / (w_i + total weight of the in-neighborhood).

    Preconditions: all weights positive and >= eps, their sum <= 1, and
    0 < eps < 1/2. A self-loop puts a vertex inside its own in-neighborhood,
    so its weight then appears twice in the denominator.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (g.num_vertices,):
        raise ValueError(f"expected {g.num_vertices} weights, got shape {w.shape}")
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    if np.any(w < eps):
        raise ValueError("every weight must be >= eps")
    if w.sum() > 1 + 1e-12:
        raise ValueError("weights must sum to at most 1")
    in_weight = g.in_matrix @ w
    return float(np.sum(w / (w + in_weight)))


def weight_ratio_bound(alpha: int, num_vertices: int, eps: float) -> float:
    """Companion bound 4 * alpha * ln(4K / (alpha * eps))."""
    return 4.0 * alpha * math.log(4.0 * num_vertices / (alpha * eps))


# ---------------------------------------------------------------------------
# text format


def parse_graph(text: str) -> FeedbackGraph:
    """Parse the graph text format.

    First non-comment line is K; every further non-comment line is `u v`
    (a directed edge, 1-indexed). `#` starts a comment, blank lines are
    ignored, duplicate edges are tolerated and deduplicated.
    """
    k = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if k is None:
            if len(parts) != 1:
                raise GraphFormatError("expected a single vertex count", lineno)
            try:
                k = int(parts[0])
            except ValueError:
                raise GraphFormatError(f"vertex count {parts[0]!r} is not an integer", lineno)
            if k < 1:
                raise GraphFormatError(f"vertex count must be >= 1, got {k}", lineno)
            continue
        if len(parts) != 2:
            raise GraphFormatError(f"expected an edge `u v`, got {line!r}", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"edge endpoints must be integers, got {line!r}", lineno)
        if not (1 <= u <= k and 1 <= v <= k):
            raise GraphFormatError(f"edge ({u}, {v}) out of range for K={k}", lineno)
        edges.append((u, v))
    if k is None:
        raise GraphFormatError("no vertex count found")
    return FeedbackGraph(k, edges)


def load_graph(path) -> FeedbackGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph(fh.read())


def format_graph(g: FeedbackGraph) -> str:
    lines = [str(g.num_vertices)]
    lines.extend(f"{u} {v}" for u, v in sorted(g.edges))
    return "\n".join(lines) + "\n"
