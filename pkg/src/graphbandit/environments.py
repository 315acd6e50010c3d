"""Loss-sequence generators: replayed tables, Bernoulli baselines, and the
adversarial constructions that force each observability class's regret rate.

Environments are oblivious: the full loss table (and, for time-varying play,
the graph sequence) is a function of (seed, parameters) alone, fixed at
construction, never of the player's actions. All losses lie in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import FeedbackGraph, weak_domination_number, weakly_observable_set

ENV_KINDS = ("table", "bernoulli", "thm4", "thm5", "thm8", "thm7")


def _seed_seq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


@dataclass(frozen=True, eq=False)
class Environment:
    """An oblivious loss source: a realized T x K table plus, for
    time-varying play, the per-round feedback graphs."""

    kind: str
    num_actions: int
    horizon: int
    losses: np.ndarray
    means: np.ndarray | None = None
    graphs: tuple = ()
    graph_index: np.ndarray | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.losses.shape != (self.horizon, self.num_actions):
            raise ValueError(
                f"loss table shape {self.losses.shape} does not match "
                f"(T={self.horizon}, K={self.num_actions})"
            )
        if np.any(self.losses < 0) or np.any(self.losses > 1):
            raise ValueError("losses must lie in [0, 1]")
        self.losses.setflags(write=False)

    @property
    def time_varying(self) -> bool:
        return len(self.graphs) > 0

    def graph_at(self, t: int) -> FeedbackGraph:
        """Round t's feedback graph (t is 0-based)."""
        if not self.graphs:
            raise ValueError("environment has no graph sequence")
        return self.graphs[int(self.graph_index[t])]

    def loss_row(self, t: int) -> np.ndarray:
        return self.losses[t]


def table_env(table) -> Environment:
    """Replay a fixed T x K loss table verbatim."""
    arr = np.array(table, dtype=float)
    if arr.ndim != 2:
        raise ValueError("loss table must be two-dimensional")
    horizon, num_actions = arr.shape
    return Environment("table", num_actions, horizon, arr)


def bernoulli_env(mu, horizon: int, seed) -> Environment:
    """Independent Bernoulli losses with per-arm means mu."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0) or np.any(mu > 1):
        raise ValueError("means must lie in [0, 1]")
    rng = np.random.default_rng(_seed_seq(seed))
    table = (rng.random((horizon, len(mu))) < mu[None, :]).astype(float)
    return Environment(
        "bernoulli", len(mu), horizon, table, means=mu.copy(), params={"mu": tuple(mu)}
    )


def hidden_arm_env(chi: int, horizon: int, num_actions: int) -> Environment:
    """Deterministic losses that pin arm 1 at chi and every other arm at 1/2.

    Meant for graphs where vertex 1 has no incoming edges: the player can
    never learn chi, and averaging over chi in {0, 1} makes any strategy's
    expected regret exactly T/4.
    """
    if chi not in (0, 1):
        raise ValueError("chi must be 0 or 1")
    if num_actions < 2:
        raise ValueError("need at least 2 actions")
    means = np.full(num_actions, 0.5)
    means[0] = float(chi)
    table = np.tile(means, (horizon, 1))
    return Environment(
        "thm4", num_actions, horizon, table, means=means, params={"chi": chi}
    )


def simple_weak_env(
    horizon: int, num_actions: int, chi: int, seed, eps: float | None = None
) -> Environment:
    """Two nearly indistinguishable good arms, everything else maximally bad.

    Arm 1's mean is 1/2 - eps*chi, arm 2's is 1/2, all other means are 1;
    eps defaults to T^(-1/3)/2 (capped at 1/4 so the means stay inside
    [1/4, 3/4]). Intended for graphs where arm 1 is weakly observable and
    not observable from arm 2, so telling the good arms apart costs plays
    of bad arms.
    """
    if num_actions < 3:
        raise ValueError("construction needs K >= 3")
    if chi not in (-1, 1):
        raise ValueError("chi must be -1 or +1")
    if eps is None:
        eps = 0.5 * horizon ** (-1.0 / 3.0)
    eps = min(float(eps), 0.25)
    if eps <= 0:
        raise ValueError("eps must be positive")
    means = np.ones(num_actions)
    means[0] = 0.5 - eps * chi
    means[1] = 0.5
    rng = np.random.default_rng(_seed_seq(seed))
    table = (rng.random((horizon, num_actions)) < means[None, :]).astype(float)
    return Environment(
        "thm8", num_actions, horizon, table, means=means,
        params={"chi": chi, "eps": eps},
    )


def weak_lower_env(
    g: FeedbackGraph, horizon: int, seed, chi: int | None = None,
    eps: float | None = None,
) -> Environment:
    """Plant a hard bandit instance on an exploration-resistant independent
    subset U of the weakly observable vertices.

    The best arm chi (uniform over U unless given) has mean 1/2 - eps, the
    rest of U sits at 1/2, and everything outside U at 1; eps defaults to
    (|U| / (32 T ln K))^(1/3), capped at 1/4. Falls back to the two-arm
    construction when U has fewer than two vertices.
    """
    ss = _seed_seq(seed)
    set_ss, draw_ss = ss.spawn(2)
    result = domination_capped_independent_set(g, seed=set_ss)
    support = sorted(result.vertices)
    if len(support) < 2:
        return simple_weak_env(
            horizon, g.num_vertices, chi if chi in (-1, 1) else 1, draw_ss, eps=eps
        )
    rng = np.random.default_rng(draw_ss)
    if chi is None:
        chi = support[rng.integers(len(support))]
    if chi not in support:
        raise ValueError(f"chi must be one of the support vertices {support}")
    m = len(support)
    k = g.num_vertices
    if eps is None:
        eps = m ** (1.0 / 3.0) * (32.0 * horizon * math.log(k)) ** (-1.0 / 3.0)
    eps = min(float(eps), 0.25)
    if eps <= 0:
        raise ValueError("eps must be positive")
    means = np.ones(k)
    means[np.asarray(support) - 1] = 0.5
    means[chi - 1] = 0.5 - eps
    table = (rng.random((horizon, k)) < means[None, :]).astype(float)
    return Environment(
        "thm5", k, horizon, table, means=means,
        params={"chi": chi, "eps": eps, "support": tuple(support)},
    )


def uninformed_separation_env(
    num_actions: int, horizon: int, seed, chi: int | None = None,
    eps: float | None = None,
) -> Environment:
    """Time-varying graphs that hide arm 1 behind a shifting revealer.

    Round t's graph is the complete graph with all self-loops, minus every
    edge into vertex 1 except one from J_t drawn uniformly from {3..K}; each
    round's graph has independence and weak domination numbers both 1.
    Losses follow the two-good-arms construction with
    eps = (K/T)^(1/3) / 4, so observing arm 1 requires guessing J_t.
    """
    if num_actions < 4:
        raise ValueError("construction needs K >= 4")
    rng = np.random.default_rng(_seed_seq(seed))
    if chi is None:
        chi = 1 if rng.random() < 0.5 else -1
    if chi not in (-1, 1):
        raise ValueError("chi must be -1 or +1")
    if eps is None:
        eps = 0.25 * (num_actions / horizon) ** (1.0 / 3.0)
    eps = min(float(eps), 0.25)
    if eps <= 0:
        raise ValueError("eps must be positive")
    revealers = rng.integers(3, num_actions + 1, size=horizon)
    means = np.ones(num_actions)
    means[0] = 0.5 - eps * chi
    means[1] = 0.5
    table = (rng.random((horizon, num_actions)) < means[None, :]).astype(float)
    graphs = tuple(
        _one_revealer_graph(num_actions, j) for j in range(3, num_actions + 1)
    )
    graph_index = (revealers - 3).astype(np.int64)
    return Environment(
        "thm7", num_actions, horizon, table, means=means,
        graphs=graphs, graph_index=graph_index,
        params={"chi": chi, "eps": eps},
    )


def _one_revealer_graph(k: int, revealer: int) -> FeedbackGraph:
    edges = [
        (u, v)
        for u in range(1, k + 1)
        for v in range(1, k + 1)
        if v != 1 or u == revealer
    ]
    return FeedbackGraph(k, edges)


# ---------------------------------------------------------------------------
# exploration-resistant independent subsets of the weakly observable part


@dataclass(frozen=True)
class CappedIndependentSet:
    """Independent subset of the weakly observable vertices such that no
    vertex's out-neighborhood covers more than `cap` of its members."""

    vertices: frozenset
    cap: int
    meets_size_bound: bool
    used_fallback: bool


def domination_capped_independent_set(
    g: FeedbackGraph, seed=0, max_attempts: int = 64
) -> CappedIndependentSet:
    """Find an independent set U inside the weakly observable vertices with
    every vertex of the graph dominating at most ceil(ln K) members of U.

    When the minimal dominating set of W is large (k >= 50 ln n) the
    probabilistic construction runs: shrink W to a set R that no vertex
    dominates more than a beta = 2 ln(n)/k fraction of, sample
    m = floor(1/(10 beta)) elements of R with replacement, verify the sample
    is large, domination-capped, and sparse, then extract an independent set
    greedily. The target size floor(k / (50 ln n)) holds with positive
    probability per attempt; after `max_attempts` failures a greedy pass
    returns a set that honors the domination cap but is flagged as missing
    the size bound. For small k the target degenerates to 1 and the greedy
    pass is used directly.
    """
    w = weakly_observable_set(g)
    if not w:
        raise ValueError("graph has no weakly observable vertices")
    n = g.num_vertices
    log_n = math.log(n)
    cap = max(1, math.ceil(log_n))
    k = weak_domination_number(g)[0]
    target = max(1, math.floor(k / (50.0 * log_n))) if log_n > 0 else 1

    if k >= 50.0 * log_n:
        rng = np.random.default_rng(_seed_seq(seed))
        beta = 2.0 * log_n / k
        r = _beta_shrink(g, w, beta)
        m = math.floor(1.0 / (10.0 * beta))
        r_list = sorted(r)
        for _ in range(max_attempts):
            if m < 1 or not r_list:
                break
            sample = sorted(set(rng.choice(r_list, size=m, replace=True).tolist()))
            if len(sample) * 10 < m:
                continue
            if any(_dominated_count(g, v, sample) > log_n for v in range(1, n + 1)):
                continue
            induced = sum(_dominated_count(g, v, sample) for v in sample)
            if induced * 2 > len(sample):
                continue
            independent = _greedy_independent(g, sample)
            if len(independent) >= target and _cap_ok(g, independent, cap):
                return CappedIndependentSet(
                    frozenset(independent), cap, True, False
                )
        fallback = _greedy_capped(g, sorted(w), cap)
        return CappedIndependentSet(
            frozenset(fallback), cap, len(fallback) >= target, True
        )

    chosen = _greedy_capped(g, sorted(w), cap)
    return CappedIndependentSet(frozenset(chosen), cap, len(chosen) >= target, False)


def _beta_shrink(g: FeedbackGraph, w, beta: float):
    """Shrink W until no vertex dominates more than a beta fraction of it."""
    r = set(w)
    while r:
        offender = None
        for v in range(1, g.num_vertices + 1):
            hit = g.out_neighbors(v) & r
            if len(hit) > beta * len(r):
                offender = hit
                break
        if offender is None:
            return r
        r -= offender
    return r


def _dominated_count(g: FeedbackGraph, v: int, members) -> int:
    out = g.out_neighbors(v)
    return sum(1 for u in members if u in out)


def _cap_ok(g: FeedbackGraph, members, cap: int) -> bool:
    return all(
        _dominated_count(g, v, members) <= cap for v in range(1, g.num_vertices + 1)
    )


def _greedy_independent(g: FeedbackGraph, vertices):
    """Greedy independent subset: scan by ascending degree inside the sample."""
    pool = list(vertices)

    def degree(v):
        out = _dominated_count(g, v, pool)
        inc = sum(1 for u in pool if v in g.out_neighbors(u))
        return out + inc

    pool.sort(key=lambda v: (degree(v), v))
    chosen = []
    for v in pool:
        if all(not g.has_edge(v, u) and not g.has_edge(u, v) for u in chosen):
            chosen.append(v)
    return chosen


def _greedy_capped(g: FeedbackGraph, candidates, cap: int):
    """Greedy pass keeping independence and the per-vertex domination cap."""
    chosen = []
    counts = [0] * (g.num_vertices + 1)
    for v in candidates:
        if any(g.has_edge(v, u) or g.has_edge(u, v) for u in chosen):
            continue
        dominators = [d for d in range(1, g.num_vertices + 1) if v in g.out_neighbors(d)]
        if any(counts[d] + 1 > cap for d in dominators):
            continue
        chosen.append(v)
        for d in dominators:
            counts[d] += 1
    return chosen


# ---------------------------------------------------------------------------
# adversarial-style loss tables


def adversarial_tables(num_actions: int, horizon: int, count: int = 20, seed: int = 0):
    """Named deterministic and seeded loss tables that stress exponential
    weights: constants, alternation, single good arms, a mid-game switch,
    drifting phases, and random Bernoulli fills.

    Returns `count` (name, table) pairs; tables are T x K with entries in
    [0, 1] and are a pure function of (num_actions, horizon, count, seed).
    """
    k, t = num_actions, horizon
    rng = np.random.default_rng(_seed_seq(seed))
    rounds = np.arange(t)
    named = []
    named.append(("const_half", np.full((t, k), 0.5)))
    ramp = np.broadcast_to(np.linspace(0.0, 1.0, k)[None, :], (t, k)).copy()
    named.append(("const_ramp", ramp))
    named.append(("alt_all", np.repeat((rounds % 2).astype(float)[:, None], k, axis=1)))
    named.append(("alt_phase", ((rounds[:, None] + np.arange(k)[None, :]) % 2).astype(float)))
    good_first = np.ones((t, k)); good_first[:, 0] = 0.0
    named.append(("single_good_first", good_first))
    good_last = np.ones((t, k)); good_last[:, -1] = 0.0
    named.append(("single_good_last", good_last))
    switch = np.ones((t, k))
    switch[: t // 2, 0] = 0.0
    switch[t // 2:, min(1, k - 1)] = 0.0
    named.append(("switch_half", switch))
    phases = 2.0 * np.pi * np.arange(k) / k
    wave = 0.5 * (1.0 + np.sin(2.0 * np.pi * rounds[:, None] / 64.0 + phases[None, :]))
    named.append(("sine_drift", wave))
    while len(named) < count:
        means = rng.uniform(0.0, 1.0, size=k)
        table = (rng.random((t, k)) < means[None, :]).astype(float)
        named.append((f"bernoulli_{len(named)}", table))
    return named[:count]


# ---------------------------------------------------------------------------
# loss-table serialization


def save_loss_table(path, table: np.ndarray):
    """Write a T x K loss table as comma-separated rows."""
    np.savetxt(path, np.asarray(table, dtype=float), delimiter=",", fmt="%.17g")


def load_loss_table(path) -> np.ndarray:
    table = np.loadtxt(path, delimiter=",", ndmin=2)
    if np.any(table < 0) or np.any(table > 1):
        raise ValueError("loss table entries must lie in [0, 1]")
    return table


# ---------------------------------------------------------------------------
# uniform construction from a spec (used by the harness and the CLI)


@dataclass(frozen=True)
class EnvSpec:
    """Which environment to build, minus the seed and horizon."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ENV_KINDS:
            raise ValueError(f"unknown environment kind {self.kind!r}; choose from {ENV_KINDS}")


def build_environment(
    spec: EnvSpec, horizon: int, seed, num_actions: int | None = None,
    graph: FeedbackGraph | None = None, chi=None,
) -> Environment:
    """Instantiate an EnvSpec. `chi` overrides the spec's own chi parameter,
    which is how matched-seed chi pairs are produced."""
    params = dict(spec.params)
    if chi is not None:
        params["chi"] = chi
    if num_actions is None and graph is not None:
        num_actions = graph.num_vertices
    if spec.kind == "table":
        table = params.get("table")
        if table is None:
            path = params.get("path")
            if path is None:
                raise ValueError("table environment needs `table` or `path`")
            table = load_loss_table(path)
        env = table_env(table)
        if env.horizon != horizon:
            raise ValueError(f"table has {env.horizon} rows but horizon is {horizon}")
        return env
    if spec.kind == "bernoulli":
        mu = params.get("mu")
        if mu is None:
            raise ValueError("bernoulli environment needs `mu`")
        return bernoulli_env(mu, horizon, seed)
    if spec.kind == "thm4":
        if num_actions is None:
            raise ValueError("thm4 environment needs the action count")
        return hidden_arm_env(int(params.get("chi", 1)), horizon, num_actions)
    if spec.kind == "thm8":
        if num_actions is None:
            raise ValueError("thm8 environment needs the action count")
        return simple_weak_env(
            horizon, num_actions, int(params.get("chi", 1)), seed,
            eps=params.get("eps"),
        )
    if spec.kind == "thm5":
        if graph is None:
            raise ValueError("thm5 environment needs the feedback graph")
        return weak_lower_env(
            graph, horizon, seed, chi=params.get("chi"), eps=params.get("eps")
        )
    if spec.kind == "thm7":
        if num_actions is None:
            raise ValueError("thm7 environment needs the action count")
        return uninformed_separation_env(
            num_actions, horizon, seed, chi=params.get("chi"), eps=params.get("eps")
        )
    raise AssertionError(f"unhandled kind {spec.kind}")
