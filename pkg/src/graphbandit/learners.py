"""Exponential-weights learners: full-information Hedge and the graph-feedback
variant with importance-weighted loss estimates and explicit exploration.

Actions are the graph's vertices, 1-indexed; probability vectors are numpy
arrays whose entry i-1 belongs to action i.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .graph import FeedbackGraph, GraphClass, GraphProfile
from .graph import profile as graph_profile

MODE_FIXED = "fixed"
MODE_INFORMED = "informed"
MODE_UNINFORMED = "uninformed"
MODES = (MODE_FIXED, MODE_INFORMED, MODE_UNINFORMED)

BEFORE_ACTION = "before_action"
AFTER_ACTION = "after_action"


def exponential_weights(cumulative: np.ndarray, eta: float) -> np.ndarray:
    """Distribution proportional to exp(-eta * cumulative).

    Computed with a max shift in log space: the cumulative estimates can reach
    |U|/gamma per round, so the naive product underflows long before the
    distribution itself degenerates.
    """
    z = -eta * (cumulative - cumulative.min())
    w = np.exp(z)
    return w / w.sum()


def sample_index(dist: np.ndarray, rng) -> int:
    """Inverse-CDF draw using a single uniform; returns a 0-based index.

    Fixed vertex order plus one uniform per draw keeps action sequences
    reproducible across runs that share a generator state.
    """
    c = np.cumsum(dist)
    idx = int(np.searchsorted(c, rng.random(), side="right"))
    return min(idx, len(dist) - 1)


@dataclass(frozen=True, eq=False)
class FeedbackEvent:
    """What the player gets to see after one round.

    `observed_actions` holds the 1-indexed vertices whose losses were revealed
    (exactly the out-neighborhood of the chosen action in the round's graph),
    aligned with `observed_losses`. In the uninformed time-varying model the
    round's graph rides along in `graph`.
    """

    action: int
    observed_actions: np.ndarray
    observed_losses: np.ndarray
    graph: FeedbackGraph | None = None

    @property
    def observed_pairs(self) -> tuple:
        return tuple(zip(self.observed_actions.tolist(), self.observed_losses.tolist()))


def importance_weighted_estimates(
    g: FeedbackGraph, p: np.ndarray, observed_actions, observed_losses
) -> np.ndarray:
    """Loss estimates: observed losses divided by their observation
    probability P(i) = in-neighborhood mass under p; zero elsewhere.

    When the indicator is zero the estimate is zero with no division
    performed, so P(i)=0 off the observed set is fine. P(i)=0 on the observed
    set means the event is inconsistent with p and signals a harness bug.
    """
    idx = np.asarray(observed_actions, dtype=np.int64) - 1
    est = np.zeros(len(p))
    if len(idx) == 0:
        return est
    prob = g.in_matrix[idx] @ p
    if prob.min() <= 0.0:
        bad = int(idx[np.argmin(prob)]) + 1
        raise RuntimeError(
            f"observed action {bad} has zero observation probability; "
            "the feedback event is inconsistent with the play distribution"
        )
    est[idx] = np.asarray(observed_losses, dtype=float) / prob
    return est


class Hedge:
    """Full-information exponential weights over cumulative losses."""

    def __init__(self, num_actions: int, eta: float):
        if num_actions < 1:
            raise ValueError("need at least one action")
        if eta <= 0:
            raise ValueError("eta must be positive")
        self.num_actions = num_actions
        self.eta = eta
        self.cumulative = np.zeros(num_actions)
        self.round = 1

    @property
    def distribution(self) -> np.ndarray:
        return exponential_weights(self.cumulative, self.eta)

    def step(self, losses) -> np.ndarray:
        """Accumulate one round of losses and return the next distribution."""
        losses = np.asarray(losses, dtype=float)
        if losses.shape != (self.num_actions,):
            raise ValueError(f"expected {self.num_actions} losses, got {losses.shape}")
        if np.any(losses < 0):
            raise ValueError("losses must be nonnegative")
        self.cumulative = self.cumulative + losses
        self.round += 1
        return self.distribution

    def act(self, rng) -> int:
        return sample_index(self.distribution, rng) + 1

    def update(self, event: FeedbackEvent):
        """Harness adapter: requires full feedback (all K losses observed)."""
        if len(event.observed_actions) != self.num_actions:
            raise ValueError(
                "Hedge needs full feedback; got "
                f"{len(event.observed_actions)} of {self.num_actions} losses"
            )
        losses = np.empty(self.num_actions)
        losses[np.asarray(event.observed_actions) - 1] = event.observed_losses
        self.step(losses)


class SecondOrderBound(NamedTuple):
    lhs: float
    rhs: float


def hedge_second_order_bound(losses, eta: float, subsets=None, comparator=None) -> SecondOrderBound:
    """Run Hedge on a loss sequence and evaluate both sides of its refined
    second-order regret bound; the caller asserts lhs <= rhs.

    `losses` is a T x K array of nonnegative values. `subsets` gives, per
    round, the set of actions (1-indexed) granted the sharper q(1-q) variance
    factor; membership requires that round's loss to be at most 1/eta. With
    empty subsets the right-hand side is the standard second-order bound,
    which dominates any refined one pointwise. `comparator` is the fixed
    action on the left-hand side; by default the best action in hindsight.
    """
    losses = np.asarray(losses, dtype=float)
    if losses.ndim != 2:
        raise ValueError("losses must be a T x K array")
    horizon, num_actions = losses.shape
    if np.any(losses < 0):
        raise ValueError("losses must be nonnegative")
    if eta <= 0:
        raise ValueError("eta must be positive")
    if subsets is None:
        subsets = [()] * horizon
    if len(subsets) != horizon:
        raise ValueError("need one subset per round")

    masks = np.zeros((horizon, num_actions), dtype=bool)
    for t, subset in enumerate(subsets):
        for i in subset:
            if not 1 <= i <= num_actions:
                raise ValueError(f"subset member {i} out of range")
            if losses[t, i - 1] > 1.0 / eta + 1e-12:
                raise ValueError(
                    f"round {t + 1}: action {i} is in the subset but its loss "
                    f"{losses[t, i - 1]} exceeds 1/eta"
                )
            masks[t, i - 1] = True

    learner = Hedge(num_actions, eta)
    player = 0.0
    variance = 0.0
    for t in range(horizon):
        q = learner.distribution
        row = losses[t]
        player += float(q @ row)
        sq = q * row * row
        variance += float(np.where(masks[t], sq * (1.0 - q), sq).sum())
        learner.step(row)

    totals = losses.sum(axis=0)
    if comparator is None:
        comp_loss = float(totals.min())
    else:
        if not 1 <= comparator <= num_actions:
            raise ValueError(f"comparator {comparator} out of range")
        comp_loss = float(totals[comparator - 1])
    log_k = math.log(num_actions)
    return SecondOrderBound(player - comp_loss, log_k / eta + eta * variance)


# ---------------------------------------------------------------------------
# graph-feedback learner


class Exp3G:
    """Exponential weights driven by importance-weighted estimates built from
    graph feedback, mixed with uniform exploration over a set U.

    Modes: `fixed` plays one graph for the whole game; `informed` receives
    each round's graph before acting (and re-targets exploration at its
    smallest weakly dominating set); `uninformed` receives the graph only
    with the feedback, and explores uniformly over everything.
    """

    def __init__(
        self,
        num_actions: int,
        eta: float,
        gamma: float,
        exploration_set=None,
        graph: FeedbackGraph | None = None,
        mode: str = MODE_FIXED,
    ):
        if num_actions < 1:
            raise ValueError("need at least one action")
        if eta <= 0:
            raise ValueError("eta must be positive")
        if not 0.0 <= gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if mode == MODE_FIXED and graph is None:
            raise ValueError("fixed mode needs a graph")
        if graph is not None and graph.num_vertices != num_actions:
            raise ValueError("graph size does not match num_actions")
        self.num_actions = num_actions
        self.eta = eta
        self.gamma = gamma
        self.mode = mode
        self.graph = graph
        self.cumulative = np.zeros(num_actions)
        self.round = 1
        self._set_exploration(
            exploration_set if exploration_set is not None else range(1, num_actions + 1)
        )
        self._round_graph = graph if mode == MODE_FIXED else None
        self._p = None

    def _set_exploration(self, vertices):
        vertices = sorted(set(int(v) for v in vertices))
        if not vertices:
            raise ValueError("exploration set must be nonempty")
        if vertices[0] < 1 or vertices[-1] > self.num_actions:
            raise ValueError("exploration set out of range")
        self.exploration_set = tuple(vertices)
        u = np.zeros(self.num_actions)
        u[np.asarray(vertices) - 1] = 1.0 / len(vertices)
        self._u = u

    @property
    def q(self) -> np.ndarray:
        return exponential_weights(self.cumulative, self.eta)

    @property
    def p(self) -> np.ndarray:
        if self._p is None:
            self._p = (1.0 - self.gamma) * self.q + self.gamma * self._u
        return self._p

    def set_round_graph(self, g: FeedbackGraph, when: str):
        """Supply round t's graph: before acting in the informed model, after
        acting in the uninformed model (equivalently via the event)."""
        if g.num_vertices != self.num_actions:
            raise ValueError("graph size does not match num_actions")
        if when == BEFORE_ACTION:
            if self.mode != MODE_INFORMED:
                raise ValueError("before_action graphs only apply to informed mode")
            prof = graph_profile(g)
            if prof.graph_class is GraphClass.WEAKLY_OBSERVABLE:
                self._set_exploration(prof.delta_witness)
            else:
                self._set_exploration(range(1, self.num_actions + 1))
            self._round_graph = g
            self._p = None
        elif when == AFTER_ACTION:
            if self.mode != MODE_UNINFORMED:
                raise ValueError("after_action graphs only apply to uninformed mode")
            self._round_graph = g
        else:
            raise ValueError(f"unknown timing {when!r}")

    def act(self, rng) -> int:
        """Draw an action from p. Repeated calls within a round resample the
        same distribution."""
        if self.mode == MODE_INFORMED and self._round_graph is None:
            raise RuntimeError("informed mode needs set_round_graph before acting")
        return sample_index(self.p, rng) + 1

    def update(self, event: FeedbackEvent):
        g = event.graph if event.graph is not None else self._round_graph
        if g is None:
            raise RuntimeError("no graph available for the update")
        if self._p is None:
            raise RuntimeError("update before any action was drawn")
        expected = g.out_index[event.action - 1]
        got = np.asarray(event.observed_actions, dtype=np.int64)
        if not np.array_equal(got, expected):
            raise ValueError(
                "observed set does not match the out-neighborhood of "
                f"action {event.action}"
            )
        losses = np.asarray(event.observed_losses, dtype=float)
        if len(losses) and (losses.min() < -1e-12 or losses.max() > 1 + 1e-12):
            raise ValueError("observed losses must lie in [0, 1]")
        est = importance_weighted_estimates(g, self.p, got, losses)
        self.cumulative = self.cumulative + est
        self.round += 1
        self._p = None
        if self.mode != MODE_FIXED:
            self._round_graph = None


class UniformRandom:
    """Plays uniformly at random and ignores all feedback."""

    def __init__(self, num_actions: int):
        self.num_actions = num_actions
        self._dist = np.full(num_actions, 1.0 / num_actions)

    def act(self, rng) -> int:
        return sample_index(self._dist, rng) + 1

    def update(self, event: FeedbackEvent):
        pass


class ConstantAction:
    """Always plays the same action."""

    def __init__(self, num_actions: int, action: int = 1):
        if not 1 <= action <= num_actions:
            raise ValueError("action out of range")
        self.num_actions = num_actions
        self.action = action

    def act(self, rng) -> int:
        return self.action

    def update(self, event: FeedbackEvent):
        pass


# ---------------------------------------------------------------------------
# parameter presets


@dataclass(frozen=True)
class Preset:
    exploration_set: tuple
    gamma: float
    eta: float


def preset_strong(prof: GraphProfile, horizon: int) -> Preset:
    """Strongly observable graphs: explore everywhere, gamma ~ (alpha*T)^(-1/2)."""
    if prof.graph_class is not GraphClass.STRONGLY_OBSERVABLE:
        raise ValueError("strong preset needs a strongly observable graph")
    if prof.num_vertices < 2:
        raise ValueError("strong preset needs K >= 2")
    gamma = min(math.sqrt(1.0 / (prof.alpha * horizon)), 0.5)
    return Preset(tuple(range(1, prof.num_vertices + 1)), gamma, 2.0 * gamma)


def preset_weak(prof: GraphProfile, horizon: int) -> Preset:
    """Weakly observable graphs: explore the weakly dominating set,
    gamma ~ (delta*lnK/T)^(1/3). Warns when the horizon is below the regime
    where the regret guarantee holds, but still returns the parameters."""
    if prof.graph_class is not GraphClass.WEAKLY_OBSERVABLE:
        raise ValueError("weak preset needs a weakly observable graph")
    k, delta = prof.num_vertices, prof.delta
    if horizon < k**3 * math.log(k) / delta**2:
        warnings.warn(
            f"horizon {horizon} is below K^3*ln(K)/delta^2 = "
            f"{k**3 * math.log(k) / delta**2:.0f}; the T^(2/3) guarantee "
            "does not cover this regime",
            RuntimeWarning,
            stacklevel=2,
        )
    gamma = min((delta * math.log(k) / horizon) ** (1.0 / 3.0), 0.5)
    return Preset(tuple(sorted(prof.delta_witness)), gamma, gamma**2 / delta)


def preset_loopless_clique(num_actions: int, horizon: int) -> Preset:
    """Sharper tuning for the clique without self-loops: eta = sqrt(lnK/(2T))."""
    if num_actions < 2:
        raise ValueError("loopless clique preset needs K >= 2")
    eta = math.sqrt(math.log(num_actions) / (2.0 * horizon))
    return Preset(tuple(range(1, num_actions + 1)), 2.0 * eta, eta)


def preset_uninformed(num_actions: int, horizon: int) -> Preset:
    """Uninformed time-varying play: explore everything; the weak-graph tuning
    with the dominating-set size replaced by K, matching its K^(1/3)T^(2/3)
    guarantee."""
    if num_actions < 2:
        raise ValueError("uninformed preset needs K >= 2")
    gamma = min((num_actions * math.log(num_actions) / horizon) ** (1.0 / 3.0), 0.5)
    return Preset(tuple(range(1, num_actions + 1)), gamma, gamma**2 / num_actions)
