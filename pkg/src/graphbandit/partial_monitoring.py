"""Encode a feedback graph with binary losses as a loss/feedback matrix pair
and check the matrix-game observability conditions on it.

The environment's actions are all 2^K binary loss assignments, one per
column, enumerated lexicographically by vertex index (vertex 1 is the most
significant bit). The feedback matrix H gives row i the same symbol in two
columns exactly when the losses visible from vertex i agree between them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ENCODE_CAP = 12  # 2^K columns; refuse anything bigger
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class PMInstance:
    """Loss matrix L (K x 2^K over {0,1}), symbol matrix H (dense integers
    per row), and the per-vertex signal matrices S_i with
    S_i[s, y] = 1 iff H[i, y] = s. Keeps the source graph for edge checks."""

    graph: object
    num_actions: int
    loss_matrix: np.ndarray
    symbol_matrix: np.ndarray
    signal_matrices: tuple

    @property
    def num_columns(self) -> int:
        return self.loss_matrix.shape[1]


def encode(g) -> PMInstance:
    """Build the matrix-game pair for a feedback graph with binary losses."""
    k = g.num_vertices
    if k > ENCODE_CAP:
        raise ValueError(f"K={k} exceeds the encoding cap {ENCODE_CAP}")
    m = 1 << k
    columns = np.arange(m)
    # L[i, y]: bit of vertex i+1 in assignment y, vertex 1 most significant
    shifts = (k - 1) - np.arange(k)
    loss = ((columns[None, :] >> shifts[:, None]) & 1).astype(np.int64)

    symbols = np.zeros((k, m), dtype=np.int64)
    signals = []
    for i in range(k):
        out_idx = g.out_index[i] - 1
        seen = {}
        for y in range(m):
            signature = loss[out_idx, y].tobytes()
            symbol = seen.get(signature)
            if symbol is None:
                symbol = len(seen)
                seen[signature] = symbol
            symbols[i, y] = symbol
        s_i = np.zeros((len(seen), m), dtype=np.int64)
        s_i[symbols[i], columns] = 1
        s_i.setflags(write=False)
        signals.append(s_i)
    loss.setflags(write=False)
    symbols.setflags(write=False)
    return PMInstance(g, k, loss, symbols, tuple(signals))


def claim_c1_check(instance: PMInstance, i: int, j: int) -> bool:
    """For an edge (i, j): the symbols of vertex i's row that appear in the
    columns where j's loss is 1 must sum, as signal-matrix rows, to exactly
    j's loss row."""
    if not instance.graph.has_edge(i, j):
        raise ValueError(f"({i}, {j}) is not an edge")
    s_i = instance.signal_matrices[i - 1]
    loss_j = instance.loss_matrix[j - 1]
    chosen = np.unique(instance.symbol_matrix[i - 1][loss_j == 1])
    total = s_i[chosen].sum(axis=0)
    return bool(np.array_equal(total, loss_j))


def _in_row_space(stacked: np.ndarray, target: np.ndarray, tol: float) -> bool:
    """Least-squares membership test: target lies in the span of the stacked
    rows iff the residual is negligible. All data are small integers, so the
    conditioning is benign."""
    a = stacked.T.astype(float)
    b = target.astype(float)
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    return float(np.linalg.norm(a @ x - b)) < tol


def check_global_observability(instance: PMInstance, tol: float = RESIDUAL_TOL) -> bool:
    """Every pairwise loss difference must lie in the combined row space of
    all signal matrices."""
    stacked = np.vstack(instance.signal_matrices)
    loss = instance.loss_matrix
    for i in range(instance.num_actions):
        for j in range(i + 1, instance.num_actions):
            if not _in_row_space(stacked, loss[i] - loss[j], tol):
                return False
    return True


def check_local_observability(instance: PMInstance, tol: float = RESIDUAL_TOL) -> bool:
    """Every pairwise loss difference must lie in the row space spanned by
    that pair's own signal matrices."""
    loss = instance.loss_matrix
    for i in range(instance.num_actions):
        for j in range(i + 1, instance.num_actions):
            stacked = np.vstack(
                (instance.signal_matrices[i], instance.signal_matrices[j])
            )
            if not _in_row_space(stacked, loss[i] - loss[j], tol):
                return False
    return True


def signature_families(instance: PMInstance) -> tuple:
    """Per vertex, the partition of columns induced by its symbols; two
    graphs encode identically exactly when these partitions coincide."""
    families = []
    for i in range(instance.num_actions):
        groups = {}
        for y, s in enumerate(instance.symbol_matrix[i]):
            groups.setdefault(int(s), []).append(y)
        families.append(frozenset(frozenset(v) for v in groups.values()))
    return tuple(families)
