"""
Least-squares regression trees with axis-parallel splits.

Trees are stored as flat node arrays. Node 0 is the root. An internal node has
a feature, a threshold and two children; a point goes left iff
`x[feature] <= threshold`. A leaf has a leaf id, the weight boosting gives it
and the mean of the targets it was fit on.
"""
from __future__ import annotations

import logging

import attrs
import numpy as np

from .extensions import error_handler as error

log = logging.getLogger(__name__)

LEAF = -1
"""Marker stored in `feature`, `left` and `right` for leaf nodes."""

RELATIVE_GAIN_TOLERANCE = 1e-12
"""Reductions below this share of the node's SSE count as zero."""

TIE_TOLERANCE = 1e-9
"""Split gains within this relative distance of the best one are ties."""


def _index_array(value, name: str) -> np.ndarray:
    array = np.asarray(value)
    if array.dtype.kind not in "iu":
        as_float = np.asarray(array, dtype=np.float64)
        if not (np.isfinite(as_float).all() and (as_float == np.round(as_float)).all()):
            raise error.ModelFormatError(f"Tree {name} indices must be integers.")
    return array.astype(np.intp)


@attrs.define(frozen=True)
class SplitCandidate:
    """
    A candidate split of a node.

    Attributes:
        feature (int): 0-based column index.
        threshold (float): Points with x[feature] <= threshold go left.
        sse_reduction (float): SSE(parent) - SSE(left) - SSE(right), >= 0.
        left_count (int): Points sent left.
        right_count (int): Points sent right.
    """

    feature: int
    threshold: float
    sse_reduction: float
    left_count: int
    right_count: int


def presort(features: np.ndarray) -> np.ndarray:
    """
    Per-feature sort orders of the rows, shape (d, n).

    Computed once per training run: the targets change every iteration, the
    geometry does not.
    """
    return np.argsort(features, axis=0, kind="stable").T.copy()


def best_split(
    row_indices: np.ndarray,
    features: np.ndarray,
    targets: np.ndarray,
    min_leaf: int = 1,
    order: np.ndarray | None = None,
) -> SplitCandidate | None:
    """
    Find the split of the given rows that reduces the squared error the most.

    Every feature is scanned at every midpoint between consecutive distinct
    sorted values. Ties go to the smallest feature index, then to the smallest
    threshold.

    Args:
        row_indices (np.ndarray): The rows in the node.
        features (np.ndarray): The full n×d feature matrix.
        targets (np.ndarray): The full length-n target vector.
        min_leaf (int): Minimum number of points on each side.
        order (np.ndarray | None): Output of `presort(features)`, computed here
            when not given.

    Returns:
        SplitCandidate | None: The best split, or None when no split reduces
        the error (constant targets, no distinct values, or min_leaf).
    """
    row_indices = np.asarray(row_indices, dtype=np.intp)
    m = row_indices.shape[0]
    if m < 2 * min_leaf or m < 2:
        return None

    node_targets = targets[row_indices]
    if np.ptp(node_targets) == 0:
        return None

    if order is None:
        order = presort(features)

    d = features.shape[1]
    in_node = np.zeros(features.shape[0], dtype=bool)
    in_node[row_indices] = True
    sorted_rows = order[in_node[order]].reshape(d, m)

    values = features[sorted_rows, np.arange(d)[:, None]]
    centred = targets - np.mean(node_targets)
    cumulative = np.cumsum(centred[sorted_rows], axis=1)[:, :-1]

    left_counts = np.arange(1, m)
    right_counts = m - left_counts
    # SSE reduction n_L n_R / n (mean_L - mean_R)^2, with centred sums S_L = -S_R.
    gains = cumulative**2 * m / (left_counts * right_counts)

    valid = (values[:, 1:] > values[:, :-1])
    valid &= (left_counts >= min_leaf) & (right_counts >= min_leaf)
    gains = np.where(valid, gains, -np.inf)

    parent_sse = float(np.sum(centred[row_indices] ** 2))
    floor = RELATIVE_GAIN_TOLERANCE * parent_sse

    best_gain = float(gains.max())
    if not best_gain > floor:
        return None

    # Gains equal up to rounding are ties: smallest feature, then smallest threshold.
    near = gains >= best_gain * (1 - TIE_TOLERANCE)
    best_feature = int(np.flatnonzero(near.any(axis=1))[0])
    i = int(np.argmax(near[best_feature]))

    low = float(values[best_feature, i])
    high = float(values[best_feature, i + 1])
    threshold = (low + high) / 2
    if threshold >= high:
        # Adjacent doubles: the midpoint rounds up to the upper value.
        threshold = low

    return SplitCandidate(
        feature=best_feature,
        threshold=threshold,
        sse_reduction=float(gains[best_feature, i]),
        left_count=i + 1,
        right_count=m - i - 1,
    )


class Tree:
    """
    A binary regression tree with axis-parallel splits.

    Args:
        feature (np.ndarray): Split feature per node, `LEAF` for leaves.
        threshold (np.ndarray): Split threshold per node (0 for leaves).
        left (np.ndarray): Left child per node, `LEAF` for leaves.
        right (np.ndarray): Right child per node, `LEAF` for leaves.
        leaf_id (np.ndarray): Leaf id per node, `LEAF` for internal nodes.
        weights (np.ndarray): Weight per leaf id.
        mean_targets (np.ndarray): Mean fitted target per leaf id.

    Raises:
        error.ModelFormatError: If the arrays do not describe a valid tree.
    """

    def __init__(
        self,
        feature: np.ndarray,
        threshold: np.ndarray,
        left: np.ndarray,
        right: np.ndarray,
        leaf_id: np.ndarray,
        weights: np.ndarray,
        mean_targets: np.ndarray,
    ) -> None:
        self.feature = _index_array(feature, "feature")
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = _index_array(left, "left")
        self.right = _index_array(right, "right")
        self.leaf_id = _index_array(leaf_id, "leaf_id")
        self.weights = np.asarray(weights, dtype=np.float64)
        self.mean_targets = np.asarray(mean_targets, dtype=np.float64)
        self.check_valid()

    @property
    def node_count(self) -> int:
        return self.feature.shape[0]

    @property
    def leaf_count(self) -> int:
        return self.weights.shape[0]

    @property
    def min_features(self) -> int:
        """How many feature columns a row needs for this tree to route it."""
        return int(self.feature.max()) + 1

    @property
    def depth(self) -> int:
        """Number of edges on the longest root-to-leaf path."""
        depth = np.zeros(self.node_count, dtype=np.intp)
        for node in range(self.node_count):
            if self.feature[node] != LEAF:
                depth[self.left[node]] = depth[node] + 1
                depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def check_valid(self) -> None:
        """
        Check the node arrays describe one binary tree rooted at node 0.

        Children always come after their parent in the flat array, which rules
        out cycles.
        """
        count = self.feature.shape[0]
        arrays = (self.threshold, self.left, self.right, self.leaf_id)
        if count == 0 or any(a.shape != (count,) for a in arrays):
            raise error.ModelFormatError("Tree node arrays are empty or of unequal length.")

        internal = self.feature != LEAF
        leaves = int(np.count_nonzero(~internal))
        if leaves != count - leaves + 1:
            raise error.ModelFormatError(
                f"A tree with {count - leaves} internal nodes must have {count - leaves + 1} leaves."
            )
        if self.weights.shape != (leaves,) or self.mean_targets.shape != (leaves,):
            raise error.ModelFormatError(f"Expected {leaves} leaf weights and means.")

        referenced = np.zeros(count, dtype=np.intp)
        for node in np.flatnonzero(internal):
            for child in (self.left[node], self.right[node]):
                if not node < child < count:
                    raise error.ModelFormatError(f"Node {node} has a dangling child index {child}.")
                referenced[child] += 1
            if self.feature[node] < 0:
                raise error.ModelFormatError(f"Node {node} has a negative feature index.")
            if not np.isfinite(self.threshold[node]):
                raise error.ModelFormatError(f"Node {node} has a non-finite threshold.")
        if referenced[0] != 0 or (referenced[1:] != 1).any():
            raise error.ModelFormatError("Every node except the root must have exactly one parent.")

        if (self.left[~internal] != LEAF).any() or (self.right[~internal] != LEAF).any():
            raise error.ModelFormatError("Leaf nodes cannot have children.")
        ids = self.leaf_id[~internal]
        if sorted(ids.tolist()) != list(range(leaves)) or (self.leaf_id[internal] != LEAF).any():
            raise error.ModelFormatError("Leaf ids must be 0..leaf_count-1, once each.")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.mean_targets).all()):
            raise error.ModelFormatError("Leaf weights must be finite.")

    def route(self, x: np.ndarray) -> int:
        """The leaf id the point x lands in."""
        node = 0
        while self.feature[node] != LEAF:
            if x[self.feature[node]] <= self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        return int(self.leaf_id[node])

    def apply(self, features: np.ndarray) -> np.ndarray:
        """Leaf ids of every row, vectorized `route`."""
        nodes = np.zeros(features.shape[0], dtype=np.intp)
        rows = np.arange(features.shape[0])
        active = self.feature[nodes] != LEAF
        while active.any():
            current = nodes[active]
            go_left = (
                features[rows[active], self.feature[current]] <= self.threshold[current]
            )
            nodes[active] = np.where(go_left, self.left[current], self.right[current])
            active = self.feature[nodes] != LEAF
        return self.leaf_id[nodes]

    def predict(self, features: np.ndarray) -> np.ndarray:
        """The weight of the leaf each row lands in."""
        return self.weights[self.apply(features)]

    def with_weights(self, weights: np.ndarray) -> Tree:
        """A copy of this tree carrying other leaf weights."""
        return Tree(
            self.feature,
            self.threshold,
            self.left,
            self.right,
            self.leaf_id,
            weights,
            self.mean_targets,
        )

    def to_dict(self) -> dict[str, list]:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "leaf_id": self.leaf_id.tolist(),
            "weight": self.weights.tolist(),
            "mean_target": self.mean_targets.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, list]) -> Tree:
        """
        Raises:
            error.ModelFormatError: On missing fields or an invalid structure.
        """
        try:
            return cls(
                data["feature"],
                data["threshold"],
                data["left"],
                data["right"],
                data["leaf_id"],
                data["weight"],
                data["mean_target"],
            )
        except KeyError as e:
            raise error.ModelFormatError(f"Tree is missing the field {e.args[0]!r}.")
        except (TypeError, ValueError) as e:
            raise error.ModelFormatError(f"Tree has malformed arrays: {e}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tree):
            return NotImplemented
        return all(
            np.array_equal(a, b)
            for a, b in zip(self._arrays(), other._arrays())
        )

    __hash__ = None

    def _arrays(self) -> tuple[np.ndarray, ...]:
        return (
            self.feature,
            self.threshold,
            self.left,
            self.right,
            self.leaf_id,
            self.weights,
            self.mean_targets,
        )

    def __repr__(self) -> str:
        return f"Tree(leaves={self.leaf_count}, depth={self.depth})"


def fit_tree(
    row_indices: np.ndarray,
    features: np.ndarray,
    targets: np.ndarray,
    k: int = 2,
    min_leaf: int = 1,
    order: np.ndarray | None = None,
) -> Tree:
    """
    Grow a least-squares tree with at most k leaves, best first.

    Starting from a single leaf, the split with the largest SSE reduction over
    all current leaves is applied until there are k leaves or no leaf can be
    improved. Ties go to the leaf created first. Leaf weights start as the
    leaf means; boosting overwrites them with its line search.

    Args:
        row_indices (np.ndarray): The rows to fit on.
        features (np.ndarray): The full n×d feature matrix.
        targets (np.ndarray): The full length-n target vector.
        k (int): Maximum number of leaves, at least 2.
        min_leaf (int): Minimum number of points in a leaf.
        order (np.ndarray | None): Output of `presort(features)`.

    Returns:
        Tree: The fitted tree. Degenerate data gives a single leaf.
    """
    row_indices = np.asarray(row_indices, dtype=np.intp)
    if row_indices.shape[0] < 1:
        raise error.InvalidDatasetError("Cannot fit a tree on zero rows.")
    if k < 2:
        raise error.InvalidConfigError(f"A tree needs k >= 2 leaves, got {k}.")
    if order is None:
        order = presort(features)

    feature = [LEAF]
    threshold = [0.0]
    left = [LEAF]
    right = [LEAF]
    rows = {0: row_indices}
    candidates = {0: best_split(row_indices, features, targets, min_leaf, order)}
    open_leaves = [0]  # in creation order

    while len(open_leaves) < k:
        best_node = None
        for node in open_leaves:
            split = candidates[node]
            if split is None:
                continue
            if best_node is None or split.sse_reduction > candidates[best_node].sse_reduction:
                best_node = node
        if best_node is None:
            break

        split = candidates[best_node]
        node_rows = rows.pop(best_node)
        goes_left = features[node_rows, split.feature] <= split.threshold

        feature[best_node] = split.feature
        threshold[best_node] = split.threshold
        open_leaves.remove(best_node)
        del candidates[best_node]
        # the children are final leaves once this split reaches k
        more_splits = len(open_leaves) + 2 < k

        for side, child_rows in (("left", node_rows[goes_left]), ("right", node_rows[~goes_left])):
            child = len(feature)
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            if side == "left":
                left[best_node] = child
            else:
                right[best_node] = child
            rows[child] = child_rows
            if more_splits:
                candidates[child] = best_split(child_rows, features, targets, min_leaf, order)
            open_leaves.append(child)

    leaf_nodes = sorted(open_leaves)
    leaf_id = [LEAF] * len(feature)
    means = []
    for i, node in enumerate(leaf_nodes):
        leaf_id[node] = i
        means.append(float(np.mean(targets[rows[node]])))

    return Tree(feature, threshold, left, right, leaf_id, means, means)
