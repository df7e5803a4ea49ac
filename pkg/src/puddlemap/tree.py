"""CART-style binary decision tree for wet/dry segment classification."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .seeds import Label, SeedSet, TrainingSet, seeds_to_training
from .segmenter import SegmentFeatures, SegmentMap


@dataclass(frozen=True)
class Node:
    # internal: feature >= 0, threshold set, children set; leaf: label set
    feature: int = -1
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    label: Label | None = None
    purity: float = 1.0

    @property
    def is_leaf(self) -> bool:
        return self.label is not None


@dataclass(frozen=True)
class DecisionTree:
    nodes: tuple[Node, ...]
    max_depth: int
    min_leaf: int
    n_features: int
    single_class_warning: bool = False


@dataclass(frozen=True)
class WaterMask:
    """Per-pixel wet flags over the ROI, constant within each segment."""

    wet: np.ndarray  # (h, w) bool
    timestamp: float | None = None


def gini(labels: np.ndarray) -> float:
    """Gini impurity of a boolean label array (True = WET)."""
    n = labels.size
    if n == 0:
        return 0.0
    p = labels.sum() / n
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def best_split(x: np.ndarray, y: np.ndarray, min_leaf: int):
    """Best (feature, threshold) by Gini impurity reduction, or None.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values; ties go to lower feature index, then lower threshold.
    """
    n = y.size
    parent = gini(y)
    best = None  # (reduction, feature, threshold)
    for f in range(x.shape[1]):
        vals = x[:, f]
        distinct = np.unique(vals)
        for a, b in zip(distinct, distinct[1:]):
            thr = (a + b) / 2.0
            mask = vals <= thr
            nl = int(mask.sum())
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            red = parent - (nl * gini(y[mask]) + nr * gini(y[~mask])) / n
            # zero-gain splits on impure nodes are kept: a deeper level may
            # separate classes no single threshold can (e.g. XOR layouts)
            if red < 0.0:
                continue
            # strict > keeps the first candidate on ties; the scan order is
            # (ascending feature, ascending threshold), which is the tie rule
            if best is None or red > best[0]:
                best = (red, f, thr)
    return None if best is None else (best[1], best[2])


def train(ts: TrainingSet, max_depth: int, min_leaf: int) -> DecisionTree:
    """Greedy recursive partitioning on Gini impurity reduction."""
    if len(ts) == 0:
        raise ValueError("empty training set")
    if max_depth < 1 or min_leaf < 1:
        raise ValueError("max_depth and min_leaf must be >= 1")
    x = np.asarray(ts.features, dtype=np.float64)
    y = np.array([lab is Label.WET for lab in ts.labels], dtype=bool)

    single_class = bool(y.all() or (~y).all())
    nodes: list[Node] = []

    def leaf(ys: np.ndarray) -> int:
        wet = int(ys.sum())
        dry = ys.size - wet
        label = Label.WET if wet > dry else Label.DRY  # tie -> DRY
        purity = max(wet, dry) / ys.size
        nodes.append(Node(label=label, purity=purity))
        return len(nodes) - 1

    def grow(idx: np.ndarray, depth: int) -> int:
        ys = y[idx]
        if depth >= max_depth or ys.size < 2 * min_leaf or gini(ys) == 0.0:
            return leaf(ys)
        split = best_split(x[idx], ys, min_leaf)
        if split is None:
            return leaf(ys)
        f, thr = split
        mask = x[idx, f] <= thr
        pos = len(nodes)
        nodes.append(Node())  # placeholder
        left = grow(idx[mask], depth + 1)
        right = grow(idx[~mask], depth + 1)
        nodes[pos] = Node(feature=f, threshold=thr, left=left, right=right)
        return pos

    grow(np.arange(y.size), 0)
    return DecisionTree(
        nodes=tuple(nodes),
        max_depth=max_depth,
        min_leaf=min_leaf,
        n_features=x.shape[1],
        single_class_warning=single_class,
    )


def predict(tree: DecisionTree, x: np.ndarray) -> Label:
    """Root-to-leaf descent; x[f] <= threshold goes left."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (tree.n_features,):
        raise ValueError(f"expected {tree.n_features}-vector, got shape {x.shape}")
    node = tree.nodes[0]
    while not node.is_leaf:
        node = tree.nodes[node.left if x[node.feature] <= node.threshold else node.right]
    return node.label


def predict_all(tree: DecisionTree, feats: SegmentFeatures) -> np.ndarray:
    """Boolean wet flag per segment."""
    return np.array(
        [predict(tree, v) is Label.WET for v in feats.vectors], dtype=bool
    )


def classify_frame(
    tree: DecisionTree,
    segmap: SegmentMap,
    feats: SegmentFeatures,
    seeds: SeedSet,
    timestamp: float | None = None,
) -> WaterMask:
    """Predict every segment, force seeded segments to their seed label."""
    if len(feats) != segmap.segment_count:
        raise ValueError("features do not match segment map")
    seg_wet = predict_all(tree, feats)
    forced = seeds_to_training(seeds, segmap, feats)  # also checks conflicts
    for sid, lab in zip(forced.segment_ids, forced.labels):
        seg_wet[sid] = lab is Label.WET
    return WaterMask(wet=seg_wet[segmap.labels], timestamp=timestamp)


def save_tree(tree: DecisionTree, path: str | Path) -> None:
    """Line-oriented text format; thresholds carry 17 significant digits."""
    lines = []
    for i, n in enumerate(tree.nodes):
        if n.is_leaf:
            lines.append(f"node {i} leaf {n.label.value} {n.purity:.17g}")
        else:
            lines.append(
                f"node {i} split {n.feature} {n.threshold:.17g} {n.left} {n.right}"
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_tree(path: str | Path, max_depth: int = 0, min_leaf: int = 0,
              n_features: int = 8) -> DecisionTree:
    nodes: list[Node] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        if parts[0] != "node" or int(parts[1]) != len(nodes):
            raise ValueError(f"line {lineno}: malformed tree file")
        if parts[2] == "leaf":
            nodes.append(Node(label=Label(parts[3]), purity=float(parts[4])))
        elif parts[2] == "split":
            nodes.append(
                Node(
                    feature=int(parts[3]),
                    threshold=float(parts[4]),
                    left=int(parts[5]),
                    right=int(parts[6]),
                )
            )
        else:
            raise ValueError(f"line {lineno}: unknown node kind {parts[2]!r}")
    if not nodes:
        raise ValueError("empty tree file")
    return DecisionTree(
        nodes=tuple(nodes), max_depth=max_depth, min_leaf=min_leaf, n_features=n_features
    )
