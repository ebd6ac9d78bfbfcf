"""Clustering-feature tree: single-pass threshold clustering.

Points are inserted one at a time. The tree is descended by choosing, at
each internal node, the child whose centroid is nearest (squared Euclidean)
to the point; at the closest leaf the squared average inter-cluster distance
between leaf and point decides between merging and opening a new sibling
leaf. Nodes whose child count exceeds the branching factor split around the
farthest pair of children, and splits can propagate to the root.

Insertion order matters by design, so construction is strictly sequential;
a finished tree may be read concurrently. All ties break toward the lowest
index, making runs bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .features import (
    ClusteringFeature,
    avg_intercluster_dist_sq,
    cf_from_point,
    cf_merge,
    centroid,
)


@dataclass
class CFNode:
    """One cluster in the hierarchy: a leaf holds member ids, an internal
    node holds children whose features it aggregates."""

    cf: ClusteringFeature
    children: list["CFNode"] = field(default_factory=list)
    member_ids: list = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children


def _fold_children(children: list[CFNode]) -> ClusteringFeature:
    cf = children[0].cf
    for child in children[1:]:
        cf = cf_merge(cf, child.cf)
    return cf


def split_node(node: CFNode, branching_factor: int) -> tuple[CFNode, CFNode]:
    """Split an overfull internal node around its farthest pair of children.

    The two children with maximal squared average inter-cluster distance
    become seeds (first maximal pair in index order); every other child joins
    the nearer seed, ties going to the first.
    """
    if node.is_leaf:
        raise ValueError("cannot split a leaf node")
    children = node.children
    if len(children) != branching_factor + 1:
        raise ValueError(f"split expects {branching_factor + 1} children, "
                         f"got {len(children)}")
    best = (0, 1)
    best_d = -1.0
    for i in range(len(children)):
        for j in range(i + 1, len(children)):
            d = avg_intercluster_dist_sq(children[i].cf, children[j].cf)
            if d > best_d:
                best_d = d
                best = (i, j)
    seed_a, seed_b = best
    group_a = [children[seed_a]]
    group_b = [children[seed_b]]
    for idx, child in enumerate(children):
        if idx in best:
            continue
        da = avg_intercluster_dist_sq(child.cf, children[seed_a].cf)
        db = avg_intercluster_dist_sq(child.cf, children[seed_b].cf)
        (group_a if da <= db else group_b).append(child)
    return (CFNode(cf=_fold_children(group_a), children=group_a),
            CFNode(cf=_fold_children(group_b), children=group_b))


class CFTree:
    """Height-balanced tree of clustering features with a merge threshold.

    ``threshold`` is in squared-distance units and bounds the squared
    average inter-cluster distance a leaf may reach when absorbing a point;
    it encodes the desired granularity of the leaf-level clustering.
    """

    def __init__(self, threshold: float, branching_factor: int, dimensionality: int):
        if threshold <= 0:
            raise ValueError("threshold must be positive")
        if branching_factor < 2:
            raise ValueError("branching factor must be at least 2")
        if dimensionality < 1:
            raise ValueError("dimensionality must be at least 1")
        self.threshold = float(threshold)
        self.branching_factor = int(branching_factor)
        self.dimensionality = int(dimensionality)
        self.root: CFNode | None = None
        self._inserted_ids: set = set()

    def __len__(self) -> int:
        return len(self._inserted_ids)

    def insert(self, point_id, v: np.ndarray) -> None:
        """Insert one point, merging it into the closest leaf within the
        threshold or opening a new leaf (splitting ancestors as needed)."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dimensionality,):
            raise ValueError(f"expected vector of length {self.dimensionality}, "
                             f"got shape {v.shape}")
        if point_id in self._inserted_ids:
            raise ValueError(f"duplicate point id {point_id!r}")
        vcf = cf_from_point(v)
        if self.root is None:
            self.root = CFNode(cf=vcf, member_ids=[point_id])
        else:
            sibling = self._insert(self.root, point_id, v, vcf)
            if sibling is not None:
                self.root = CFNode(cf=cf_merge(self.root.cf, sibling.cf),
                                   children=[self.root, sibling])
        self._inserted_ids.add(point_id)

    def _insert(self, node: CFNode, point_id, v: np.ndarray,
                vcf: ClusteringFeature) -> CFNode | None:
        """Recursive step; returns a node the caller must adopt as a new
        sibling of ``node``, or None when the point was absorbed below."""
        if node.is_leaf:
            if avg_intercluster_dist_sq(node.cf, vcf) <= self.threshold:
                node.cf = cf_merge(node.cf, vcf)
                node.member_ids.append(point_id)
                return None
            return CFNode(cf=vcf, member_ids=[point_id])
        dists = [float(np.sum((v - centroid(c.cf)) ** 2)) for c in node.children]
        closest = node.children[int(np.argmin(dists))]
        new_child = self._insert(closest, point_id, v, vcf)
        if new_child is None:
            node.cf = cf_merge(node.cf, vcf)
            return None
        node.children.append(new_child)
        node.cf = _fold_children(node.children)
        if len(node.children) > self.branching_factor:
            kept, sibling = split_node(node, self.branching_factor)
            node.children = kept.children
            node.cf = kept.cf
            return sibling
        return None

    def leaf_clusters(self) -> list[tuple[ClusteringFeature, list]]:
        """Leaves in left-to-right order as (feature, member ids) pairs."""
        if self.root is None:
            raise ValueError("tree is empty")
        leaves: list[tuple[ClusteringFeature, list]] = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                leaves.append((node.cf, node.member_ids))
            else:
                stack.extend(reversed(node.children))
        return leaves

    def leaf_count(self) -> int:
        return len(self.leaf_clusters())

    def height(self) -> int:
        node, h = self.root, 0
        while node is not None and not node.is_leaf:
            node = node.children[0]
            h += 1
        return h

    def to_dict(self) -> dict:
        """JSON-ready dump of the tree for inspection and debugging."""

        def walk(node: CFNode) -> dict:
            entry = {"n": node.cf.n,
                     "centroid": centroid(node.cf).tolist()}
            if node.is_leaf:
                entry["member_ids"] = list(node.member_ids)
            else:
                entry["children"] = [walk(c) for c in node.children]
            return entry

        return {"threshold": self.threshold,
                "branching_factor": self.branching_factor,
                "dimensionality": self.dimensionality,
                "root": walk(self.root) if self.root is not None else None}

    def to_text(self) -> str:
        return json.dumps(self.to_dict(), indent=2)
