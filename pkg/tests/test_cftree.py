import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from awt.cftree import CFNode, CFTree, split_node
from awt.features import (
    avg_intercluster_dist_sq,
    brute_force_avg_dist_sq,
    cf_from_point,
    cf_merge,
    centroid,
)


def build_tree(points, threshold=1.0, branching_factor=8, ids=None):
    points = [np.atleast_1d(np.asarray(p, dtype=float)) for p in points]
    tree = CFTree(threshold=threshold, branching_factor=branching_factor,
                  dimensionality=points[0].size)
    ids = ids or [f"p{i}" for i in range(len(points))]
    for pid, v in zip(ids, points):
        tree.insert(pid, v)
    return tree


class TestInsert:
    def test_first_insert_creates_single_leaf(self):
        tree = build_tree([[1.5]])
        leaves = tree.leaf_clusters()
        assert len(leaves) == 1
        assert leaves[0][0].n == 1
        assert leaves[0][1] == ["p0"]
        assert tree.root.cf.ls == pytest.approx([1.5])

    def test_close_point_merges(self):
        tree = build_tree([[0.0], [0.5]], threshold=1.0)
        leaves = tree.leaf_clusters()
        assert len(leaves) == 1
        assert leaves[0][0].n == 2
        # the deciding quantity is the pair's average squared distance
        assert avg_intercluster_dist_sq(
            cf_from_point(np.array([0.0])),
            cf_from_point(np.array([0.5]))) == pytest.approx(0.25)

    def test_far_point_opens_new_leaf(self):
        tree = build_tree([[0.0], [2.0]], threshold=1.0)
        assert tree.leaf_count() == 2

    def test_duplicate_id_rejected(self):
        tree = build_tree([[0.0]])
        with pytest.raises(ValueError, match="duplicate"):
            tree.insert("p0", np.array([9.0]))

    def test_dimension_mismatch_rejected(self):
        tree = build_tree([[0.0, 0.0]])
        with pytest.raises(ValueError):
            tree.insert("x", np.array([1.0]))

    def test_descent_follows_closest_child_centroid(self):
        # two far groups; a new point lands in the nearer group's leaf
        tree = build_tree([[0.0], [0.4], [100.0], [100.4]], threshold=1.0,
                          branching_factor=2)
        tree.insert("probe", np.array([99.8]))
        by_leaf = {tuple(m): cf for cf, m in tree.leaf_clusters()}
        homes = [m for m in by_leaf if "probe" in m]
        assert len(homes) == 1
        assert set(homes[0]) == {"p2", "p3", "probe"}


class TestSplitNode:
    def make_parent(self, points):
        children = [CFNode(cf=cf_from_point(np.asarray(p, dtype=float)),
                           member_ids=[i]) for i, p in enumerate(points)]
        cf = children[0].cf
        for c in children[1:]:
            cf = cf_merge(cf, c.cf)
        return CFNode(cf=cf, children=children)

    def test_farthest_pair_seeding_and_assignment(self):
        points = [[0.0], [1.0], [10.0]]
        node = self.make_parent(points)
        left, right = split_node(node, branching_factor=2)

        # oracle: enumerate all seed pairs and nearest-seed assignments
        cfs = [cf_from_point(np.asarray(p)) for p in points]
        pairs = list(itertools.combinations(range(3), 2))
        dists = {pair: avg_intercluster_dist_sq(cfs[pair[0]], cfs[pair[1]])
                 for pair in pairs}
        seed_pair = max(pairs, key=lambda pair: dists[pair])
        assert seed_pair == (0, 2)
        groups = {0: {0}, 2: {2}}
        for rest in set(range(3)) - set(seed_pair):
            nearer = min(seed_pair,
                         key=lambda s: avg_intercluster_dist_sq(cfs[rest], cfs[s]))
            groups[nearer].add(rest)
        assert groups == {0: {0, 1}, 2: {2}}

        got = [{m for child in side.children for m in child.member_ids}
               for side in (left, right)]
        assert got == [{0, 1}, {2}]

    def test_split_conserves_counts_and_sums(self):
        rng = np.random.default_rng(2)
        points = list(rng.normal(size=(5, 3)))
        node = self.make_parent(points)
        left, right = split_node(node, branching_factor=4)
        total = cf_merge(left.cf, right.cf)
        assert total.n == node.cf.n
        assert total.ls == pytest.approx(node.cf.ls)
        assert total.ss == pytest.approx(node.cf.ss)
        assert left.children and right.children

    def test_equidistant_children_split_deterministically(self):
        # four corners of a square: all cross distances tie pairwise
        points = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
        node = self.make_parent(points)
        first = split_node(node, branching_factor=3)
        second = split_node(self.make_parent(points), branching_factor=3)
        for a, b in zip(first, second):
            assert [c.member_ids for c in a.children] == \
                [c.member_ids for c in b.children]
        # diagonal (0,3) is the first maximal pair; 1 and 2 tie -> first seed
        assert [c.member_ids for c in first[0].children] == [[0], [1], [2]]
        assert [c.member_ids for c in first[1].children] == [[3]]

    def test_split_on_leaf_rejected(self):
        leaf = CFNode(cf=cf_from_point(np.array([1.0])), member_ids=["a"])
        with pytest.raises(ValueError, match="leaf"):
            split_node(leaf, branching_factor=2)


class TestLeafClusters:
    def test_two_leaf_example(self):
        tree = build_tree([[0.0], [2.0]], threshold=1.0)
        leaves = tree.leaf_clusters()
        assert [cf.n for cf, _ in leaves] == [1, 1]

    def test_leaves_partition_inserted_points(self):
        rng = np.random.default_rng(0)
        points = list(rng.uniform(-5, 5, size=(60, 2)))
        tree = build_tree(points, threshold=2.0, branching_factor=3)
        members = [m for _, ms in tree.leaf_clusters() for m in ms]
        assert sorted(members) == sorted(f"p{i}" for i in range(60))
        assert sum(cf.n for cf, _ in tree.leaf_clusters()) == 60

    def test_empty_tree_rejected(self):
        tree = CFTree(threshold=1.0, branching_factor=2, dimensionality=1)
        with pytest.raises(ValueError, match="empty"):
            tree.leaf_clusters()

    def test_branching_hierarchy_shape(self):
        # five mutually far points with branching factor 4: the root split
        # yields two internal nodes over five leaves (three-level hierarchy)
        tree = build_tree([[0.0], [1.0], [2.0], [3.0], [10.0]],
                          threshold=1e-6, branching_factor=4)
        assert tree.leaf_count() == 5
        assert not tree.root.is_leaf
        assert len(tree.root.children) == 2
        assert all(not child.is_leaf for child in tree.root.children)
        assert tree.height() == 2


class TestTreeInvariants:
    def assert_cf_consistency(self, node):
        if node.is_leaf:
            assert node.cf.n == len(node.member_ids)
            return
        fold = node.children[0].cf
        for child in node.children[1:]:
            fold = cf_merge(fold, child.cf)
        assert fold.n == node.cf.n
        assert fold.ls == pytest.approx(node.cf.ls, rel=1e-9, abs=1e-12)
        assert fold.ss == pytest.approx(node.cf.ss, rel=1e-9, abs=1e-12)
        for child in node.children:
            self.assert_cf_consistency(child)

    @given(st.integers(0, 200))
    def test_internal_cf_equals_fold_of_children(self, seed):
        rng = np.random.default_rng(seed)
        points = list(rng.uniform(-10, 10, size=(40, 2)))
        tree = build_tree(points, threshold=float(rng.uniform(0.5, 20.0)),
                          branching_factor=int(rng.integers(2, 6)))
        self.assert_cf_consistency(tree.root)

    @given(st.integers(0, 200))
    def test_child_counts_respect_branching_factor(self, seed):
        rng = np.random.default_rng(seed)
        bf = int(rng.integers(2, 6))
        tree = build_tree(list(rng.uniform(-10, 10, size=(50, 1))),
                          threshold=0.1, branching_factor=bf)
        stack = [tree.root]
        while stack:
            node = stack.pop()
            if not node.is_leaf:
                assert 1 <= len(node.children) <= bf
                stack.extend(node.children)

    def test_guaranteed_singleton_for_isolated_point(self):
        rng = np.random.default_rng(4)
        cloud = list(rng.uniform(0, 1, size=(30, 2)))
        outlier = np.array([50.0, 50.0])
        threshold = 4.0
        # construction oracle: the outlier is beyond threshold from everyone
        assert min(float(np.sum((outlier - p) ** 2)) for p in cloud) > threshold
        for position in (0, 15, 30):
            points = cloud.copy()
            points.insert(position, outlier)
            tree = build_tree(points, threshold=threshold, branching_factor=3)
            homes = [(cf, m) for cf, m in tree.leaf_clusters()
                     if f"p{position}" in m]
            assert homes[0][0].n == 1

    def test_identical_runs_produce_identical_trees(self):
        rng = np.random.default_rng(9)
        points = list(rng.uniform(-3, 3, size=(40, 2)))
        a = build_tree(points, threshold=1.0, branching_factor=3)
        b = build_tree(points, threshold=1.0, branching_factor=3)
        assert a.to_dict() == b.to_dict()

    def test_insertion_order_may_matter_but_partition_holds(self):
        rng = np.random.default_rng(10)
        points = list(rng.uniform(-3, 3, size=(30, 1)))
        shuffled = [points[i] for i in rng.permutation(30)]
        tree = build_tree(shuffled, threshold=0.5)
        assert sum(cf.n for cf, _ in tree.leaf_clusters()) == 30


class TestDump:
    def test_dict_dump_round_trips_membership(self):
        tree = build_tree([[0.0], [0.2], [9.0]], threshold=1.0)
        dump = tree.to_dict()
        assert dump["threshold"] == 1.0
        assert dump["root"]["n"] == 3
        text = tree.to_text()
        assert "member_ids" in text
