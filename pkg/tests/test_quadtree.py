import numpy as np
import pytest

from fastspec.errors import ArgumentError
from fastspec.quadtree import (
    decompose,
    leaf_label_map,
    nodes_at_level,
    superpixel_stats,
    tree_to_dict,
)

from conftest import make_image


def quadrant_image(side=8):
    """Four constant quadrants with distinct intensities."""
    a = np.zeros((side, side))
    h = side // 2
    a[:h, :h] = 0.2
    a[:h, h:] = 0.4
    a[h:, :h] = 0.6
    a[h:, h:] = 0.8
    return make_image(a)


def test_constant_image_single_leaf():
    tree = decompose(make_image(np.full((16, 16), 0.5)), t=1e-6)
    assert tree.m == 1
    assert tree.depth == 1
    assert tree.root.is_leaf
    assert tree.root.leaf_lo == 0 and tree.root.leaf_hi == 1


def test_quadrant_image_splits_once():
    tree = decompose(quadrant_image(8), t=1e-6)
    assert tree.m == 4
    assert tree.depth == 2
    assert not tree.root.is_leaf
    for child in tree.root.children:
        assert child.is_leaf
        assert child.side == 4


def test_children_order_ul_ur_dl_dr():
    tree = decompose(quadrant_image(8), t=1e-6)
    coords = [(c.x0, c.y0) for c in tree.root.children]
    assert coords == [(0, 0), (4, 0), (0, 4), (4, 4)]


def test_t_zero_splits_to_min_block():
    rng = np.random.default_rng(7)
    img = make_image(rng.random((8, 8)))
    tree = decompose(img, t=0.0, min_block_side=2)
    assert tree.m == 16
    assert all(leaf.side == 2 for leaf in tree.leaves)


def test_min_block_side_one_gives_pixels():
    rng = np.random.default_rng(8)
    img = make_image(rng.random((4, 4)))
    tree = decompose(img, t=0.0, min_block_side=1)
    assert tree.m == 16
    assert all(leaf.side == 1 for leaf in tree.leaves)


def test_leaf_ids_are_dfs_contiguous():
    rng = np.random.default_rng(9)
    img = make_image(rng.random((16, 16)))
    tree = decompose(img, t=0.01)
    ids = [leaf.superpixel_id for leaf in tree.leaves]
    assert ids == list(range(tree.m))

    def check(node):
        if node.is_leaf:
            assert node.leaf_hi == node.leaf_lo + 1
            return
        lo = node.leaf_lo
        for c in node.children:
            assert c.leaf_lo == lo
            lo = c.leaf_hi
            check(c)
        assert lo == node.leaf_hi

    check(tree.root)


def test_split_is_var_ge_t():
    # block variance exactly equal to t must still split
    img = quadrant_image(4)
    var = img.data.var()
    tree = decompose(img, t=var)
    assert tree.m == 4
    tree2 = decompose(img, t=var + 1e-12)
    assert tree2.m == 1


def test_variance_matches_numpy_oracle():
    rng = np.random.default_rng(10)
    img = make_image(rng.random((8, 8)))
    # force full split and compare per-leaf means against numpy on the slices
    tree = decompose(img, t=0.0, min_block_side=2)
    stats = superpixel_stats(tree, img)
    for leaf in tree.leaves:
        sl = img.data[leaf.y0 : leaf.y0 + leaf.side, leaf.x0 : leaf.x0 + leaf.side]
        i = leaf.superpixel_id
        assert stats.mean_intensity[i] == pytest.approx(sl.mean(), abs=1e-12)
        assert stats.size[i] == sl.size


def test_centroids():
    tree = decompose(quadrant_image(8), t=1e-6)
    stats = superpixel_stats(tree, make_image(quadrant_image(8).data))
    # ul leaf covers x,y in [0,4): centroid 1.5
    assert stats.centroid_x[0] == pytest.approx(1.5)
    assert stats.centroid_y[0] == pytest.approx(1.5)
    assert stats.centroid_x[1] == pytest.approx(5.5)


def test_non_square_rejected():
    with pytest.raises(ArgumentError):
        decompose(make_image(np.zeros((8, 16))), t=0.1)


def test_non_pow2_rejected():
    with pytest.raises(ArgumentError):
        decompose(make_image(np.zeros((12, 12))), t=0.1)


def test_negative_t_rejected():
    with pytest.raises(ArgumentError):
        decompose(make_image(np.zeros((8, 8))), t=-1.0)


def test_bad_min_block_side_rejected():
    with pytest.raises(ArgumentError):
        decompose(make_image(np.zeros((8, 8))), t=0.1, min_block_side=3)


def test_nodes_at_level():
    rng = np.random.default_rng(11)
    img = make_image(rng.random((8, 8)))
    tree = decompose(img, t=0.0, min_block_side=2)
    assert len(nodes_at_level(tree, 1)) == 1
    assert len(nodes_at_level(tree, 2)) == 4
    assert len(nodes_at_level(tree, 3)) == 16
    with pytest.raises(ArgumentError):
        nodes_at_level(tree, 0)
    with pytest.raises(ArgumentError):
        nodes_at_level(tree, tree.depth + 1)


def test_nodes_at_level_includes_early_leaves():
    # one uniform quadrant stays a leaf while the rest splits deeper
    a = np.zeros((8, 8))
    a[:4, 4:] = np.arange(16).reshape(4, 4) / 16.0
    a[4:, :4] = np.arange(16).reshape(4, 4)[::-1] / 16.0
    a[4:, 4:] = 0.9
    img = make_image(a)
    tree = decompose(img, t=1e-4, min_block_side=2)
    lv2 = nodes_at_level(tree, 2)
    assert len(lv2) == 4
    lv3 = nodes_at_level(tree, 3)
    # early leaves stand in for their own subtree at deeper levels
    assert sum(1 for n in lv3 if n.is_leaf and n.level == 2) == 2
    # every superpixel is covered exactly once at each level
    flat = [i for n in lv3 for i in range(n.leaf_lo, n.leaf_hi)]
    assert sorted(flat) == list(range(tree.m))


def test_leaf_label_map_covers_grid():
    rng = np.random.default_rng(12)
    img = make_image(rng.random((8, 8)))
    tree = decompose(img, t=0.005)
    lmap = leaf_label_map(tree)
    assert lmap.shape == (8, 8)
    assert set(np.unique(lmap)) == set(range(tree.m))
    for leaf in tree.leaves:
        block = lmap[leaf.y0 : leaf.y0 + leaf.side, leaf.x0 : leaf.x0 + leaf.side]
        assert np.all(block == leaf.superpixel_id)


def test_tree_to_dict_shape():
    img = quadrant_image(8)
    tree = decompose(img, t=1e-6)
    d = tree_to_dict(tree, img)
    assert d["m"] == 4
    assert d["depth"] == 2
    assert len(d["root"]["children"]) == 4
    leaf = d["root"]["children"][0]
    assert leaf["superpixel_id"] == 0
    assert leaf["mean"] == pytest.approx(0.2)
