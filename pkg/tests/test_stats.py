import itertools

import numpy as np
import pytest

from hodgeflow.complex import build_from_edges, clique_complex, complete_graph
from hodgeflow.errors import ValidationError
from hodgeflow.stats import (
    GroupAssignment,
    aggregate_curl_by_triplet,
    aggregate_edges_by_group_pair,
    aggregate_nodes_by_group,
    permutation_parity,
    sign_flip_exact,
    sign_flip_test,
)


def brute_force_p(column):
    # loop over every sign pattern, independent of the vectorized code
    s = len(column)
    obs = abs(sum(column) / s)
    hits = 0
    for signs in itertools.product((1, -1), repeat=s):
        m = abs(sum(a * b for a, b in zip(signs, column)) / s)
        if m >= obs - 1e-10 * max(abs(v) for v in column):
            hits += 1
    return hits / 2**s


def test_exact_matches_brute_force(rng):
    panel = rng.normal(0.3, 1, size=(8, 5))
    res = sign_flip_exact(panel)
    for k in range(5):
        assert res.p_value[k] == pytest.approx(brute_force_p(panel[:, k].tolist()), abs=1e-15)
    assert res.exact and res.n_permutations == 256


def test_all_positive_subjects_survive():
    r = np.random.default_rng(7)
    panel = r.normal(size=(20, 1000))
    panel[:, 0] = 1.0
    res = sign_flip_test(panel, n_perm=20000, alpha=0.05, seed=3)
    # exact p is 2 / 2**20; the add-one estimator cannot go below 1 / (n + 1)
    assert res.p_value[0] == pytest.approx(1 / 20001)
    assert res.survives[0]
    assert res.observed_mean[0] == 1.0


def test_exact_all_positive():
    res = sign_flip_exact(np.ones((10, 1)))
    assert res.p_value[0] == pytest.approx(2 / 2**10)


def test_symmetric_values_not_significant():
    panel = np.array([[1.0], [-1.0], [2.0], [-2.0], [0.5], [-0.5]])
    res = sign_flip_test(panel, n_perm=5000)
    assert res.observed_mean[0] == 0
    assert res.p_value[0] == 1.0
    assert sign_flip_exact(panel).p_value[0] == 1.0
    assert not res.survives[0]


def test_worker_count_does_not_change_results(rng):
    panel = rng.normal(size=(12, 30))
    a = sign_flip_test(panel, n_perm=4500, seed=11, n_workers=1)
    b = sign_flip_test(panel, n_perm=4500, seed=11, n_workers=4)
    for name in ("p_value", "z_score", "observed_mean"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()
    c = sign_flip_test(panel, n_perm=4500, seed=12)
    assert not np.array_equal(a.p_value, c.p_value)


def test_z_score_uses_null_moments(rng):
    panel = rng.normal(0.5, 1, size=(10, 3))
    ex = sign_flip_exact(panel)
    signs = np.array(list(itertools.product((1, -1), repeat=10)))
    null = signs @ panel / 10
    np.testing.assert_allclose(ex.z_score, (panel.mean(0) - null.mean(0)) / null.std(0))


def test_bonferroni_threshold():
    res = sign_flip_exact(np.vstack([np.ones((9, 4)), np.full((1, 4), 0.5)]), alpha=0.05)
    # p = 2 / 512 < 0.05 / 4
    assert res.survives.all()
    res = sign_flip_exact(np.ones((6, 4)))
    # p = 2 / 64 > 0.05 / 4
    assert not res.survives.any()


@pytest.mark.parametrize(
    "panel, kwargs, msg",
    [
        (np.ones((1, 3)), {}, "at least 2 subjects"),
        (np.array([[1.0, np.nan], [1.0, 2.0]]), {}, "non-finite"),
        (np.ones((3, 2)), {"n_perm": 10}, "n_perm"),
        (np.ones((3, 2)), {"alpha": 0}, "alpha"),
    ],
)
def test_sign_flip_rejects(panel, kwargs, msg):
    with pytest.raises(ValidationError, match=msg):
        sign_flip_test(panel, **kwargs)


def test_exact_size_limit():
    with pytest.raises(ValidationError):
        sign_flip_exact(np.ones((17, 1)))


def assignment(labels, groups=None):
    return GroupAssignment(tuple(groups or sorted(set(labels))), tuple(labels))


def test_single_group_is_grand_mean(rng):
    x = rng.normal(size=(4, 6))
    out = aggregate_nodes_by_group(x, assignment(["A"] * 6))
    np.testing.assert_allclose(out.per_subject[:, 0], x.mean(axis=1))


def test_each_node_own_group(rng):
    x = rng.normal(size=(3, 4))
    out = aggregate_nodes_by_group(x, assignment(list("abcd")))
    np.testing.assert_array_equal(out.per_subject, x)


def test_hand_built_two_groups():
    x = np.array([[1.0, 3.0, 10.0, 20.0], [2.0, 4.0, 0.0, 40.0]])
    out = aggregate_nodes_by_group(x, assignment(["L", "L", "R", "R"], ["L", "R"]))
    assert out.per_subject.tolist() == [[2.0, 15.0], [3.0, 20.0]]
    assert out.mean.tolist() == [2.5, 17.5]
    np.testing.assert_allclose(out.stderr, [0.5, 2.5])


def test_empty_group_rejected():
    with pytest.raises(ValidationError, match="no member"):
        aggregate_nodes_by_group(np.ones((2, 2)), assignment(["A", "A"], ["A", "B"]))


def test_unknown_group_rejected():
    with pytest.raises(ValidationError, match="unlisted"):
        GroupAssignment(("A",), ("A", "B"))


def test_from_dict():
    g = GroupAssignment.from_dict({"groups": ["x", "y"], "assignment": {"n0": "y", "n1": "x"}}, ["n0", "n1"])
    assert g.labels == ("y", "x")
    assert g.node_ranks().tolist() == [1, 0]
    with pytest.raises(ValidationError, match="no group"):
        GroupAssignment.from_dict({"groups": ["x"], "assignment": {}}, ["n0"])


def test_edge_orientation_agrees():
    # node 0 = Milan (Italy, rank 0), node 1 = Lausanne (Switzerland, rank 1)
    c = build_from_edges(2, [(0, 1)])
    g = GroupAssignment(("Italy", "Switzerland"), ("Italy", "Switzerland"))
    out = aggregate_edges_by_group_pair(np.array([[2.5]]), g, c)
    assert out.mean[0, 1] == 2.5
    assert np.isnan(out.mean[1, 0])
    g_rev = GroupAssignment(("Switzerland", "Italy"), ("Italy", "Switzerland"))
    assert aggregate_edges_by_group_pair(np.array([[2.5]]), g_rev, c).mean[0, 1] == -2.5


def test_edges_within_one_group(rng):
    c = clique_complex(complete_graph(4))
    x = rng.normal(size=(3, 6))
    out = aggregate_edges_by_group_pair(x, assignment(["A"] * 4), c)
    np.testing.assert_allclose(out.per_subject[:, 0, 0], x.mean(axis=1))
    assert out.counts.tolist() == [[6]]


def test_parity():
    assert permutation_parity([0, 1, 2]) == 1
    assert permutation_parity([1, 0, 2]) == -1
    assert permutation_parity([1, 2, 0]) == 1
    assert permutation_parity([2, 1, 0]) == -1


def test_triplet_orientation():
    c = clique_complex(complete_graph(3))
    curl = np.array([[4.0]])
    up = aggregate_curl_by_triplet(curl, GroupAssignment(("A", "B", "C"), ("A", "B", "C")), c)
    assert up.triplets == (("A", "B", "C"),)
    assert up.mean.tolist() == [4.0]
    swapped = aggregate_curl_by_triplet(curl, GroupAssignment(("A", "B", "C"), ("B", "A", "C")), c)
    assert swapped.mean.tolist() == [-4.0]
    cyc = aggregate_curl_by_triplet(curl, GroupAssignment(("A", "B", "C"), ("B", "C", "A")), c)
    assert cyc.mean.tolist() == [4.0]


def test_triplet_brute_force_parity(rng):
    c = clique_complex(complete_graph(6))
    labels = ("P", "Q", "R", "P", "S", "Q")
    groups = ("S", "R", "Q", "P")
    g = GroupAssignment(groups, labels)
    # a circulation given in vertex order; orient every distinct-label triangle by rank
    curl = rng.normal(size=(2, c.n_triangles))
    out = aggregate_curl_by_triplet(curl, g, c)
    rank = {x: k for k, x in enumerate(groups)}
    expected, degen = {}, []
    for k, tri in enumerate(c.triangles):
        seq = [rank[labels[v]] for v in tri]
        if len(set(seq)) < 3:
            degen.append(curl[:, k])
            continue
        # count transpositions by bubble sort
        s, swaps = list(seq), 0
        for i in range(3):
            for j in range(2 - i):
                if s[j] > s[j + 1]:
                    s[j], s[j + 1] = s[j + 1], s[j]
                    swaps += 1
        key = tuple(groups[r] for r in s)
        expected.setdefault(key, []).append((-1) ** swaps * curl[:, k])
    assert set(out.triplets) == set(expected)
    for name, col in zip(out.triplets, out.per_subject.T):
        np.testing.assert_allclose(col, np.mean(expected[name], axis=0))
    assert out.degenerate_count == len(degen)
    np.testing.assert_allclose(out.degenerate_per_subject, np.mean(degen, axis=0))


def test_relabelling_vertices_leaves_triplets_unchanged(rng):
    # moving every vertex (with its label) and fixing the curl sign by the
    # orientation change must not alter any triplet aggregate
    c = clique_complex(complete_graph(5))
    labels = ("A", "B", "C", "D", "A")
    groups = ("D", "C", "B", "A")
    curl = rng.normal(size=(3, c.n_triangles))
    base = aggregate_curl_by_triplet(curl, GroupAssignment(groups, labels), c)
    for pi in ((1, 2, 0, 3, 4), (2, 0, 1, 4, 3), (4, 3, 2, 1, 0)):
        new_labels = [None] * 5
        for v in range(5):
            new_labels[pi[v]] = labels[v]
        c2 = clique_complex(complete_graph(5))
        idx = {t: k for k, t in enumerate(c2.triangles)}
        curl2 = np.zeros_like(curl)
        for k, tri in enumerate(c.triangles):
            mapped = [pi[v] for v in tri]
            curl2[:, idx[tuple(sorted(mapped))]] = permutation_parity(mapped) * curl[:, k]
        moved = aggregate_curl_by_triplet(curl2, GroupAssignment(groups, tuple(new_labels)), c2)
        assert base.triplets == moved.triplets
        np.testing.assert_allclose(base.per_subject, moved.per_subject, atol=1e-15)


def test_length_mismatches():
    c = clique_complex(complete_graph(3))
    g = assignment(list("abc"))
    with pytest.raises(ValidationError):
        aggregate_edges_by_group_pair(np.ones((2, 2)), g, c)
    with pytest.raises(ValidationError):
        aggregate_curl_by_triplet(np.ones((2, 2)), g, c)
