import numpy as np
import pytest

from basisprec.basis import NodeGrid, build_multires_grid, build_single_grid
from basisprec.graphs import (
    TruePrecision,
    gen_band,
    gen_cluster,
    gen_random,
    gen_scale_free,
    latticekrig_precision,
    pattern_of,
    spd_correct,
)

UNIT_SQUARE = ((0.0, 1.0), (0.0, 1.0))


def offdiag_nonzeros(q):
    return np.count_nonzero(q) - np.count_nonzero(np.diag(q))


class TestSpdCorrect:
    def test_already_spd_only_adds_margin(self):
        a = np.diag([2.0, 3.0])
        np.testing.assert_allclose(spd_correct(a, 0.1), a + 0.1 * np.eye(2))

    def test_indefinite_hand_case(self):
        a = np.array([[0.0, 1.0], [1.0, 0.0]])
        out = spd_correct(a, 0.1)
        np.testing.assert_allclose(np.diag(out), [1.1, 1.1])
        np.testing.assert_allclose(out - np.diag(np.diag(out)),
                                   a)  # off-diagonal untouched

    def test_output_floor(self, rng):
        for _ in range(10):
            a = rng.standard_normal((6, 6))
            a = a + a.T
            out = spd_correct(a, 0.1)
            assert np.linalg.eigvalsh(out)[0] >= 0.1 - 1e-12


class TestBand:
    def test_two_by_two(self):
        t = gen_band(2)
        assert t.q[0, 1] == 1.0
        assert np.linalg.eigvalsh(t.q)[0] > 0

    def test_offdiagonal_count(self):
        t = gen_band(100)
        assert offdiag_nonzeros(t.q) == 2 * 99
        assert t.pattern == {(i, i + 1) for i in range(99)}

    def test_spd(self):
        for ell in (2, 5, 37):
            np.linalg.cholesky(gen_band(ell).q)


class TestCluster:
    def test_single_full_block(self):
        t = gen_cluster(12, block_count=1, fill_prob=1.0, seed=0)
        assert offdiag_nonzeros(t.q) == 12 * 11

    def test_block_locality(self):
        t = gen_cluster(100, block_count=5, fill_prob=0.7, seed=1)
        for i, j in t.pattern:
            assert i // 20 == j // 20  # same 20-wide diagonal block

    def test_zero_fill_is_diagonal(self):
        t = gen_cluster(30, block_count=2, fill_prob=0.0, seed=2)
        assert offdiag_nonzeros(t.q) == 0

    def test_default_block_count(self):
        t = gen_cluster(100, fill_prob=1.0, seed=3)
        # ~ell/20 blocks of ~20 variables each
        assert offdiag_nonzeros(t.q) == 5 * (20 * 19)


class TestRandom:
    def test_zero_probability(self):
        assert offdiag_nonzeros(gen_random(20, edge_prob=0.0, seed=0).q) == 0

    def test_full_probability(self):
        assert offdiag_nonzeros(gen_random(20, edge_prob=1.0, seed=0).q) == 380

    def test_edge_count_within_binomial_bound(self):
        counts = [gen_random(100, edge_prob=0.05, seed=s).n_edges
                  for s in range(5)]
        n_pairs = 100 * 99 // 2
        mean, sd = n_pairs * 0.05, np.sqrt(n_pairs * 0.05 * 0.95)
        for c in counts:
            assert abs(c - mean) < 4 * sd


class TestScaleFree:
    def test_two_nodes_single_edge(self):
        assert gen_scale_free(2).n_edges == 1

    def test_tree_edge_count(self):
        assert gen_scale_free(100, seed=0).n_edges == 99

    def test_heavier_hub_than_random_graph(self):
        # preferential attachment grows hubs; compare max degree against
        # uniform-random graphs with the same number of edges
        sf_max, er_max = [], []
        for s in range(10):
            sf = gen_scale_free(100, seed=s)
            er = gen_random(100, edge_prob=99 / 4950, seed=s)
            sf_max.append(np.max((sf.q != 0).sum(axis=0) - 1))
            er_max.append(np.max((er.q != 0).sum(axis=0) - 1))
        assert np.mean(sf_max) > np.mean(er_max)


class TestLatticeSar:
    def test_two_node_hand_computation(self):
        grid = NodeGrid(np.array([[0.0, 0.0], [1.0, 0.0]]),
                        np.array([1.0, 1.0]), np.array([1, 1]))
        t = latticekrig_precision(grid, a_wght=4.05)
        b = np.array([[4.05, -1.0], [-1.0, 4.05]])
        np.testing.assert_allclose(t.q, b.T @ b)

    def test_single_level_equals_btb(self):
        grid = build_single_grid(UNIT_SQUARE, (3, 3), 2.5)
        t = latticekrig_precision(grid, a_wght=4.05)
        # interior node of a 3x3 lattice has 4 neighbors
        a = np.zeros((9, 9))
        d = np.linalg.norm(grid.nodes[:, None] - grid.nodes[None, :], axis=-1)
        a[(d > 0) & (d <= 0.5 + 1e-12)] = 1.0
        b = 4.05 * np.eye(9) - a
        np.testing.assert_allclose(t.q, b.T @ b)
        assert a[4].sum() == 4

    def test_ten_by_ten_positive_definite(self):
        grid = build_single_grid(UNIT_SQUARE, (10, 10), 2.5)
        t = latticekrig_precision(grid, a_wght=4.05)
        assert np.linalg.eigvalsh(t.q)[0] > 0

    def test_multilevel_block_diagonal_weighting(self):
        grid = build_multires_grid(UNIT_SQUARE, 2, 2)
        t = latticekrig_precision(grid, a_wght=4.05, nu=0.5)
        # no coupling across levels
        lv1 = grid.levels == 1
        assert np.all(t.q[np.ix_(lv1, ~lv1)] == 0.0)
        # level blocks are B^T B scaled by reciprocal normalized variance
        w = np.exp(-2 * 0.5 * np.array([0.0, 1.0]))
        w = w / w.sum()
        b1 = 4.05 * np.eye(4) - np.array([[0, 1, 1, 0], [1, 0, 0, 1],
                                          [1, 0, 0, 1], [0, 1, 1, 0]])
        np.testing.assert_allclose(t.q[np.ix_(lv1, lv1)], (b1.T @ b1) / w[0])

    def test_unstable_weight_rejected(self):
        grid = build_single_grid(UNIT_SQUARE, (3, 3), 2.5)
        with pytest.raises(ValueError):
            latticekrig_precision(grid, a_wght=4.0)


class TestTruePrecision:
    def test_pattern_matches_nonzeros(self, rng):
        for gen in (lambda: gen_band(15), lambda: gen_random(15, 0.2, seed=4),
                    lambda: gen_cluster(15, 3, 0.5, seed=5),
                    lambda: gen_scale_free(15, seed=6)):
            t = gen()
            assert t.pattern == pattern_of(t.q)
            np.linalg.cholesky(t.q)  # SPD certificate

    def test_non_spd_rejected(self):
        with pytest.raises(np.linalg.LinAlgError):
            TruePrecision(np.array([[1.0, 2.0], [2.0, 1.0]]), "bad")

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            TruePrecision(np.array([[1.0, 0.5], [0.2, 1.0]]), "bad")
