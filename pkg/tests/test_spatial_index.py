import numpy as np
import pytest

from surfup import KTooLarge, MTooLarge, PointCloud, build_index, farthest_point_sample, knn

from oracles import brute_knn


class TestKnn:
    def test_single_point_cloud(self):
        idx = build_index(PointCloud([[1, 2, 3]]))
        assert idx.n == 1
        i, d = knn(idx, [1, 2, 3], 1)
        assert list(i) == [0] and d[0] == 0.0

    def test_exhaustive_k_returns_all_sorted(self):
        rng = np.random.default_rng(0)
        pts = rng.normal(size=(5, 3))
        idx = build_index(PointCloud(pts))
        i, d = knn(idx, rng.normal(size=3), 5)
        assert sorted(i) == list(range(5))
        assert np.all(np.diff(d) >= 0)

    def test_query_on_stored_point(self):
        pts = np.array([[0, 0, 0], [1, 1, 1], [2, 2, 2]], float)
        idx = build_index(PointCloud(pts))
        i, d = knn(idx, [1, 1, 1], 1)
        assert i[0] == 1 and d[0] == 0.0

    def test_hand_computed(self):
        pts = np.array([[0, 0, 0], [1, 0, 0], [3, 0, 0]], float)
        idx = build_index(PointCloud(pts))
        i, d = knn(idx, [0.9, 0, 0], 2)
        assert list(i) == [1, 0]
        assert np.allclose(d, [0.1, 0.9])

    def test_k_too_large(self):
        idx = build_index(PointCloud([[0, 0, 0], [1, 0, 0]]))
        with pytest.raises(KTooLarge):
            knn(idx, [0, 0, 0], 3)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(42)
        pts = rng.normal(size=(1000, 3))
        idx = build_index(PointCloud(pts))
        queries = rng.normal(size=(100, 3))
        got_i, got_d = idx.knn_many(queries, 16)
        for q, gi, gd in zip(queries, got_i, got_d):
            bi, bd = brute_knn(pts, q, 16)
            assert np.array_equal(gi, bi)
            assert np.allclose(gd, bd, atol=1e-12)

    def test_tie_break_with_duplicates(self):
        # many exact duplicates force distance ties; smaller index must win
        rng = np.random.default_rng(1)
        base = rng.normal(size=(20, 3))
        pts = np.vstack([base, base, base])
        idx = build_index(PointCloud(pts))
        for q in [base[0], base[3] + 0.01, rng.normal(size=3)]:
            for k in (1, 5, 20, 41):
                gi, _ = knn(idx, q, k)
                bi, _ = brute_knn(pts, q, k)
                assert np.array_equal(gi, bi)


class TestFps:
    def test_m1_is_seed(self):
        c = PointCloud(np.random.default_rng(0).normal(size=(10, 3)))
        assert list(farthest_point_sample(c, 1, seed_index=4)) == [4]

    def test_collinear_hand_case(self):
        c = PointCloud([[0, 0, 0], [1, 0, 0], [2, 0, 0], [10, 0, 0]])
        sel = farthest_point_sample(c, 2, seed_index=0)
        assert list(sel) == [0, 3]

    def test_m_equals_n_is_permutation(self):
        c = PointCloud(np.random.default_rng(5).normal(size=(30, 3)))
        sel = farthest_point_sample(c, 30)
        assert sorted(sel) == list(range(30))

    def test_m_too_large(self):
        c = PointCloud([[0, 0, 0]])
        with pytest.raises(MTooLarge):
            farthest_point_sample(c, 2)

    def test_deterministic(self):
        c = PointCloud(np.random.default_rng(9).normal(size=(200, 3)))
        a = farthest_point_sample(c, 50, seed_index=7)
        b = farthest_point_sample(c, 50, seed_index=7)
        assert np.array_equal(a, b)

    def test_min_pairwise_distance_non_increasing(self):
        c = PointCloud(np.random.default_rng(2).normal(size=(100, 3)))
        prev = np.inf
        sel = farthest_point_sample(c, 40)
        for m in range(2, 41):
            sub = c.points[sel[:m]]
            d = np.linalg.norm(sub[:, None] - sub[None, :], axis=-1)
            np.fill_diagonal(d, np.inf)
            cur = d.min()
            assert cur <= prev + 1e-12
            prev = cur
