import numpy as np
import pytest

from votebound import data as data_mod
from votebound import voters as v
from votebound.errors import DimensionError, DomainError


def make_dataset(X, y, k=2):
    return data_mod.Dataset(np.asarray(X, float), np.asarray(y), k)


class TestStumpGrid:
    def test_count(self):
        grid = v.build_stump_grid([(-2, 2), (-2, 2)], 10)
        assert len(grid) == 40

    def test_single_threshold_is_midpoint(self):
        grid = v.build_stump_grid([(-2, 2), (-2, 2)], 1)
        assert sorted({s.threshold for s in grid}) == [0.0]
        assert len(grid) == 4

    def test_thresholds_strictly_interior(self):
        grid = v.build_stump_grid([(0, 1)], 10)
        ts = sorted({s.threshold for s in grid})
        assert all(0.0 < t < 1.0 for t in ts)
        assert len(ts) == 10

    def test_closed_under_complement(self):
        grid = v.build_stump_grid([(-1, 1)], 3)
        X = np.random.default_rng(0).uniform(-1, 1, (50, 1))
        preds = v.predictions_tensor(grid, X)
        by_key = {}
        for j, s in enumerate(grid):
            by_key.setdefault((s.feature, s.threshold), []).append(j)
        for pair in by_key.values():
            assert len(pair) == 2
            assert np.array_equal(preds[:, pair[0]], 1 - preds[:, pair[1]])

    def test_degenerate_range(self):
        with pytest.raises(DomainError):
            v.build_stump_grid([(1.0, 1.0)], 5)


class TestForest:
    def test_tree_count(self, rng):
        ds = data_mod.gen_two_gaussians(100, rng)
        forest = v.train_bagged_forest(ds, 7, max_depth=2, rng=rng)
        assert len(forest) == 7

    def test_depth_one_on_gapped_separable_data(self, rng):
        X = np.concatenate([rng.uniform(-1, -0.5, 30), rng.uniform(0.5, 1, 30)])[:, None]
        y = (X[:, 0] > 0).astype(np.int64)
        ds = make_dataset(X, y)
        forest = v.train_bagged_forest(ds, 15, max_depth=1, rng=rng)
        errs = v.error_matrix(forest, ds)
        assert not errs.matrix.any()

    def test_empty_data(self, rng):
        ds = make_dataset(np.zeros((0, 2)), np.zeros(0, dtype=np.int64))
        with pytest.raises(DomainError):
            v.train_bagged_forest(ds, 3, rng=rng)

    def test_depth_controls_voter_strength(self):
        # the median accuracy of a random tree grows with the depth cap
        moons = data_mod.gen_two_moons(400, 0.15, np.random.default_rng(7))
        strengths = []
        for depth in (1, 3, 10):
            vals = []
            for seed in range(3):
                forest = v.train_bagged_forest(
                    moons, 20, max_depth=depth, rng=np.random.default_rng(100 + seed)
                )
                vals.append(1.0 - v.error_matrix(forest, moons).matrix.mean())
            strengths.append(float(np.median(vals)))
        assert strengths[0] <= strengths[1] <= strengths[2]

    def test_multiclass(self, rng):
        X = rng.normal(0, 1, (90, 3))
        y = rng.integers(0, 3, 90)
        ds = make_dataset(X, y, k=3)
        forest = v.train_bagged_forest(ds, 5, max_depth=4, rng=rng)
        preds = v.predictions_tensor(forest, X)
        assert preds.min() >= 0 and preds.max() <= 2


class TestErrorMatrix:
    def test_perfect_voter_is_zero_column(self, rng):
        ds = data_mod.gen_two_gaussians(60, rng)

        class Oracle:
            def predict(self, X):
                return ds.labels

            def max_feature(self):
                return 0

        errs = v.error_matrix([Oracle()], ds)
        assert not errs.matrix.any()

    def test_label_complement_flips_entries(self, rng):
        ds = data_mod.gen_two_moons(80, 0.1, rng)
        grid = v.build_stump_grid([(-2, 2), (-2, 2)], 2)
        errs = v.error_matrix(grid, ds)
        flipped = data_mod.Dataset(ds.features, 1 - ds.labels, 2)
        errs2 = v.error_matrix(grid, flipped)
        assert np.array_equal(errs.matrix, ~errs2.matrix)

    def test_hand_built_instance(self):
        # 3 examples on a line, stumps at 0.5 with both polarities
        X = np.array([[0.0], [1.0], [2.0]])
        y = np.array([0, 1, 1])
        stumps = [v.Stump(0, 0.5, +1), v.Stump(0, 0.5, -1)]
        errs = v.error_matrix(stumps, make_dataset(X, y))
        assert np.array_equal(errs.matrix, np.array([[False, True], [False, True], [False, True]]))

    def test_row_permutation_invariance(self, rng):
        ds = data_mod.gen_two_moons(60, 0.1, rng)
        grid = v.build_stump_grid([(-2, 2), (-2, 2)], 2)
        errs = v.error_matrix(grid, ds).matrix
        perm = rng.permutation(60)
        shuffled = data_mod.Dataset(ds.features[perm], ds.labels[perm], 2)
        errs2 = v.error_matrix(grid, shuffled).matrix
        assert np.array_equal(errs[perm], errs2)

    def test_dimension_mismatch(self, rng):
        ds = data_mod.gen_two_gaussians(20, rng)
        with pytest.raises(DimensionError):
            v.error_matrix([v.Stump(5, 0.0, +1)], ds)

    def test_unique_rows_reconstruct(self, rng):
        mat = rng.random((200, 6)) < 0.3
        errs = v.ErrorMatrix(mat)
        rows, counts = errs.unique_rows()
        assert counts.sum() == 200
        # every original row appears among the unique ones
        rec = {tuple(r) for r in rows}
        assert {tuple(r) for r in mat} == rec

    def test_wrong_indices(self):
        errs = v.ErrorMatrix(np.array([[True, False, True]]))
        assert v.ErrorMatrix(errs.matrix).wrong_indices(0).tolist() == [0, 2]


class TestDeterministicVote:
    def test_single_voter(self, rng):
        preds = rng.integers(0, 2, (20, 3))
        theta = np.array([0.0, 1.0, 0.0])
        out = v.deterministic_mv_predict(theta, preds, 2)
        assert np.array_equal(out, preds[:, 1])

    def test_agreeing_voters(self):
        preds = np.array([[1, 1], [0, 0]])
        out = v.deterministic_mv_predict([0.5, 0.5], preds, 2)
        assert out.tolist() == [1, 0]

    def test_tie_breaks_to_smallest_label(self):
        preds = np.array([[0, 2, 2, 0]])
        out = v.deterministic_mv_predict([0.25] * 4, preds, 3)
        assert out.tolist() == [0]

    def test_binary_error_equivalence(self, rng):
        # with continuous weights (no ties), the vote errs exactly when the
        # erring weight reaches one half
        from votebound.risk import vote_error_weight

        for _ in range(20):
            ds = data_mod.gen_two_moons(50, 0.2, rng)
            grid = v.build_stump_grid([(-2, 2), (-2, 2)], 2)
            errs = v.error_matrix(grid, ds)
            theta = rng.dirichlet(np.full(len(grid), 0.7))
            preds = v.predictions_tensor(grid, ds.features)
            vote_errors = v.deterministic_mv_predict(theta, preds, 2) != ds.labels
            surrogate = vote_error_weight(theta, errs) >= 0.5
            assert np.array_equal(vote_errors, surrogate)

    def test_multiclass_surrogate_dominates(self, rng):
        from votebound.risk import vote_error_weight

        for _ in range(10):
            X = rng.normal(0, 1, (40, 2))
            y = rng.integers(0, 3, 40)
            ds = make_dataset(X, y, k=3)
            forest = v.train_bagged_forest(ds, 6, max_depth=3, rng=rng)
            errs = v.error_matrix(forest, ds)
            theta = rng.dirichlet(np.ones(6))
            preds = v.predictions_tensor(forest, ds.features)
            vote_errors = v.deterministic_mv_predict(theta, preds, 3) != ds.labels
            surrogate = vote_error_weight(theta, errs) >= 0.5
            assert np.all(vote_errors <= surrogate)


class TestSerialization:
    def test_round_trip(self, rng):
        ds = data_mod.gen_two_moons(60, 0.1, rng)
        grid = v.build_stump_grid([(-2, 2), (-2, 2)], 2)
        forest = v.train_bagged_forest(ds, 3, max_depth=3, rng=rng)
        voters = grid + forest
        restored = v.voters_from_json(v.voters_to_json(voters))
        X = rng.uniform(-2, 2, (100, 2))
        assert np.array_equal(
            v.predictions_tensor(voters, X), v.predictions_tensor(restored, X)
        )

    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            v.voters_from_json('{"voters": [{"kind": "perceptron"}]}')


class TestInformedSplit:
    def test_partition(self, rng):
        first, second = v.informed_split_indices(101, rng)
        assert first.size == 50 and second.size == 51
        assert sorted(np.concatenate([first, second]).tolist()) == list(range(101))

    def test_deterministic(self):
        a = v.informed_split_indices(40, np.random.default_rng(9))
        b = v.informed_split_indices(40, np.random.default_rng(9))
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
