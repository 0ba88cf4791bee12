import numpy as np
import pytest

from umtr.gbdt import BoostedClassifier, Tree, TreeParams, fit, softmax, softmax_grad_hess


def multiclass_nll(scores, label):
    z = scores - scores.max()
    p = np.exp(z) / np.exp(z).sum()
    return -np.log(p[label])


class TestSoftmaxGradHess:
    def test_symmetric_two_class(self):
        g, h = softmax_grad_hess(np.array([1.7, 1.7]), 0)
        assert np.allclose(g, [-0.5, 0.5])
        assert np.allclose(h, [0.25, 0.25])

    def test_matches_finite_differences(self):
        # Oracle: central finite differences of the log-loss, step 1e-5.
        scores = np.array([1.0, 0.0, -1.0])
        g, _ = softmax_grad_hess(scores, 1)
        eps = 1e-5
        for c in range(3):
            up, dn = scores.copy(), scores.copy()
            up[c] += eps
            dn[c] -= eps
            fd = (multiclass_nll(up, 1) - multiclass_nll(dn, 1)) / (2 * eps)
            assert abs(g[c] - fd) <= 1e-6 * max(abs(fd), 1e-12)

    def test_hundred_random_cases(self):
        # Gradient against finite differences of the loss; hessian against
        # finite differences of the (just-verified) gradient, which avoids
        # the 1e-16/eps^2 float noise of second differences.
        rng = np.random.default_rng(0)
        eps = 1e-5
        for _ in range(100):
            c_count = int(rng.integers(2, 8))
            scores = rng.normal(scale=2.0, size=c_count)
            label = int(rng.integers(c_count))
            g, h = softmax_grad_hess(scores, label)
            for c in range(c_count):
                up, dn = scores.copy(), scores.copy()
                up[c] += eps
                dn[c] -= eps
                fd = (multiclass_nll(up, label) - multiclass_nll(dn, label)) / (2 * eps)
                assert abs(g[c] - fd) <= 1e-5 * max(abs(fd), 1e-8)
                g_up, _ = softmax_grad_hess(up, label)
                g_dn, _ = softmax_grad_hess(dn, label)
                fd2 = (g_up[c] - g_dn[c]) / (2 * eps)
                assert abs(h[c] - fd2) <= 1e-5 * max(abs(fd2), 1e-8)

    def test_gradient_bounds(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            scores = rng.normal(size=4)
            label = int(rng.integers(4))
            g, _ = softmax_grad_hess(scores, label)
            assert -1.0 < g[label] < 0.0
            others = np.delete(g, label)
            assert np.all((others > 0.0) & (others < 1.0))


class TestFit:
    def test_separable_clusters_reach_perfect_accuracy(self):
        rng = np.random.default_rng(2)
        x = np.concatenate([rng.uniform(-3, -0.1, 100), rng.uniform(0.1, 3, 100)])
        y = np.array([0] * 100 + [1] * 100)
        model = fit(x[:, None], y, TreeParams(rounds=20, max_depth=3))
        acc = np.mean(model.predict_proba(x[:, None]).argmax(axis=1) == y)
        assert acc == 1.0

    def test_blobs_heldout_accuracy(self):
        # 6-sigma-separated blobs: Bayes error is essentially zero.
        rng = np.random.default_rng(3)
        centers = np.array([[0.0, 0.0], [6.0, 0.0], [0.0, 6.0]])
        X = np.vstack([rng.normal(c, 1.0, size=(250, 2)) for c in centers])
        y = np.repeat([0, 1, 2], 250)
        order = rng.permutation(750)
        X, y = X[order], y[order]
        model = fit(X[:500], y[:500], TreeParams(rounds=30))
        acc = np.mean(model.predict_proba(X[500:]).argmax(axis=1) == y[500:])
        assert acc >= 0.95

    def test_all_missing_feature_never_split(self):
        rng = np.random.default_rng(4)
        X = np.column_stack([rng.normal(size=200), np.full(200, np.nan)])
        y = (X[:, 0] > 0).astype(int)
        model = fit(X, y, TreeParams(rounds=10, max_depth=3))
        for round_trees in model.trees:
            for tree in round_trees:
                internal = tree.feature[tree.feature >= 0]
                assert not np.any(internal == 1)

    def test_single_class_is_degenerate_not_error(self):
        X = np.arange(10, dtype=float)[:, None]
        model = fit(X, np.zeros(10, dtype=int), TreeParams(rounds=5), n_classes=3)
        p = model.predict_proba(X)
        assert np.all(p[:, 0] == 1.0)
        assert np.all(p[:, 1:] == 0.0)

    def test_empty_matrix_rejected(self):
        with pytest.raises(ValueError):
            fit(np.empty((0, 2)), np.empty(0, dtype=int))

    def test_monotone_training_loss(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(300, 3))
        y = ((X[:, 0] + 0.5 * X[:, 1] + rng.normal(0, 0.4, 300)) > 0).astype(int)
        params = TreeParams(rounds=25, learning_rate=0.3, reg_lambda=1.0)
        model = fit(X, y, params)
        losses = []
        for r in range(params.rounds + 1):
            p = model.predict_proba(X, n_rounds=r)
            losses.append(-np.mean(np.log(p[np.arange(300), y] + 1e-300)))
        assert all(b <= a + 1e-9 for a, b in zip(losses, losses[1:]))

    def test_deterministic_refit(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(150, 4))
        X[rng.random((150, 4)) < 0.2] = np.nan
        y = rng.integers(0, 3, 150)
        a = fit(X, y, TreeParams(rounds=8))
        b = fit(X, y, TreeParams(rounds=8))
        assert np.array_equal(a.base_score, b.base_score)
        for ra, rb in zip(a.trees, b.trees):
            for ta, tb in zip(ra, rb):
                assert np.array_equal(ta.feature, tb.feature)
                assert np.array_equal(ta.threshold, tb.threshold)
                assert np.array_equal(ta.default_left, tb.default_left)
                assert np.array_equal(ta.value, tb.value)


class TestPredictProba:
    def test_zero_rounds_balanced_gives_uniform(self):
        X = np.zeros((6, 1))
        y = np.array([0, 1, 2] * 2)
        model = fit(X, y, TreeParams(rounds=0))
        p = model.predict_proba(np.array([[0.0]]))
        assert np.allclose(p, 1 / 3)

    def test_fully_missing_input_total(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(100, 3))
        y = (X[:, 0] > 0).astype(int)
        model = fit(X, y, TreeParams(rounds=10))
        p = model.predict_proba(np.full((1, 3), np.nan))
        assert np.all(p >= 0) and abs(p.sum() - 1) < 1e-9

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(200, 2))
        y = rng.integers(0, 4, 200)
        model = fit(X, y, TreeParams(rounds=10))
        Xq = rng.normal(size=(50, 2))
        Xq[rng.random((50, 2)) < 0.5] = np.nan
        p = model.predict_proba(Xq)
        assert np.allclose(p.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(p >= 0)

    def test_hand_built_tree_matches_hand_computation(self):
        # Oracle: softmax of hand-summed leaf values, one tree per class.
        # Tree 0: x0 <= 0.5 -> leaf +0.7 else leaf -0.2, missing goes left.
        t0 = Tree(feature=[0, -1, -1], threshold=[0.5, 0, 0],
                  default_left=[True, False, False], left=[1, -1, -1],
                  right=[2, -1, -1], value=[0.0, 0.7, -0.2])
        # Tree 1: single leaf -0.4.
        t1 = Tree(feature=[-1], threshold=[0.0], default_left=[False],
                  left=[-1], right=[-1], value=[-0.4])
        base = np.array([0.1, -0.3])
        model = BoostedClassifier(2, 1, base, [[t0, t1]], TreeParams())
        for x, leaf in [(0.2, 0.7), (0.5, 0.7), (0.9, -0.2), (np.nan, 0.7)]:
            scores = np.array([0.1 + leaf, -0.3 - 0.4])
            expected = np.exp(scores) / np.exp(scores).sum()
            got = model.predict_proba(np.array([[x]]))[0]
            assert np.all(np.abs(got - expected) < 1e-12)

    def test_width_mismatch_rejected(self):
        model = fit(np.zeros((4, 2)), np.array([0, 1, 0, 1]), TreeParams(rounds=1))
        with pytest.raises(ValueError):
            model.predict_proba(np.zeros((1, 3)))


def exact_best_split(X, g, h, lam=1.0, mcw=1.0):
    """Oracle: brute-force greedy root split over all values and directions."""
    gtot, htot = g.sum(), h.sum()
    parent = gtot**2 / (htot + lam)
    best = (1e-12, None, None, None)
    for f in range(X.shape[1]):
        col = X[:, f]
        miss = np.isnan(col)
        for thr in np.unique(col[~miss])[:-1]:
            gains = {}
            for dl in (True, False):
                left = (~miss & (col <= thr)) | (miss & dl)
                gl, hl = g[left].sum(), h[left].sum()
                gr, hr = gtot - gl, htot - hl
                if hl < mcw or hr < mcw:
                    gains[dl] = -np.inf
                    continue
                gains[dl] = 0.5 * (gl**2 / (hl + lam) + gr**2 / (hr + lam) - parent)
            dl = gains[True] >= gains[False]
            gain = gains[dl]
            if gain > best[0]:
                best = (gain, f, thr, dl)
    return best


def test_root_split_matches_exact_greedy_oracle():
    # With fewer distinct values than histogram bins, every value is a split
    # candidate, so the histogram search must agree with exact greedy.
    rng = np.random.default_rng(10)
    for trial in range(20):
        X = rng.normal(size=(60, 3)).round(1)
        X[rng.random((60, 3)) < 0.25] = np.nan
        y = (np.nan_to_num(X[:, 0]) + rng.normal(0, 0.8, 60) > 0).astype(int)
        if len(np.unique(y)) < 2:
            continue
        model = fit(X, y, TreeParams(rounds=1, max_depth=1))
        tree = model.trees[0][0]
        p0 = np.exp(model.base_score[0]) / np.exp(model.base_score).sum()
        g = np.full(60, p0) - (y == 0)
        h = np.full(60, p0 * (1 - p0))
        gain, f, thr, dl = exact_best_split(X, g, h)
        if f is None:
            assert tree.feature[0] == -1
        else:
            assert tree.feature[0] == f
            assert tree.threshold[0] == thr
            assert bool(tree.default_left[0]) == dl


def test_softmax_matches_scipy():
    from scipy.special import softmax as scipy_softmax

    rng = np.random.default_rng(9)
    s = rng.normal(size=(20, 5)) * 3
    assert np.allclose(softmax(s), scipy_softmax(s, axis=1), atol=1e-12)
