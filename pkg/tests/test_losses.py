import numpy as np
import pytest

from infiniteboost.losses import (
    LogisticLoss,
    PairwiseRankingLoss,
    SquaredError,
    clip_gradient,
    make_loss,
)

EPS = 1e-6


def finite_difference_gradient(loss, y, scores, groups=None, eps=EPS):
    """Central difference of the total loss in every coordinate."""
    grad = np.zeros_like(scores)
    for i in range(scores.shape[0]):
        up = scores.copy()
        down = scores.copy()
        up[i] += eps
        down[i] -= eps
        grad[i] = (loss(y, up, groups) - loss(y, down, groups)) / (2 * eps)
    return grad


def brute_force_pairwise(y, scores, qid):
    """Naive per-pair enumeration of the ranking loss and its gradient."""
    total = 0.0
    grad = np.zeros_like(scores)
    for q in np.unique(qid):
        members = np.flatnonzero(qid == q)
        for i in members:
            for j in members:
                if y[i] > y[j]:
                    margin = scores[i] - scores[j]
                    total += np.log1p(np.exp(-margin))
                    pull = 1.0 / (1.0 + np.exp(margin))
                    grad[i] += pull
                    grad[j] -= pull
    return total, grad


class TestSquaredError:
    def test_gradient_vanishes_at_optimum(self):
        loss = SquaredError()
        g = loss.negative_gradient([1.0, 2.0], [1.0, 2.0])
        np.testing.assert_array_equal(g, [0.0, 0.0])

    def test_zero_residual_value(self):
        assert SquaredError()([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_value_is_half_sum_of_squares(self):
        assert SquaredError()([0.0, 0.0], [1.0, -1.0]) == 1.0


class TestLogistic:
    def test_half_at_zero_score(self):
        g = LogisticLoss().negative_gradient([1.0], [0.0])
        np.testing.assert_allclose(g, [0.5])

    def test_quarter_at_log_three(self):
        # checked against the finite-difference oracle below
        g = LogisticLoss().negative_gradient([1.0], [np.log(3.0)])
        np.testing.assert_allclose(g, [0.25], rtol=1e-12)
        fd = finite_difference_gradient(
            LogisticLoss(), np.array([1.0]), np.array([np.log(3.0)])
        )
        np.testing.assert_allclose(g, -fd, atol=1e-6)

    def test_value_log_two_at_zero(self):
        assert LogisticLoss()([1.0], [0.0]) == pytest.approx(np.log(2.0))

    def test_accepts_zero_one_and_pm_one_labels(self):
        scores = np.array([0.3, -0.7])
        a = LogisticLoss().negative_gradient(np.array([0.0, 1.0]), scores)
        b = LogisticLoss().negative_gradient(np.array([-1.0, 1.0]), scores)
        np.testing.assert_array_equal(a, b)

    def test_gradient_strictly_inside_unit_interval(self):
        # float64 saturates past |score| ~ 36; test the representable range
        rng = np.random.RandomState(0)
        y = np.where(rng.rand(500) > 0.5, 1.0, 0.0)
        scores = rng.uniform(-36.0, 36.0, 500)
        g = LogisticLoss().negative_gradient(y, scores)
        assert np.all(np.abs(g) < 1.0)
        assert np.all(g != 0.0)


class TestPairwiseRanking:
    def test_requires_groups(self):
        with pytest.raises(ValueError, match="query groups"):
            PairwiseRankingLoss().negative_gradient([1.0, 0.0], [0.0, 0.0])

    def test_correct_order_large_margin_near_zero(self):
        qid = np.array([0, 0])
        value = PairwiseRankingLoss()([1.0, 0.0], [5.0, -5.0], qid)
        expected, _ = brute_force_pairwise(
            np.array([1.0, 0.0]), np.array([5.0, -5.0]), qid
        )
        assert value == pytest.approx(expected, rel=1e-12)
        assert value < 1e-4

    def test_matches_brute_force_enumeration(self):
        rng = np.random.RandomState(3)
        qid = np.repeat([0, 1, 2], [4, 6, 5])
        y = rng.randint(0, 3, qid.shape[0]).astype(float)
        scores = rng.standard_normal(qid.shape[0])
        loss = PairwiseRankingLoss()
        expected_value, expected_grad = brute_force_pairwise(y, scores, qid)
        assert loss(y, scores, qid) == pytest.approx(expected_value, rel=1e-12)
        np.testing.assert_allclose(
            loss.negative_gradient(y, scores, qid), expected_grad, rtol=1e-9
        )

    def test_gradient_sums_to_zero_per_group(self):
        rng = np.random.RandomState(11)
        qid = np.repeat(np.arange(6), 7)
        y = rng.randint(0, 4, 42).astype(float)
        scores = rng.standard_normal(42)
        g = PairwiseRankingLoss().negative_gradient(y, scores, qid)
        for q in range(6):
            assert abs(g[qid == q].sum()) < 1e-10


class TestClipGradient:
    def test_below_threshold_unchanged(self):
        np.testing.assert_array_equal(clip_gradient(np.array([0.5]), 1.0), [0.5])

    def test_sign_preserving_clamp(self):
        np.testing.assert_array_equal(clip_gradient(np.array([-7.0]), 2.0), [-2.0])

    def test_boundary_unchanged(self):
        np.testing.assert_array_equal(
            clip_gradient(np.array([3.0, -3.0]), 3.0), [3.0, -3.0]
        )

    def test_applied_by_squared_error_default(self):
        loss = SquaredError()
        g = loss.negative_gradient([3e4], [0.0])
        np.testing.assert_array_equal(g, [1e4])

    def test_disabled_with_none(self):
        g = SquaredError(clip_threshold=None).negative_gradient([3e4], [0.0])
        np.testing.assert_array_equal(g, [3e4])


class TestFiniteDifferenceConsistency:
    """negative_gradient == -d(loss)/d(score), per coordinate."""

    @pytest.mark.parametrize("kind", ["squared_error", "logistic", "pairwise_rank"])
    def test_hundred_random_points(self, kind):
        rng = np.random.RandomState(42)
        loss = make_loss(kind)
        n = 12
        qid = np.repeat([0, 1], [5, 7]) if kind == "pairwise_rank" else None
        for _ in range(100):
            if kind == "logistic":
                y = np.where(rng.rand(n) > 0.5, 1.0, 0.0)
            elif kind == "pairwise_rank":
                y = rng.randint(0, 3, n).astype(float)
            else:
                y = rng.standard_normal(n) * 2.0
            scores = rng.standard_normal(n) * 2.0
            analytic = loss.negative_gradient(y, scores, qid)
            numeric = -finite_difference_gradient(loss, y, scores, qid)
            scale = np.maximum(np.abs(numeric), 1e-3)
            assert np.max(np.abs(analytic - numeric) / scale) < 1e-5


class TestMakeLoss:
    def test_aliases(self):
        assert make_loss("mse").name == "squared_error"
        assert make_loss("logloss").name == "logistic"
        assert make_loss("rank").name == "pairwise_rank"

    def test_unknown(self):
        with pytest.raises(ValueError, match="unknown loss"):
            make_loss("huber")

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            make_loss("mse").negative_gradient([1.0, 2.0], [0.0])
