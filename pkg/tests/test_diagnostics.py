import numpy as np
import pytest

from infiniteboost import GradientBoosting, InfiniteBoost
from infiniteboost.diagnostics import (
    convergence_trace,
    fixed_point_residual,
    regularized_objective,
    write_trace_csv,
)
from infiniteboost.losses import make_loss


def closed_form_model(n_estimators=20, capacity=1.0, n=16):
    """Deterministic depth-0 setting: all targets 1, squared error.

    The scores converge to capacity / (1 + capacity) on every sample and
    the probe trees are deterministic (no subsampling), so the residual at
    the fixed point is exactly measurable.
    """
    X = np.arange(float(n)).reshape(-1, 1)
    y = np.ones(n)
    model = InfiniteBoost(
        n_estimators=n_estimators, capacity=capacity, max_depth=0,
        subsample=1.0, max_features=1.0, random_state=0,
    ).fit(X, y)
    return model, X, y


class TestFixedPointResidual:
    def test_zero_at_closed_form_fixed_point(self):
        model, X, y = closed_form_model()
        report = fixed_point_residual(model, X, y, n_probe_trees=4,
                                      random_state=0)
        assert report.residual_norm < 1e-9
        assert report.n_probe_trees == 4
        assert report.z_norm == pytest.approx(0.5 * np.sqrt(16), rel=1e-12)

    def test_fresh_ensemble_has_positive_residual(self):
        # zero trees: z = 0 and the residual equals c * ||T(0)||
        model, X, y = closed_form_model(n_estimators=0)
        report = fixed_point_residual(model, X, y, n_probe_trees=3,
                                      random_state=1)
        assert report.residual_norm > 0
        # probe trees at z=0 are single leaves of value mean(y) = 1
        assert report.residual_norm == pytest.approx(np.sqrt(16), rel=1e-12)
        assert report.z_norm == 0.0

    def test_requires_capacity_averaged_mode(self):
        rng = np.random.RandomState(0)
        X, y = rng.rand(20, 2), rng.rand(20)
        model = GradientBoosting(n_estimators=2, random_state=0).fit(X, y)
        with pytest.raises(ValueError, match="capacity-averaged"):
            fixed_point_residual(model, X, y)

    def test_probe_count_validated(self):
        model, X, y = closed_form_model()
        with pytest.raises(ValueError, match="n_probe_trees"):
            fixed_point_residual(model, X, y, n_probe_trees=0)

    def test_more_probes_reduce_estimator_variance(self):
        rng = np.random.RandomState(5)
        X = rng.standard_normal((80, 3))
        y = rng.standard_normal(80)
        model = InfiniteBoost(
            n_estimators=12, capacity=1.0, max_depth=2, subsample=0.5,
            random_state=0,
        ).fit(X, y)

        def residuals(n_probe, seed0):
            return [
                fixed_point_residual(
                    model, X, y, n_probe_trees=n_probe, random_state=seed0 + r
                ).residual_norm
                for r in range(20)
            ]

        var_few = np.var(residuals(4, 0))
        var_many = np.var(residuals(64, 100))
        assert var_many < var_few

    def test_adaptive_model_supported(self):
        rng = np.random.RandomState(2)
        X = rng.standard_normal((60, 3))
        y = rng.standard_normal(60)
        model = InfiniteBoost(
            n_estimators=10, capacity="adaptive", max_depth=2, random_state=0,
        ).fit(X, y)
        report = fixed_point_residual(model, X, y, n_probe_trees=4,
                                      random_state=3)
        assert np.isfinite(report.residual_norm)


class TestRegularizedObjective:
    def test_plug_in_arithmetic(self):
        value = regularized_objective(
            [1.0, 1.0], [0.0, 0.0], 1.0, make_loss("mse")
        )
        assert value == 1.0

    def test_zero_capacity_leaves_score_norm(self):
        z = np.array([3.0, 4.0])
        value = regularized_objective([0.0, 0.0], z, 0.0, make_loss("mse"))
        assert value == 12.5

    def test_stationary_at_closed_form_fixed_point(self):
        model, X, y = closed_form_model()
        loss = make_loss("mse")
        z = model.train_scores_.copy()
        eps = 1e-6
        for i in (0, 7, 15):
            up, down = z.copy(), z.copy()
            up[i] += eps
            down[i] -= eps
            derivative = (
                regularized_objective(y, up, 1.0, loss)
                - regularized_objective(y, down, 1.0, loss)
            ) / (2 * eps)
            assert abs(derivative) < 1e-6

    def test_gradient_identity_by_finite_differences(self):
        # d(objective)/dz_i = z_i - c * negative_gradient_i
        rng = np.random.RandomState(8)
        loss = make_loss("logloss")
        y = np.where(rng.rand(12) > 0.5, 1.0, 0.0)
        z = rng.standard_normal(12)
        capacity = 1.7
        eps = 1e-6
        g = loss.negative_gradient(y, z)
        for i in range(12):
            up, down = z.copy(), z.copy()
            up[i] += eps
            down[i] -= eps
            numeric = (
                regularized_objective(y, up, capacity, loss)
                - regularized_objective(y, down, capacity, loss)
            ) / (2 * eps)
            analytic = z[i] - capacity * g[i]
            assert abs(numeric - analytic) / max(abs(analytic), 1e-3) < 1e-5

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            regularized_objective([1.0], [1.0, 2.0], 1.0, make_loss("mse"))


class TestConvergenceTrace:
    def test_single_probe_when_interval_is_m(self):
        model, X, y = closed_form_model(n_estimators=0)
        config = model.set_params(n_estimators=12)
        rows = convergence_trace(config, X, y, probe_every=12,
                                 n_probe_trees=2, random_state=0)
        assert len(rows) == 1
        assert rows[0].iteration == 12

    def test_iterations_strictly_increasing_and_final_included(self):
        model, X, y = closed_form_model(n_estimators=0)
        config = model.set_params(n_estimators=20)
        rows = convergence_trace(config, X, y, probe_every=7,
                                 n_probe_trees=2, random_state=0)
        iterations = [r.iteration for r in rows]
        assert iterations == [7, 14, 20]

    def test_residual_nonincreasing_on_closed_form_instance(self):
        model, X, y = closed_form_model(n_estimators=0)
        config = model.set_params(n_estimators=60)
        rows = convergence_trace(config, X, y, probe_every=5,
                                 n_probe_trees=2, random_state=0)
        late = [r.residual for r in rows if r.iteration >= 10]
        for a, b in zip(late, late[1:]):
            assert b <= a * 1.1 + 1e-12

    def test_csv_format(self, tmp_path):
        model, X, y = closed_form_model(n_estimators=0)
        config = model.set_params(n_estimators=6)
        path = tmp_path / "trace.csv"
        convergence_trace(config, X, y, probe_every=3, n_probe_trees=2,
                          random_state=0, csv_path=str(path))
        text = path.read_text(encoding="utf-8")
        lines = text.splitlines()
        assert lines[0] == "iteration,residual,objective,capacity"
        assert len(lines) == 3
        for line in lines[1:]:
            cells = line.split(",")
            assert len(cells) == 4
            int(cells[0])
            [float(c) for c in cells[1:]]
        assert "\r" not in text

    def test_write_trace_csv_roundtrip(self, tmp_path):
        from infiniteboost.diagnostics import TraceRow
        rows = [TraceRow(1, 0.5, 2.25, 0.5), TraceRow(2, 0.25, 2.0, 1.0)]
        path = tmp_path / "t.csv"
        write_trace_csv(rows, str(path))
        lines = path.read_text().splitlines()
        assert lines[1] == "1,0.5,2.25,0.5"

    def test_probe_every_validated(self):
        model, X, y = closed_form_model(n_estimators=0)
        with pytest.raises(ValueError, match="probe_every"):
            convergence_trace(model, X, y, probe_every=0)
