# backend/tests/test_optimizer.py
"""
Test Suite 7: Optimization loop and convergence history

Runs use tiny problems and a handful of iterations; the full benchmark
reproductions live behind GET_RUN_SLOW.
"""

import numpy as np
import pandas as pd
import pytest

from config import RUN_SLOW_TESTS
from errors import OptimizationError
from fea.mesh import StructuredMesh
from numeric.projection import ProjectionParams
from optimizer.history import STAGES, ConvergenceHistory, StageTimer
from optimizer.loop import OptimizerSettings, design_bounds, run_optimization
from problems.benchmarks import build_benchmark


@pytest.fixture
def short_settings():
    return OptimizerSettings(max_iters=12, log_every=100)


class TestDesignBounds:
    """Box constraints on (mu, sigma, theta)."""

    def test_2d_layout(self):
        mesh = StructuredMesh((20, 10), (2.0, 1.0))
        lo, hi = design_bounds(mesh, 3, sigma_min_fraction=0.01, sigma_max_fraction=0.5, angle_bound=7.0)
        assert lo.size == hi.size == 15
        assert np.allclose(lo[:5], [0.0, 0.0, 0.01, 0.01, -7.0])
        assert np.allclose(hi[:5], [2.0, 1.0, 1.0, 1.0, 7.0])
        assert np.array_equal(lo[5:10], lo[:5])

    def test_3d_block(self):
        mesh = StructuredMesh((4, 4, 4), (1.0, 2.0, 4.0))
        lo, hi = design_bounds(mesh, 2)
        assert lo.size == 18
        assert np.all(lo[6:9] == -hi[6:9])
        assert np.all(lo < hi)

    def test_sigma_floor_follows_element_size(self):
        coarse = StructuredMesh((4, 2), (2.0, 1.0))
        lo, _ = design_bounds(coarse, 1, sigma_min_fraction=0.5)
        assert lo[2] < 0.5


class TestSettings:
    """OptimizerSettings validation."""

    def test_negative_iterations(self):
        with pytest.raises(ValueError):
            OptimizerSettings(max_iters=-1)

    def test_patience(self):
        with pytest.raises(ValueError):
            OptimizerSettings(patience=0)


class TestLoop:
    """run_optimization on a tiny cantilever."""

    def test_objective_improves(self, problem_factory, wide_params, short_settings):
        problem = problem_factory.cantilever(resolution=(20, 10), volume_bound=0.9)
        result = run_optimization(problem, params=wide_params, settings=short_settings)

        assert result.iterations == len(result.history) == 12
        assert result.final_state is not None
        assert result.final_state.objective < result.history.objective[0], \
            f"compliance went from {result.history.objective[0]} to {result.final_state.objective}"
        assert np.all(np.isfinite(result.history.objective))

    def test_volume_moves_toward_bound(self, problem_factory, wide_params):
        problem = problem_factory.cantilever(resolution=(20, 10), volume_bound=0.2)
        settings = OptimizerSettings(max_iters=15, log_every=100)
        result = run_optimization(problem, params=wide_params, settings=settings)
        fractions = result.history.volume_fraction
        assert fractions[0] > 0.2
        assert result.final_state.volume_fraction < fractions[0]

    def test_zero_iterations_returns_start(self, problem_factory):
        problem = problem_factory.cantilever()
        result = run_optimization(problem, settings=OptimizerSettings(max_iters=0))
        assert result.iterations == 0
        assert len(result.history) == 0
        assert result.final_state is None
        assert not result.converged
        assert len(result.ensemble) == 8

    def test_step_projection_rejected(self, problem_factory):
        with pytest.raises(OptimizationError) as exc:
            run_optimization(
                problem_factory.cantilever(),
                params=ProjectionParams(epsilon=0.0),
                settings=OptimizerSettings(max_iters=3),
            )
        assert exc.value.iteration == 0

    def test_callback_sees_every_iteration(self, problem_factory, wide_params):
        seen = []
        run_optimization(
            problem_factory.cantilever(),
            params=wide_params,
            settings=OptimizerSettings(max_iters=4, log_every=100),
            callback=lambda it, state: seen.append((it, state.objective)),
        )
        assert [it for it, _ in seen] == [1, 2, 3, 4]
        assert all(obj > 0 for _, obj in seen)

    def test_custom_initial_ensemble(self, problem_factory, ensemble_factory, wide_params):
        start = ensemble_factory.random(n=5, extents=(2.0, 1.0), seed=7)
        result = run_optimization(
            problem_factory.cantilever(),
            initial_ensemble=start,
            params=wide_params,
            settings=OptimizerSettings(max_iters=2, log_every=100),
        )
        assert len(result.ensemble) == 5
        assert result.active_count <= 5

    def test_stays_within_bounds(self, problem_factory, wide_params, short_settings):
        context = problem_factory.context(problem_factory.cantilever())
        result = run_optimization(context, params=wide_params, settings=short_settings)
        lo, hi = design_bounds(context.mesh, len(result.ensemble))
        x = np.concatenate([f.as_vector() for f in result.ensemble])
        assert np.all(x >= lo - 1e-12) and np.all(x <= hi + 1e-12)

    def test_deterministic(self, problem_factory, wide_params):
        settings = OptimizerSettings(max_iters=5, log_every=100)
        a = run_optimization(problem_factory.cantilever(), params=wide_params, settings=settings)
        b = run_optimization(problem_factory.cantilever(), params=wide_params, settings=settings)
        assert a.history.objective == b.history.objective

    def test_reduced_run_reconstructs_full_ensemble(self, problem_factory, wide_params):
        problem = problem_factory.mbb(resolution=(24, 8), reduce=True)
        result = run_optimization(problem, params=wide_params, settings=OptimizerSettings(max_iters=2, log_every=100))
        assert result.context.is_reduced
        assert len(result.full_ensemble()) == 2 * len(result.ensemble)

    def test_mechanism_runs(self, problem_factory, wide_params):
        result = run_optimization(
            problem_factory.inverter(),
            params=wide_params,
            settings=OptimizerSettings(max_iters=5, log_every=100),
        )
        assert result.final_state.u_out is not None
        assert len(result.history) == 5

    def test_converges_with_loose_tolerance(self, problem_factory, wide_params):
        settings = OptimizerSettings(max_iters=50, tolerance=1.0, patience=2, log_every=100)
        result = run_optimization(problem_factory.cantilever(volume_bound=0.9), params=wide_params, settings=settings)
        assert result.converged
        assert result.iterations == 3


class TestHistory:
    """ConvergenceHistory frames and StageTimer."""

    def _history(self, n=3):
        history = ConvergenceHistory()
        for i in range(n):
            history.record(10.0 - i, 0.4, 8, 100 + i, {"tdf": 0.1, "sen": 0.2, "fea": 0.6, "mma": 0.0})
            history.add_time("mma", 0.1)
        return history

    def test_frame_columns(self):
        frame = self._history().to_frame()
        assert isinstance(frame, pd.DataFrame)
        assert list(frame.columns) == ["iteration", "objective", "volume_fraction", "active_fields", "band_elements"]
        assert frame["iteration"].tolist() == [1, 2, 3]
        assert frame["objective"].tolist() == [10.0, 9.0, 8.0]

    def test_timing(self):
        history = self._history()
        timing = history.timing_frame()
        assert list(timing.columns) == ["iteration", *STAGES, "total"]
        assert timing["total"].tolist() == pytest.approx([1.0, 1.0, 1.0])
        assert history.mean_stage_times()["fea"] == pytest.approx(0.6)
        shares = history.stage_shares()
        assert sum(shares.values()) == pytest.approx(1.0)
        assert shares["fea"] == pytest.approx(0.6)

    def test_empty_shares(self):
        assert ConvergenceHistory().stage_shares() == {s: 0.0 for s in STAGES}

    def test_dict_round_trip_drops_timing(self):
        history = self._history()
        restored = ConvergenceHistory.from_dict(history.to_dict())
        assert restored.objective == history.objective
        assert restored.band_elements == history.band_elements
        assert history.has_timing and not restored.has_timing

    def test_ragged_dict(self):
        with pytest.raises(ValueError):
            ConvergenceHistory.from_dict({"objective": [1.0, 2.0], "volume_fraction": [0.4]})

    def test_timer_laps_and_resets(self):
        timer = StageTimer()
        with timer.stage("fea"):
            sum(range(1000))
        first = timer.lap()
        assert first["fea"] > 0 and first["mma"] == 0.0
        assert timer.lap()["fea"] == 0.0

    def test_timer_unknown_stage(self):
        with pytest.raises(KeyError):
            with StageTimer().stage("io"):
                pass

    def test_loop_records_all_stages(self, problem_factory, wide_params):
        result = run_optimization(
            problem_factory.cantilever(),
            params=wide_params,
            settings=OptimizerSettings(max_iters=3, log_every=100),
        )
        assert result.history.has_timing
        timing = result.history.timing_frame()
        assert (timing["fea"] > 0).all()
        assert (timing["mma"] > 0).iloc[:-1].all()


@pytest.mark.slow
@pytest.mark.skipif(not RUN_SLOW_TESTS, reason="set GET_RUN_SLOW=1 for benchmark reproductions")
class TestBenchmarkRuns:
    """Coarse benchmark runs that reach the volume bound."""

    def test_cantilever_meets_volume_bound(self):
        problem = build_benchmark("cantilever2d").with_resolution((100, 50))
        result = run_optimization(problem, settings=OptimizerSettings(max_iters=150, log_every=25))
        assert result.final_state.volume_fraction <= problem.volume_bound + 0.01

    def test_mbb_stays_symmetric(self):
        problem = build_benchmark("mbb2d").with_resolution((300, 50))
        result = run_optimization(problem, settings=OptimizerSettings(max_iters=60, log_every=20))
        rho = result.context.mesh.element_grid(result.final_state.densities)
        assert np.allclose(rho, rho[:, ::-1], atol=1e-3)
