# backend/tests/test_postprocess.py
"""
Test Suite 8: Contours, curvature, and design evaluation
"""

import math

import numpy as np
import pytest

from config import PAIR_ASPECT_RATIO, RUN_SLOW_TESTS
from errors import ContourError, SingularSystemError
from fea.mesh import StructuredMesh
from geometry.gaussians import GaussianField, eval_tdf
from numeric.analysis import analyze
from postprocess.contours import Contour, contours_from_mesh, extract_contours
from postprocess.curvature import (
    REFERENCE_JUNCTION_CURVATURE,
    contour_curvature,
    curvature_profile_by_angle,
    fit_pair_sigmas,
    junction_curvature,
    junction_offset,
    rotation_rms,
)
from postprocess.evaluation import binary_extract, evaluate_design, reevaluate_on_mesh
from problems.layout import generate_layout


def _sampled(fn, half_width=1.0, n=201):
    xs = np.linspace(-half_width, half_width, n)
    ys = np.linspace(-half_width, half_width, n)
    X, Y = np.meshgrid(xs, ys)
    return fn(X, Y), xs, ys


def _gaussian_disc(sigma=0.3):
    return _sampled(lambda X, Y: np.exp(-(X**2 + Y**2) / (2 * sigma**2)))


def _pair_contour(ensemble_factory, level, major=0.6, minor=0.2, half_width=1.5, n=401):
    pair = ensemble_factory.crossed_pair(major, minor)
    xs = np.linspace(-half_width, half_width, n)
    X, Y = np.meshgrid(xs, xs)
    values = eval_tdf(pair, np.column_stack([X.ravel(), Y.ravel()])).reshape(X.shape)
    contours = extract_contours(values, level, xs, xs)
    assert len(contours) == 1
    return pair, contours[0]


class TestExtractContours:
    """Marching squares with the solid on the left."""

    def test_disc_radius(self):
        values, xs, ys = _gaussian_disc(0.3)
        contours = extract_contours(values, 0.5, xs, ys)
        assert len(contours) == 1
        radius = 0.3 * math.sqrt(2 * math.log(2))
        r = np.hypot(contours[0].points[:, 0], contours[0].points[:, 1])
        spacing = xs[1] - xs[0]
        assert np.all(np.abs(r - radius) < 0.5 * spacing)

    def test_outer_boundary_counterclockwise(self):
        values, xs, ys = _gaussian_disc(0.3)
        contour = extract_contours(values, 0.5, xs, ys)[0]
        radius = 0.3 * math.sqrt(2 * math.log(2))
        assert contour.is_counterclockwise
        assert contour.signed_area == pytest.approx(math.pi * radius**2, rel=0.01)
        assert contour.length == pytest.approx(2 * math.pi * radius, rel=0.01)
        assert np.array_equal(contour.points[0], contour.points[-1])

    def test_hole_is_clockwise(self):
        values, xs, ys = _sampled(lambda X, Y: np.exp(-((np.hypot(X, Y) - 0.5) ** 2) / 0.02))
        contours = extract_contours(values, 0.5, xs, ys)
        assert len(contours) == 2
        orientations = sorted(c.is_counterclockwise for c in contours)
        assert orientations == [False, True]
        outer = max(contours, key=lambda c: abs(c.signed_area))
        assert outer.is_counterclockwise

    def test_level_above_range(self):
        values, xs, ys = _gaussian_disc()
        assert extract_contours(values, 1.5, xs, ys) == []

    def test_solid_domain_closes_on_boundary(self):
        xs = np.linspace(0.0, 2.0, 5)
        ys = np.linspace(0.0, 1.0, 3)
        contours = extract_contours(np.ones((3, 5)), 0.5, xs, ys)
        assert len(contours) == 1
        assert contours[0].signed_area == pytest.approx(2.0)

    def test_coordinate_mismatch(self):
        with pytest.raises(ValueError):
            extract_contours(np.ones((3, 3)), 0.5, np.arange(4), np.arange(3))

    def test_saddle_resolved_by_centre_value(self):
        grid = np.zeros((4, 4))
        grid[1, 1] = grid[2, 2] = 1.0
        centres = np.zeros((3, 3))
        centres[1, 1] = 0.9
        joined = extract_contours(grid, 0.5, center_values=centres)
        centres[1, 1] = 0.1
        split = extract_contours(grid, 0.5, center_values=centres)
        assert len(joined) == 1
        assert len(split) == 2

    def test_from_mesh_matches_grid(self):
        mesh = StructuredMesh((40, 40), (2.0, 2.0))
        field = GaussianField(mu=[1.0, 1.0], sigma=[0.3, 0.3], angles=[0.0])
        nodal = eval_tdf([field], mesh.node_coordinates())
        contours = contours_from_mesh(nodal, mesh, 0.5, ensemble=[field])
        assert len(contours) == 1
        centre = contours[0].points.mean(axis=0)
        assert np.allclose(centre, [1.0, 1.0], atol=0.02)

    def test_from_mesh_rejects_3d(self, mesh3d):
        with pytest.raises(ValueError):
            contours_from_mesh(np.zeros(mesh3d.n_nodes), mesh3d, 0.5)


class TestCurvature:
    """Spline-smoothed signed curvature."""

    def test_circle(self):
        values, xs, ys = _gaussian_disc(0.3)
        contour = extract_contours(values, 0.5, xs, ys)[0]
        radius = 0.3 * math.sqrt(2 * math.log(2))
        profile = contour_curvature(contour, n_samples=256)
        assert len(profile.kappa) == 256
        assert np.median(profile.kappa) == pytest.approx(1 / radius, rel=0.01)
        assert np.allclose(profile.kappa, 1 / radius, rtol=0.05)

    def test_total_turning_is_two_pi(self):
        values, xs, ys = _gaussian_disc(0.3)
        profile = contour_curvature(extract_contours(values, 0.5, xs, ys)[0])
        assert profile.total_turning == pytest.approx(2 * math.pi, rel=0.01)
        assert profile.arc_length[-1] < profile.length

    def test_hole_turns_negative(self):
        values, xs, ys = _sampled(lambda X, Y: np.exp(-((np.hypot(X, Y) - 0.5) ** 2) / 0.02))
        inner = min(extract_contours(values, 0.5, xs, ys), key=lambda c: abs(c.signed_area))
        assert contour_curvature(inner).total_turning == pytest.approx(-2 * math.pi, rel=0.01)

    def test_too_few_points(self):
        square = Contour(points=np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]], dtype=float), level=0.5)
        with pytest.raises(ContourError):
            contour_curvature(square)

    def test_profile_by_angle(self):
        values, xs, ys = _gaussian_disc(0.3)
        profile = contour_curvature(extract_contours(values, 0.5, xs, ys)[0], n_samples=200)
        angles, kappa = curvature_profile_by_angle(profile, center=(0.0, 0.0), n_angles=90)
        assert angles.shape == kappa.shape == (90,)
        assert angles[0] == 0.0 and angles[-1] < 2 * math.pi
        assert np.ptp(kappa) < 0.2 * kappa.mean()


class TestCrossedPair:
    """Junction of two fields rotated +/- pi/4."""

    def test_junction_offset_lies_on_level_set(self, ensemble_factory):
        pair = ensemble_factory.crossed_pair(0.6, 0.2)
        for level in (0.2, 0.5, 1.2):
            d = junction_offset(0.6, 0.2, level)
            assert eval_tdf(pair, np.array([[d, 0.0]]))[0] == pytest.approx(level, rel=1e-10)

    def test_junction_curvature_matches_contour(self, ensemble_factory):
        level = 0.5
        _, contour = _pair_contour(ensemble_factory, level)
        profile = contour_curvature(contour, n_samples=2000)
        d = junction_offset(0.6, 0.2, level)
        nearest = int(np.argmin(np.hypot(profile.points[:, 0] - d, profile.points[:, 1])))
        expected = junction_curvature(0.6, 0.2, level)
        assert expected < 0
        assert profile.kappa[nearest] == pytest.approx(expected, rel=0.1)

    def test_area_shrinks_with_threshold(self, ensemble_factory):
        areas = [_pair_contour(ensemble_factory, t)[1].signed_area for t in (0.3, 0.6, 0.9)]
        assert areas[0] > areas[1] > areas[2] > 0

    def test_junction_flattens_with_threshold(self):
        kappas = [junction_curvature(0.6, 0.2, t) for t in (0.1, 0.5, 0.9)]
        assert kappas[0] < kappas[1] < kappas[2]

    def test_invalid_level(self):
        with pytest.raises(ValueError):
            junction_curvature(0.6, 0.2, 2.0)

    def test_fit_pins_scale_from_one_threshold(self):
        major, minor = fit_pair_sigmas()
        assert major == pytest.approx(PAIR_ASPECT_RATIO * minor)
        assert junction_curvature(major, minor, 0.5) == pytest.approx(-1.13, rel=1e-6)

    @pytest.mark.parametrize("aspect", [6.0, 8.0, 12.0])
    def test_fit_predicts_other_thresholds(self, aspect):
        major, minor = fit_pair_sigmas(targets=((0.5, -1.13),), aspect=aspect)
        for level, kappa in REFERENCE_JUNCTION_CURVATURE:
            if level == 0.5:
                continue
            assert junction_curvature(major, minor, level) == pytest.approx(kappa, rel=0.25), \
                f"aspect {aspect}: T={level} off the reference curvature"

    def test_fit_rejects_aspect_below_one(self):
        with pytest.raises(ValueError):
            fit_pair_sigmas(aspect=0.5)

    def test_quarter_turn_symmetry(self, ensemble_factory):
        _, contour = _pair_contour(ensemble_factory, 0.5)
        profile = contour_curvature(contour, n_samples=4000)
        _, kappa = curvature_profile_by_angle(profile, center=(0.0, 0.0), n_angles=720)
        assert rotation_rms(kappa) < 0.01

    def test_rotation_rms_separates_four_fold_from_two_fold(self):
        theta = np.linspace(0.0, 2 * np.pi, 720, endpoint=False)
        assert rotation_rms(2.0 + np.cos(4 * theta)) == pytest.approx(0.0, abs=1e-12)
        assert rotation_rms(2.0 + np.cos(2 * theta)) == pytest.approx(math.sqrt(2 / 4.5), rel=1e-9)


class TestEvaluation:
    """Binary extraction and re-evaluation."""

    @pytest.fixture
    def cantilever(self, problem_factory):
        problem = problem_factory.cantilever(resolution=(20, 10))
        context = problem_factory.context(problem)
        ensemble = generate_layout(problem.layout, problem.extents)
        return problem, context, ensemble

    def test_binary_densities(self, cantilever, params):
        _, context, ensemble = cantilever
        binary = binary_extract(ensemble, context, params)
        assert set(np.unique(binary.densities)) == {params.alpha_floor, 1.0}, \
            f"binary design has densities {np.unique(binary.densities)}"
        solid = np.count_nonzero(binary.densities == 1.0)
        assert binary.volume_fraction == pytest.approx(solid / context.mesh.n_elements)
        # the solved field is the one V_f was counted on
        assert np.array_equal(binary.state.densities, binary.densities)
        filled = (binary.state.densities - params.alpha_floor) / (1.0 - params.alpha_floor)
        assert binary.volume_fraction == pytest.approx(filled.mean())
        assert binary.objective > 0

    def test_binary_is_stable(self, cantilever, params):
        _, context, ensemble = cantilever
        a = binary_extract(ensemble, context, params)
        b = binary_extract(ensemble, context, params.binary())
        assert np.array_equal(a.densities, b.densities)
        assert a.objective == pytest.approx(b.objective, rel=1e-12)

    def test_fully_void(self, cantilever, params):
        _, context, _ = cantilever
        with pytest.raises(SingularSystemError):
            binary_extract([], context, params)

    def test_evaluation_metrics(self, cantilever, params, wide_params):
        _, context, ensemble = cantilever
        sharp = evaluate_design(ensemble, context, params)
        soft = evaluate_design(ensemble, context, wide_params)
        assert 0.0 <= sharp.nondiscreteness <= soft.nondiscreteness <= 100.0
        assert sharp.binary.objective == pytest.approx(soft.binary.objective)
        assert sharp.to_dict()["resolution"] == [20, 10]

        smooth = analyze(ensemble, context, params)
        assert sharp.objective == pytest.approx(smooth.objective)

    def test_reevaluate_same_mesh(self, cantilever, params):
        problem, context, ensemble = cantilever
        direct = evaluate_design(ensemble, context, params)
        again = reevaluate_on_mesh(ensemble, (20, 10), problem, params)
        assert again.objective == pytest.approx(direct.objective, rel=1e-10)
        assert again.volume_fraction == pytest.approx(direct.volume_fraction, rel=1e-12)

    def test_reevaluate_finer_mesh(self, cantilever, wide_params):
        problem, context, ensemble = cantilever
        coarse = evaluate_design(ensemble, context, wide_params)
        fine = reevaluate_on_mesh(ensemble, (40, 20), problem, wide_params)
        assert fine.resolution == (40, 20)
        assert fine.volume_fraction == pytest.approx(coarse.volume_fraction, abs=0.05)

    def test_reevaluate_reduced_problem(self, problem_factory, wide_params):
        problem = problem_factory.mbb(resolution=(24, 8), reduce=True)
        context = problem_factory.context(problem)
        ensemble = generate_layout(context.problem.layout, context.problem.extents)
        result = reevaluate_on_mesh(ensemble, (48, 16), problem, wide_params)
        assert result.resolution == (48, 16)
        assert result.objective > 0


@pytest.mark.slow
@pytest.mark.skipif(not RUN_SLOW_TESTS, reason="set GET_RUN_SLOW=1 for mesh-independence checks")
class TestMeshIndependence:
    """A fixed ensemble re-evaluated on refined meshes."""

    def test_objective_converges(self, problem_factory, params):
        problem = problem_factory.cantilever(resolution=(40, 20))
        ensemble = generate_layout(problem.layout, problem.extents)
        values = [
            reevaluate_on_mesh(ensemble, res, problem, params).objective
            for res in ((80, 40), (160, 80), (320, 160))
        ]
        assert abs(values[2] - values[1]) < abs(values[1] - values[0])
