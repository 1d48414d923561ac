# backend/tests/test_problems.py
"""
Test Suite 6: Problem definitions, benchmarks, symmetry reduction and regions

Benchmark checks run on the definitions (and on coarse copies when a mesh is
needed) so nothing here builds a full-size system.
"""

import json

import numpy as np
import pytest

from errors import DefinitionError, ShapeError
from fea.mesh import StructuredMesh
from problems.benchmarks import BENCHMARK_NAMES, build_benchmark
from problems.context import build_context, lump_distributed_load
from problems.definitions import (
    DistributedLoad,
    InitialLayoutSpec,
    NonDesignRegion,
    ProblemDefinition,
    Support,
)
from problems.layout import generate_layout
from problems.nondesign import apply_nondesign, resolve_regions
from problems.symmetry import mirror_parameter_map, prepare_problem, symmetry_reduce


def _analysed_layout(name):
    problem = build_benchmark(name)
    analysed, _ = prepare_problem(problem)
    return analysed, generate_layout(analysed.layout, analysed.extents, void_regions=analysed.regions)


class TestBenchmarks:
    """Registry and initial layouts of the built-in problems."""

    @pytest.mark.parametrize("name, fields", [
        ("cantilever2d", 32),
        ("mbb2d", 96),
        ("lbeam2d", 128),
        ("bridge2d", 60),
        ("mechanism2d", 50),
        ("cantilever3d", 64),
        ("mbb3d", 48),
        ("chair3d", 48),
    ])
    def test_field_counts(self, name, fields):
        analysed, ensemble = _analysed_layout(name)
        assert len(ensemble) == fields, \
            f"{name}: expected {fields} initial fields, got {len(ensemble)}"
        per_field = 5 if analysed.dim == 2 else 9
        assert sum(f.as_vector().size for f in ensemble) == per_field * fields

    @pytest.mark.parametrize("name, resolution", [
        ("bridge2d", (150, 100)),
        ("mechanism2d", (200, 100)),
        ("mbb3d", (120, 20, 40)),
        ("chair3d", (100, 25, 100)),
        ("mbb2d", (600, 100)),
    ])
    def test_analysed_resolution(self, name, resolution):
        analysed, _ = prepare_problem(build_benchmark(name))
        assert analysed.resolution == resolution

    def test_layout_centres_avoid_void(self):
        analysed, ensemble = _analysed_layout("lbeam2d")
        void = analysed.regions[0]
        for f in ensemble:
            assert not (np.all(f.mu >= void.lo) and np.all(f.mu <= void.hi))

    def test_mbb_pinned_left_roller_right(self):
        left, right = build_benchmark("mbb2d").supports
        assert left.components == (0, 1)
        assert right.components == (1,)

        context = build_context(build_benchmark("mbb2d").with_resolution((60, 10)))
        corner = context.mesh.node_index(60, 0)
        assert sorted(context.loadcase.fixed_dofs.tolist()) == [0, 1, 2 * corner + 1]

    def test_unknown_name_lists_choices(self):
        with pytest.raises(DefinitionError) as exc:
            build_benchmark("tower2d")
        assert "cantilever2d" in str(exc.value)

    def test_fresh_instances(self):
        a = build_benchmark("cantilever2d")
        a.loads.clear()
        assert build_benchmark("cantilever2d").loads

    @pytest.mark.parametrize("name", BENCHMARK_NAMES)
    def test_definition_round_trip(self, name):
        problem = build_benchmark(name)
        data = json.loads(json.dumps(problem.to_dict()))
        rebuilt = ProblemDefinition.from_dict(data)
        assert rebuilt.fingerprint() == problem.fingerprint()


class TestDefinitions:
    """Validation of hand-written definitions."""

    def _base(self, **overrides):
        kwargs = dict(
            name="box",
            extents=(2.0, 1.0),
            resolution=(4, 2),
            layout=InitialLayoutSpec(grid=(2, 1)),
        )
        kwargs.update(overrides)
        return ProblemDefinition(**kwargs)

    @pytest.mark.parametrize("overrides", [
        {"resolution": (4, 2, 2)},
        {"objective": "stress"},
        {"volume_bound": 1.0},
        {"objective": "mpe"},
        {"layout": InitialLayoutSpec(grid=(2, 1, 1))},
        {"regions": [NonDesignRegion(lo=(0.0, 0.0), hi=(3.0, 1.0))]},
    ])
    def test_rejects(self, overrides):
        with pytest.raises(DefinitionError):
            self._base(**overrides)

    def test_malformed_dict(self):
        with pytest.raises(DefinitionError):
            ProblemDefinition.from_dict({"name": "x"})

    def test_support_defaults_to_all_components(self):
        assert Support(lo=(0, 0, 0), hi=(0, 1, 1)).components == (0, 1, 2)

    def test_fingerprint_tracks_changes(self):
        p = self._base()
        assert p.fingerprint() == self._base().fingerprint()
        assert p.with_resolution((8, 4)).fingerprint() != p.fingerprint()

    def test_default_layout_angles(self):
        assert InitialLayoutSpec(grid=(2, 2)).fields_per_cell == 2
        assert InitialLayoutSpec(grid=(2, 2, 2)).fields_per_cell == 4


class TestLayout:
    """Staggered X-pattern placement."""

    def test_cell_centres_and_sigmas(self):
        spec = InitialLayoutSpec(grid=(2, 1), sigma_major_fraction=0.5, sigma_minor_fraction=0.1)
        ensemble = generate_layout(spec, (2.0, 1.0))
        assert len(ensemble) == 4
        assert np.allclose(ensemble[0].mu, [0.5, 0.5])
        assert np.allclose(ensemble[2].mu, [1.5, 0.5])
        diagonal = np.sqrt(2.0)
        assert np.allclose(ensemble[0].sigma, [0.5 * diagonal, 0.1 * diagonal])
        assert ensemble[0].angles[0] == pytest.approx(np.pi / 4)
        assert ensemble[1].angles[0] == pytest.approx(-np.pi / 4)

    def test_x_fastest_order(self):
        ensemble = generate_layout(InitialLayoutSpec(grid=(3, 2), angles=[0.0]), (3.0, 2.0))
        assert [tuple(f.mu) for f in ensemble[:4]] == [(0.5, 0.5), (1.5, 0.5), (2.5, 0.5), (0.5, 1.5)]

    def test_origin_offset(self):
        ensemble = generate_layout(InitialLayoutSpec(grid=(1, 1)), (1.0, 1.0), origin=(2.0, 3.0))
        assert np.allclose(ensemble[0].mu, [2.5, 3.5])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            generate_layout(InitialLayoutSpec(grid=(2, 2)), (1.0, 1.0, 1.0))

    def test_symmetric_problem_gives_mirror_symmetric_layout(self, problem_factory):
        problem = problem_factory.mbb()
        ensemble = generate_layout(problem.layout, problem.extents)
        partner, _ = mirror_parameter_map(ensemble, problem.symmetry_planes[0])
        assert np.array_equal(partner[partner], np.arange(len(ensemble)))
        assert not np.any(partner == np.arange(len(ensemble)))


class TestSymmetryReduction:
    """Reduced problems and their reconstruction."""

    def test_point_load_on_plane_is_halved(self, problem_factory):
        reduced, _ = symmetry_reduce(problem_factory.mbb())
        assert reduced.extents == (1.5, 1.0)
        assert reduced.resolution == (12, 8)
        assert reduced.loads[0].force == (0.0, -0.5)
        assert not reduced.symmetry_planes

    def test_supports_beyond_plane_dropped_and_plane_supported(self, problem_factory):
        reduced, _ = symmetry_reduce(problem_factory.mbb())
        assert len(reduced.supports) == 2
        plane = reduced.supports[-1]
        assert plane.lo == (1.5, 0.0) and plane.hi == (1.5, 1.0)
        assert plane.components == (0,)

    def test_distributed_load_total_halves(self):
        problem = build_benchmark("bridge2d").with_resolution((30, 10))
        full = build_context(problem, reduce=False)
        half = build_context(problem)
        assert half.is_reduced and not full.is_reduced
        assert full.loadcase.force[1::2].sum() == pytest.approx(-3.0)
        assert half.loadcase.force[1::2].sum() == pytest.approx(-1.5)

    def test_springs_on_plane_are_halved(self):
        reduced, _ = symmetry_reduce(build_benchmark("mechanism2d"))
        assert [s.stiffness for s in reduced.springs] == [0.05, 0.05]
        assert reduced.loads[0].force == (0.5, 0.0)

    def test_odd_resolution(self, problem_factory):
        with pytest.raises(DefinitionError):
            symmetry_reduce(problem_factory.mbb(resolution=(25, 8)))

    def test_no_planes(self, problem_factory):
        with pytest.raises(DefinitionError):
            symmetry_reduce(problem_factory.cantilever())

    def test_off_centre_plane(self):
        problem = build_benchmark("bridge2d")
        problem.symmetry_planes[0].coordinate = 1.0
        with pytest.raises(DefinitionError):
            symmetry_reduce(problem)

    def test_port_beyond_plane(self):
        problem = build_benchmark("mechanism2d")
        problem.symmetry_planes[0].axis = 0
        with pytest.raises(DefinitionError):
            symmetry_reduce(problem)

    def test_reconstructed_fields_are_mirror_images(self, problem_factory):
        reduced, recon = symmetry_reduce(problem_factory.mbb())
        grid = np.random.default_rng(1).uniform(size=12 * 8)
        full = recon.densities(grid).reshape(8, 24)
        assert np.array_equal(full, full[:, ::-1])

        nodes = np.random.default_rng(2).uniform(size=13 * 9)
        full_nodes = recon.node_values(nodes).reshape(9, 25)
        assert np.array_equal(full_nodes, full_nodes[:, ::-1])

    def test_reconstructed_ensemble(self, problem_factory):
        reduced, recon = symmetry_reduce(problem_factory.mbb())
        half = generate_layout(reduced.layout, reduced.extents)
        full = recon.ensemble(half)
        assert len(full) == 2 * len(half)
        assert np.allclose(full[len(half)].mu, [3.0 - half[0].mu[0], half[0].mu[1]])

    def test_two_planes_quarter_the_domain(self):
        reduced, recon = symmetry_reduce(build_benchmark("mbb3d").with_resolution((24, 4, 4)))
        assert reduced.resolution == (12, 2, 4)
        assert len(recon.planes) == 2
        values = np.arange(12 * 2 * 4, dtype=float)
        assert recon.densities(values).size == 24 * 4 * 4

    def test_reduce_flag_respected(self):
        analysed, recon = prepare_problem(build_benchmark("mbb2d"))
        assert recon is None and analysed.resolution == (600, 100)


class TestDistributedLoads:
    """Nodal lumping of line and surface loads."""

    def test_line_total(self):
        mesh = StructuredMesh((30, 10), (3.0, 1.0))
        f = lump_distributed_load(mesh, DistributedLoad(lo=(0.0, 1.0), hi=(3.0, 1.0), intensity=(0.0, -1.0)))
        assert f[1::2].sum() == pytest.approx(-3.0)
        assert f[0::2].sum() == 0.0
        top_left = mesh.node_index(0, 10)
        assert f[2 * top_left + 1] == pytest.approx(-0.05)

    def test_partial_segment(self):
        mesh = StructuredMesh((10, 10), (1.0, 1.0))
        f = lump_distributed_load(mesh, DistributedLoad(lo=(0.2, 1.0), hi=(0.6, 1.0), intensity=(0.0, 2.0)))
        assert f[1::2].sum() == pytest.approx(0.8)

    def test_surface_total(self):
        mesh = StructuredMesh((4, 4, 2), (4.0, 4.0, 2.0))
        load = DistributedLoad(lo=(0.0, 0.0, 2.0), hi=(4.0, 4.0, 2.0), intensity=(0.0, 0.0, -1.0))
        f = lump_distributed_load(mesh, load)
        assert f[2::3].sum() == pytest.approx(-16.0)

    def test_empty_box(self):
        mesh = StructuredMesh((4, 4), (1.0, 1.0))
        with pytest.raises(DefinitionError):
            lump_distributed_load(mesh, DistributedLoad(lo=(0.3, 0.0), hi=(0.4, 0.0), intensity=(1.0, 0.0)))

    def test_off_node_point_load(self, problem_factory):
        problem = problem_factory.cantilever(resolution=(20, 10))
        problem.loads[0].point = (2.0, 0.55)
        with pytest.raises(DefinitionError):
            build_context(problem)


class TestContext:
    """Resolved load cases."""

    def test_mpe_context_has_output_case(self, problem_factory):
        context = problem_factory.context(problem_factory.inverter())
        assert context.output_loadcase is not None
        out = context.output_loadcase.force
        node = context.mesh.node_on_grid((1.0, 0.5))
        assert out[2 * node] == -1.0 and np.count_nonzero(out) == 1
        assert np.array_equal(context.output_loadcase.fixed_dofs, context.loadcase.fixed_dofs)

    def test_compliance_context_has_none(self, problem_factory):
        assert problem_factory.context(problem_factory.cantilever()).output_loadcase is None

    def test_fixed_dofs(self, problem_factory):
        context = problem_factory.context(problem_factory.cantilever(resolution=(20, 10)))
        assert context.loadcase.fixed_dofs.size == 2 * 11


class TestNonDesignRegions:
    """Frozen solid and void elements."""

    def test_resolve_and_apply(self):
        mesh = StructuredMesh((4, 4), (1.0, 1.0))
        regions = resolve_regions(mesh, [
            NonDesignRegion(lo=(0.0, 0.0), hi=(0.5, 0.5), kind="void"),
            NonDesignRegion(lo=(0.5, 0.75), hi=(1.0, 1.0), kind="solid"),
        ])
        assert regions.void.tolist() == [0, 1, 4, 5]
        assert regions.solid.tolist() == [14, 15]
        assert regions.clamped.sum() == 6

        rho = apply_nondesign(np.full(16, 0.5), regions)
        assert rho[0] == regions.rho_void and rho[15] == 1.0 and rho[2] == 0.5
        assert np.array_equal(apply_nondesign(rho, regions), rho)

    def test_overlap(self):
        mesh = StructuredMesh((4, 4), (1.0, 1.0))
        with pytest.raises(DefinitionError):
            resolve_regions(mesh, [
                NonDesignRegion(lo=(0.0, 0.0), hi=(0.5, 0.5), kind="void"),
                NonDesignRegion(lo=(0.25, 0.25), hi=(1.0, 1.0), kind="solid"),
            ])

    def test_wrong_length(self):
        regions = resolve_regions(StructuredMesh((2, 2), (1.0, 1.0)), [])
        assert regions.is_empty
        with pytest.raises(ShapeError):
            apply_nondesign(np.ones(3), regions)

    def test_chair_regions_do_not_overlap(self):
        context = build_context(build_benchmark("chair3d").with_resolution((60, 30, 60)))
        assert context.regions.solid.size > 0 and context.regions.void.size > 0
        assert not np.intersect1d(context.regions.solid, context.regions.void).size
