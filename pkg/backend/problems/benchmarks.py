# backend/problems/benchmarks.py
"""
Built-in benchmark problems.

Layout grids describe the analysed domain, i.e. the reduced domain when a
benchmark reduces by symmetry. Field counts per benchmark:

    cantilever2d 32, mbb2d 96, lbeam2d 128, bridge2d 60, mechanism2d 50,
    cantilever3d 64, mbb3d 48, chair3d 48
"""

from typing import Callable, Dict, List

from errors import DefinitionError
from problems.definitions import (
    DistributedLoad,
    InitialLayoutSpec,
    NonDesignRegion,
    OutputPort,
    PointLoad,
    ProblemDefinition,
    Spring,
    Support,
    SymmetryPlane,
)


def cantilever2d() -> ProblemDefinition:
    return ProblemDefinition(
        name="cantilever2d",
        extents=(2.0, 1.0),
        resolution=(200, 100),
        layout=InitialLayoutSpec(grid=(4, 4)),
        volume_bound=0.4,
        loads=[PointLoad(point=(2.0, 0.5), force=(0.0, -1.0))],
        supports=[Support(lo=(0.0, 0.0), hi=(0.0, 1.0))],
    )


def mbb2d() -> ProblemDefinition:
    # Full domain on purpose: the run checks that mirror symmetry survives.
    return ProblemDefinition(
        name="mbb2d",
        extents=(6.0, 1.0),
        resolution=(600, 100),
        layout=InitialLayoutSpec(grid=(12, 4)),
        volume_bound=0.45,
        loads=[PointLoad(point=(3.0, 1.0), force=(0.0, -1.0))],
        supports=[
            Support(lo=(0.0, 0.0), hi=(0.0, 0.0)),
            Support(lo=(6.0, 0.0), hi=(6.0, 0.0), components=(1,)),
        ],
        symmetry_planes=[SymmetryPlane(axis=0, coordinate=3.0)],
        reduce_symmetry=False,
        round_sensitivities=True,
    )


def lbeam2d() -> ProblemDefinition:
    return ProblemDefinition(
        name="lbeam2d",
        extents=(1.0, 1.0),
        resolution=(200, 200),
        layout=InitialLayoutSpec(grid=(10, 10), skip_void=True),
        volume_bound=0.35,
        loads=[PointLoad(point=(1.0, 0.2), force=(0.0, -1.0))],
        supports=[Support(lo=(0.0, 1.0), hi=(0.4, 1.0))],
        regions=[NonDesignRegion(lo=(0.4, 0.4), hi=(1.0, 1.0), kind="void")],
    )


def bridge2d() -> ProblemDefinition:
    return ProblemDefinition(
        name="bridge2d",
        extents=(3.0, 1.0),
        resolution=(300, 100),
        layout=InitialLayoutSpec(grid=(6, 5)),
        volume_bound=0.35,
        loads=[DistributedLoad(lo=(0.0, 1.0), hi=(3.0, 1.0), intensity=(0.0, -1.0))],
        supports=[
            Support(lo=(0.0, 0.0), hi=(0.0, 0.0)),
            Support(lo=(3.0, 0.0), hi=(3.0, 0.0)),
        ],
        regions=[NonDesignRegion(lo=(0.0, 0.9), hi=(3.0, 1.0), kind="solid")],
        symmetry_planes=[SymmetryPlane(axis=0, coordinate=1.5)],
        reduce_symmetry=True,
    )


def mechanism2d() -> ProblemDefinition:
    """Force inverter: push right at the input, the output port moves left."""
    return ProblemDefinition(
        name="mechanism2d",
        extents=(2.0, 2.0),
        resolution=(200, 200),
        layout=InitialLayoutSpec(grid=(5, 5)),
        objective="mpe",
        volume_bound=0.3,
        loads=[PointLoad(point=(0.0, 1.0), force=(1.0, 0.0))],
        supports=[
            Support(lo=(0.0, 0.0), hi=(0.0, 0.04)),
            Support(lo=(0.0, 1.96), hi=(0.0, 2.0)),
        ],
        springs=[
            Spring(point=(0.0, 1.0), axis=0, stiffness=0.1),
            Spring(point=(2.0, 1.0), axis=0, stiffness=0.1),
        ],
        output_port=OutputPort(point=(2.0, 1.0), direction=(-1.0, 0.0)),
        symmetry_planes=[SymmetryPlane(axis=1, coordinate=1.0)],
        reduce_symmetry=True,
    )


def cantilever3d() -> ProblemDefinition:
    return ProblemDefinition(
        name="cantilever3d",
        extents=(64.0, 32.0, 32.0),
        resolution=(80, 40, 40),
        layout=InitialLayoutSpec(grid=(4, 2, 2)),
        volume_bound=0.25,
        loads=[
            DistributedLoad(lo=(64.0, 0.0, 0.0), hi=(64.0, 32.0, 0.0), intensity=(0.0, 0.0, -1.0))
        ],
        supports=[Support(lo=(0.0, 0.0, 0.0), hi=(0.0, 32.0, 32.0))],
        symmetry_planes=[SymmetryPlane(axis=1, coordinate=16.0)],
        reduce_symmetry=False,
    )


def mbb3d() -> ProblemDefinition:
    return ProblemDefinition(
        name="mbb3d",
        extents=(192.0, 32.0, 32.0),
        resolution=(240, 40, 40),
        layout=InitialLayoutSpec(grid=(6, 1, 2)),
        volume_bound=0.2,
        loads=[
            DistributedLoad(lo=(96.0, 0.0, 32.0), hi=(96.0, 32.0, 32.0), intensity=(0.0, 0.0, -1.0))
        ],
        supports=[
            Support(lo=(0.0, 0.0, 0.0), hi=(0.0, 0.0, 0.0)),
            Support(lo=(0.0, 32.0, 0.0), hi=(0.0, 32.0, 0.0)),
            Support(lo=(192.0, 0.0, 0.0), hi=(192.0, 0.0, 0.0), components=(1, 2)),
            Support(lo=(192.0, 32.0, 0.0), hi=(192.0, 32.0, 0.0), components=(1, 2)),
        ],
        symmetry_planes=[
            SymmetryPlane(axis=0, coordinate=96.0),
            SymmetryPlane(axis=1, coordinate=16.0),
        ],
        reduce_symmetry=True,
    )


def chair3d() -> ProblemDefinition:
    return ProblemDefinition(
        name="chair3d",
        extents=(6.0, 3.0, 6.0),
        resolution=(100, 50, 100),
        layout=InitialLayoutSpec(grid=(6, 1, 4), skip_void=True),
        volume_bound=0.1,
        loads=[
            DistributedLoad(lo=(0.0, 0.0, 2.0), hi=(4.0, 3.0, 2.0), intensity=(0.0, 0.0, -1.0)),
            DistributedLoad(lo=(4.0, 0.0, 2.0), hi=(4.0, 3.0, 6.0), intensity=(0.2, 0.0, 0.0)),
        ],
        supports=[
            Support(lo=(0.0, 0.0, 0.0), hi=(0.0, 0.0, 0.0)),
            Support(lo=(6.0, 0.0, 0.0), hi=(6.0, 0.0, 0.0)),
            Support(lo=(0.0, 3.0, 0.0), hi=(0.0, 3.0, 0.0)),
            Support(lo=(6.0, 3.0, 0.0), hi=(6.0, 3.0, 0.0)),
        ],
        regions=[
            NonDesignRegion(lo=(0.0, 0.0, 2.0), hi=(4.0, 3.0, 6.0), kind="void"),
            NonDesignRegion(lo=(0.0, 0.0, 1.9), hi=(4.0, 3.0, 2.0), kind="solid"),
            NonDesignRegion(lo=(4.0, 0.0, 2.0), hi=(4.1, 3.0, 6.0), kind="solid"),
        ],
        symmetry_planes=[SymmetryPlane(axis=1, coordinate=1.5)],
        reduce_symmetry=True,
    )


BENCHMARKS: Dict[str, Callable[[], ProblemDefinition]] = {
    "cantilever2d": cantilever2d,
    "mbb2d": mbb2d,
    "lbeam2d": lbeam2d,
    "bridge2d": bridge2d,
    "mechanism2d": mechanism2d,
    "cantilever3d": cantilever3d,
    "mbb3d": mbb3d,
    "chair3d": chair3d,
}

BENCHMARK_NAMES: List[str] = list(BENCHMARKS)


def build_benchmark(name: str) -> ProblemDefinition:
    """
    Fresh ProblemDefinition for a named benchmark.

    Raises:
        DefinitionError: Unknown name (message lists the valid ones)
    """
    try:
        factory = BENCHMARKS[name]
    except KeyError:
        raise DefinitionError(
            f"unknown benchmark '{name}'; choose one of: {', '.join(BENCHMARK_NAMES)}"
        ) from None
    return factory()
