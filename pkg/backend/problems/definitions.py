# backend/problems/definitions.py
"""
Declarative problem definitions.

A ProblemDefinition only describes the physics in domain coordinates (boxes,
points, intensities). Nothing here knows about dofs; `problems.context`
resolves a definition against its mesh.

Boxes are closed [lo, hi] in every axis. A box that is flat along an axis
(lo == hi) describes an edge or face.
"""

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from config import LAYOUT_SIGMA_MAJOR_FRACTION, LAYOUT_SIGMA_MINOR_FRACTION
from errors import DefinitionError

Vector = Tuple[float, ...]


def _vec(values: Sequence[float]) -> Vector:
    return tuple(float(v) for v in values)


@dataclass
class PointLoad:
    point: Vector
    force: Vector
    kind: str = "point"

    def __post_init__(self):
        self.point, self.force = _vec(self.point), _vec(self.force)


@dataclass
class DistributedLoad:
    """Line or surface load of `intensity` per unit length (area) over a box."""

    lo: Vector
    hi: Vector
    intensity: Vector
    kind: str = "distributed"

    def __post_init__(self):
        self.lo, self.hi, self.intensity = _vec(self.lo), _vec(self.hi), _vec(self.intensity)


Load = Union[PointLoad, DistributedLoad]


@dataclass
class Support:
    """Zero displacement on `components` for every node in the box."""

    lo: Vector
    hi: Vector
    components: Tuple[int, ...] = ()

    def __post_init__(self):
        self.lo, self.hi = _vec(self.lo), _vec(self.hi)
        self.components = tuple(int(c) for c in self.components) or tuple(range(len(self.lo)))


@dataclass
class Spring:
    point: Vector
    axis: int
    stiffness: float

    def __post_init__(self):
        self.point = _vec(self.point)
        if self.stiffness < 0:
            raise DefinitionError(f"spring stiffness must be >= 0, got {self.stiffness}")


@dataclass
class OutputPort:
    """Where the unit pseudo-load of a mechanism problem is applied."""

    point: Vector
    direction: Vector

    def __post_init__(self):
        self.point, self.direction = _vec(self.point), _vec(self.direction)


@dataclass
class NonDesignRegion:
    lo: Vector
    hi: Vector
    kind: str = "void"

    def __post_init__(self):
        self.lo, self.hi = _vec(self.lo), _vec(self.hi)
        if self.kind not in ("solid", "void"):
            raise DefinitionError(f"region kind must be 'solid' or 'void', got '{self.kind}'")


@dataclass
class SymmetryPlane:
    axis: int
    coordinate: float


@dataclass
class InitialLayoutSpec:
    """
    Staggered array of crossed fields.

    One cell per grid position; every cell holds len(angles) fields centred on
    the cell, one per rotation. 2D angles are scalars, 3D angles are Euler
    triples. Sigmas are fractions of the cell diagonal (major, minor, ...).
    """

    grid: Tuple[int, ...]
    angles: List[Any] = field(default_factory=list)
    sigma_major_fraction: float = LAYOUT_SIGMA_MAJOR_FRACTION
    sigma_minor_fraction: float = LAYOUT_SIGMA_MINOR_FRACTION
    skip_void: bool = True

    def __post_init__(self):
        self.grid = tuple(int(g) for g in self.grid)
        if len(self.grid) not in (2, 3) or any(g < 1 for g in self.grid):
            raise DefinitionError(f"layout grid must be 2 or 3 positive counts, got {self.grid}")
        if not self.angles:
            self.angles = default_layout_angles(len(self.grid), 2 if len(self.grid) == 2 else 4)
        if len(self.grid) == 2:
            self.angles = [float(a) for a in self.angles]
        else:
            self.angles = [tuple(float(v) for v in a) for a in self.angles]
        if not 0 < self.sigma_minor_fraction <= self.sigma_major_fraction:
            raise DefinitionError("layout sigma fractions must satisfy 0 < minor <= major")

    @property
    def dim(self) -> int:
        return len(self.grid)

    @property
    def fields_per_cell(self) -> int:
        return len(self.angles)


def default_layout_angles(dim: int, fields_per_cell: int) -> List[Any]:
    """
    Rotations used per cell when a layout names only a field count.

    2D: evenly fanned angles starting at +pi/4 (two fields give the +/-pi/4
    X-pair). 3D: four fields combine +/-pi/4 about the second and third Euler
    axes; other counts fan about the third axis.
    """
    if dim == 2:
        return [math.pi / 4 - i * math.pi / fields_per_cell for i in range(fields_per_cell)]
    q = math.pi / 4
    if fields_per_cell == 4:
        return [(0.0, q, q), (0.0, q, -q), (0.0, -q, q), (0.0, -q, -q)]
    return [(0.0, 0.0, q - i * math.pi / fields_per_cell) for i in range(fields_per_cell)]


@dataclass
class ProblemDefinition:
    """Domain, mesh, loads, supports, regions, and objective of one problem."""

    name: str
    extents: Vector
    resolution: Tuple[int, ...]
    layout: InitialLayoutSpec
    objective: str = "compliance"
    volume_bound: float = 0.4
    loads: List[Load] = field(default_factory=list)
    supports: List[Support] = field(default_factory=list)
    springs: List[Spring] = field(default_factory=list)
    output_port: Optional[OutputPort] = None
    regions: List[NonDesignRegion] = field(default_factory=list)
    symmetry_planes: List[SymmetryPlane] = field(default_factory=list)
    reduce_symmetry: bool = False
    round_sensitivities: bool = False

    def __post_init__(self):
        self.extents = _vec(self.extents)
        self.resolution = tuple(int(n) for n in self.resolution)
        dim = len(self.extents)
        if dim not in (2, 3) or len(self.resolution) != dim:
            raise DefinitionError(
                f"{self.name}: extents {self.extents} and resolution {self.resolution} disagree"
            )
        if self.layout.dim != dim:
            raise DefinitionError(f"{self.name}: layout is {self.layout.dim}D, domain is {dim}D")
        if self.objective not in ("compliance", "mpe"):
            raise DefinitionError(f"{self.name}: unknown objective '{self.objective}'")
        if not 0 < self.volume_bound < 1:
            raise DefinitionError(f"{self.name}: volume bound must lie in (0, 1), got {self.volume_bound}")
        if self.objective == "mpe" and self.output_port is None:
            raise DefinitionError(f"{self.name}: mpe objective needs an output port")

        tol = 1e-9 * max(self.extents)
        for region in self.regions:
            if any(lo < -tol or hi > L + tol for lo, hi, L in zip(region.lo, region.hi, self.extents)):
                raise DefinitionError(f"{self.name}: region {region.lo}-{region.hi} leaves the domain")
        for plane in self.symmetry_planes:
            if not 0 <= plane.axis < dim:
                raise DefinitionError(f"{self.name}: symmetry axis {plane.axis} out of range")

    @property
    def dim(self) -> int:
        return len(self.extents)

    def with_resolution(self, resolution: Sequence[int]) -> "ProblemDefinition":
        return replace(self, resolution=tuple(int(n) for n in resolution))

    def with_layout(self, layout: InitialLayoutSpec) -> "ProblemDefinition":
        return replace(self, layout=layout)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def fingerprint(self) -> str:
        """Stable hash of the full definition (used to tie designs to problems)."""
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ProblemDefinition":
        """
        Rebuild a definition from `to_dict` output or a hand-written config.

        Raises:
            DefinitionError: On missing or malformed entries
        """
        try:
            loads: List[Load] = []
            for item in data.get("loads", []):
                item = dict(item)
                kind = item.pop("kind", "point")
                if kind == "point":
                    loads.append(PointLoad(**item))
                elif kind == "distributed":
                    loads.append(DistributedLoad(**item))
                else:
                    raise DefinitionError(f"unknown load kind '{kind}'")

            port = data.get("output_port")
            return cls(
                name=data["name"],
                extents=data["extents"],
                resolution=data["resolution"],
                layout=InitialLayoutSpec(**data["layout"]),
                objective=data.get("objective", "compliance"),
                volume_bound=data.get("volume_bound", 0.4),
                loads=loads,
                supports=[Support(**s) for s in data.get("supports", [])],
                springs=[Spring(**s) for s in data.get("springs", [])],
                output_port=OutputPort(**port) if port else None,
                regions=[NonDesignRegion(**r) for r in data.get("regions", [])],
                symmetry_planes=[SymmetryPlane(**p) for p in data.get("symmetry_planes", [])],
                reduce_symmetry=data.get("reduce_symmetry", False),
                round_sensitivities=data.get("round_sensitivities", False),
            )
        except (KeyError, TypeError) as exc:
            raise DefinitionError(f"malformed problem definition: {exc}") from exc
