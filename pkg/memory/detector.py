"""
Toy three-plane segmented tracking detector.

Charged particles start upstream of the planes and follow a circular arc in
the plane perpendicular to a uniform magnetic field (no material effects).
Each plane crossing is digitized into one segment bit, which yields the signal
patterns stored in the associative memory.

Units: metres, GeV, tesla. Curvature uses 1/r = 0.3 * |q| * B / p_T.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from memory.errors import GeometryError, LibraryError
from memory.patterns import SIGNAL, BitPattern, KeyedPattern, PatternLibrary

logger = logging.getLogger(__name__)

# rows x cols per plane; V = 3 * rows * cols
GEOMETRY_PRESETS: Dict[str, Tuple[int, int]] = {
    "v24": (2, 4),
    "v30": (2, 5),
    "v36": (3, 4),
    "v42": (2, 7),
    "v48": (4, 4),
    "v54": (3, 6),
}

DEFAULT_PLANES = (0.1, 0.2, 0.3)
DEFAULT_WIDTH = 0.4   # x extent, columns
DEFAULT_HEIGHT = 0.2  # y extent, rows
DEFAULT_LIBRARY_TRIES = 100_000


@dataclass(frozen=True)
class DetectorGeometry:
    """Three parallel planes at fixed z, each segmented into rows x cols."""

    rows: int
    cols: int
    plane_positions: Tuple[float, float, float] = DEFAULT_PLANES
    width: float = DEFAULT_WIDTH
    height: float = DEFAULT_HEIGHT
    name: str = "custom"

    def __post_init__(self):
        planes = tuple(float(z) for z in self.plane_positions)
        if len(planes) != 3:
            raise GeometryError(f"Detector needs exactly 3 planes, got {len(planes)}")
        if not planes[0] < planes[1] < planes[2]:
            raise GeometryError(f"Plane positions must increase: {planes}")
        if self.rows < 1 or self.cols < 1:
            raise GeometryError(f"Invalid segmentation {self.rows}x{self.cols}")
        if self.width <= 0 or self.height <= 0:
            raise GeometryError("Plane extents must be positive")
        object.__setattr__(self, "plane_positions", planes)

    @property
    def segments_per_plane(self) -> int:
        return self.rows * self.cols

    @property
    def V(self) -> int:
        return 3 * self.segments_per_plane

    def segment_index(self, plane: int, row: int, col: int) -> int:
        if not (0 <= plane < 3 and 0 <= row < self.rows and 0 <= col < self.cols):
            raise GeometryError(f"Segment ({plane}, {row}, {col}) outside {self.rows}x{self.cols} grid")
        return plane * self.segments_per_plane + row * self.cols + col

    def segment_coords(self, index: int) -> Tuple[int, int, int]:
        if not 0 <= index < self.V:
            raise GeometryError(f"Segment index {index} outside [0, {self.V})")
        plane, rest = divmod(index, self.segments_per_plane)
        row, col = divmod(rest, self.cols)
        return plane, row, col

    def segment_center(self, index: int) -> Tuple[float, float, float]:
        """(x, y, z) centre of a segment."""
        plane, row, col = self.segment_coords(index)
        x = -self.width / 2 + (col + 0.5) * self.width / self.cols
        y = -self.height / 2 + (row + 0.5) * self.height / self.rows
        return x, y, self.plane_positions[plane]

    def contains(self, x: float, y: float) -> bool:
        return abs(x) <= self.width / 2 and abs(y) <= self.height / 2

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["plane_positions"] = list(self.plane_positions)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DetectorGeometry":
        try:
            return cls(
                rows=int(data["rows"]),
                cols=int(data["cols"]),
                plane_positions=tuple(data.get("plane_positions", DEFAULT_PLANES)),
                width=float(data.get("width", DEFAULT_WIDTH)),
                height=float(data.get("height", DEFAULT_HEIGHT)),
                name=str(data.get("name", "custom")),
            )
        except KeyError as e:
            raise GeometryError(f"Geometry record missing field {e}") from e


def geometry_preset(name: str) -> DetectorGeometry:
    """Look up a named geometry such as 'v24' or 'v54'."""
    if name not in GEOMETRY_PRESETS:
        raise GeometryError(f"Unknown geometry preset '{name}', expected one of {sorted(GEOMETRY_PRESETS)}")
    rows, cols = GEOMETRY_PRESETS[name]
    return DetectorGeometry(rows=rows, cols=cols, name=name)


@dataclass(frozen=True)
class FieldConfig:
    """Uniform magnetic field of strength B (T) along a transverse axis."""

    B: float = 0.2
    axis: str = "y"

    def __post_init__(self):
        if self.B < 0:
            raise GeometryError(f"Field strength must be non-negative, got {self.B}")
        if self.axis not in ("x", "y"):
            raise GeometryError(f"Field axis must be 'x' or 'y', got {self.axis!r}")

    def to_dict(self) -> Dict[str, Any]:
        return {"B": self.B, "axis": self.axis}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FieldConfig":
        return cls(B=float(data.get("B", 0.2)), axis=str(data.get("axis", "y")))


@dataclass(frozen=True)
class ParticleState:
    charge: int
    momentum: Tuple[float, float, float]
    origin: Tuple[float, float, float]

    def __post_init__(self):
        if self.charge not in (-1, 1):
            raise GeometryError(f"Charge must be -1 or +1, got {self.charge}")
        momentum = tuple(float(v) for v in self.momentum)
        origin = tuple(float(v) for v in self.origin)
        if len(momentum) != 3 or len(origin) != 3:
            raise GeometryError("Momentum and origin must be 3-vectors")
        if math.hypot(*momentum) <= 0:
            raise GeometryError("Momentum magnitude must be positive")
        object.__setattr__(self, "momentum", momentum)
        object.__setattr__(self, "origin", origin)

    @property
    def p(self) -> float:
        return math.hypot(*self.momentum)

    def conjugate(self) -> "ParticleState":
        return ParticleState(-self.charge, self.momentum, self.origin)

    def to_dict(self) -> Dict[str, Any]:
        return {"charge": self.charge, "momentum": list(self.momentum), "origin": list(self.origin)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ParticleState":
        return cls(int(data["charge"]), tuple(data["momentum"]), tuple(data["origin"]))


@dataclass(frozen=True)
class Hit:
    plane: int
    x: float
    y: float


HitList = Tuple[Hit, ...]


def _bending_frame(axis: str):
    # index of the bending coordinate and the sign of the curvature term
    return (0, 1.0) if axis == "y" else (1, -1.0)


def arc_step(alpha0: float, kappa: float, dz: float) -> Optional[Tuple[float, float]]:
    """
    Transverse offset and path length of a circular arc after advancing dz
    along the beam axis, starting at angle alpha0 with signed curvature kappa.

    Returns None when the arc turns back before reaching dz.
    """
    if kappa == 0.0:
        arc = dz / math.cos(alpha0)
        offset = dz * math.tan(alpha0)
    else:
        w = math.sin(alpha0) - kappa * dz
        if abs(w) > 1.0:
            return None
        alpha = math.asin(w)
        arc = (alpha0 - alpha) / kappa
        # cos(alpha) - cos(alpha0) in a form that stays accurate for small kappa
        offset = -2.0 * math.sin((alpha + alpha0) / 2) * math.sin((alpha - alpha0) / 2) / kappa
    if arc <= 0:
        return None
    return offset, arc


def propagate(s: ParticleState, f: FieldConfig, g: DetectorGeometry) -> HitList:
    """
    Intersect the particle trajectory with each detector plane.

    Planes that the arc never reaches, or reaches outside the plane extents,
    are omitted. A particle not moving downstream yields an empty HitList.
    """
    x0, y0, z0 = s.origin
    if z0 >= g.plane_positions[0]:
        raise GeometryError(f"Particle origin z={z0} is not upstream of the first plane")
    px, py, pz = s.momentum
    if pz <= 0:
        return ()

    bend, sign = _bending_frame(f.axis)
    transverse = (px, py)
    origin_t = (x0, y0)
    p_bend = transverse[bend]
    p_along = transverse[1 - bend]
    p_t = math.hypot(p_bend, pz)
    alpha0 = math.atan2(p_bend, pz)
    kappa = sign * 0.3 * s.charge * f.B / p_t

    hits = []
    for plane, z in enumerate(g.plane_positions):
        step = arc_step(alpha0, kappa, z - z0)
        if step is None:
            continue
        offset, arc = step
        u = origin_t[bend] + offset
        v = origin_t[1 - bend] + arc * p_along / p_t
        x, y = (u, v) if bend == 0 else (v, u)
        if not g.contains(x, y):
            continue
        hits.append(Hit(plane, x, y))
    return tuple(hits)


def segment_bin(value: float, lo: float, extent: float, count: int) -> int:
    # boundary values belong to the lower-index segment
    k = math.ceil((value - lo) * count / extent) - 1
    return min(max(k, 0), count - 1)


def digitize(h: Sequence[Hit], g: DetectorGeometry, return_skipped: bool = False):
    """
    Turn plane hits into a length-V bit pattern.

    Hits outside the plane extents are skipped and counted.
    """
    bits = np.zeros(g.V, dtype=np.uint8)
    skipped = 0
    for hit in h:
        if not 0 <= hit.plane < 3 or not g.contains(hit.x, hit.y):
            skipped += 1
            continue
        col = segment_bin(hit.x, -g.width / 2, g.width, g.cols)
        row = segment_bin(hit.y, -g.height / 2, g.height, g.rows)
        bits[g.segment_index(hit.plane, row, col)] = 1
    if skipped:
        logger.warning(f"Skipped {skipped} hits outside the plane extents")
    pattern = BitPattern(bits)
    return (pattern, skipped) if return_skipped else pattern


@dataclass(frozen=True)
class GeneratorConfig:
    """Particle gun settings: fixed |p|, polar angle within half_width_deg."""

    momentum: float = 0.5
    half_width_deg: float = 5.0
    origin_z: float = 0.0
    x_range: Tuple[float, float] = (-DEFAULT_WIDTH / 2, DEFAULT_WIDTH / 2)
    y_range: Tuple[float, float] = (-DEFAULT_HEIGHT / 2, DEFAULT_HEIGHT / 2)

    def __post_init__(self):
        if self.momentum <= 0:
            raise GeometryError("Generator momentum must be positive")
        if not 0 <= self.half_width_deg < 90:
            raise GeometryError("Angular half-width must lie in [0, 90) degrees")

    @classmethod
    def for_geometry(cls, g: DetectorGeometry, **overrides) -> "GeneratorConfig":
        values = {"x_range": (-g.width / 2, g.width / 2), "y_range": (-g.height / 2, g.height / 2)}
        values.update(overrides)
        return cls(**values)


def sample_particle(cfg: GeneratorConfig, rng: np.random.Generator) -> ParticleState:
    """Electron or positron heading downstream, close to perpendicular to the planes."""
    charge = -1 if rng.random() < 0.5 else 1
    polar = math.radians(cfg.half_width_deg) * rng.random()
    azimuth = 2 * math.pi * rng.random()
    x = rng.uniform(*cfg.x_range)
    y = rng.uniform(*cfg.y_range)
    momentum = (
        cfg.momentum * math.sin(polar) * math.cos(azimuth),
        cfg.momentum * math.sin(polar) * math.sin(azimuth),
        cfg.momentum * math.cos(polar),
    )
    return ParticleState(charge, momentum, (x, y, cfg.origin_z))


def build_signal_library(
    g: DetectorGeometry,
    p_s: int,
    rng: np.random.Generator,
    max_tries: int = DEFAULT_LIBRARY_TRIES,
    f: Optional[FieldConfig] = None,
    generator: Optional[GeneratorConfig] = None,
) -> PatternLibrary:
    """
    Generate p_s distinct perfect signal patterns (one hit per plane).

    The generating particles are kept so probes can be re-simulated later.
    """
    if p_s < 1:
        raise LibraryError(f"Signal count must be at least 1, got {p_s}")
    f = f or FieldConfig()
    generator = generator or GeneratorConfig.for_geometry(g)
    patterns, sources, seen = [], [], set()
    for _ in range(max_tries):
        particle = sample_particle(generator, rng)
        hits = propagate(particle, f, g)
        if len(hits) != 3:
            continue
        value = digitize(hits, g)
        if value.popcount != 3 or value in seen:
            continue
        seen.add(value)
        patterns.append(KeyedPattern(value=value, kind=SIGNAL))
        sources.append(particle)
        if len(patterns) == p_s:
            break
    else:
        raise LibraryError(
            f"Only {len(patterns)} of {p_s} unique signal patterns found in {max_tries} tries "
            f"on a {g.V}-segment detector"
        )
    logger.info(f"Built signal library: {p_s} patterns on {g.name} (V={g.V})")
    meta = {"geometry": g.to_dict(), "field": f.to_dict()}
    return PatternLibrary(tuple(patterns), tuple(sources), meta)


def regenerate_signal(library: PatternLibrary, index: int, g: DetectorGeometry, f: Optional[FieldConfig] = None) -> BitPattern:
    """Re-simulate the particle behind a stored signal to rebuild its perfect probe."""
    particle = library.sources[index]
    if particle is None:
        return library.patterns[index].value
    return digitize(propagate(particle, f or FieldConfig(), g), g)
