"""
Hough transform banking of track patterns.

Hits are mapped to lines rho = x cos(phi) + y sin(phi) in (phi, rho) space.
phi bins are [-90, -80), [-80, -70), ... and each is sampled at its lower
edge, so reported angles are multiples of the phi bin width. rho bins are
centred on multiples of the rho bin width. The peak of the accumulator gives
the track parameters, and a coarse BankGrid over (phi, rho) partitions a
pattern library into template banks small enough for the recall solvers.

Coordinates are in rho units; detector metres are divided by `unit`
(0.1 m per unit by default).
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from memory.detector import DetectorGeometry, FieldConfig, arc_step, segment_bin
from memory.errors import GeometryError, HoughError
from memory.patterns import BitPattern, PatternLibrary, corrupt
from utils.helper import derive_seed

logger = logging.getLogger(__name__)

DEFAULT_UNIT = 0.1
PHI_MIN = -90.0
PHI_SPAN = 180.0
_EDGE_EPS = 1e-9

Point = Tuple[float, float]


@dataclass(frozen=True)
class HoughBinning:
    """phi bin width in degrees; rho bins of width rho_bin covering [-rho_max, rho_max]."""

    phi_bin: float = 10.0
    rho_bin: float = 1.0
    rho_max: float = 10.0

    def __post_init__(self):
        if self.phi_bin <= 0 or self.rho_bin <= 0:
            raise HoughError(f"Bin widths must be positive, got phi={self.phi_bin} rho={self.rho_bin}")
        if self.rho_max < 0:
            raise HoughError(f"rho_max must be non-negative, got {self.rho_max}")
        n_phi = PHI_SPAN / self.phi_bin
        if abs(n_phi - round(n_phi)) > 1e-9:
            raise HoughError(f"phi bin width {self.phi_bin} does not divide 180 degrees")

    @property
    def n_phi(self) -> int:
        return int(round(PHI_SPAN / self.phi_bin))

    @property
    def rho_half(self) -> int:
        """Number of rho bins on each side of the rho=0 bin."""
        return int(math.ceil(self.rho_max / self.rho_bin - _EDGE_EPS))

    @property
    def n_rho(self) -> int:
        return 2 * self.rho_half + 1

    @property
    def rho_lower(self) -> float:
        return -(self.rho_half + 0.5) * self.rho_bin

    @property
    def rho_upper(self) -> float:
        return (self.rho_half + 0.5) * self.rho_bin

    def phi_samples(self) -> np.ndarray:
        """Angle at which points vote for each phi bin: the lower edge of [phi, phi + phi_bin)."""
        return PHI_MIN + self.phi_bin * np.arange(self.n_phi)

    def rho_centers(self) -> np.ndarray:
        return self.rho_bin * np.arange(-self.rho_half, self.rho_half + 1)

    def rho_index(self, rho):
        """Index of the rho bin whose centre is nearest, without range checks."""
        return np.floor(np.asarray(rho) / self.rho_bin + 0.5).astype(np.int64) + self.rho_half

    def extended(self, rho_max: float) -> "HoughBinning":
        return HoughBinning(self.phi_bin, self.rho_bin, rho_max)

    def to_dict(self) -> Dict[str, float]:
        return {"phi_bin": self.phi_bin, "rho_bin": self.rho_bin, "rho_max": self.rho_max}


@dataclass(frozen=True, eq=False)
class HoughAccumulator:
    counts: np.ndarray
    binning: HoughBinning

    def __post_init__(self):
        arr = np.array(self.counts, dtype=np.int64)
        expected = (self.binning.n_phi, self.binning.n_rho)
        if arr.shape != expected:
            raise HoughError(f"Accumulator shape {arr.shape} does not match binning {expected}")
        if (arr < 0).any():
            raise HoughError("Accumulator counts must be non-negative")
        arr.flags.writeable = False
        object.__setattr__(self, "counts", arr)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def merge(self, other: "HoughAccumulator") -> "HoughAccumulator":
        """Add the votes of a second accumulator over the same binning."""
        if other.binning != self.binning:
            raise HoughError("Cannot merge accumulators with different binnings")
        return HoughAccumulator(self.counts + other.counts, self.binning)

    def to_frame(self) -> pd.DataFrame:
        """Long-form table of (phi, rho, votes), one row per bin."""
        phi, rho = np.meshgrid(self.binning.phi_samples(), self.binning.rho_centers(), indexing="ij")
        return pd.DataFrame({"phi": phi.ravel(), "rho": rho.ravel(), "votes": self.counts.ravel()})


@dataclass(frozen=True)
class HoughPeak:
    phi: float
    rho: float
    votes: int

    def __post_init__(self):
        if self.votes < 1:
            raise HoughError(f"A peak needs at least one vote, got {self.votes}")

    def to_dict(self) -> Dict[str, float]:
        return {"phi": self.phi, "rho": self.rho, "votes": self.votes}


def _as_points(points: Sequence[Point]) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.size == 0:
        raise HoughError("Hough transform needs at least one point")
    arr = arr.reshape(-1, 2) if arr.ndim == 1 else arr
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise HoughError(f"Points must be (x, y) pairs, got shape {arr.shape}")
    return arr


def accumulate(points: Sequence[Point], binning: Optional[HoughBinning] = None) -> HoughAccumulator:
    """
    Vote every point into each phi bin at the rho bin containing
    x cos(phi) + y sin(phi).

    When a rho value falls outside the binning the rho range is widened
    symmetrically and the returned accumulator carries the wider binning.
    """
    binning = binning or HoughBinning()
    pts = _as_points(points)
    phis = np.radians(binning.phi_samples())
    rho = pts[:, :1] * np.cos(phis) + pts[:, 1:] * np.sin(phis)

    needed = int(np.abs(np.floor(rho / binning.rho_bin + 0.5)).max())
    if needed > binning.rho_half:
        wider = binning.extended(needed * binning.rho_bin)
        logger.warning(f"rho range [-{binning.rho_max}, {binning.rho_max}] extended to +/-{wider.rho_max}")
        binning = wider

    counts = np.zeros((binning.n_phi, binning.n_rho), dtype=np.int64)
    phi_idx = np.broadcast_to(np.arange(binning.n_phi), rho.shape)
    np.add.at(counts, (phi_idx.ravel(), binning.rho_index(rho).ravel()), 1)
    return HoughAccumulator(counts, binning)


def find_peak(acc: HoughAccumulator) -> HoughPeak:
    """
    Bin with the most votes. Ties go to the smallest |phi|, then smallest
    |rho|, then the lower signed phi and rho.
    """
    if acc.total == 0:
        raise HoughError("Accumulator holds no votes")
    best = acc.counts.max()
    phis = acc.binning.phi_samples()
    rhos = acc.binning.rho_centers()
    candidates = [(float(phis[i]), float(rhos[j])) for i, j in np.argwhere(acc.counts == best)]
    phi, rho = min(candidates, key=lambda c: (abs(c[0]), abs(c[1]), c[0], c[1]))
    return HoughPeak(phi, rho, int(best))


@dataclass(frozen=True)
class BankGrid:
    """Rectangular partition of (phi, rho) space; cells are numbered phi-major."""

    phi_cell: float = 10.0
    rho_cell: float = 1.0
    phi_min: float = PHI_MIN
    phi_max: float = PHI_MIN + PHI_SPAN
    rho_min: float = -10.5
    rho_max: float = 10.5

    def __post_init__(self):
        if self.phi_cell <= 0 or self.rho_cell <= 0:
            raise HoughError("Bank cell sizes must be positive")
        if self.phi_max <= self.phi_min or self.rho_max <= self.rho_min:
            raise HoughError("Bank grid ranges must be non-empty")

    @classmethod
    def for_binning(cls, binning: HoughBinning, phi_cell: float = 10.0, rho_cell: float = 1.0) -> "BankGrid":
        """Grid anchored at phi=-90 and the lower rho edge of the binning."""
        return cls(phi_cell, rho_cell, PHI_MIN, PHI_MIN + PHI_SPAN, binning.rho_lower, binning.rho_upper)

    @property
    def n_phi_cells(self) -> int:
        return int(math.ceil((self.phi_max - self.phi_min) / self.phi_cell - _EDGE_EPS))

    @property
    def n_rho_cells(self) -> int:
        return int(math.ceil((self.rho_max - self.rho_min) / self.rho_cell - _EDGE_EPS))

    @property
    def size(self) -> int:
        return self.n_phi_cells * self.n_rho_cells

    def to_dict(self) -> Dict[str, float]:
        return {
            "phi_cell": self.phi_cell,
            "rho_cell": self.rho_cell,
            "phi_min": self.phi_min,
            "phi_max": self.phi_max,
            "rho_min": self.rho_min,
            "rho_max": self.rho_max,
        }


def _cell(value: float, lo: float, width: float) -> int:
    return int(math.floor((value - lo) / width + _EDGE_EPS))


def assign_bank(peak: HoughPeak, grid: BankGrid) -> int:
    if not (grid.phi_min <= peak.phi < grid.phi_max and grid.rho_min <= peak.rho < grid.rho_max):
        raise HoughError(f"Peak (phi={peak.phi}, rho={peak.rho}) lies outside the bank grid")
    i = min(_cell(peak.phi, grid.phi_min, grid.phi_cell), grid.n_phi_cells - 1)
    j = min(_cell(peak.rho, grid.rho_min, grid.rho_cell), grid.n_rho_cells - 1)
    return i * grid.n_rho_cells + j


def pattern_points(
    value: BitPattern,
    g: DetectorGeometry,
    f: Optional[FieldConfig] = None,
    unit: float = DEFAULT_UNIT,
) -> List[Point]:
    """(z, u) segment centres of the set bits, u being the bending coordinate."""
    if len(value) != g.V:
        raise HoughError(f"Pattern length {len(value)} does not match V={g.V}")
    axis = (f or FieldConfig()).axis
    points = []
    for index in np.flatnonzero(value.bits):
        x, y, z = g.segment_center(int(index))
        u = x if axis == "y" else y
        points.append((z / unit, u / unit))
    return points


@dataclass(frozen=True)
class TemplateBanks:
    assignments: Tuple[Optional[int], ...]
    peaks: Tuple[Optional[HoughPeak], ...]
    grid: BankGrid

    def banks(self) -> Dict[int, List[int]]:
        """Bank index -> pattern indices, skipping patterns with no hits."""
        banks: Dict[int, List[int]] = {}
        for index, bank in enumerate(self.assignments):
            if bank is not None:
                banks.setdefault(bank, []).append(index)
        return dict(sorted(banks.items()))

    @property
    def max_templates(self) -> int:
        return max((len(v) for v in self.banks().values()), default=0)

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for index, (bank, peak) in enumerate(zip(self.assignments, self.peaks)):
            rows.append({
                "pattern": index,
                "bank": bank,
                "phi": peak.phi if peak else None,
                "rho": peak.rho if peak else None,
                "votes": peak.votes if peak else 0,
            })
        return pd.DataFrame(rows, columns=["pattern", "bank", "phi", "rho", "votes"])


def build_banks(
    library: PatternLibrary,
    g: DetectorGeometry,
    binning: Optional[HoughBinning] = None,
    grid: Optional[BankGrid] = None,
    f: Optional[FieldConfig] = None,
    unit: float = DEFAULT_UNIT,
) -> TemplateBanks:
    """Assign every pattern of a library to the bank holding its Hough peak."""
    binning = binning or HoughBinning()
    grid = grid or BankGrid.for_binning(binning)
    assignments, peaks = [], []
    for index, pattern in enumerate(library.patterns):
        if pattern.value.popcount == 0:
            logger.warning(f"Pattern {index} has no hits and is left unbanked")
            assignments.append(None)
            peaks.append(None)
            continue
        peak = find_peak(accumulate(pattern_points(pattern.value, g, f, unit), binning))
        assignments.append(assign_bank(peak, grid))
        peaks.append(peak)
    banks = TemplateBanks(tuple(assignments), tuple(peaks), grid)
    logger.info(f"Partitioned {library.p} patterns into {len(banks.banks())} banks (largest holds {banks.max_templates})")
    return banks


@dataclass(frozen=True)
class PlanarDetector:
    """
    Single 2-D plane of rows x cols square cells, field perpendicular to it.

    Tracks enter at y=0 and cross the rows as layers; x is centred on 0.
    """

    rows: int = 12
    cols: int = 30
    cell: float = 0.1
    B: float = 0.2

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.cell <= 0:
            raise GeometryError(f"Invalid planar detector {self.rows}x{self.cols} cell={self.cell}")

    @property
    def cells(self) -> int:
        return self.rows * self.cols

    @property
    def width(self) -> float:
        return self.cols * self.cell

    def cell_center(self, index: int) -> Point:
        """Cell centre in cell units, x centred on the detector axis."""
        row, col = divmod(index, self.cols)
        return col + 0.5 - self.cols / 2, row + 0.5

    def points(self, hits: BitPattern) -> List[Point]:
        return [self.cell_center(int(i)) for i in np.flatnonzero(hits.bits)]


@dataclass(frozen=True)
class PlanarTrack:
    angle_deg: float = -40.0
    x0: float = 0.0
    momentum: float = 0.5
    charge: int = -1


@dataclass(frozen=True)
class PlanarEvent:
    track: BitPattern
    hits: BitPattern


def trace_track(det: PlanarDetector, track: PlanarTrack) -> BitPattern:
    """One cell per row where the arc crosses the row's mid-line."""
    bits = np.zeros(det.cells, dtype=np.uint8)
    alpha0 = math.radians(track.angle_deg)
    kappa = 0.3 * track.charge * det.B / track.momentum
    for row in range(det.rows):
        step = arc_step(alpha0, kappa, (row + 0.5) * det.cell)
        if step is None:
            continue
        x = track.x0 + step[0]
        if abs(x) > det.width / 2:
            continue
        bits[row * det.cols + segment_bin(x, -det.width / 2, det.width, det.cols)] = 1
    return BitPattern(bits)


def simulate_planar_event(
    det: PlanarDetector,
    track: PlanarTrack,
    eta: float,
    gamma: float,
    rng: np.random.Generator,
) -> PlanarEvent:
    clean = trace_track(det, track)
    return PlanarEvent(clean, corrupt(clean, eta, gamma, rng))


DEFAULT_NOISE_SCAN = (0.0, 0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14, 0.16)
DEFAULT_EFFICIENCY_SCAN = (0.95, 0.96, 0.97, 0.98, 0.99, 1.0)


def peak_stability_study(
    det: Optional[PlanarDetector] = None,
    track: Optional[PlanarTrack] = None,
    gammas: Sequence[float] = DEFAULT_NOISE_SCAN,
    etas: Sequence[float] = DEFAULT_EFFICIENCY_SCAN,
    trials: int = 20,
    binning: Optional[HoughBinning] = None,
    seed: int = 0,
) -> pd.DataFrame:
    """
    Reconstructed phi of one track under added noise (eta=1) and under
    reduced efficiency (gamma=0), compared with the clean-event peak.
    """
    det = det or PlanarDetector()
    track = track or PlanarTrack()
    binning = binning or HoughBinning(rho_max=20.0)
    if trials < 1:
        raise HoughError(f"trials must be at least 1, got {trials}")
    clean = trace_track(det, track)
    if clean.popcount == 0:
        raise HoughError("Track leaves no hits in the planar detector")
    reference = find_peak(accumulate(det.points(clean), binning))

    scans = [("noise", i, 1.0, g) for i, g in enumerate(gammas)]
    scans += [("efficiency", i, e, 0.0) for i, e in enumerate(etas)]
    rows = []
    for scan, i, eta, gamma in scans:
        for trial in range(trials):
            rng = np.random.default_rng(derive_seed(seed, scan, i, trial))
            event = simulate_planar_event(det, track, eta, gamma, rng)
            if event.hits.popcount == 0:
                rows.append({"scan": scan, "eta": eta, "gamma": gamma, "trial": trial,
                             "phi": None, "rho": None, "votes": 0, "unchanged": False})
                continue
            peak = find_peak(accumulate(det.points(event.hits), binning))
            rows.append({
                "scan": scan,
                "eta": eta,
                "gamma": gamma,
                "trial": trial,
                "phi": peak.phi,
                "rho": peak.rho,
                "votes": peak.votes,
                "unchanged": peak.phi == reference.phi and peak.rho == reference.rho,
            })
    frame = pd.DataFrame(rows)
    frame.attrs["reference"] = reference.to_dict()
    return frame


def stability_summary(frame: pd.DataFrame) -> pd.DataFrame:
    """Fraction of trials whose peak matches the clean event, per scan point."""
    return (
        frame.groupby(["scan", "eta", "gamma"], sort=True)
        .agg(trials=("trial", "count"), unchanged=("unchanged", "mean"), mean_votes=("votes", "mean"))
        .reset_index()
    )
