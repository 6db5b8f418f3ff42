"""
Signal/background discrimination from recall statistics.

Energy mode: the mean sample energy of a probe is compared with the energy
range <E> +/- beta * sigma_E calibrated on encoded signal probes.
Key mode: the mean bipolar key bit is compared with <k> +/- beta * sigma_k.
Sweeping beta traces a ROC curve.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from memory.errors import ClassificationError
from memory.ising import SolveResult, build_problem
from memory.learning import WeightMatrix
from memory.patterns import SIGNAL, BACKGROUND, PatternLibrary, to_bipolar
from memory.solvers import SolverConfig, run_solver
from utils.helper import derive_seed

logger = logging.getLogger(__name__)

ENERGY = "energy"
KEY = "key"
CLASSIFIER_MODES = (ENERGY, KEY)

DEFAULT_BETA_GRID = np.linspace(0.0, 10.0, 101)


@dataclass(frozen=True)
class Calibration:
    mean: float
    sigma: float
    probes: int = 1

    def __post_init__(self):
        if self.sigma < 0:
            raise ClassificationError(f"Calibration sigma must be non-negative, got {self.sigma}")
        if self.probes < 1:
            raise ClassificationError("Calibration needs at least one encoded signal probe")

    @property
    def floor(self) -> float:
        """Acceptance floor that keeps exact matches when sigma is 0."""
        return 1e-9 * abs(self.mean) + 1e-12

    def to_dict(self) -> dict:
        return {"mode": self.mode, "mean": self.mean, "sigma": self.sigma, "probes": self.probes}


@dataclass(frozen=True)
class EnergyCalibration(Calibration):
    mode: str = ENERGY


@dataclass(frozen=True)
class KeyCalibration(Calibration):
    mode: str = KEY

    def __post_init__(self):
        super().__post_init__()
        if not -1.0 - 1e-12 <= self.mean <= 1.0 + 1e-12:
            raise ClassificationError(f"Mean key value {self.mean} outside [-1, 1]")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def tpr(self) -> float:
        positives = self.tp + self.fn
        return self.tp / positives if positives else 0.0

    @property
    def fpr(self) -> float:
        negatives = self.fp + self.tn
        return self.fp / negatives if negatives else 0.0

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)


@dataclass(frozen=True)
class RocPoint:
    beta: float
    tpr: float
    fpr: float


@dataclass(frozen=True)
class RocCurve:
    points: Tuple[RocPoint, ...]
    auc: float

    def __post_init__(self):
        betas = [p.beta for p in self.points]
        if any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
            raise ClassificationError("ROC beta values must be strictly increasing")
        if not 0.0 <= self.auc <= 1.0:
            raise ClassificationError(f"AUC {self.auc} outside [0, 1]")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"beta": [p.beta for p in self.points], "tpr": [p.tpr for p in self.points], "fpr": [p.fpr for p in self.points]}
        )


def probe_statistic(result: SolveResult, mode: str, key_index: Optional[int] = None) -> float:
    """Mean sample energy, or mean bipolar value of the key bit, over all samples."""
    if mode == ENERGY:
        return float(np.mean(result.energy_values()))
    if mode == KEY:
        if key_index is None:
            raise ClassificationError("Key statistic needs a key index")
        return float(np.mean(result.state_matrix()[:, key_index]))
    raise ClassificationError(f"Unknown classifier mode '{mode}'")


def check_encoding(library: PatternLibrary, mode: str) -> None:
    """
    Energy needs signal-only encoding; key needs signal + background with a key.
    """
    if library.p_s < 1:
        raise ClassificationError("Calibration needs at least one encoded signal")
    if mode == ENERGY and library.p_b:
        raise ClassificationError("Energy classification is uninformative with background patterns encoded")
    if mode == KEY and (library.p_b == 0 or library.K == 0):
        raise ClassificationError("Key classification needs keyed signal and background patterns")
    if mode not in CLASSIFIER_MODES:
        raise ClassificationError(f"Unknown classifier mode '{mode}'")


def calibrate(
    library: PatternLibrary,
    W: WeightMatrix,
    theta: float,
    solver: SolverConfig,
    mode: str,
    seed: int = 0,
    key_index: int = 0,
    on_result: Optional[Callable[[int, SolveResult], None]] = None,
) -> Calibration:
    """
    Recall every encoded signal and summarise the per-probe statistics with
    their mean and population standard deviation.
    """
    check_encoding(library, mode)
    stats = []
    for index in library.indices(SIGNAL):
        probe = to_bipolar(library.patterns[index].value)
        result = run_solver(build_problem(W, probe, theta), solver, derive_seed(seed, index))
        if on_result is not None:
            on_result(index, result)
        stats.append(probe_statistic(result, mode, key_index))
    values = np.array(stats)
    cls = EnergyCalibration if mode == ENERGY else KeyCalibration
    return cls(mean=float(values.mean()), sigma=float(values.std()), probes=len(stats))


def classify(statistic: float, cal: Calibration, beta: float) -> str:
    if beta < 0:
        raise ClassificationError(f"beta must be non-negative, got {beta}")
    if abs(statistic - cal.mean) <= beta * cal.sigma + cal.floor:
        return SIGNAL
    return BACKGROUND


def confusion(labels: Sequence[str], truths: Sequence[str]) -> ConfusionCounts:
    if len(labels) != len(truths):
        raise ClassificationError(f"Got {len(labels)} labels for {len(truths)} truths")
    tp = fp = tn = fn = 0
    for label, truth in zip(labels, truths):
        if label == SIGNAL:
            if truth == SIGNAL:
                tp += 1
            else:
                fp += 1
        elif truth == SIGNAL:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, tn, fn)


def auc(points: Sequence[RocPoint]) -> float:
    """
    Trapezoid area under (FPR, TPR) with (0,0) and (1,1) anchors.

    Measured points sharing an FPR are merged by averaging their TPR; the
    anchors are added afterwards so they never dilute a merged point.
    """
    frame = pd.DataFrame({"fpr": [p.fpr for p in points], "tpr": [p.tpr for p in points]}, dtype=float)
    merged = frame.groupby("fpr", as_index=False)["tpr"].mean()
    anchors = pd.DataFrame({"fpr": [0.0, 1.0], "tpr": [0.0, 1.0]})
    curve = pd.concat([anchors.iloc[:1], merged, anchors.iloc[1:]], ignore_index=True)
    curve = curve.sort_values(["fpr", "tpr"], kind="mergesort")
    x = curve["fpr"].to_numpy(dtype=float)
    y = curve["tpr"].to_numpy(dtype=float)
    area = float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2.0))
    return min(max(area, 0.0), 1.0)


def _grid(beta_grid: Optional[Sequence[float]]) -> np.ndarray:
    grid = DEFAULT_BETA_GRID if beta_grid is None else np.asarray(beta_grid, dtype=float)
    if grid.size == 0:
        raise ClassificationError("beta grid must not be empty")
    return grid


def pooled_roc(
    groups: Sequence[Tuple[Sequence[float], Sequence[str], Calibration]],
    beta_grid: Optional[Sequence[float]] = None,
) -> RocCurve:
    """
    ROC over several training sets: each group is classified against its own
    calibration and the confusion counts are summed per beta.
    """
    points: List[RocPoint] = []
    for beta in _grid(beta_grid):
        counts = ConfusionCounts()
        for stats, truths, cal in groups:
            counts = counts + confusion([classify(s, cal, beta) for s in stats], truths)
        points.append(RocPoint(float(beta), counts.tpr, counts.fpr))
    return RocCurve(tuple(points), auc(points))


def roc_sweep(
    statistics: Sequence[float],
    truths: Sequence[str],
    cal: Calibration,
    beta_grid: Optional[Sequence[float]] = None,
) -> RocCurve:
    return pooled_roc([(statistics, truths, cal)], beta_grid)
