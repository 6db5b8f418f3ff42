"""
Experiment configuration.

An ExperimentConfig is assembled from a named preset, an optional YAML/JSON
file and command-line overrides, in that order, and validated before any
computation starts.
"""

import logging
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from memory.classifiers import CLASSIFIER_MODES, ENERGY, KEY
from memory.detector import GEOMETRY_PRESETS, FieldConfig, geometry_preset
from memory.errors import ConfigError, TrackRecallError
from memory.hough import HoughBinning
from memory.ising import AnnealSchedule, ReverseScheduleParams
from memory.learning import MODELS, QAMM
from memory.solvers import EXACT, EXACT_MAX_N, SOLVERS, SA, SolverConfig
from utils.helper import load_structured_file

logger = logging.getLogger(__name__)

SIGNAL_ONLY = "signal-only"
SIGNAL_BACKGROUND = "signal+background"
ENCODINGS = (SIGNAL_ONLY, SIGNAL_BACKGROUND)

DEFAULT_ETAS = [1.0, 0.98, 0.96, 0.94, 0.92]
DEFAULT_GAMMAS = [0.0, 0.02, 0.04, 0.06, 0.08]


@dataclass
class ExperimentConfig:
    """All knobs of a classification experiment. Lists expand into parameter cells."""

    geometry: str = "v24"
    alphas: List[float] = field(default_factory=lambda: [1 / 6])
    alpha_b: Optional[float] = None
    models: List[str] = field(default_factory=lambda: [QAMM])
    classifiers: List[str] = field(default_factory=lambda: [ENERGY])
    encoding: Optional[str] = None
    key_size: int = 1
    theta: float = 0.74
    rescale: bool = True
    etas: List[float] = field(default_factory=lambda: [1.0])
    gammas: List[float] = field(default_factory=lambda: [0.0])
    solver: str = SA
    reads: int = 100
    sweeps: int = 1000
    beta_hot: float = 0.1
    beta_cold: float = 10.0
    s_star: float = 0.5
    pause_sweeps: int = 1000
    ramp_sweeps: int = 100
    beta_min: float = 0.0
    beta_max: float = 10.0
    beta_points: int = 101
    training_sets: int = 5
    signal_probes: int = 25
    background_probes: int = 25
    background_fill: float = 0.15
    field_B: float = 0.2
    field_axis: str = "y"
    momentum: float = 0.5
    half_width_deg: float = 5.0
    phi_bin: float = 10.0
    rho_bin: float = 1.0
    rho_max: float = 10.0
    bank_phi: float = 10.0
    bank_rho: float = 1.0
    dump_weights: bool = False
    plots: bool = True
    workers: int = 1
    seed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @property
    def V(self) -> int:
        return geometry_preset(self.geometry).V

    def signal_count(self, alpha: float) -> int:
        return max(1, int(round(alpha * self.V)))

    def background_count(self, alpha: float) -> int:
        return max(1, int(round((self.alpha_b if self.alpha_b is not None else alpha) * self.V)))

    def encoding_for(self, classifier: str) -> str:
        if self.encoding is not None:
            return self.encoding
        return SIGNAL_BACKGROUND if classifier == KEY else SIGNAL_ONLY

    def key_size_for(self, model: str, classifier: str) -> int:
        """QAMM energy runs store bare values; every other combination carries the key."""
        if model == QAMM and classifier == ENERGY:
            return 0
        return self.key_size

    def beta_grid(self) -> np.ndarray:
        return np.linspace(self.beta_min, self.beta_max, self.beta_points)

    def noise_cells(self) -> List[Tuple[float, float]]:
        """(eta, gamma) cells: eta varied at gamma=0, then gamma varied at eta=1."""
        cells: List[Tuple[float, float]] = []
        for eta in self.etas:
            if (eta, 0.0) not in cells:
                cells.append((eta, 0.0))
        for gamma in self.gammas:
            if (1.0, gamma) not in cells:
                cells.append((1.0, gamma))
        return cells

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            name=self.solver,
            reads=self.reads,
            schedule=AnnealSchedule(self.sweeps, self.beta_hot, self.beta_cold),
            reverse=ReverseScheduleParams(self.s_star, self.pause_sweeps, self.ramp_sweeps),
        )

    def field_config(self) -> FieldConfig:
        return FieldConfig(self.field_B, self.field_axis)

    def hough_binning(self) -> HoughBinning:
        return HoughBinning(self.phi_bin, self.rho_bin, self.rho_max)


DEFAULTS_PRESET: Dict[str, Any] = {
    "geometry": "v24",
    "alphas": [1 / 6],
    "models": [QAMM],
    "classifiers": [ENERGY],
    "theta": 0.74,
    "etas": DEFAULT_ETAS,
    "gammas": DEFAULT_GAMMAS,
    "solver": SA,
    "reads": 100,
    "sweeps": 1000,
    "training_sets": 5,
    "signal_probes": 25,
    "background_probes": 25,
    "beta_min": 0.0,
    "beta_max": 10.0,
    "beta_points": 101,
}

PRESETS: Dict[str, Dict[str, Any]] = {
    "paper-defaults": DEFAULTS_PRESET,
    "reference-defaults": DEFAULTS_PRESET,
    "density-sweep": {
        "geometry": "v24",
        "alphas": [1 / 6, 1 / 3, 1 / 2, 2 / 3, 1.0],
        "models": [QAMM],
        "classifiers": [ENERGY],
        "etas": [1.0],
        "gammas": [0.0],
    },
}

_LIST_FIELDS = ("alphas", "models", "classifiers", "etas", "gammas")


def _check_probability(name: str, values: List[float]) -> None:
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise ConfigError(f"{name} values must lie in [0, 1], got {v}")


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """
    Check ranges and the model/classifier/encoding matrix.

    Args:
        cfg: Configuration to check

    Returns:
        ExperimentConfig: The same config, for chaining
    """
    if cfg.geometry not in GEOMETRY_PRESETS:
        raise ConfigError(f"Unknown geometry '{cfg.geometry}', expected one of {sorted(GEOMETRY_PRESETS)}")
    for name in _LIST_FIELDS:
        if not getattr(cfg, name):
            raise ConfigError(f"'{name}' must list at least one value")
    for model in cfg.models:
        if model not in MODELS:
            raise ConfigError(f"Unknown model '{model}', expected one of {MODELS}")
    for classifier in cfg.classifiers:
        if classifier not in CLASSIFIER_MODES:
            raise ConfigError(f"Unknown classifier '{classifier}', expected one of {CLASSIFIER_MODES}")
    if cfg.encoding is not None and cfg.encoding not in ENCODINGS:
        raise ConfigError(f"Unknown encoding '{cfg.encoding}', expected one of {ENCODINGS}")
    if cfg.key_size < 1:
        raise ConfigError(f"key_size must be at least 1, got {cfg.key_size}")

    for classifier in cfg.classifiers:
        encoding = cfg.encoding_for(classifier)
        if classifier == KEY and encoding == SIGNAL_ONLY:
            raise ConfigError("Key classification needs a signal+background library, got signal-only")
        if classifier == ENERGY and encoding == SIGNAL_BACKGROUND:
            raise ConfigError("Energy classification needs a signal-only library, got signal+background")

    for alpha in cfg.alphas:
        if alpha <= 0:
            raise ConfigError(f"Pattern density must be positive, got {alpha}")
    if cfg.alpha_b is not None and cfg.alpha_b <= 0:
        raise ConfigError(f"Background density must be positive, got {cfg.alpha_b}")
    _check_probability("eta", cfg.etas)
    _check_probability("gamma", cfg.gammas)
    _check_probability("background_fill", [cfg.background_fill])

    if cfg.solver not in SOLVERS:
        raise ConfigError(f"Unknown solver '{cfg.solver}', expected one of {SOLVERS}")
    if cfg.solver == EXACT:
        N = cfg.V + max(cfg.key_size_for(m, c) for m in cfg.models for c in cfg.classifiers)
        if N > EXACT_MAX_N:
            raise ConfigError(f"Exact solver is capped at N={EXACT_MAX_N}; {cfg.geometry} needs N={N}")
    if cfg.reads < 1 or cfg.sweeps < 1:
        raise ConfigError("reads and sweeps must be at least 1")
    if cfg.theta < 0:
        raise ConfigError(f"theta must be non-negative, got {cfg.theta}")
    if cfg.beta_points < 1 or cfg.beta_min < 0 or cfg.beta_max < cfg.beta_min:
        raise ConfigError(f"Invalid beta grid [{cfg.beta_min}, {cfg.beta_max}] x {cfg.beta_points}")
    if cfg.training_sets < 1:
        raise ConfigError("training_sets must be at least 1")
    if cfg.signal_probes < 0 or cfg.background_probes < 0 or cfg.signal_probes + cfg.background_probes == 0:
        raise ConfigError("At least one probe per training set is required")
    if cfg.seed < 0:
        raise ConfigError(f"seed must be non-negative, got {cfg.seed}")
    if cfg.workers < 1:
        raise ConfigError(f"workers must be at least 1, got {cfg.workers}")

    try:
        cfg.solver_config()
        cfg.field_config()
        cfg.hough_binning()
    except TrackRecallError as e:
        raise ConfigError(str(e)) from e
    return cfg


def _coerce(name: str, value: Any) -> Any:
    if name in _LIST_FIELDS and not isinstance(value, (list, tuple)):
        return [value]
    if name in _LIST_FIELDS:
        return list(value)
    return value


def config_from_dict(data: Dict[str, Any], base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """
    Apply a mapping of field values on top of a base config.

    Args:
        data: Field name -> value; unknown names are rejected
        base: Starting point (defaults to ExperimentConfig())

    Returns:
        ExperimentConfig: New config, not yet validated
    """
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Unknown config field(s): {', '.join(unknown)}")
    return replace(base or ExperimentConfig(), **{k: _coerce(k, v) for k, v in data.items()})


def load_config(
    path: Optional[str] = None,
    preset: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> ExperimentConfig:
    """
    Build and validate a config from preset, file and overrides.

    Args:
        path: Optional YAML or JSON file
        preset: Optional preset name such as 'paper-defaults'
        overrides: Values from command-line flags; None entries are ignored

    Returns:
        ExperimentConfig: Validated configuration
    """
    cfg = ExperimentConfig()
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"Unknown preset '{preset}', expected one of {sorted(PRESETS)}")
        cfg = config_from_dict(PRESETS[preset], cfg)
    if path is not None:
        cfg = config_from_dict(load_structured_file(path), cfg)
    if overrides:
        cfg = config_from_dict({k: v for k, v in overrides.items() if v is not None}, cfg)
    logger.debug(f"Loaded config: preset={preset} file={path}")
    return validate(cfg)
