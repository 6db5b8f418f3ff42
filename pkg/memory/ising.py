"""
Recall as Ising minimisation.

E(s) = -sum_ij W_ij s_i s_j - sum_i h_i s_i over bipolar states s, with the
full quadratic form (diagonal included). The diagonal contributes the constant
trace(W) for every state, so argmin sets match the off-diagonal Ising model.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from memory.errors import SolverError
from memory.learning import WeightMatrix
from memory.patterns import BipolarPattern, BitPattern, from_bipolar, hamming

logger = logging.getLogger(__name__)

DEFAULT_THETA = 0.74


@dataclass(frozen=True, eq=False)
class RecallProblem:
    """Couplings plus probe-derived biases h_i = theta * chi_i (0 on masked keys)."""

    couplings: WeightMatrix
    biases: np.ndarray
    theta: float
    masked: Tuple[int, ...] = ()

    def __post_init__(self):
        h = np.array(self.biases, dtype=np.float64).reshape(-1)
        if h.size != self.couplings.N:
            raise SolverError(f"Bias length {h.size} does not match N={self.couplings.N}")
        h.flags.writeable = False
        object.__setattr__(self, "biases", h)
        object.__setattr__(self, "masked", tuple(int(i) for i in self.masked))

    @property
    def N(self) -> int:
        return self.couplings.N

    @property
    def key_size(self) -> int:
        return self.couplings.key_size

    def scaled(self, factor: float) -> "RecallProblem":
        return RecallProblem(self.couplings.scaled(factor), self.biases * factor, self.theta * factor, self.masked)


def build_qamm(W: WeightMatrix, probe: BipolarPattern, theta: float) -> RecallProblem:
    """Bias every index towards the probe."""
    if len(probe) != W.N:
        raise SolverError(f"Probe length {len(probe)} does not match W of size {W.N}")
    if theta < 0:
        raise SolverError(f"Bias strength must be non-negative, got {theta}")
    return RecallProblem(W, theta * probe.as_float(), theta)


def build_qcam(W: WeightMatrix, probe_value: BipolarPattern, theta: float, K: int) -> RecallProblem:
    """Bias only the value indices; the K leading key indices stay free."""
    if K < 0 or len(probe_value) + K != W.N:
        raise SolverError(f"Probe value length {len(probe_value)} plus K={K} does not match W of size {W.N}")
    if theta < 0:
        raise SolverError(f"Bias strength must be non-negative, got {theta}")
    h = np.zeros(W.N)
    h[K:] = theta * probe_value.as_float()
    return RecallProblem(W, h, theta, masked=tuple(range(K)))


def build_problem(W: WeightMatrix, probe_value: BipolarPattern, theta: float) -> RecallProblem:
    """
    Probes carry values only: un-keyed weights get the plain QAMM bias,
    keyed weights (either rule) leave the key indices unbiased.
    """
    if W.key_size == 0:
        return build_qamm(W, probe_value, theta)
    return build_qcam(W, probe_value, theta, W.key_size)


def _state_array(prob: RecallProblem, s) -> np.ndarray:
    spins = s.as_float() if isinstance(s, BipolarPattern) else np.asarray(s, dtype=np.float64)
    if spins.shape[-1] != prob.N:
        raise SolverError(f"State length {spins.shape[-1]} does not match N={prob.N}")
    return spins


def energy(prob: RecallProblem, s: BipolarPattern) -> float:
    spins = _state_array(prob, s)
    return float(-spins @ prob.couplings.entries @ spins - prob.biases @ spins)


def energies(prob: RecallProblem, states: np.ndarray) -> np.ndarray:
    """Row-wise energies of a (batch, N) array of bipolar states."""
    spins = np.atleast_2d(_state_array(prob, states))
    return -np.einsum("bi,ij,bj->b", spins, prob.couplings.entries, spins) - spins @ prob.biases


def recall_distance(state: BipolarPattern, encoded: Sequence[BipolarPattern]) -> int:
    """Hamming distance from a recalled state to the nearest encoded pattern."""
    bits = from_bipolar(state)
    return min(hamming(bits, from_bipolar(e)) for e in encoded)


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric inverse-temperature ladder from beta_hot to beta_cold."""

    sweeps: int = 1000
    beta_hot: float = 0.1
    beta_cold: float = 10.0

    def __post_init__(self):
        if self.sweeps < 1:
            raise SolverError(f"Sweeps must be at least 1, got {self.sweeps}")
        if not 0 < self.beta_hot < self.beta_cold:
            raise SolverError(f"Need 0 < beta_hot < beta_cold, got [{self.beta_hot}, {self.beta_cold}]")

    def betas(self) -> np.ndarray:
        return np.geomspace(self.beta_hot, self.beta_cold, self.sweeps)

    def beta_at(self, s: float) -> float:
        """Geometric interpolation: s=0 is the hottest point, s=1 the coldest."""
        return float(self.beta_hot * (self.beta_cold / self.beta_hot) ** s)


@dataclass(frozen=True)
class ReverseScheduleParams:
    """Reheat to s_star, pause, cool back; sweep counts stand in for the ramp/pause times."""

    s_star: float = 0.5
    pause_sweeps: int = 1000
    ramp_sweeps: int = 100

    def __post_init__(self):
        if not 0 < self.s_star < 1:
            raise SolverError(f"s_star must lie in (0, 1), got {self.s_star}")
        if self.pause_sweeps < 0 or self.ramp_sweeps < 0:
            raise SolverError("Sweep counts must be non-negative")


@dataclass(frozen=True)
class Sample:
    state: BipolarPattern
    energy: float


@dataclass(frozen=True)
class SolveResult:
    samples: Tuple[Sample, ...]
    seeds: Tuple[int, ...] = ()
    solver: str = "exact"

    def __post_init__(self):
        if not self.samples:
            raise SolverError("A solve result needs at least one sample")

    @property
    def reads(self) -> int:
        return len(self.samples)

    def energy_values(self) -> np.ndarray:
        return np.array([s.energy for s in self.samples])

    def state_matrix(self) -> np.ndarray:
        return np.vstack([s.state.spins for s in self.samples]).astype(np.int8)

    def lowest(self) -> Sample:
        return min(self.samples, key=lambda s: s.energy)
