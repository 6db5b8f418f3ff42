"""
Projection-rule learning of the recall weight matrix.

W_ij = (1/N) sum_{mu,nu} xi^mu_i Cinv_{mu nu} xi^nu_j with the pattern
covariance C_{mu nu} = (1/N) xi^mu . xi^nu. The bipartite variant keeps only
the key<->value blocks. The diagonal is stored; solvers treat it as a constant
energy offset.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import pandas as pd

from memory.errors import LearningError
from memory.patterns import BipolarPattern, KeyedPattern, PatternLibrary

logger = logging.getLogger(__name__)

PINV_TOL = 1e-10
SCALE_TARGET = 0.75

QAMM = "qamm"
QCAM = "qcam"
MODELS = (QAMM, QCAM)


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def p(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Symmetric N x N couplings; key_size marks the leading key indices."""

    entries: np.ndarray
    bipartite: bool = False
    key_size: int = 0

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise LearningError(f"Weight matrix must be square, got shape {arr.shape}")
        if not 0 <= self.key_size <= arr.shape[0]:
            raise LearningError(f"Key size {self.key_size} outside [0, {arr.shape[0]}]")
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    @property
    def max_weight(self) -> float:
        return float(self.entries.max())

    def scaled(self, factor: float) -> "WeightMatrix":
        return WeightMatrix(self.entries * factor, self.bipartite, self.key_size)

    def to_frame(self) -> pd.DataFrame:
        labels = [f"k{i}" for i in range(self.key_size)] + [f"v{i}" for i in range(self.N - self.key_size)]
        return pd.DataFrame(self.entries, index=labels, columns=labels)

    def to_csv(self, path: str) -> None:
        self.to_frame().to_csv(path, float_format="%.17g")


PatternsLike = Union[Sequence[BipolarPattern], np.ndarray]


def _pattern_matrix(patterns: PatternsLike) -> np.ndarray:
    """Stack patterns as rows of a p x N float matrix."""
    if isinstance(patterns, np.ndarray):
        xi = np.atleast_2d(np.asarray(patterns, dtype=np.float64))
    else:
        rows = list(patterns)
        if not rows:
            raise LearningError("At least one pattern is required")
        lengths = {len(r) for r in rows}
        if len(lengths) != 1:
            raise LearningError(f"Patterns have different lengths: {sorted(lengths)}")
        xi = np.vstack([r.as_float() for r in rows])
    if xi.shape[0] == 0:
        raise LearningError("At least one pattern is required")
    return xi


def covariance(patterns: PatternsLike) -> CovarianceMatrix:
    xi = _pattern_matrix(patterns)
    N = xi.shape[1]
    c = xi @ xi.T / N
    return CovarianceMatrix((c + c.T) / 2)


def rank_deficiency(C: CovarianceMatrix, tol: float = PINV_TOL) -> int:
    """Number of eigenvalues the pseudo-inverse discards."""
    eigvals = np.linalg.eigvalsh(C.entries)
    cutoff = tol * np.abs(eigvals).max()
    return int(np.count_nonzero(np.abs(eigvals) < cutoff))


def pseudo_inverse(C: CovarianceMatrix, tol: float = PINV_TOL) -> np.ndarray:
    """
    Moore-Penrose inverse from the symmetric eigendecomposition.

    Eigenvalues below tol * |lambda_max| are treated as zero.
    """
    eigvals, eigvecs = np.linalg.eigh(C.entries)
    cutoff = tol * np.abs(eigvals).max()
    keep = np.abs(eigvals) >= cutoff
    dropped = int(np.count_nonzero(~keep))
    if dropped:
        logger.warning(f"Covariance matrix is rank deficient: {dropped} of {C.p} eigenvalues discarded")
    inv = np.zeros_like(eigvals)
    inv[keep] = 1.0 / eigvals[keep]
    result = (eigvecs * inv) @ eigvecs.T
    return (result + result.T) / 2


def projection_weights(patterns: PatternsLike, key_size: int = 0) -> WeightMatrix:
    xi = _pattern_matrix(patterns)
    N = xi.shape[1]
    c_inv = pseudo_inverse(covariance(xi))
    w = xi.T @ c_inv @ xi / N
    return WeightMatrix((w + w.T) / 2, bipartite=False, key_size=key_size)


def bipartite_projection_weights(patterns: Sequence[KeyedPattern]) -> WeightMatrix:
    """Projection weights with the key-key and value-value blocks zeroed."""
    patterns = list(patterns)
    if not patterns:
        raise LearningError("At least one keyed pattern is required")
    K = patterns[0].K
    if K == 0:
        raise LearningError("Bipartite projection needs keyed patterns (K >= 1)")
    full = projection_weights([p.bipolar() for p in patterns], key_size=K)
    w = np.array(full.entries)
    w[:K, :K] = 0.0
    w[K:, K:] = 0.0
    return WeightMatrix(w, bipartite=True, key_size=K)


def train_weights(library: PatternLibrary, model: str) -> WeightMatrix:
    """QAMM: projection rule over all bits (keys included); QCAM: bipartite rule."""
    if model == QAMM:
        return projection_weights(library.bipolar_patterns(), key_size=library.K)
    if model == QCAM:
        return bipartite_projection_weights(library.patterns)
    raise LearningError(f"Unknown model '{model}', expected one of {MODELS}")


def rescale(W: WeightMatrix, theta: float) -> Tuple[WeightMatrix, float]:
    """Multiply couplings and bias by 3 / (4 * W_max)."""
    w_max = W.max_weight
    if w_max <= 0:
        raise LearningError(f"Cannot rescale: maximum weight {w_max} is not positive")
    factor = SCALE_TARGET / w_max
    return W.scaled(factor), theta * factor


def coupling_graph(W: WeightMatrix) -> nx.Graph:
    """Graph of non-zero off-diagonal couplings, nodes tagged key/value."""
    graph = nx.Graph()
    for i in range(W.N):
        graph.add_node(i, role="key" if i < W.key_size else "value")
    rows, cols = np.nonzero(np.triu(W.entries, k=1))
    for i, j in zip(rows.tolist(), cols.tolist()):
        graph.add_edge(i, j, weight=float(W.entries[i, j]))
    return graph


def coupling_summary(W: WeightMatrix) -> Dict[str, Any]:
    graph = coupling_graph(W)
    return {
        "N": W.N,
        "key_size": W.key_size,
        "bipartite_rule": W.bipartite,
        "edges": graph.number_of_edges(),
        "density": nx.density(graph),
        "is_bipartite_graph": nx.is_bipartite(graph),
        "components": nx.number_connected_components(graph),
        "max_weight": W.max_weight,
        "structural_zeros": int(np.count_nonzero(W.entries == 0.0)),
    }
