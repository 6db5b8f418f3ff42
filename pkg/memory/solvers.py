"""
Classical ground-state search for recall problems.

- solve_exact: exhaustive enumeration. The state is split into a low block
  of up to 16 spins whose 2^16 energies are held as a vector, and a high
  block walked in Gray-code order so every step flips one spin and updates
  the block energies incrementally.
- solve_sa: single-spin-flip Metropolis anneal along a geometric beta ladder
  (forward-anneal proxy), reads vectorised but each driven by its own stream.
- solve_reverse: chained reheat/pause/cool refinement from a candidate state
  (reverse-anneal proxy).
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from memory.errors import SolverError
from memory.ising import (
    AnnealSchedule,
    RecallProblem,
    ReverseScheduleParams,
    Sample,
    SolveResult,
    energy,
)
from memory.patterns import BipolarPattern
from utils.helper import derive_seed

logger = logging.getLogger(__name__)

EXACT = "exact"
SA = "sa"
REVERSE = "reverse"
SOLVERS = (EXACT, SA, REVERSE)

EXACT_MAX_N = 28
LOW_BLOCK_BITS = 16
MAX_GROUND_STATES = 4096
DRIFT_CHECK_STATES = 2 ** 16
DRIFT_TOL = 1e-9
DEGENERACY_TOL = 1e-9


def _all_spins(bits: int) -> np.ndarray:
    """Every bipolar configuration of `bits` spins; row k encodes integer k (bit i -> spin i)."""
    index = np.arange(2 ** bits, dtype=np.int64)[:, None]
    return (2 * ((index >> np.arange(bits)) & 1) - 1).astype(np.float64)


def _tolerance(value: float) -> float:
    return DEGENERACY_TOL * max(1.0, abs(value))


def solve_exact(
    prob: RecallProblem,
    max_n: int = EXACT_MAX_N,
    max_ground_states: int = MAX_GROUND_STATES,
) -> SolveResult:
    """
    Return every state of minimum energy (the degenerate ground manifold), each once.

    Energies within a relative 1e-9 of the minimum count as degenerate. The
    manifold is truncated at max_ground_states with a warning.
    """
    N = prob.N
    if N > max_n:
        raise SolverError(f"Exact enumeration is capped at N={max_n} (got N={N}); use the 'sa' solver")
    W = prob.couplings.entries
    h = prob.biases
    b = min(N, LOW_BLOCK_BITS)
    m = N - b

    low = _all_spins(b)
    w_ll, w_lh, w_hh = W[:b, :b], W[:b, b:], W[b:, b:]
    h_low, h_high = h[:b], h[b:]
    e_low = -np.einsum("ki,ij,kj->k", low, w_ll, low) - low @ h_low

    s_high = -np.ones(m)
    cross = 2.0 * w_lh @ s_high
    e_high = float(-s_high @ w_hh @ s_high - h_high @ s_high)
    check_every = max(1, DRIFT_CHECK_STATES >> b)

    best = np.inf
    candidates: List[Tuple[float, int, np.ndarray]] = []
    truncated = False
    for step in range(2 ** m):
        if step:
            j = (step & -step).bit_length() - 1
            old = s_high[j]
            e_high += 4.0 * old * (w_hh[j] @ s_high - w_hh[j, j] * old) + 2.0 * h_high[j] * old
            cross -= 4.0 * old * w_lh[:, j]
            s_high[j] = -old
            if step % check_every == 0:
                exact_high = float(-s_high @ w_hh @ s_high - h_high @ s_high)
                drift = abs(exact_high - e_high)
                if drift > DRIFT_TOL * max(1.0, abs(exact_high)):
                    logger.warning(f"Gray-code energy drift {drift:.3e} at step {step}; resynchronising")
                e_high = exact_high
                cross = 2.0 * w_lh @ s_high

        block = e_low - low @ cross + e_high
        block_min = float(block.min())
        if block_min < best:
            best = block_min
            limit = best + _tolerance(best)
            candidates = [c for c in candidates if c[0] <= limit]
        limit = best + _tolerance(best)
        if block_min <= limit:
            for k in np.flatnonzero(block <= limit):
                if len(candidates) >= max_ground_states:
                    truncated = True
                    break
                candidates.append((float(block[k]), int(k), s_high.copy()))

    if truncated:
        logger.warning(f"Ground manifold truncated at {max_ground_states} states")
    limit = best + _tolerance(best)
    samples = []
    for e, k, high in candidates:
        if e > limit:
            continue
        state = BipolarPattern(np.concatenate([low[k], high]).astype(np.int8))
        samples.append(Sample(state, energy(prob, state)))
    return SolveResult(tuple(samples), (), EXACT)


def _anneal(
    w_off: np.ndarray,
    h: np.ndarray,
    states: np.ndarray,
    betas: np.ndarray,
    uniforms: np.ndarray,
    keep_best: bool = False,
) -> np.ndarray:
    """
    Metropolis sweeps over a batch of chains.

    states is (B, N) and is updated in place; uniforms is (B, len(betas), N).
    Spins are visited in index order each sweep. With keep_best the return
    value holds, per chain, the lowest-energy state seen at the start or at
    the end of any sweep instead of the final state.
    """
    n = states.shape[1]
    local = states @ w_off
    if keep_best:
        current = -np.einsum("bi,bi->b", states, local) - states @ h
        best_states = states.copy()
        best_energy = current.copy()
    for t, beta in enumerate(betas):
        for i in range(n):
            spin = states[:, i]
            delta = 2.0 * spin * (2.0 * local[:, i] + h[i])
            accept = (delta <= 0.0) | (uniforms[:, t, i] < np.exp(-beta * np.maximum(delta, 0.0)))
            if accept.any():
                change = np.where(accept, -2.0 * spin, 0.0)
                if keep_best:
                    current += np.where(accept, delta, 0.0)
                states[:, i] += change
                local += np.outer(change, w_off[i])
        if keep_best:
            improved = current < best_energy - DEGENERACY_TOL * np.maximum(1.0, np.abs(best_energy))
            best_states[improved] = states[improved]
            best_energy[improved] = current[improved]
    return best_states if keep_best else states


def _off_diagonal(prob: RecallProblem) -> np.ndarray:
    w = np.array(prob.couplings.entries)
    np.fill_diagonal(w, 0.0)
    return w


def solve_sa(
    prob: RecallProblem,
    sched: Optional[AnnealSchedule] = None,
    reads: int = 100,
    seed: int = 0,
    batch_size: int = 100,
) -> SolveResult:
    """
    Independent forward anneals from uniform random starts.

    Read r draws everything from the stream seeded by derive_seed(seed, r),
    so results do not depend on batching.
    """
    if reads < 1:
        raise SolverError(f"Reads must be at least 1, got {reads}")
    sched = sched or AnnealSchedule()
    betas = sched.betas()
    w_off = _off_diagonal(prob)
    N = prob.N
    read_seeds = tuple(derive_seed(seed, r) for r in range(reads))
    samples: List[Sample] = []
    for start in range(0, reads, batch_size):
        chunk = read_seeds[start:start + batch_size]
        states = np.empty((len(chunk), N))
        uniforms = np.empty((len(chunk), len(betas), N))
        for row, read_seed in enumerate(chunk):
            rng = np.random.default_rng(read_seed)
            states[row] = 2.0 * rng.integers(0, 2, N) - 1.0
            uniforms[row] = rng.random((len(betas), N))
        _anneal(w_off, prob.biases, states, betas, uniforms)
        for row in states:
            state = BipolarPattern(row.astype(np.int8))
            samples.append(Sample(state, energy(prob, state)))
    return SolveResult(tuple(samples), read_seeds, SA)


def reverse_betas(sched: AnnealSchedule, params: ReverseScheduleParams) -> np.ndarray:
    """Cold -> beta(s*) ramp, pause at beta(s*), ramp back to cold."""
    beta_star = sched.beta_at(params.s_star)
    down = np.geomspace(sched.beta_cold, beta_star, params.ramp_sweeps) if params.ramp_sweeps else np.empty(0)
    pause = np.full(params.pause_sweeps, beta_star)
    return np.concatenate([down, pause, down[::-1]])


def solve_reverse(
    prob: RecallProblem,
    seed_state: BipolarPattern,
    params: Optional[ReverseScheduleParams] = None,
    reads: int = 100,
    seed: int = 0,
    sched: Optional[AnnealSchedule] = None,
) -> SolveResult:
    """
    Chained reverse anneals: read 0 starts from seed_state, every later read
    from the state recorded by the previous one.

    A read records the lowest-energy state its chain visited; the recorded
    energies never increase along the chain.
    """
    if len(seed_state) != prob.N:
        raise SolverError(f"Seed state length {len(seed_state)} does not match N={prob.N}")
    if reads < 1:
        raise SolverError(f"Reads must be at least 1, got {reads}")
    params = params or ReverseScheduleParams()
    sched = sched or AnnealSchedule()
    betas = reverse_betas(sched, params)
    w_off = _off_diagonal(prob)
    state = seed_state.as_float()[None, :].copy()
    read_seeds = tuple(derive_seed(seed, r) for r in range(reads))
    samples: List[Sample] = []
    for read_seed in read_seeds:
        rng = np.random.default_rng(read_seed)
        uniforms = rng.random((1, len(betas), prob.N))
        state = _anneal(w_off, prob.biases, state, betas, uniforms, keep_best=True)
        recalled = BipolarPattern(state[0].astype(np.int8))
        samples.append(Sample(recalled, energy(prob, recalled)))
    return SolveResult(tuple(samples), read_seeds, REVERSE)


@dataclass(frozen=True)
class SolverConfig:
    """Solver choice and its parameters, as read from the experiment config."""

    name: str = SA
    reads: int = 100
    schedule: AnnealSchedule = field(default_factory=AnnealSchedule)
    reverse: ReverseScheduleParams = field(default_factory=ReverseScheduleParams)
    exact_max_n: int = EXACT_MAX_N
    max_ground_states: int = MAX_GROUND_STATES

    def __post_init__(self):
        if self.name not in SOLVERS:
            raise SolverError(f"Unknown solver '{self.name}', expected one of {SOLVERS}")
        if self.reads < 1:
            raise SolverError(f"Reads must be at least 1, got {self.reads}")


def run_solver(
    prob: RecallProblem,
    cfg: SolverConfig,
    seed: int = 0,
    seed_state: Optional[BipolarPattern] = None,
) -> SolveResult:
    """
    Dispatch on cfg.name. The reverse solver without a seed state first runs a
    forward anneal and refines its lowest-energy sample.
    """
    if cfg.name == EXACT:
        return solve_exact(prob, cfg.exact_max_n, cfg.max_ground_states)
    if cfg.name == SA:
        return solve_sa(prob, cfg.schedule, cfg.reads, seed)
    if seed_state is None:
        forward = solve_sa(prob, cfg.schedule, cfg.reads, derive_seed(seed, "forward"))
        seed_state = forward.lowest().state
    return solve_reverse(prob, seed_state, cfg.reverse, cfg.reads, derive_seed(seed, "reverse"), cfg.schedule)
