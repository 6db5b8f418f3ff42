"""
Track pattern representations for associative memory recall.

Detector hit maps are 0/1 bit vectors with one bit per detector segment.
Solver states use the bipolar convention: hit -> +1, no hit -> -1.
Keyed patterns place the key bits first, followed by the value bits.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from memory.errors import LibraryError, PatternError

logger = logging.getLogger(__name__)

SIGNAL = "signal"
BACKGROUND = "background"
PATTERN_KINDS = (SIGNAL, BACKGROUND)

DEFAULT_BACKGROUND_FILL = 0.15
DEFAULT_MAX_TRIES = 10_000


def _readonly(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype).reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class BitPattern:
    """Binary hit map, one bit per detector segment."""

    bits: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.bits)
        if raw.ndim != 1 or raw.size == 0:
            raise PatternError("BitPattern requires a non-empty 1-D sequence of bits")
        if not np.all((raw == 0) | (raw == 1)):
            raise PatternError("BitPattern elements must be 0 or 1")
        object.__setattr__(self, "bits", _readonly(raw, np.uint8))

    def __len__(self) -> int:
        return int(self.bits.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitPattern):
            return NotImplemented
        return len(self) == len(other) and bool(np.array_equal(self.bits, other.bits))

    def __hash__(self) -> int:
        return hash((len(self), self.bits.tobytes()))

    def __repr__(self) -> str:
        return f"BitPattern('{self.to_string()}')"

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())

    def to_string(self) -> str:
        """Render as a fixed-width 0/1 string, segment 0 first."""
        return "".join("1" if b else "0" for b in self.bits)

    @classmethod
    def from_string(cls, text: str) -> "BitPattern":
        text = text.strip()
        if not text or any(c not in "01" for c in text):
            raise PatternError(f"Invalid bit string: {text!r}")
        return cls(np.fromiter((c == "1" for c in text), dtype=np.uint8, count=len(text)))

    @classmethod
    def zeros(cls, length: int) -> "BitPattern":
        return cls(np.zeros(length, dtype=np.uint8))


@dataclass(frozen=True, eq=False)
class BipolarPattern:
    """Spin configuration with entries in {-1, +1}."""

    spins: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.spins)
        if raw.ndim != 1 or raw.size == 0:
            raise PatternError("BipolarPattern requires a non-empty 1-D sequence of spins")
        if not np.all((raw == 1) | (raw == -1)):
            raise PatternError("BipolarPattern elements must be -1 or +1")
        object.__setattr__(self, "spins", _readonly(raw, np.int8))

    def __len__(self) -> int:
        return int(self.spins.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BipolarPattern):
            return NotImplemented
        return len(self) == len(other) and bool(np.array_equal(self.spins, other.spins))

    def __hash__(self) -> int:
        return hash((len(self), self.spins.tobytes()))

    def __neg__(self) -> "BipolarPattern":
        return BipolarPattern(-self.spins.astype(np.int8))

    def __repr__(self) -> str:
        return "BipolarPattern('" + "".join("+" if s > 0 else "-" for s in self.spins) + "')"

    def as_float(self) -> np.ndarray:
        return self.spins.astype(np.float64)


def to_bipolar(p: BitPattern) -> BipolarPattern:
    """Map bit 1 to +1 and bit 0 to -1."""
    return BipolarPattern(2 * p.bits.astype(np.int8) - 1)


def from_bipolar(s: BipolarPattern) -> BitPattern:
    """Inverse of to_bipolar."""
    return BitPattern((s.spins.astype(np.int16) + 1) // 2)


def hamming(a: BitPattern, b: BitPattern) -> int:
    """Number of positions where two equal-length patterns differ."""
    if len(a) != len(b):
        raise PatternError(f"Hamming distance needs equal lengths, got {len(a)} and {len(b)}")
    return int(np.count_nonzero(a.bits != b.bits))


def _check_probability(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise PatternError(f"{name} must lie in [0, 1], got {value}")
    return value


def apply_noise(p: BitPattern, gamma: float, rng: np.random.Generator) -> BitPattern:
    """
    Fire each empty segment independently with probability gamma.

    Set bits are never cleared.
    """
    gamma = _check_probability("gamma", gamma)
    fires = rng.random(len(p)) < gamma
    return BitPattern(p.bits | fires.astype(np.uint8))


def apply_inefficiency(p: BitPattern, eta: float, rng: np.random.Generator) -> BitPattern:
    """
    Drop each hit independently with probability 1 - eta.

    eta = 1 is a perfect detector; cleared bits are never set.
    """
    eta = _check_probability("eta", eta)
    drops = rng.random(len(p)) < (1.0 - eta)
    return BitPattern(p.bits & (~drops).astype(np.uint8))


def corrupt(p: BitPattern, eta: float, gamma: float, rng: np.random.Generator) -> BitPattern:
    """Apply inefficiency first, then noise."""
    return apply_noise(apply_inefficiency(p, eta, rng), gamma, rng)


@dataclass(frozen=True, eq=False)
class KeyedPattern:
    """
    Key/value pair stored by the memory.

    key is None for un-keyed (plain associative memory) patterns.
    """

    value: BitPattern
    key: Optional[BitPattern] = None
    kind: str = SIGNAL

    def __post_init__(self):
        if self.kind not in PATTERN_KINDS:
            raise PatternError(f"Unknown pattern kind: {self.kind}")

    @property
    def K(self) -> int:
        return 0 if self.key is None else len(self.key)

    @property
    def V(self) -> int:
        return len(self.value)

    @property
    def N(self) -> int:
        return self.K + self.V

    @property
    def bits(self) -> BitPattern:
        if self.key is None:
            return self.value
        return BitPattern(np.concatenate([self.key.bits, self.value.bits]))

    def bipolar(self) -> BipolarPattern:
        return to_bipolar(self.bits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, KeyedPattern):
            return NotImplemented
        return self.kind == other.kind and self.key == other.key and self.value == other.value

    def __hash__(self) -> int:
        return hash((self.kind, self.key, self.value))


def key_for_kind(kind: str, key_size: int = 1) -> Optional[BitPattern]:
    """Classification key: all ones for signal, all zeros for background."""
    if key_size == 0:
        return None
    if kind == SIGNAL:
        return BitPattern(np.ones(key_size, dtype=np.uint8))
    if kind == BACKGROUND:
        return BitPattern.zeros(key_size)
    raise PatternError(f"Unknown pattern kind: {kind}")


def assemble_keyed(key: Optional[Sequence[int]], value: BitPattern, kind: str = SIGNAL) -> KeyedPattern:
    """Build a keyed pattern; an empty key yields an un-keyed pattern."""
    if key is None or isinstance(key, BitPattern):
        return KeyedPattern(value=value, key=key, kind=kind)
    key_bits = np.asarray(key)
    if key_bits.size == 0:
        return KeyedPattern(value=value, key=None, kind=kind)
    return KeyedPattern(value=value, key=BitPattern(key_bits), kind=kind)


@dataclass(frozen=True, eq=False)
class PatternLibrary:
    """
    Encoded training set.

    All patterns share (K, V) and all values are pairwise distinct.
    sources optionally holds the generating particle state for each pattern
    (None for backgrounds); meta carries serialisable provenance such as the
    detector geometry.
    """

    patterns: Tuple[KeyedPattern, ...]
    sources: Tuple[Any, ...] = ()
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        patterns = tuple(self.patterns)
        if not patterns:
            raise LibraryError("A pattern library needs at least one pattern")
        shapes = {(p.K, p.V) for p in patterns}
        if len(shapes) != 1:
            raise LibraryError(f"Patterns disagree on (K, V): {sorted(shapes)}")
        seen = set()
        for index, pattern in enumerate(patterns):
            if pattern.value in seen:
                raise LibraryError(f"Duplicate value at pattern {index}: {pattern.value.to_string()}")
            seen.add(pattern.value)
        sources = tuple(self.sources) if self.sources else (None,) * len(patterns)
        if len(sources) != len(patterns):
            raise LibraryError("sources must align with patterns")
        object.__setattr__(self, "patterns", patterns)
        object.__setattr__(self, "sources", sources)
        object.__setattr__(self, "meta", dict(self.meta))

    def __len__(self) -> int:
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PatternLibrary):
            return NotImplemented
        return self.patterns == other.patterns

    __hash__ = None

    @property
    def K(self) -> int:
        return self.patterns[0].K

    @property
    def V(self) -> int:
        return self.patterns[0].V

    @property
    def N(self) -> int:
        return self.K + self.V

    @property
    def p(self) -> int:
        return len(self.patterns)

    @property
    def p_s(self) -> int:
        return sum(1 for p in self.patterns if p.kind == SIGNAL)

    @property
    def p_b(self) -> int:
        return sum(1 for p in self.patterns if p.kind == BACKGROUND)

    @property
    def alpha_s(self) -> float:
        return self.p_s / self.V

    @property
    def alpha_b(self) -> float:
        return self.p_b / self.V

    def values(self) -> List[BitPattern]:
        return [p.value for p in self.patterns]

    def indices(self, kind: str) -> List[int]:
        return [i for i, p in enumerate(self.patterns) if p.kind == kind]

    def signals(self) -> List[KeyedPattern]:
        return [p for p in self.patterns if p.kind == SIGNAL]

    def backgrounds(self) -> List[KeyedPattern]:
        return [p for p in self.patterns if p.kind == BACKGROUND]

    def bipolar_patterns(self) -> List[BipolarPattern]:
        return [p.bipolar() for p in self.patterns]

    def bipolar_matrix(self) -> np.ndarray:
        """p x N matrix of bipolar rows, keys first."""
        return np.vstack([p.bipolar().as_float() for p in self.patterns])

    def keyed(self, key_size: int = 1) -> "PatternLibrary":
        """Re-key every pattern with the kind convention (key_size 0 strips keys)."""
        patterns = tuple(
            KeyedPattern(value=p.value, key=key_for_kind(p.kind, key_size), kind=p.kind)
            for p in self.patterns
        )
        return PatternLibrary(patterns, self.sources, self.meta)

    def signal_only(self) -> "PatternLibrary":
        keep = self.indices(SIGNAL)
        if not keep:
            raise LibraryError("Library holds no signal patterns")
        return PatternLibrary(
            tuple(self.patterns[i] for i in keep), tuple(self.sources[i] for i in keep), self.meta
        )

    def with_backgrounds(self, values: Iterable[BitPattern]) -> "PatternLibrary":
        """Append background values keyed with the library's key width."""
        extra = tuple(
            KeyedPattern(value=v, key=key_for_kind(BACKGROUND, self.K), kind=BACKGROUND) for v in values
        )
        return PatternLibrary(self.patterns + extra, self.sources + (None,) * len(extra), self.meta)


def generate_background(
    V: int,
    fill_prob: float = DEFAULT_BACKGROUND_FILL,
    library: Optional[PatternLibrary] = None,
    rng: Optional[np.random.Generator] = None,
    max_tries: int = DEFAULT_MAX_TRIES,
    exclude: Iterable[BitPattern] = (),
) -> BitPattern:
    """
    Draw i.i.d. Bernoulli(fill_prob) bits, rejecting any pattern that equals
    a library value or an excluded pattern.
    """
    fill_prob = _check_probability("fill_prob", fill_prob)
    if rng is None:
        rng = np.random.default_rng()
    taken = set(exclude)
    if library is not None:
        if library.V != V:
            raise LibraryError(f"Library value length {library.V} does not match V={V}")
        taken.update(library.values())
    for _ in range(max_tries):
        candidate = BitPattern((rng.random(V) < fill_prob).astype(np.uint8))
        if candidate not in taken:
            return candidate
    raise LibraryError(
        f"No background distinct from {len(taken)} stored patterns after {max_tries} tries "
        f"(V={V}, fill={fill_prob})"
    )
