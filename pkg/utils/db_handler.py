import json
import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

from memory.detector import ParticleState
from memory.errors import LibraryError, PatternError, TrackRecallError
from memory.patterns import PATTERN_KINDS, BitPattern, KeyedPattern, PatternLibrary
from utils.helper import dump_json

logger = logging.getLogger(__name__)

LIBRARY_VERSION = 1
PROBE_SET_VERSION = 1


@dataclass(frozen=True)
class Probe:
    """Probe value with its ground-truth kind and where it came from."""

    kind: str
    value: BitPattern
    source: str = ""

    def __post_init__(self):
        if self.kind not in PATTERN_KINDS:
            raise PatternError(f"Unknown probe kind: {self.kind}")


def _read_json(path: str) -> Dict[str, Any]:
    if not os.path.exists(path):
        raise LibraryError(f"File not found: {path}")
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise LibraryError(f"Malformed JSON in {path}: {e}") from e
    if not isinstance(data, dict):
        raise LibraryError(f"{path} must hold a JSON object")
    return data


def _check_version(data: Dict[str, Any], expected: int, path: str) -> None:
    version = data.get("version")
    if version != expected:
        raise LibraryError(f"Unsupported version {version!r} in {path}; expected version {expected}")


def library_to_dict(lib: PatternLibrary) -> Dict[str, Any]:
    patterns = []
    for pattern, source in zip(lib.patterns, lib.sources):
        record = {
            "kind": pattern.kind,
            "key": pattern.key.to_string() if pattern.key is not None else "",
            "value": pattern.value.to_string(),
        }
        if isinstance(source, ParticleState):
            record["particle"] = source.to_dict()
        patterns.append(record)
    return {"version": LIBRARY_VERSION, "V": lib.V, "K": lib.K, "patterns": patterns, "meta": lib.meta}


def library_from_dict(data: Dict[str, Any], path: str = "<memory>") -> PatternLibrary:
    _check_version(data, LIBRARY_VERSION, path)
    try:
        V, K = int(data["V"]), int(data["K"])
        patterns, sources = [], []
        for record in data["patterns"]:
            value = BitPattern.from_string(record["value"])
            key = BitPattern.from_string(record["key"]) if record.get("key") else None
            pattern = KeyedPattern(value=value, key=key, kind=record["kind"])
            if pattern.V != V or pattern.K != K:
                raise LibraryError(f"Pattern shape (K={pattern.K}, V={pattern.V}) does not match header (K={K}, V={V})")
            patterns.append(pattern)
            particle = record.get("particle")
            sources.append(ParticleState.from_dict(particle) if particle else None)
    except (KeyError, TypeError) as e:
        raise LibraryError(f"Malformed library record in {path}: {e}") from e
    except TrackRecallError as e:
        raise LibraryError(f"Invalid library in {path}: {e}") from e
    return PatternLibrary(tuple(patterns), tuple(sources), data.get("meta", {}))


class DBHandler:
    """
    Handles persistence of libraries, probe sets and experiment outputs using JSON files.
    Every parameter cell writes into its own sub-directory of base_dir.
    """

    def __init__(self, base_dir: str = "results"):
        """
        Initialize the database handler.

        Args:
            base_dir: Directory to store experiment outputs
        """
        self.base_dir = base_dir
        if not os.path.exists(base_dir):
            os.makedirs(base_dir)

    def path(self, *parts: str) -> str:
        return os.path.join(self.base_dir, *parts)

    def cell_dir(self, cell: str) -> str:
        """
        Directory for one parameter cell, created on demand.

        Args:
            cell: Parameter cell name

        Returns:
            str: Directory path
        """
        directory = self.path(cell)
        os.makedirs(directory, exist_ok=True)
        return directory

    def save_library(self, lib: PatternLibrary, path: str) -> str:
        """
        Save a library as versioned JSON.

        Args:
            lib: Library to save
            path: Destination, relative paths resolve under base_dir

        Returns:
            str: The path written
        """
        target = path if os.path.isabs(path) else self.path(path)
        dump_json(library_to_dict(lib), target)
        logger.info(f"Saved library ({lib.p_s} signal, {lib.p_b} background) to {target}")
        return target

    def load_library(self, path: str) -> PatternLibrary:
        """
        Load a library, checking the version and all library invariants.

        Args:
            path: Library file

        Returns:
            PatternLibrary: The loaded library
        """
        target = path if os.path.isabs(path) or os.path.exists(path) else self.path(path)
        return library_from_dict(_read_json(target), target)

    def save_probes(self, probes: List[Probe], path: str) -> str:
        """
        Save a probe set as versioned JSON.

        Args:
            probes: Probes sharing one value length
            path: Destination, relative paths resolve under base_dir

        Returns:
            str: The path written
        """
        if not probes:
            raise LibraryError("Cannot save an empty probe set")
        lengths = {len(p.value) for p in probes}
        if len(lengths) != 1:
            raise LibraryError(f"Probes disagree on value length: {sorted(lengths)}")
        data = {
            "version": PROBE_SET_VERSION,
            "V": lengths.pop(),
            "K": 0,
            "probes": [{"kind": p.kind, "value": p.value.to_string(), "source": p.source} for p in probes],
        }
        target = path if os.path.isabs(path) else self.path(path)
        return dump_json(data, target)

    def load_probes(self, path: str) -> List[Probe]:
        """
        Load a probe set.

        Args:
            path: Probe-set file

        Returns:
            List of probes
        """
        target = path if os.path.isabs(path) or os.path.exists(path) else self.path(path)
        data = _read_json(target)
        _check_version(data, PROBE_SET_VERSION, target)
        try:
            probes = [Probe(r["kind"], BitPattern.from_string(r["value"]), r.get("source", "")) for r in data["probes"]]
        except (KeyError, TypeError) as e:
            raise LibraryError(f"Malformed probe record in {target}: {e}") from e
        except TrackRecallError as e:
            raise LibraryError(f"Invalid probe in {target}: {e}") from e
        if any(len(p.value) != int(data["V"]) for p in probes):
            raise LibraryError(f"Probe length does not match V={data['V']} in {target}")
        return probes

    def save_json(self, data: Dict[str, Any], *parts: str) -> str:
        return dump_json(data, self.path(*parts))

    def load_json(self, *parts: str) -> Optional[Dict[str, Any]]:
        target = self.path(*parts)
        if not os.path.exists(target):
            return None
        with open(target, 'r') as f:
            return json.load(f)
