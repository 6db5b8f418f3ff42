import json
import os
import zlib
from typing import Any, Dict, List, Tuple, Union

import numpy as np
import yaml

from memory.errors import ConfigError, HoughError, PatternError
from memory.patterns import BitPattern

SeedPart = Union[int, str]


def derive_seed(master: int, *path: SeedPart) -> int:
    """
    Derive a child seed from a master seed and a path of labels.

    The same (master, path) always yields the same seed, and sibling paths
    give independent streams. Used as master -> training set -> probe -> read.

    Args:
        master: Non-negative master seed
        *path: Integers or strings naming the child stream

    Returns:
        int: 63-bit seed suitable for numpy.random.default_rng
    """
    if master < 0:
        raise ConfigError(f"Seeds must be non-negative, got {master}")
    # the path length keeps (m,) and (m, 0) apart; SeedSequence zero-pads short entropy
    entropy = [int(master), len(path)]
    for part in path:
        if isinstance(part, str):
            # strings are hashed into a separate range from small integer labels
            entropy.extend([2 ** 32, zlib.crc32(part.encode("utf-8"))])
        elif int(part) < 0:
            raise ConfigError(f"Seed path components must be non-negative, got {part}")
        else:
            entropy.append(int(part))
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])


def parse_bits(text: str) -> BitPattern:
    """
    Parse a bit string such as '0100 1000' or '0,1,0,0' into a BitPattern.

    Args:
        text: 0/1 characters, optionally separated by spaces, commas or underscores

    Returns:
        BitPattern: Parsed pattern
    """
    cleaned = "".join(ch for ch in text if ch not in " ,_\t\n")
    if not cleaned:
        raise PatternError("Empty bit string")
    return BitPattern.from_string(cleaned)


def parse_points(text: str) -> List[Tuple[float, float]]:
    """
    Parse hit coordinates written as 'x,y' pairs separated by spaces or semicolons.

    Args:
        text: e.g. '2,-5 2,-4; 2,-3'

    Returns:
        list: (x, y) tuples in input order
    """
    points = []
    for pair in text.replace(";", " ").split():
        try:
            x, y = (float(v) for v in pair.split(","))
        except ValueError:
            raise HoughError(f"Point '{pair}' is not of the form x,y") from None
        points.append((x, y))
    if not points:
        raise HoughError("No points given")
    return points


def format_duration(seconds: float) -> str:
    """
    Format a wall-clock duration for log messages.

    Args:
        seconds: Duration in seconds

    Returns:
        str: e.g. '850 ms', '12.4 s' or '3 min 05 s'
    """
    if seconds < 1:
        return f"{seconds * 1000:.0f} ms"
    if seconds < 60:
        return f"{seconds:.1f} s"
    minutes, rest = divmod(int(round(seconds)), 60)
    return f"{minutes} min {rest:02d} s"


def load_structured_file(path: str) -> Dict[str, Any]:
    """
    Load a YAML or JSON mapping from disk.

    Args:
        path: File path; .json is parsed as JSON, everything else as YAML

    Returns:
        dict: Parsed mapping
    """
    if not os.path.exists(path):
        raise ConfigError(f"File not found: {path}")
    try:
        with open(path, "r") as f:
            if path.endswith(".json"):
                data = json.load(f)
            else:
                data = yaml.safe_load(f)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"Could not parse {path}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a mapping at the top level")
    return data


def dump_json(data: Any, path: str) -> str:
    """
    Write JSON with sorted keys and fixed indentation so reruns are byte-identical.

    Args:
        data: JSON-serialisable object
        path: Destination file

    Returns:
        str: The path written
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    return path
