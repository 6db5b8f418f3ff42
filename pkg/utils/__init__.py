from utils.helper import derive_seed, dump_json, format_duration, parse_bits, parse_points
from utils.logging_helper import ExperimentLogger, configure_logging

__all__ = [
    'derive_seed',
    'dump_json',
    'format_duration',
    'parse_bits',
    'parse_points',
    'ExperimentLogger',
    'configure_logging'
]
