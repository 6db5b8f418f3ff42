import os
import json
import logging
from typing import Dict, Any, List, Optional

from dotenv import load_dotenv

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_LEVEL_ENV = "TRACK_RECALL_LOG_LEVEL"

logger = logging.getLogger(__name__)


def configure_logging(level: Optional[str] = None) -> int:
    """
    Configure root logging once for the command-line tool.

    Args:
        level: Level name; falls back to TRACK_RECALL_LOG_LEVEL (a .env file is
            honoured) and then INFO

    Returns:
        int: The numeric level that was applied
    """
    load_dotenv()
    name = (level or os.getenv(LOG_LEVEL_ENV) or "INFO").upper()
    numeric = logging.getLevelName(name)
    if not isinstance(numeric, int):
        raise ValueError(f"Unknown log level: {name}")
    logging.basicConfig(level=numeric, format=LOG_FORMAT, force=True)
    return numeric


class ExperimentLogger:
    """
    Writes one JSON record per pipeline stage into a logs directory.

    Files are numbered in the order they are written rather than stamped with
    the wall clock, so two runs with the same seed produce identical logs.
    """

    def __init__(self, logs_dir: str = "logs"):
        """
        Initialize the experiment logger.

        Args:
            logs_dir: Directory to store stage records (default: 'logs')
        """
        self.logs_dir = logs_dir
        self.sequence = 0

        if not os.path.exists(logs_dir):
            os.makedirs(logs_dir)
            logger.info(f"Created logs directory: {logs_dir}")

    def _write(self, stage: str, record: Dict[str, Any]) -> str:
        self.sequence += 1
        stage_safe = stage.replace('/', '_').replace(' ', '_')
        filepath = os.path.join(self.logs_dir, f"{self.sequence:04d}_{stage_safe}.json")
        with open(filepath, 'w') as f:
            json.dump(record, f, indent=2, sort_keys=True)
        logger.debug(f"Logged {stage} to {filepath}")
        return filepath

    def log_library(self, cell: str, training_set: int, library: Dict[str, Any]) -> str:
        """
        Record the library built for one training set.

        Args:
            cell: Parameter cell name
            training_set: Training-set index
            library: Summary of the library (sizes, densities, seed)

        Returns:
            Path to the log file
        """
        return self._write(f"{cell}_set{training_set}_library", {
            "stage": "library",
            "cell": cell,
            "training_set": training_set,
            "library": library,
        })

    def log_calibration(self, cell: str, training_set: int, calibration: Dict[str, Any]) -> str:
        """
        Record a calibration.

        Args:
            cell: Parameter cell name
            training_set: Training-set index
            calibration: Calibration mean, sigma and probe count

        Returns:
            Path to the log file
        """
        return self._write(f"{cell}_set{training_set}_calibration", {
            "stage": "calibration",
            "cell": cell,
            "training_set": training_set,
            "calibration": calibration,
        })

    def log_cell(self, cell: str, summary: Dict[str, Any], findings: Optional[List[Dict[str, Any]]] = None) -> str:
        """
        Record the outcome of a parameter cell.

        Args:
            cell: Parameter cell name
            summary: AUC values and cell parameters
            findings: Warnings raised while the cell ran

        Returns:
            Path to the log file
        """
        return self._write(f"{cell}_summary", {
            "stage": "cell",
            "cell": cell,
            "summary": summary,
            "findings": findings or [],
        })

    def records(self, stage: Optional[str] = None) -> List[Dict[str, Any]]:
        """
        Read back the records written so far, in order.

        Args:
            stage: Optional stage filter ('library', 'calibration' or 'cell')

        Returns:
            List of record dicts
        """
        records = []
        for filename in sorted(os.listdir(self.logs_dir)):
            if not filename.endswith('.json'):
                continue
            filepath = os.path.join(self.logs_dir, filename)
            try:
                with open(filepath, 'r') as f:
                    data = json.load(f)
            except Exception as e:
                logger.error(f"Error reading log file {filepath}: {e}")
                continue
            if stage is None or data.get('stage') == stage:
                records.append(data)
        return records
