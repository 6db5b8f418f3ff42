import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Dict, List, Tuple

import pandas as pd

from agents.classification_agent import ClassificationAgent
from agents.hough_agent import HoughAgent
from agents.library_agent import LibraryAgent
from agents.recall_agent import RecallAgent
from memory.classifiers import RocCurve, roc_sweep
from utils.config import validate
from utils.helper import derive_seed, format_duration

logger = logging.getLogger(__name__)

SEED_PROVENANCE = {
    "library": "derive_seed(seed, 'library', alpha_index, training_set)",
    "background": "derive_seed(seed, 'background', alpha_index, training_set)",
    "background_probe": "derive_seed(seed, 'background-probe', alpha_index, training_set)",
    "probe": "derive_seed(seed, 'probe', alpha_index, training_set, cell_index, probe)",
    "calibration": "derive_seed(seed, 'calibration', alpha_index, training_set, model, classifier) -> pattern",
    "recall": "derive_seed(seed, 'recall', alpha_index, training_set, cell_index, model, classifier) -> probe -> read",
}


def cell_name(model: str, classifier: str, alpha: float, eta: float, gamma: float) -> str:
    return f"{model}-{classifier}-as{alpha:.4f}-eta{eta:.2f}-gamma{gamma:.2f}"


@dataclass
class CellReport:
    """Outcome of one (alpha, model, classifier, eta, gamma) parameter cell."""

    name: str
    model: str
    classifier: str
    alpha: float
    eta: float
    gamma: float
    roc: RocCurve
    per_set: List[Dict[str, Any]]
    probes: pd.DataFrame
    findings: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def auc(self) -> float:
        return self.roc.auc

    def summary(self) -> Dict[str, Any]:
        return {
            "cell": self.name,
            "model": self.model,
            "classifier": self.classifier,
            "alpha_s": self.alpha,
            "eta": self.eta,
            "gamma": self.gamma,
            "auc": self.auc,
            "per_training_set": self.per_set,
            "probes": int(len(self.probes)),
        }


@dataclass
class ExperimentReport:
    config: Dict[str, Any]
    cells: List[CellReport]
    seed: int

    def density_table(self) -> pd.DataFrame:
        """AUC against alpha_s for every (model, classifier, eta, gamma)."""
        return pd.DataFrame(
            [{"model": c.model, "classifier": c.classifier, "eta": c.eta, "gamma": c.gamma,
              "alpha_s": c.alpha, "auc": c.auc} for c in self.cells]
        ).sort_values(["model", "classifier", "eta", "gamma", "alpha_s"], ignore_index=True)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "seed": self.seed,
            "seed_provenance": SEED_PROVENANCE,
            "cells": [c.summary() for c in self.cells],
        }


class Coordinator:
    """
    Coordinator that drives the pipeline stages: library generation,
    corruption, training, recall, classification and Hough banking.
    """

    def __init__(self, experiment_logger=None, db=None):
        """
        Initialize the coordinator with all stage agents.

        Args:
            experiment_logger: Optional ExperimentLogger shared by the agents
            db: Optional DBHandler, used for weight dumps
        """
        self.experiment_logger = experiment_logger
        self.db = db

        self.library_agent = LibraryAgent(experiment_logger)
        self.recall_agent = RecallAgent(experiment_logger)
        self.classification_agent = ClassificationAgent(experiment_logger)
        self.hough_agent = HoughAgent(experiment_logger)

        # Map of analysis types to their corresponding agents
        self.agent_map = {
            'run': self._run_experiment_analysis,
            'gen': partial(self.library_agent.analyze, 'gen'),
            'corrupt': partial(self.library_agent.analyze, 'corrupt'),
            'train': partial(self.recall_agent.analyze, 'train'),
            'recall': partial(self.recall_agent.analyze, 'recall'),
            'classify': partial(self.classification_agent.analyze, 'classify'),
            'roc': partial(self.classification_agent.analyze, 'roc'),
            'hough': partial(self.hough_agent.analyze, 'peak'),
            'banks': partial(self.hough_agent.analyze, 'banks'),
            'stability': partial(self.hough_agent.analyze, 'stability'),
        }

    def run_analysis(self, analysis_type, **kwargs):
        """
        Run an analysis based on the specified type.

        Args:
            analysis_type: One of the agent_map keys
            **kwargs: Parameters for the analysis

        Returns:
            dict: Results from the relevant agent, or an error entry
        """
        try:
            if analysis_type not in self.agent_map:
                return {'error': 'ValueError', 'message': f"Unknown analysis type: {analysis_type}"}
            results = self.agent_map[analysis_type](**kwargs)
            results['metadata'] = {'analysis_type': analysis_type}
            return results
        except Exception as e:
            return {'error': type(e).__name__, 'message': str(e)}

    def _run_experiment_analysis(self, cfg, **kwargs):
        report = self.run_experiment(cfg)
        return {'report': report, 'findings': [f for c in report.cells for f in c.findings]}

    def _reset_agents(self):
        for agent in (self.library_agent, self.recall_agent, self.classification_agent, self.hough_agent):
            agent.reset()

    def run_experiment(self, cfg) -> ExperimentReport:
        """
        Generate, corrupt, train, calibrate, probe, classify and sweep every
        parameter cell of a config.

        Args:
            cfg: ExperimentConfig; validated before anything is computed

        Returns:
            ExperimentReport: ROC curves, AUCs and per-probe statistics per cell
        """
        validate(cfg)
        started = time.perf_counter()
        cells = cfg.noise_cells()
        grid = cfg.beta_grid()
        jobs = []

        for a, alpha in enumerate(cfg.alphas):
            self._reset_agents()
            with self.library_agent.capture_warnings('library'):
                bases = [self.library_agent.build_library(cfg, alpha, t, a) for t in range(cfg.training_sets)]

            for model in cfg.models:
                for classifier in cfg.classifiers:
                    trained = self._train_sets(cfg, bases, a, model, classifier)
                    for c, (eta, gamma) in enumerate(cells):
                        jobs.append((cfg, trained, a, alpha, c, eta, gamma, model, classifier, grid))

        if cfg.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as pool:
                reports = list(pool.map(_run_cell_job, jobs))
        else:
            reports = [self._run_cell(*job) for job in jobs]
        # pool.map keeps cell order
        if self.experiment_logger:
            for report in reports:
                self.experiment_logger.log_cell(
                    report.name, {"auc": report.auc, "per_training_set": report.per_set}, report.findings
                )

        logger.info(f"Experiment finished: {len(reports)} cells in {format_duration(time.perf_counter() - started)}")
        # results do not depend on the worker count
        config = {k: v for k, v in cfg.to_dict().items() if k != "workers"}
        return ExperimentReport(config, reports, cfg.seed)

    def _train_sets(self, cfg, bases, alpha_index, model, classifier) -> List[Tuple[Any, Any, float, Any]]:
        """Encode, train and calibrate every training set of one (alpha, model, classifier)."""
        trained = []
        for t, base in enumerate(bases):
            with self.recall_agent.capture_warnings('recall'):
                library = self.library_agent.encode(cfg, base, model, classifier, t, alpha_index)
                W, theta = self.recall_agent.train(cfg, library, model)
            if cfg.dump_weights and self.db is not None:
                W.to_csv(self.db.path(f"weights-{model}-{classifier}-as{cfg.alphas[alpha_index]:.4f}-set{t}.csv"))
            seed = derive_seed(cfg.seed, "calibration", alpha_index, t, model, classifier)
            with self.classification_agent.capture_warnings('classification'):
                cal = self.classification_agent.calibrate(cfg, library, W, theta, classifier, seed)
            if self.experiment_logger:
                self.experiment_logger.log_calibration(f"{model}-{classifier}-as{cfg.alphas[alpha_index]:.4f}", t, cal.to_dict())
            trained.append((library, W, theta, cal))
        return trained

    def _run_cell(self, cfg, trained, a, alpha, c, eta, gamma, model, classifier, grid) -> CellReport:
        name = cell_name(model, classifier, alpha, eta, gamma)
        groups, per_set, frames = [], [], []
        self.classification_agent.reset()
        with self.classification_agent.capture_warnings('classification'):
            for t, (library, W, theta, cal) in enumerate(trained):
                probes = self.library_agent.build_probes(cfg, library, eta, gamma, classifier, t, a, c)
                seed = derive_seed(cfg.seed, "recall", a, t, c, model, classifier)
                rows = self.classification_agent.score_probes(cfg, library, W, theta, probes, classifier, seed)
                stats = [r['statistic'] for r in rows]
                truths = [r['kind'] for r in rows]
                groups.append((stats, truths, cal))
                per_set.append({
                    "training_set": t,
                    "auc": roc_sweep(stats, truths, cal, grid).auc,
                    "calibration": cal.to_dict(),
                    "p_s": library.p_s,
                    "p_b": library.p_b,
                })
                frame = pd.DataFrame(rows)
                frame.insert(0, "training_set", t)
                frames.append(frame)
            roc = self.classification_agent.pooled(groups, grid)
        findings = list(self.classification_agent.findings)
        logger.info(f"{name}: AUC {roc.auc:.4f}")
        return CellReport(name, model, classifier, alpha, eta, gamma, roc, per_set, pd.concat(frames, ignore_index=True), findings)


def _run_cell_job(job) -> CellReport:
    """Pool entry point: one parameter cell on a fresh, logger-less coordinator."""
    return Coordinator()._run_cell(*job)
