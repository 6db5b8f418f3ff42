import logging

from agents.base_agent import BaseAgent
from memory.classifiers import calibrate, classify, pooled_roc, probe_statistic, roc_sweep
from memory.ising import build_problem, recall_distance
from memory.patterns import to_bipolar
from memory.solvers import run_solver
from utils.helper import derive_seed

logger = logging.getLogger(__name__)

KEY_INDEX = 0


class ClassificationAgent(BaseAgent):
    """
    Agent that calibrates a classifier on encoded signals, scores probes and
    turns the scores into labels and ROC curves.
    """

    name = 'classification'

    def analyze(self, action, **kwargs):
        """
        Run a classification stage.

        Args:
            action: 'classify' (labels at one beta) or 'roc' (beta sweep)
            **kwargs: cfg, library, weights, theta, probes, classifier, beta

        Returns:
            dict: calibration, per-probe rows and labels or the ROC curve
        """
        self.reset()
        try:
            with self.capture_warnings(self.name):
                cfg = kwargs['cfg']
                classifier = kwargs.get('classifier', cfg.classifiers[0])
                library, W, theta = kwargs['library'], kwargs['weights'], kwargs['theta']
                seed = kwargs.get('seed', cfg.seed)
                cal = self.calibrate(cfg, library, W, theta, classifier, derive_seed(seed, "calibration"))
                rows = self.score_probes(cfg, library, W, theta, kwargs['probes'], classifier, derive_seed(seed, "recall"))
                results = self.get_results()
                results['calibration'] = cal.to_dict()
                if action == 'classify':
                    beta = kwargs.get('beta', 1.0)
                    for row in rows:
                        row['label'] = classify(row['statistic'], cal, beta)
                    results['probes'] = rows
                    return results
                if action == 'roc':
                    curve = roc_sweep([r['statistic'] for r in rows], [r['kind'] for r in rows], cal, cfg.beta_grid())
                    results['probes'] = rows
                    results['roc'] = curve
                    results['auc'] = curve.auc
                    return results
                raise ValueError(f"Unknown classification action: {action}")
        except Exception as e:
            return self.error_result(e)

    def calibrate(self, cfg, library, W, theta, classifier, seed):
        """
        Calibrate the acceptance range on the encoded signals.

        Args:
            cfg: ExperimentConfig providing the solver settings
            library: Encoded library
            W: Trained WeightMatrix
            theta: Bias strength
            classifier: 'energy' or 'key'
            seed: Seed for the calibration recalls

        Returns:
            Calibration: mean and population sigma of the statistic
        """
        cal = calibrate(library, W, theta, cfg.solver_config(), classifier, seed, KEY_INDEX)
        self.add_reasoning_step(
            observation=f"Recalled {cal.probes} encoded signals with the {classifier} statistic",
            conclusion=f"mean {cal.mean:.6g}, sigma {cal.sigma:.6g}",
        )
        if cal.sigma == 0:
            self.add_finding(
                component=self.name,
                issue='Calibration spread is zero; only exact matches of the mean are accepted',
                severity='low',
                evidence=cal.to_dict(),
                recommendation='',
            )
        return cal

    def score_probes(self, cfg, library, W, theta, probes, classifier, seed):
        """
        Recall every probe and compute its statistic.

        Args:
            cfg: ExperimentConfig providing the solver settings
            library: Encoded library, used for recall distances
            W: Trained WeightMatrix
            theta: Bias strength
            probes: Probe objects
            classifier: 'energy' or 'key'
            seed: Seed for the probe recalls

        Returns:
            list: One dict per probe with kind, source, statistic, lowest energy and distance
        """
        solver = cfg.solver_config()
        encoded = library.bipolar_patterns()
        rows = []
        for i, probe in enumerate(probes):
            result = run_solver(build_problem(W, to_bipolar(probe.value), theta), solver, derive_seed(seed, i))
            lowest = result.lowest()
            rows.append({
                'probe': i,
                'kind': probe.kind,
                'source': probe.source,
                'value': probe.value.to_string(),
                'statistic': probe_statistic(result, classifier, KEY_INDEX),
                'lowest_energy': lowest.energy,
                'distance': recall_distance(lowest.state, encoded),
            })
        return rows

    def pooled(self, groups, beta_grid):
        """
        ROC over several training sets, each against its own calibration.

        Args:
            groups: (statistics, truths, calibration) per training set
            beta_grid: beta values to sweep

        Returns:
            RocCurve: Pooled curve
        """
        curve = pooled_roc(groups, beta_grid)
        self.add_reasoning_step(
            observation=f"Pooled {sum(len(g[0]) for g in groups)} probes over {len(groups)} training sets",
            conclusion=f"AUC {curve.auc:.4f}",
        )
        return curve
