import logging

from agents.base_agent import BaseAgent
from memory.ising import build_problem, recall_distance
from memory.learning import coupling_summary, covariance, rank_deficiency, rescale, train_weights
from memory.patterns import to_bipolar
from memory.solvers import run_solver
from utils.helper import derive_seed

logger = logging.getLogger(__name__)


class RecallAgent(BaseAgent):
    """
    Agent that trains the weight matrix of a library and recalls probes
    through the configured Ising solver.
    """

    name = 'recall'

    def analyze(self, action, **kwargs):
        """
        Run a training or recall stage.

        Args:
            action: 'train' or 'recall'
            **kwargs: cfg, library and model for 'train'; weights, theta,
                probes, cfg and seed for 'recall'

        Returns:
            dict: 'weights'/'theta'/'coupling_summary' or 'recalls'
        """
        self.reset()
        try:
            with self.capture_warnings(self.name):
                if action == 'train':
                    W, theta = self.train(kwargs['cfg'], kwargs['library'], kwargs.get('model', kwargs['cfg'].models[0]))
                    results = self.get_results()
                    results.update({'weights': W, 'theta': theta, 'coupling_summary': coupling_summary(W)})
                    return results
                if action == 'recall':
                    cfg = kwargs['cfg']
                    library = kwargs.get('library')
                    recalls = []
                    for i, value in enumerate(kwargs['probes']):
                        result = self.recall(kwargs['weights'], kwargs['theta'], value, cfg, derive_seed(kwargs.get('seed', cfg.seed), i))
                        lowest = result.lowest()
                        record = {
                            'probe': value.to_string(),
                            'solver': result.solver,
                            'reads': result.reads,
                            'lowest_energy': lowest.energy,
                            'state': ''.join('1' if s > 0 else '0' for s in lowest.state.spins),
                            'mean_energy': float(result.energy_values().mean()),
                        }
                        if library is not None:
                            record['distance'] = recall_distance(lowest.state, library.bipolar_patterns())
                        recalls.append(record)
                    results = self.get_results()
                    results['recalls'] = recalls
                    return results
                raise ValueError(f"Unknown recall action: {action}")
        except Exception as e:
            return self.error_result(e)

    def train(self, cfg, library, model):
        """
        Learn the couplings of a library and optionally rescale them.

        Args:
            cfg: ExperimentConfig (theta, rescale)
            library: Encoded library
            model: 'qamm' or 'qcam'

        Returns:
            tuple: (WeightMatrix, theta) ready for recall
        """
        W = train_weights(library, model)
        deficiency = rank_deficiency(covariance(library.bipolar_patterns()))
        if deficiency:
            self.add_finding(
                component=self.name,
                issue=f"Covariance of {library.p} patterns is rank deficient by {deficiency}",
                severity='medium',
                evidence={'p': library.p, 'N': library.N},
                recommendation='Lower the pattern density or regenerate the library',
            )
        theta = cfg.theta
        if cfg.rescale:
            W, theta = rescale(W, theta)
        self.add_reasoning_step(
            observation=f"Trained {model} weights on {library.p} patterns (N={library.N}, K={library.K})",
            conclusion=f"max weight {W.max_weight:.4f}, theta {theta:.4f}",
        )
        return W, theta

    def recall(self, W, theta, value, cfg, seed):
        """
        Recall one probe value.

        Args:
            W: WeightMatrix
            theta: Bias strength matching W's scale
            value: Probe BitPattern (value bits only)
            cfg: ExperimentConfig providing the solver settings
            seed: Seed for the solver streams

        Returns:
            SolveResult: Samples from the solver
        """
        return run_solver(build_problem(W, to_bipolar(value), theta), cfg.solver_config(), seed)
