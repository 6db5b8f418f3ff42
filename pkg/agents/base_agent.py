import logging
from contextlib import contextmanager


class _FindingHandler(logging.Handler):
    """Turns warnings emitted by the domain core into agent findings."""

    def __init__(self, agent, component):
        super().__init__(level=logging.WARNING)
        self.agent = agent
        self.component = component

    def emit(self, record):
        self.agent.add_finding(
            component=self.component,
            issue=record.getMessage(),
            severity='high' if record.levelno >= logging.ERROR else 'medium',
            evidence={'logger': record.name},
            recommendation='',
        )


class BaseAgent:
    """
    Base class for the pipeline stages of the track recall system.
    Provides common functionality and interface for all agents.
    """

    name = 'base'

    def __init__(self, experiment_logger=None):
        """
        Initialize the base agent.

        Args:
            experiment_logger: Optional ExperimentLogger receiving stage records
        """
        self.experiment_logger = experiment_logger
        self.findings = []
        self.reasoning_steps = []

    def analyze(self, action, **kwargs):
        """
        Perform the agent's stage.
        This method should be overridden by child classes.

        Args:
            action: Which operation of the stage to run
            **kwargs: Parameters of the operation

        Returns:
            dict: Results of the analysis
        """
        raise NotImplementedError("Each agent must implement its own analyze method")

    def add_finding(self, component, issue, severity, evidence, recommendation):
        """
        Add a finding to the agent's findings list.

        Args:
            component: Pipeline component the finding concerns
            issue: Description of the issue
            severity: Severity level (critical, high, medium, low, info)
            evidence: Evidence supporting the finding
            recommendation: Suggested action, may be empty
        """
        self.findings.append({
            'component': component,
            'issue': issue,
            'severity': severity,
            'evidence': evidence,
            'recommendation': recommendation,
        })

    def add_reasoning_step(self, observation, conclusion):
        """
        Add a reasoning step to document what the stage did.

        Args:
            observation: What the agent observed
            conclusion: What the agent concluded from the observation
        """
        self.reasoning_steps.append({
            'observation': observation,
            'conclusion': conclusion,
        })

    @contextmanager
    def capture_warnings(self, component, logger_name='memory'):
        """Record warnings from the domain loggers as findings while the block runs."""
        handler = _FindingHandler(self, component)
        target = logging.getLogger(logger_name)
        target.addHandler(handler)
        try:
            yield
        finally:
            target.removeHandler(handler)

    def error_result(self, error):
        """
        Results dict for a failed operation.

        Args:
            error: The exception that stopped the stage

        Returns:
            dict: error type, message, findings and reasoning steps
        """
        self.add_reasoning_step(
            observation=f"{self.name} stage failed: {error}",
            conclusion='Stopping before any further computation',
        )
        results = self.get_results()
        results['error'] = type(error).__name__
        results['message'] = str(error)
        return results

    def get_results(self):
        """
        Get the complete results of the agent's analysis.

        Returns:
            dict: Results including findings and reasoning steps
        """
        return {
            'findings': list(self.findings),
            'reasoning_steps': list(self.reasoning_steps),
        }

    def reset(self):
        """Reset the agent's state for a new analysis."""
        self.findings = []
        self.reasoning_steps = []
