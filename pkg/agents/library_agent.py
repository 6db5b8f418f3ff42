import logging

import numpy as np

from agents.base_agent import BaseAgent
from memory.classifiers import KEY
from memory.detector import (
    DetectorGeometry,
    FieldConfig,
    GeneratorConfig,
    build_signal_library,
    geometry_preset,
    regenerate_signal,
)
from memory.patterns import (
    BACKGROUND,
    SIGNAL,
    PatternLibrary,
    corrupt,
    generate_background,
)
from utils.config import SIGNAL_BACKGROUND
from utils.db_handler import Probe
from utils.helper import derive_seed

logger = logging.getLogger(__name__)


class LibraryAgent(BaseAgent):
    """
    Agent that builds training libraries and the corrupted probe sets used
    to test them.
    """

    name = 'library'

    def analyze(self, action, **kwargs):
        """
        Run a library stage.

        Args:
            action: 'gen' builds a library, 'corrupt' builds a probe set
            **kwargs: cfg plus the stage parameters (alpha, training_set, library, eta, gamma, classifier)

        Returns:
            dict: 'library' or 'probes' alongside findings and reasoning steps
        """
        self.reset()
        try:
            with self.capture_warnings(self.name):
                if action == 'gen':
                    cfg = kwargs['cfg']
                    classifier = kwargs.get('classifier', cfg.classifiers[0])
                    model = kwargs.get('model', cfg.models[0])
                    base = self.build_library(cfg, kwargs.get('alpha', cfg.alphas[0]), kwargs.get('training_set', 0))
                    library = self.encode(cfg, base, model, classifier, kwargs.get('training_set', 0))
                    results = self.get_results()
                    results['library'] = library
                    return results
                if action == 'corrupt':
                    probes = self.build_probes(
                        kwargs['cfg'],
                        kwargs['library'],
                        kwargs.get('eta', 1.0),
                        kwargs.get('gamma', 0.0),
                        kwargs.get('classifier', kwargs['cfg'].classifiers[0]),
                        training_set=kwargs.get('training_set', 0),
                    )
                    results = self.get_results()
                    results['probes'] = probes
                    return results
                raise ValueError(f"Unknown library action: {action}")
        except Exception as e:
            return self.error_result(e)

    def build_library(self, cfg, alpha, training_set, alpha_index=0):
        """
        Generate the signal-only library of one training set.

        Args:
            cfg: ExperimentConfig
            alpha: Signal pattern density alpha_s
            training_set: Training-set index
            alpha_index: Position of alpha in cfg.alphas

        Returns:
            PatternLibrary: Un-keyed signal library with generating particles
        """
        g = geometry_preset(cfg.geometry)
        generator = GeneratorConfig.for_geometry(g, momentum=cfg.momentum, half_width_deg=cfg.half_width_deg)
        seed = derive_seed(cfg.seed, "library", alpha_index, training_set)
        library = build_signal_library(
            g, cfg.signal_count(alpha), np.random.default_rng(seed), f=cfg.field_config(), generator=generator
        )
        meta = dict(library.meta, seed=seed, training_set=training_set, alpha_s=library.alpha_s)
        self.add_reasoning_step(
            observation=f"Generated {library.p_s} signal tracks on {g.name} for training set {training_set}",
            conclusion=f"alpha_s = {library.alpha_s:.4f}",
        )
        if self.experiment_logger:
            self.experiment_logger.log_library(
                f"as{alpha:.4f}", training_set, {"p_s": library.p_s, "V": library.V, "seed": seed}
            )
        return PatternLibrary(library.patterns, library.sources, meta)

    def add_backgrounds(self, cfg, library, training_set, alpha_index=0):
        """
        Append alpha_b * V background patterns distinct from the signals.

        Args:
            cfg: ExperimentConfig
            library: Signal library
            training_set: Training-set index
            alpha_index: Position of alpha in cfg.alphas

        Returns:
            PatternLibrary: Signal + background library
        """
        rng = np.random.default_rng(derive_seed(cfg.seed, "background", alpha_index, training_set))
        values = []
        for _ in range(cfg.background_count(library.alpha_s)):
            values.append(generate_background(library.V, cfg.background_fill, library, rng, exclude=values))
        return library.with_backgrounds(values)

    def encode(self, cfg, base, model, classifier, training_set, alpha_index=0):
        """
        Library as stored by one model/classifier combination.

        Args:
            cfg: ExperimentConfig
            base: Signal-only library from build_library
            model: 'qamm' or 'qcam'
            classifier: 'energy' or 'key'
            training_set: Training-set index
            alpha_index: Position of alpha in cfg.alphas

        Returns:
            PatternLibrary: Keyed (or bare) library ready for training
        """
        library = base
        if cfg.encoding_for(classifier) == SIGNAL_BACKGROUND:
            library = self.add_backgrounds(cfg, base, training_set, alpha_index)
        return library.keyed(cfg.key_size_for(model, classifier))

    def build_probes(self, cfg, library, eta, gamma, classifier, training_set=0, alpha_index=0, cell_index=0):
        """
        Corrupted probes for one training set and noise cell.

        Signal probes cycle through the encoded signals and are re-simulated
        from the stored particles. Key-mode background probes cycle through
        the encoded backgrounds; energy-mode background probes are fresh
        patterns absent from the library.

        Args:
            cfg: ExperimentConfig
            library: Encoded library
            eta: Detector efficiency
            gamma: Detector noise
            classifier: 'energy' or 'key'
            training_set: Training-set index
            alpha_index: Position of alpha in cfg.alphas
            cell_index: Position of (eta, gamma) in cfg.noise_cells()

        Returns:
            list: Probe objects, signals first
        """
        g = DetectorGeometry.from_dict(library.meta["geometry"]) if "geometry" in library.meta else geometry_preset(cfg.geometry)
        f = FieldConfig.from_dict(library.meta["field"]) if "field" in library.meta else cfg.field_config()
        signal_indices = library.indices(SIGNAL)
        if not signal_indices:
            raise ValueError("Library holds no signal patterns to probe")

        def rng_for(i):
            return np.random.default_rng(derive_seed(cfg.seed, "probe", alpha_index, training_set, cell_index, i))

        probes = []
        for i in range(cfg.signal_probes):
            index = signal_indices[i % len(signal_indices)]
            clean = regenerate_signal(library, index, g, f)
            probes.append(Probe(SIGNAL, corrupt(clean, eta, gamma, rng_for(i)), f"signal:{index}"))

        if classifier == KEY:
            background_indices = library.indices(BACKGROUND)
            if not background_indices:
                raise ValueError("Key-mode probes need encoded backgrounds")
            for j in range(cfg.background_probes):
                index = background_indices[j % len(background_indices)]
                value = library.patterns[index].value
                probes.append(Probe(BACKGROUND, corrupt(value, eta, gamma, rng_for(cfg.signal_probes + j)), f"background:{index}"))
        else:
            fresh_rng = np.random.default_rng(derive_seed(cfg.seed, "background-probe", alpha_index, training_set))
            fresh = []
            for j in range(cfg.background_probes):
                fresh.append(generate_background(library.V, cfg.background_fill, library, fresh_rng, exclude=fresh))
                probes.append(Probe(BACKGROUND, corrupt(fresh[-1], eta, gamma, rng_for(cfg.signal_probes + j)), f"fresh:{j}"))

        self.add_reasoning_step(
            observation=f"Built {len(probes)} probes at eta={eta}, gamma={gamma} for training set {training_set}",
            conclusion=f"{cfg.signal_probes} signal and {cfg.background_probes} background probes",
        )
        return probes
