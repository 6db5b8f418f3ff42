import logging

from agents.base_agent import BaseAgent
from memory.detector import DetectorGeometry, FieldConfig, geometry_preset
from memory.hough import (
    BankGrid,
    accumulate,
    assign_bank,
    build_banks,
    find_peak,
    pattern_points,
    peak_stability_study,
    stability_summary,
)

logger = logging.getLogger(__name__)


class HoughAgent(BaseAgent):
    """
    Agent that maps hit patterns to Hough space and partitions libraries
    into template banks.
    """

    name = 'hough'

    def analyze(self, action, **kwargs):
        """
        Run a Hough stage.

        Args:
            action: 'peak' for one pattern or point set, 'banks' for a
                library, 'stability' for the planar robustness scan
            **kwargs: cfg plus value/points, library, trials

        Returns:
            dict: peak and bank, bank table, or stability tables
        """
        self.reset()
        try:
            with self.capture_warnings(self.name):
                cfg = kwargs['cfg']
                binning = cfg.hough_binning()
                if action == 'peak':
                    points = kwargs.get('points')
                    if points is None:
                        library = kwargs.get('library')
                        points = pattern_points(kwargs['value'], self._geometry(cfg, library), self._field(cfg, library))
                    acc = accumulate(points, binning)
                    peak = find_peak(acc)
                    grid = BankGrid.for_binning(acc.binning, cfg.bank_phi, cfg.bank_rho)
                    bank = assign_bank(peak, grid)
                    self.add_reasoning_step(
                        observation=f"{len(points)} points vote into {acc.binning.n_phi}x{acc.binning.n_rho} bins",
                        conclusion=f"peak at phi={peak.phi}, rho={peak.rho} with {peak.votes} votes, bank {bank}",
                    )
                    results = self.get_results()
                    results.update({'peak': peak, 'bank': bank, 'accumulator': acc, 'grid': grid})
                    return results
                if action == 'banks':
                    library = kwargs['library']
                    grid = BankGrid.for_binning(binning, cfg.bank_phi, cfg.bank_rho)
                    banks = build_banks(library, self._geometry(cfg, library), binning, grid, self._field(cfg, library))
                    self.add_reasoning_step(
                        observation=f"Banked {library.p} patterns into {len(banks.banks())} cells",
                        conclusion=f"largest bank holds {banks.max_templates} templates",
                    )
                    results = self.get_results()
                    results['banks'] = banks
                    return results
                if action == 'stability':
                    frame = peak_stability_study(trials=kwargs.get('trials', 20), seed=kwargs.get('seed', cfg.seed))
                    summary = stability_summary(frame)
                    self.add_reasoning_step(
                        observation=f"Reconstructed {len(frame)} planar events",
                        conclusion=f"reference peak {frame.attrs['reference']}",
                    )
                    results = self.get_results()
                    results.update({'trials': frame, 'summary': summary, 'reference': frame.attrs['reference']})
                    return results
                raise ValueError(f"Unknown hough action: {action}")
        except Exception as e:
            return self.error_result(e)

    def _geometry(self, cfg, library=None):
        if library is not None and 'geometry' in library.meta:
            return DetectorGeometry.from_dict(library.meta['geometry'])
        return geometry_preset(cfg.geometry)

    def _field(self, cfg, library=None):
        if library is not None and 'field' in library.meta:
            return FieldConfig.from_dict(library.meta['field'])
        return cfg.field_config()
