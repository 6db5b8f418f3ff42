import logging
import os

from components.visualization import write_roc_html, write_roc_svg

logger = logging.getLogger(__name__)

ROC_COLUMNS = ['beta', 'tpr', 'fpr']


def render_report(report, db, plots=True):
    """
    Write the outputs of an experiment.

    Layout under db.base_dir:
        summary.json            every cell, config echo and seed provenance
        density.csv             AUC against alpha_s
        <cell>/roc.csv          beta,tpr,fpr per grid point
        <cell>/summary.json     AUC, config and per-training-set results
        <cell>/probes.csv       raw per-probe statistics
        <cell>/roc.svg, roc.html  when plots is set

    Args:
        report: ExperimentReport
        db: DBHandler owning the output directory
        plots: Also write SVG and HTML ROC plots

    Returns:
        dict: Paths of the top-level files and of each cell directory
    """
    written = {'cells': {}}
    for cell in report.cells:
        written['cells'][cell.name] = _render_cell(cell, report.config, db, plots)

    written['summary'] = db.save_json(report.to_dict(), 'summary.json')
    density_path = db.path('density.csv')
    report.density_table().to_csv(density_path, index=False, float_format='%.6f')
    written['density'] = density_path
    logger.info(f"Wrote {len(report.cells)} cell reports to {db.base_dir}")
    return written


def _render_cell(cell, config, db, plots):
    """
    Write the files of one parameter cell.

    Args:
        cell: CellReport
        config: Config echo for the cell summary
        db: DBHandler
        plots: Also write SVG and HTML plots

    Returns:
        str: The cell directory
    """
    directory = db.cell_dir(cell.name)
    cell.roc.to_frame()[ROC_COLUMNS].to_csv(os.path.join(directory, 'roc.csv'), index=False, float_format='%.6f')
    cell.probes.to_csv(os.path.join(directory, 'probes.csv'), index=False, float_format='%.9g')
    summary = cell.summary()
    summary['config'] = config
    summary['findings'] = cell.findings
    db.save_json(summary, cell.name, 'summary.json')
    if plots:
        write_roc_svg(cell.roc, os.path.join(directory, 'roc.svg'), cell.name)
        write_roc_html({cell.name: cell.roc}, os.path.join(directory, 'roc.html'), cell.name)
    return directory
