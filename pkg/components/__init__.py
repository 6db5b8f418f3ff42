from components.visualization import roc_figure, write_roc_html, write_roc_svg, write_accumulator_csv
from components.report import render_report

__all__ = [
    'roc_figure',
    'write_roc_html',
    'write_roc_svg',
    'write_accumulator_csv',
    'render_report'
]
