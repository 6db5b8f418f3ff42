import os

import plotly.graph_objects as go

SVG_SIZE = 320
SVG_MARGIN = 40


def roc_figure(curves, title="ROC"):
    """
    Build a plotly figure of one or more ROC curves.

    Args:
        curves: Mapping of label -> RocCurve
        title: Figure title

    Returns:
        go.Figure: FPR on x, TPR on y, with the chance diagonal
    """
    fig = go.Figure()
    fig.add_trace(go.Scatter(
        x=[0, 1], y=[0, 1], mode='lines', name='chance',
        line=dict(color='lightgray', dash='dash'),
    ))
    for label, curve in curves.items():
        frame = curve.to_frame()
        fig.add_trace(go.Scatter(
            x=frame['fpr'], y=frame['tpr'], mode='lines+markers',
            name=f"{label} (AUC {curve.auc:.3f})",
            customdata=frame['beta'],
            hovertemplate='beta=%{customdata:.2f}<br>FPR=%{x:.3f}<br>TPR=%{y:.3f}',
        ))
    fig.update_layout(
        title=title,
        xaxis=dict(title='False positive rate', range=[0, 1]),
        yaxis=dict(title='True positive rate', range=[0, 1]),
        template='plotly_white',
    )
    return fig


def write_roc_html(curves, path, title="ROC"):
    """
    Write an interactive ROC plot.

    Args:
        curves: Mapping of label -> RocCurve
        path: Destination HTML file
        title: Figure title

    Returns:
        str: The path written
    """
    div_id = os.path.basename(os.path.dirname(os.path.abspath(path))) or 'roc'
    roc_figure(curves, title).write_html(path, include_plotlyjs='cdn', full_html=True, div_id=f"roc-{div_id}")
    return path


def roc_svg(curve, title="ROC"):
    """
    Minimal standalone SVG of a single ROC curve.

    Args:
        curve: RocCurve
        title: Text drawn above the axes

    Returns:
        str: SVG document
    """
    span = SVG_SIZE - 2 * SVG_MARGIN

    def xy(fpr, tpr):
        return SVG_MARGIN + fpr * span, SVG_SIZE - SVG_MARGIN - tpr * span

    points = sorted((p.fpr, p.tpr) for p in curve.points)
    path = " ".join(f"{x:.2f},{y:.2f}" for x, y in (xy(*p) for p in [(0.0, 0.0)] + points + [(1.0, 1.0)]))
    x0, y0 = xy(0, 0)
    x1, y1 = xy(1, 1)
    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_SIZE}" height="{SVG_SIZE}" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">',
        f'<rect x="{x0:.2f}" y="{y1:.2f}" width="{span}" height="{span}" fill="none" stroke="black"/>',
        f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" stroke="lightgray" stroke-dasharray="4 4"/>',
        f'<polyline points="{path}" fill="none" stroke="steelblue" stroke-width="2"/>',
        f'<text x="{SVG_SIZE / 2:.0f}" y="{SVG_MARGIN / 2:.0f}" text-anchor="middle" font-size="12">{title} (AUC {curve.auc:.3f})</text>',
        f'<text x="{SVG_SIZE / 2:.0f}" y="{SVG_SIZE - 8}" text-anchor="middle" font-size="11">FPR</text>',
        f'<text x="12" y="{SVG_SIZE / 2:.0f}" text-anchor="middle" font-size="11" transform="rotate(-90 12 {SVG_SIZE / 2:.0f})">TPR</text>',
        '</svg>',
        '',
    ])


def write_roc_svg(curve, path, title="ROC"):
    with open(path, 'w') as f:
        f.write(roc_svg(curve, title))
    return path


def write_accumulator_csv(acc, path):
    """
    Dump a Hough accumulator as a long-form (phi, rho, votes) table.

    Args:
        acc: HoughAccumulator
        path: Destination CSV

    Returns:
        str: The path written
    """
    acc.to_frame().to_csv(path, index=False)
    return path
