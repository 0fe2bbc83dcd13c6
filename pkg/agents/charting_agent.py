import logging

import numpy as np
import plotly.graph_objects as go
from plotly.subplots import make_subplots

from grgad.mhgae import NodeErrorVector
from grgad.scoring import GroupVerdict

logger = logging.getLogger(__name__)


class ChartingAgent:
    """
    Creates interactive diagnostic charts using Plotly: the node
    reconstruction-error distribution and the group score distribution.
    """
    def run(self, errors: NodeErrorVector, anchors: list[int], verdicts: list[GroupVerdict],
            threshold: float, path=None) -> dict:
        logger.info(f"ChartingAgent: Generating charts for {errors.n} nodes and {len(verdicts)} groups...")
        try:
            fig = make_subplots(rows=2, cols=1, vertical_spacing=0.12,
                                subplot_titles=("Node reconstruction error", "Group anomaly score"))
            self._add_error_traces(fig, errors, anchors)
            self._add_score_traces(fig, verdicts, threshold)
            fig.update_layout(title_text="Group anomaly detection run", barmode='overlay',
                              template="plotly_white", height=800)
            fig.update_xaxes(title_text="r (mixed structure/attribute error)", row=1, col=1)
            fig.update_xaxes(title_text="score", row=2, col=1)
            if path is not None:
                fig.write_html(path, include_plotlyjs="cdn")
            return {"figure": fig, "error": None}
        except Exception as e:
            logger.error(f"ChartingAgent: Failed to create charts. Reason: {e}")
            return {"error": str(e), "exception": e}

    def _add_error_traces(self, fig: go.Figure, errors: NodeErrorVector, anchors: list[int]) -> None:
        is_anchor = np.zeros(errors.n, dtype=bool)
        is_anchor[list(anchors)] = True
        fig.add_trace(go.Histogram(x=errors.r[~is_anchor], name='Other nodes', opacity=0.7), row=1, col=1)
        fig.add_trace(go.Histogram(x=errors.r[is_anchor], name='Anchors', opacity=0.7), row=1, col=1)

    def _add_score_traces(self, fig: go.Figure, verdicts: list[GroupVerdict], threshold: float) -> None:
        scores = np.array([v.score for v in verdicts])
        labels = [v.gt_label for v in verdicts]
        if any(label is not None for label in labels):
            mask = np.array([bool(label) for label in labels])
            fig.add_trace(go.Histogram(x=scores[~mask], name='Normal groups', opacity=0.7), row=2, col=1)
            fig.add_trace(go.Histogram(x=scores[mask], name='Anomalous groups', opacity=0.7), row=2, col=1)
        else:
            fig.add_trace(go.Histogram(x=scores, name='Groups', opacity=0.7), row=2, col=1)
        fig.add_vline(x=threshold, line_dash="dash", annotation_text="threshold", row=2, col=1)
