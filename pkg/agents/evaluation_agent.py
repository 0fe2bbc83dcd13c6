import logging

from grgad.artifacts import RunPaths, save_report, save_verdicts
from grgad.config import PipelineConfig
from grgad.graph import LabeledGroup
from grgad.scoring import GroupVerdict, evaluate

logger = logging.getLogger(__name__)


class EvaluationAgent:
    """
    Compares flagged groups with the ground truth: completeness ratio plus
    group-wise F1 and AUC.
    """
    def run(self, config: PipelineConfig, verdicts: list[GroupVerdict], gt_groups: list[LabeledGroup],
            threshold: float) -> dict:
        logger.info(f"EvaluationAgent: Evaluating {len(verdicts)} verdicts against {len(gt_groups)} groups...")
        try:
            report, labelled = evaluate(verdicts, [g.nodes for g in gt_groups], threshold,
                                        config.evaluation.match_overlap)
            paths = RunPaths(config.out_dir).ensure()
            save_verdicts(labelled, paths.verdicts)
            save_report(report, paths.report)
            return {"report": report, "verdicts": labelled, "error": None}
        except Exception as e:
            logger.error(f"EvaluationAgent: Failed to evaluate. Reason: {e}")
            return {"error": str(e), "exception": e}
