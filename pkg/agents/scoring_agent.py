import logging

from grgad.artifacts import RunPaths, save_detector, save_verdicts
from grgad.config import PipelineConfig
from grgad.sampler import CandidateGroup
from grgad.scoring import build_verdicts, ecod_scores, threshold_predict
from grgad.tpgcl import embedding_matrix

logger = logging.getLogger(__name__)


class ScoringAgent:
    """
    Scores group embeddings with the empirical-CDF outlier detector and
    flags the groups above the contamination threshold.
    """
    def run(self, config: PipelineConfig, groups: list[CandidateGroup], embedded: list) -> dict:
        logger.info(f"ScoringAgent: Scoring {len(embedded)} group embeddings...")
        try:
            E = embedding_matrix(embedded)
            scores = ecod_scores(E)
            threshold, predicted = threshold_predict(scores, config.detector.contamination)
            verdicts = build_verdicts([g.nodes for g in groups], E, scores, predicted)

            paths = RunPaths(config.out_dir).ensure()
            save_verdicts(verdicts, paths.verdicts)
            save_detector(threshold, config.detector.contamination, paths.detector)
            logger.info(f"ScoringAgent: Flagged {int(predicted.sum())} of {len(verdicts)} groups "
                        f"(threshold {threshold:.4f}).")
            return {"verdicts": verdicts, "scores": scores, "threshold": threshold, "error": None}
        except Exception as e:
            logger.error(f"ScoringAgent: Failed to score groups. Reason: {e}")
            return {"error": str(e), "exception": e}
