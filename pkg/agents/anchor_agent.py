import logging

from grgad.artifacts import RunPaths, save_anchors, save_errors
from grgad.config import PipelineConfig
from grgad.graph import AttributedGraph, build_target
from grgad.mhgae import select_anchor_nodes, train_mhgae

logger = logging.getLogger(__name__)


class AnchorLocatorAgent:
    """
    Trains the multi-hop autoencoder against the configured structure target
    and keeps the nodes it reconstructs worst as anchors.
    """
    def run(self, config: PipelineConfig, graph: AttributedGraph) -> dict:
        logger.info(f"AnchorLocatorAgent: Reconstructing {graph.n} nodes against a {config.target.kind.value} target...")
        try:
            target = build_target(graph, config.target.kind, k=config.target.k,
                                  overlap_lambda=config.target.overlap_lambda)
            model, errors = train_mhgae(graph, target, config.mhgae, config.seed)
            anchors = select_anchor_nodes(errors, config.anchors.fraction)

            paths = RunPaths(config.out_dir).ensure()
            save_errors(errors, paths.errors)
            save_anchors(anchors, paths.anchors)
            model.save(paths.mhgae_model, config.seed)
            logger.info(f"AnchorLocatorAgent: Selected {len(anchors)} anchors "
                        f"(top {config.anchors.fraction:.0%} of reconstruction errors).")
            return {
                "target": target,
                "model": model,
                "errors": errors,
                "anchors": anchors,
                "error": None
            }
        except Exception as e:
            logger.error(f"AnchorLocatorAgent: Failed on a {graph.n}-node graph. Reason: {e}")
            return {"error": str(e), "exception": e}
