import logging

from grgad.artifacts import RunPaths, save_candidates
from grgad.config import PipelineConfig
from grgad.graph import AttributedGraph
from grgad.sampler import GroupSampler

logger = logging.getLogger(__name__)


class GroupSamplerAgent:
    """
    Samples path, tree and cycle candidate groups around the anchor nodes.
    """
    def run(self, config: PipelineConfig, graph: AttributedGraph, anchors: list[int]) -> dict:
        logger.info(f"GroupSamplerAgent: Sampling candidate groups around {len(anchors)} anchors...")
        try:
            groups = GroupSampler(graph, config.sampler).sample(anchors, config.sampler.tree_depth)
            save_candidates(groups, RunPaths(config.out_dir).ensure().candidates)
            logger.info(f"GroupSamplerAgent: sampled {len(groups)} candidate groups from {len(anchors)} anchors")
            return {"groups": groups, "error": None}
        except Exception as e:
            logger.error(f"GroupSamplerAgent: Failed to sample groups. Reason: {e}")
            return {"error": str(e), "exception": e}
