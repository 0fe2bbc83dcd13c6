import logging

from grgad.artifacts import RunPaths, save_embeddings
from grgad.config import PipelineConfig
from grgad.graph import AttributedGraph
from grgad.patterns import group_attributes
from grgad.sampler import CandidateGroup
from grgad.tpgcl import embed_all, train_tpgcl

logger = logging.getLogger(__name__)


class ContrastiveAgent:
    """
    Trains the contrastive group encoder and embeds every candidate group.
    With `tpgcl.embedding = "mean_attributes"` training is skipped and each
    group is represented by its mean node attributes.
    """
    def run(self, config: PipelineConfig, graph: AttributedGraph, groups: list[CandidateGroup]) -> dict:
        settings = config.tpgcl
        logger.info(f"ContrastiveAgent: Embedding {len(groups)} groups ({settings.embedding})...")
        try:
            paths = RunPaths(config.out_dir).ensure()
            model = None
            if settings.embedding == "mean_attributes":
                embedded = list(enumerate(group_attributes(groups, graph)))
            else:
                model = train_tpgcl(groups, graph, settings, config.tpgcl_seed)
                model.save(paths.tpgcl_model, config.tpgcl_seed)
                embedded = embed_all(model, groups, graph)
            save_embeddings(embedded, paths.embeddings)
            return {"model": model, "embedded": embedded, "error": None}
        except Exception as e:
            logger.error(f"ContrastiveAgent: Failed to embed groups. Reason: {e}")
            return {"error": str(e), "exception": e}
