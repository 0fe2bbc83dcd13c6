import logging

from grgad.artifacts import RunPaths, save_benchmark
from grgad.config import PipelineConfig
from grgad.datagen import standard_benchmark

logger = logging.getLogger(__name__)


class BenchmarkAgent:
    """
    Builds the seeded synthetic benchmark and writes the graph files,
    ground-truth groups and a manifest into the run directory.
    """
    def run(self, config: PipelineConfig) -> dict:
        seed = config.benchmark_seed
        logger.info(f"BenchmarkAgent: Generating standard benchmark with seed {seed}...")
        try:
            bench = standard_benchmark(seed)
            save_benchmark(bench, RunPaths(config.out_dir))
            logger.info(f"BenchmarkAgent: {bench.graph.n} nodes, {bench.graph.num_edges} edges, "
                        f"{len(bench.gt_groups)} anomaly groups.")
            return {
                "graph": bench.graph,
                "gt_groups": bench.gt_groups,
                "benchmark": bench,
                "error": None
            }
        except Exception as e:
            logger.error(f"BenchmarkAgent: Failed for seed {seed}. Reason: {e}")
            return {"error": str(e), "exception": e}
