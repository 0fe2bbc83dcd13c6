"""End-to-end orchestration of the stage agents, single-stage execution from
persisted artifacts, and ablation sweeps."""
import logging
from pathlib import Path

import pandas as pd

from agents.anchor_agent import AnchorLocatorAgent
from agents.benchmark_agent import BenchmarkAgent
from agents.charting_agent import ChartingAgent
from agents.contrastive_agent import ContrastiveAgent
from agents.evaluation_agent import EvaluationAgent
from agents.sampler_agent import GroupSamplerAgent
from agents.scoring_agent import ScoringAgent
from grgad.artifacts import (RunPaths, load_anchors, load_candidates, load_detector, load_embeddings, load_verdicts,
                             write_run_manifest)
from grgad.config import PipelineConfig, with_overrides
from grgad.errors import ConfigError, EvaluationError, StageError
from grgad.graph import AttributedGraph, LabeledGroup, load_graph, load_groups
from grgad.scoring import EvalReport

logger = logging.getLogger(__name__)

STAGES = ("generate", "train-mhgae", "sample", "train-tpgcl", "score", "evaluate")

DEFAULT_ABLATIONS = {
    "plain": {"target.kind": "plain"},
    "khop3": {"target.kind": "khop", "target.k": 3},
    "khop5": {"target.kind": "khop", "target.k": 5},
    "khop7": {"target.kind": "khop", "target.k": 7},
    "overlap_weighted": {"target.kind": "overlap_weighted"},
    "mean_attributes": {"tpgcl.embedding": "mean_attributes"},
}


def _check(stage: str, result: dict) -> dict:
    if result.get("error"):
        raise StageError(stage, result.get("exception") or RuntimeError(result["error"]))
    return result


def resolve_graph(config: PipelineConfig) -> tuple[AttributedGraph, list[LabeledGroup] | None]:
    """The configured graph files, or the benchmark previously generated into the run directory."""
    data = config.data
    if data.uses_files:
        graph = load_graph(data.edges_path, data.features_path, data.ids_path)
        gt = load_groups(data.groups_path, graph.n) if data.groups_path else None
        return graph, gt
    paths = RunPaths(config.out_dir)
    graph = load_graph(paths.edges, paths.features)
    return graph, load_groups(paths.groups, graph.n)


def _load(config: PipelineConfig) -> dict:
    graph, gt = resolve_graph(config)
    return {"graph": graph, "gt_groups": gt, "error": None}


def _require_ground_truth(gt):
    if not gt:
        raise EvaluationError("no ground-truth groups configured (data.groups_path)")
    return gt


def run_stage(stage: str, config: PipelineConfig) -> dict:
    """Runs one stage from the artifacts in the run directory."""
    if stage not in STAGES:
        raise ConfigError(f"unknown stage {stage!r}; expected one of {', '.join(STAGES)}")
    logger.info(f"Running stage '{stage}' in {config.out_dir}")
    paths = RunPaths(config.out_dir)
    try:
        if stage == "generate":
            if config.data.uses_files:
                raise ConfigError("'generate' builds the synthetic benchmark; the config points at graph files")
            return _check(stage, BenchmarkAgent().run(config))
        graph, gt = resolve_graph(config)
        if stage == "train-mhgae":
            return _check(stage, AnchorLocatorAgent().run(config, graph))
        if stage == "sample":
            anchors = load_anchors(paths.anchors, graph.n)
            return _check(stage, GroupSamplerAgent().run(config, graph, anchors))
        groups = load_candidates(paths.candidates)
        if stage == "train-tpgcl":
            return _check(stage, ContrastiveAgent().run(config, graph, groups))
        if stage == "score":
            return _check(stage, ScoringAgent().run(config, groups, load_embeddings(paths.embeddings)))
        gt = _require_ground_truth(gt)
        verdicts = load_verdicts(paths.verdicts, groups)
        return _check(stage, EvaluationAgent().run(config, verdicts, gt, load_detector(paths.detector)))
    except StageError:
        raise
    except Exception as e:
        raise StageError(stage, e) from e


def run_pipeline(config: PipelineConfig) -> EvalReport | None:
    """Runs every stage in memory, persisting each artifact as it goes.
    Returns the evaluation report, or None when there is no ground truth."""
    paths = RunPaths(config.out_dir).ensure()
    completed: list[str] = []

    def step(stage: str, action):
        try:
            result = _check(stage, action())
        except StageError:
            raise
        except Exception as e:
            raise StageError(stage, e) from e
        completed.append(stage)
        write_run_manifest(config, completed, paths.run_manifest)
        return result

    if config.data.uses_files:
        loaded = step("load", lambda: _load(config))
    else:
        loaded = step("generate", lambda: BenchmarkAgent().run(config))
    graph, gt = loaded["graph"], loaded["gt_groups"]

    located = step("train-mhgae", lambda: AnchorLocatorAgent().run(config, graph))
    sampled = step("sample", lambda: GroupSamplerAgent().run(config, graph, located["anchors"]))
    embedded = step("train-tpgcl", lambda: ContrastiveAgent().run(config, graph, sampled["groups"]))
    scored = step("score", lambda: ScoringAgent().run(config, sampled["groups"], embedded["embedded"]))

    report, verdicts = None, scored["verdicts"]
    if gt:
        evaluated = step("evaluate", lambda: EvaluationAgent().run(config, verdicts, gt, scored["threshold"]))
        report, verdicts = evaluated["report"], evaluated["verdicts"]
    else:
        logger.info("No ground-truth groups; skipping evaluation.")

    if config.output.charts:
        charts = ChartingAgent().run(located["errors"], located["anchors"], verdicts, scored["threshold"],
                                     paths.charts)
        if charts.get("error"):
            logger.warning(f"Charts were not written: {charts['error']}")
    return report


def run_ablation(config: PipelineConfig, variants: dict[str, dict] | None = None) -> pd.DataFrame:
    """Reruns the pipeline once per override set; each variant writes into
    its own subdirectory of the run directory."""
    variants = variants or DEFAULT_ABLATIONS
    rows = []
    for name, overrides in variants.items():
        variant = with_overrides(config, **overrides, **{
            "output.directory": str(Path(config.out_dir) / "ablation" / name),
            "output.charts": False,
        })
        logger.info(f"Ablation variant '{name}': {overrides}")
        report = run_pipeline(variant)
        rows.append({
            "variant": name,
            "cr": report.cr if report else None,
            "f1": report.f1 if report else None,
            "auc": report.auc if report else None,
        })
    table = pd.DataFrame(rows, columns=["variant", "cr", "f1", "auc"])
    table.to_csv(RunPaths(config.out_dir).ensure().ablation, index=False)
    return table
