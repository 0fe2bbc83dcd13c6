"""Run-directory layout and the persisted stage artifacts.

Every writer has a matching loader that validates what it reads, so a stage
can resume from files written by an earlier process. Floats are written with
their shortest round-trip representation and read back exactly.
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError

import grgad
from grgad.config import PipelineConfig
from grgad.datagen import LabeledBenchmark
from grgad.errors import GraphFormatError, MissingArtifactError
from grgad.graph import save_graph, save_groups
from grgad.mhgae import NodeErrorVector
from grgad.sampler import CandidateGroup, Provenance
from grgad.scoring import EvalReport, GroupVerdict

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunPaths:
    root: Path

    def __post_init__(self):
        object.__setattr__(self, "root", Path(self.root))

    def ensure(self) -> "RunPaths":
        self.root.mkdir(parents=True, exist_ok=True)
        return self

    edges = property(lambda self: self.root / "edges.txt")
    features = property(lambda self: self.root / "features.csv")
    groups = property(lambda self: self.root / "groups.json")
    benchmark_manifest = property(lambda self: self.root / "benchmark_manifest.json")
    errors = property(lambda self: self.root / "errors.csv")
    anchors = property(lambda self: self.root / "anchors.json")
    mhgae_model = property(lambda self: self.root / "mhgae_model.json")
    candidates = property(lambda self: self.root / "candidates.json")
    tpgcl_model = property(lambda self: self.root / "tpgcl_model.json")
    embeddings = property(lambda self: self.root / "embeddings.csv")
    detector = property(lambda self: self.root / "detector.json")
    verdicts = property(lambda self: self.root / "verdicts.csv")
    report = property(lambda self: self.root / "report.json")
    run_manifest = property(lambda self: self.root / "run_manifest.json")
    charts = property(lambda self: self.root / "charts.html")
    ablation = property(lambda self: self.root / "ablation.csv")


def _require(path: Path, artifact: str) -> Path:
    if not Path(path).is_file():
        raise MissingArtifactError(artifact, path)
    return Path(path)


def _read_csv(path: Path, artifact: str, columns: Sequence[str]) -> pd.DataFrame:
    _require(path, artifact)
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise GraphFormatError(f"{path}: unreadable {artifact} ({e})") from e
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise GraphFormatError(f"{path}: {artifact} is missing columns {missing}")
    return df


def _write_json(path: Path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# --- benchmark ---

def save_benchmark(bench: LabeledBenchmark, paths: RunPaths) -> None:
    paths.ensure()
    save_graph(bench.graph, paths.edges, paths.features)
    save_groups(bench.gt_groups, paths.groups)
    _write_json(paths.benchmark_manifest, {
        "base_nodes": bench.base_n,
        "nodes": bench.graph.n,
        "edges": bench.graph.num_edges,
        "attributes": bench.graph.d,
        "components": bench.graph.summary()["components"],
        "injection": bench.spec.model_dump(mode="json") if bench.spec else None,
    })


# --- node errors and anchors ---

ERROR_COLUMNS = ("node_index", "r", "r_stru", "r_attr")


def save_errors(errors: NodeErrorVector, path) -> None:
    pd.DataFrame({"node_index": np.arange(errors.n), "r": errors.r, "r_stru": errors.r_stru,
                  "r_attr": errors.r_attr}).to_csv(path, index=False)


def load_errors(path) -> NodeErrorVector:
    df = _read_csv(Path(path), "node errors", ERROR_COLUMNS)
    if not (df["node_index"].to_numpy() == np.arange(len(df))).all():
        raise GraphFormatError(f"{path}: node_index must run 0..n-1 in order")
    values = df[["r", "r_stru", "r_attr"]].to_numpy(dtype=np.float64)
    if not np.isfinite(values).all() or (values < 0).any():
        raise GraphFormatError(f"{path}: errors must be finite and non-negative")
    return NodeErrorVector(r=values[:, 0], r_stru=values[:, 1], r_attr=values[:, 2])


def save_anchors(anchors: Sequence[int], path) -> None:
    Path(path).write_text(json.dumps([int(a) for a in anchors]) + "\n")


def load_anchors(path, n: int | None = None) -> list[int]:
    path = _require(Path(path), "anchors")
    try:
        anchors = TypeAdapter(list[int]).validate_json(path.read_text())
    except ValidationError as e:
        raise GraphFormatError(f"{path}: anchors must be a JSON list of node indices ({e})") from e
    if anchors != sorted(set(anchors)):
        raise GraphFormatError(f"{path}: anchors must be sorted and distinct")
    if n is not None and any(not 0 <= a < n for a in anchors):
        raise GraphFormatError(f"{path}: anchor outside [0, {n})")
    return anchors


# --- candidate groups ---

class _CandidateRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")
    nodes: list[int] = Field(min_length=1)
    provenance: Provenance
    anchors: list[int]
    edges: list[tuple[int, int]]


def save_candidates(groups: Sequence[CandidateGroup], path) -> None:
    payload = [{"nodes": list(g.nodes), "provenance": g.provenance.value, "anchors": list(g.anchors),
                "edges": [list(e) for e in g.induced_edges]} for g in groups]
    Path(path).write_text(json.dumps(payload) + "\n")


def load_candidates(path) -> list[CandidateGroup]:
    path = _require(Path(path), "candidate groups")
    try:
        records = TypeAdapter(list[_CandidateRecord]).validate_json(path.read_text())
        return [CandidateGroup(tuple(r.nodes), tuple(tuple(e) for e in r.edges), r.provenance, tuple(r.anchors))
                for r in records]
    except ValueError as e:
        raise GraphFormatError(f"{path}: invalid candidate groups ({e})") from e


# --- embeddings, detector, verdicts ---

def save_embeddings(embedded: Sequence[tuple[int, np.ndarray]], path) -> None:
    dim = len(embedded[0][1]) if embedded else 0
    df = pd.DataFrame(np.vstack([e for _, e in embedded]) if embedded else np.zeros((0, dim)),
                      columns=[f"e{k}" for k in range(dim)])
    df.insert(0, "group_id", [int(i) for i, _ in embedded])
    df.to_csv(path, index=False)


def load_embeddings(path) -> list[tuple[int, np.ndarray]]:
    df = _read_csv(Path(path), "embeddings", ["group_id"])
    values = df.drop(columns="group_id").to_numpy(dtype=np.float64)
    if not np.isfinite(values).all():
        raise GraphFormatError(f"{path}: non-finite embedding value")
    return [(int(i), values[k]) for k, i in enumerate(df["group_id"])]


def save_detector(threshold: float, contamination: float, path) -> None:
    _write_json(path, {"threshold": float(threshold), "contamination": contamination})


def load_detector(path) -> float:
    path = _require(Path(path), "detector threshold")
    try:
        return float(json.loads(path.read_text())["threshold"])
    except (KeyError, TypeError, ValueError) as e:
        raise GraphFormatError(f"{path}: invalid detector file ({e})") from e


VERDICT_COLUMNS = ("group_id", "score", "predicted", "gt_label")


def save_verdicts(verdicts: Sequence[GroupVerdict], path) -> None:
    pd.DataFrame({
        "group_id": [v.group_id for v in verdicts],
        "score": [v.score for v in verdicts],
        "predicted": [int(v.predicted) for v in verdicts],
        "gt_label": ["" if v.gt_label is None else int(v.gt_label) for v in verdicts],
    }, columns=list(VERDICT_COLUMNS)).to_csv(path, index=False)


def load_verdicts(path, groups: Sequence[CandidateGroup],
                  embedded: Sequence[tuple[int, np.ndarray]] | None = None) -> list[GroupVerdict]:
    df = _read_csv(Path(path), "verdicts", VERDICT_COLUMNS)
    if len(df) != len(groups):
        raise GraphFormatError(f"{path}: {len(df)} verdicts for {len(groups)} candidate groups")
    embeddings = dict(embedded or [])
    verdicts = []
    for row in df.itertuples(index=False):
        gid = int(row.group_id)
        label = None if pd.isna(row.gt_label) else bool(int(row.gt_label))
        verdicts.append(GroupVerdict(group_id=gid, nodes=groups[gid].node_set, embedding=embeddings.get(gid),
                                     score=float(row.score), predicted=bool(int(row.predicted)), gt_label=label))
    return verdicts


# --- report and manifest ---

def save_report(report: EvalReport, path) -> None:
    _write_json(path, report.model_dump(mode="json"))


def load_report(path) -> EvalReport:
    path = _require(Path(path), "report")
    try:
        return EvalReport.model_validate_json(path.read_text())
    except ValidationError as e:
        raise GraphFormatError(f"{path}: invalid report ({e})") from e


def write_run_manifest(config: PipelineConfig, stages: Sequence[str], path) -> None:
    _write_json(path, {
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "version": grgad.__version__,
        "stages": list(stages),
        "config": config.model_dump(mode="json"),
    })
