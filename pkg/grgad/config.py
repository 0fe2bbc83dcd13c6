"""Pipeline configuration: a versioned JSON document validated by pydantic.

Unknown keys are rejected at every level so typos fail loudly.
"""
import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Literal

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from grgad.errors import ConfigError
from grgad.graph import TargetKind

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
LOG_ENV_VAR = "GRGAD_LOG"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class DataSettings(_Section):
    """Either explicit graph files or a seeded synthetic benchmark."""
    edges_path: Path | None = None
    features_path: Path | None = None
    groups_path: Path | None = None
    ids_path: Path | None = None
    benchmark_seed: int | None = None

    @model_validator(mode="after")
    def _paths_come_in_pairs(self):
        if (self.edges_path is None) != (self.features_path is None):
            raise ValueError("edges_path and features_path must be given together")
        return self

    @property
    def uses_files(self) -> bool:
        return self.edges_path is not None


class TargetSettings(_Section):
    kind: TargetKind = TargetKind.OVERLAP_WEIGHTED
    k: int = Field(3, ge=1)
    # exponent of the overlap-weighted adjacency; unrelated to recon_mix_lambda
    overlap_lambda: float = Field(1.0, gt=0)


class MhGaeSettings(_Section):
    recon_mix_lambda: float = Field(0.5, ge=0, le=1)
    epochs: int = Field(300, ge=1)
    lr: float = Field(1e-3, gt=0)
    hidden: int = Field(64, ge=1)
    latent: int = Field(64, ge=1)


class AnchorSettings(_Section):
    fraction: float = Field(0.10, gt=0, le=1)


class SamplerSettings(_Section):
    tree_depth: int = Field(3, ge=1)
    max_path_len: int = Field(10, ge=2)
    max_tree_nodes: int = Field(50, ge=2)
    max_cycle_len: int = Field(12, ge=3)


class TpgclSettings(_Section):
    epochs: int = Field(10, ge=1)
    lr: float = Field(1e-3, gt=0)
    batch_size: int = Field(32, ge=2)
    hidden: int = Field(64, ge=1)
    embedding_dim: int = Field(64, ge=1)
    critic_hidden: int = Field(64, ge=1)
    augmentation: Literal["pattern", "node_drop", "edge_remove", "feature_mask"] = "pattern"
    perturb_ratio: float = Field(0.2, gt=0, lt=1)
    embedding: Literal["tpgcl", "mean_attributes"] = "tpgcl"
    seed: int | None = None


class DetectorSettings(_Section):
    contamination: float = Field(0.1, gt=0, lt=1)


class EvaluationSettings(_Section):
    match_overlap: float = Field(0.5, gt=0, le=1)


class OutputSettings(_Section):
    directory: Path = Path("runs/default")
    charts: bool = True


class PipelineConfig(_Section):
    schema_version: Literal[1] = SCHEMA_VERSION
    seed: int = 0
    data: DataSettings = DataSettings()
    target: TargetSettings = TargetSettings()
    mhgae: MhGaeSettings = MhGaeSettings()
    anchors: AnchorSettings = AnchorSettings()
    sampler: SamplerSettings = SamplerSettings()
    tpgcl: TpgclSettings = TpgclSettings()
    detector: DetectorSettings = DetectorSettings()
    evaluation: EvaluationSettings = EvaluationSettings()
    output: OutputSettings = OutputSettings()

    @property
    def out_dir(self) -> Path:
        return Path(self.output.directory)

    @property
    def tpgcl_seed(self) -> int:
        return self.tpgcl.seed if self.tpgcl.seed is not None else self.seed

    @property
    def benchmark_seed(self) -> int:
        return self.data.benchmark_seed if self.data.benchmark_seed is not None else self.seed

    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def build_config(payload: dict) -> PipelineConfig:
    try:
        return PipelineConfig.model_validate(payload)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})") from e
    return build_config(payload)


def with_overrides(config: PipelineConfig, **overrides) -> PipelineConfig:
    """Returns a re-validated copy. Keys are dotted paths, e.g. 'tpgcl.epochs'."""
    payload = config.model_dump(mode="json")
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = payload
        *parents, leaf = dotted.split(".")
        for key in parents:
            node = node[key]
        node[leaf] = str(value) if isinstance(value, Path) else value
    return build_config(payload)


def log_level_from_env() -> int:
    load_dotenv()
    name = os.getenv(LOG_ENV_VAR, "INFO").upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        logger.warning(f"Unknown {LOG_ENV_VAR} value {name!r}; using INFO.")
        return logging.INFO
    return level
