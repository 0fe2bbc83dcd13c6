"""Group anomaly scores (empirical-CDF tail detector), thresholding and the
group-level evaluation metrics."""
import logging
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.stats import rankdata, skew
from sklearn.metrics import confusion_matrix, f1_score, roc_auc_score

from grgad.errors import EvaluationError, InsufficientGroupsError

logger = logging.getLogger(__name__)

# (name, upper bound, bound is inclusive)
BUCKETS = (("<=0.1", 0.1, True), ("<=0.4", 0.4, True), ("<=0.7", 0.7, True), ("<1", 1.0, False),
           ("=1", 1.0, True))


def ecod_scores(E) -> np.ndarray:
    """Per sample, the largest of the summed left-tail, right-tail and
    skew-side negative log tail probabilities. Higher is more anomalous."""
    E = np.asarray(E, dtype=np.float64)
    if E.ndim != 2:
        raise ValueError(f"embeddings must be a 2-D array, got shape {E.shape}")
    m = E.shape[0]
    if m < 2:
        raise InsufficientGroupsError(f"outlier scoring needs at least 2 samples, got {m}")
    floor = 1.0 / (2 * m)
    left = np.maximum(rankdata(E, method="average", axis=0) / m, floor)
    right = np.maximum(rankdata(-E, method="average", axis=0) / m, floor)
    with np.errstate(invalid="ignore", divide="ignore"):
        skewness = np.nan_to_num(skew(E, axis=0))
    auto = np.where(skewness < 0, left, right)
    o_left = -np.log(left).sum(axis=1)
    o_right = -np.log(right).sum(axis=1)
    o_auto = -np.log(auto).sum(axis=1)
    return np.maximum(np.maximum(o_left, o_right), o_auto)


def threshold_predict(scores, contamination: float = 0.1) -> tuple[float, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise EvaluationError("cannot threshold an empty score list")
    if not 0 < contamination < 1:
        raise ValueError(f"contamination must be in (0, 1), got {contamination}")
    tau = float(np.quantile(scores, 1.0 - contamination))
    return tau, scores > tau


def _overlap(gt: frozenset, pred: frozenset) -> float:
    inter = len(gt & pred)
    return 0.5 * (inter / len(gt) + inter / len(pred))


def _nonempty(predicted: Iterable[Iterable[int]]) -> list[frozenset]:
    groups, skipped = [], 0
    for p in predicted:
        p = frozenset(p)
        if p:
            groups.append(p)
        else:
            skipped += 1
    if skipped:
        logger.warning(f"Skipped {skipped} empty predicted groups.")
    return groups


def completeness_score(gt: Iterable[int], predicted: Iterable[Iterable[int]]) -> float:
    """max over predictions of (|P & G| / |G| + |P & G| / |P|) / 2; 0 without predictions."""
    gt = frozenset(gt)
    if not gt:
        raise EvaluationError("ground-truth group is empty")
    return max((_overlap(gt, p) for p in _nonempty(predicted)), default=0.0)


def completeness_ratio(gt_groups: Sequence[Iterable[int]], predicted: Sequence[Iterable[int]]) -> float:
    if not gt_groups:
        raise EvaluationError("completeness ratio needs at least one ground-truth group")
    predicted = _nonempty(predicted)
    return float(np.mean([completeness_score(g, predicted) for g in gt_groups]))


def histogram(values: Iterable[float]) -> dict[str, int]:
    counts = {name: 0 for name, _, _ in BUCKETS}
    for v in values:
        name = next((name for name, upper, inclusive in BUCKETS if v < upper or (inclusive and v == upper)), "=1")
        counts[name] += 1
    return counts


@dataclass(frozen=True, eq=False)
class GroupVerdict:
    group_id: int
    nodes: frozenset
    embedding: np.ndarray | None
    score: float
    predicted: bool
    gt_label: bool | None = None


def build_verdicts(groups: Sequence[Iterable[int]], embeddings: np.ndarray, scores: np.ndarray,
                   predicted: np.ndarray) -> list[GroupVerdict]:
    return [GroupVerdict(group_id=i, nodes=frozenset(g), embedding=embeddings[i], score=float(scores[i]),
                         predicted=bool(predicted[i])) for i, g in enumerate(groups)]


class EvalReport(BaseModel):
    model_config = ConfigDict(extra="forbid")
    cr: float
    f1: float
    auc: float | None
    threshold: float
    num_groups: int
    num_predicted: int
    num_gt_groups: int
    completeness: list[float]
    coverage_histogram: dict[str, int]
    precision_histogram: dict[str, int]
    confusion: dict[str, int]


def label_verdicts(verdicts: Sequence[GroupVerdict], gt_groups: Sequence[Iterable[int]],
                   match_overlap: float = 0.5) -> list[GroupVerdict]:
    """A candidate is anomalous iff its symmetric overlap with some gt group reaches match_overlap."""
    gts = [frozenset(g) for g in gt_groups]
    return [replace(v, gt_label=any(_overlap(g, v.nodes) >= match_overlap for g in gts)) for v in verdicts]


def group_f1_auc(verdicts: Sequence[GroupVerdict], gt_groups: Sequence[Iterable[int]],
                 match_overlap: float = 0.5) -> tuple[float, float | None, dict[str, int], list[GroupVerdict]]:
    """F1 of the predictions and rank-based AUC of the scores against
    overlap-matched labels. AUC is None when only one label occurs."""
    if not verdicts:
        raise EvaluationError("no verdicts to evaluate")
    labelled = label_verdicts(verdicts, gt_groups, match_overlap)
    y_true = np.array([v.gt_label for v in labelled], dtype=bool)
    y_pred = np.array([v.predicted for v in labelled], dtype=bool)
    scores = np.array([v.score for v in labelled])
    f1 = float(f1_score(y_true, y_pred, zero_division=0))
    auc = float(roc_auc_score(y_true, scores)) if 0 < y_true.sum() < len(y_true) else None
    if auc is None:
        logger.warning("All candidate groups share one label; AUC is undefined.")
    tn, fp, fn, tp = confusion_matrix(y_true, y_pred, labels=[False, True]).ravel()
    confusion = {"tp": int(tp), "fp": int(fp), "tn": int(tn), "fn": int(fn)}
    return f1, auc, confusion, labelled


def evaluate(verdicts: Sequence[GroupVerdict], gt_groups: Sequence[Iterable[int]], threshold: float,
             match_overlap: float = 0.5) -> tuple[EvalReport, list[GroupVerdict]]:
    if not gt_groups:
        raise EvaluationError("evaluation needs ground-truth groups")
    predicted = [v.nodes for v in verdicts if v.predicted]
    completeness = [completeness_score(g, predicted) for g in gt_groups]
    f1, auc, confusion, labelled = group_f1_auc(verdicts, gt_groups, match_overlap)
    coverage, precision = [], []
    for g in gt_groups:
        g = frozenset(g)
        touching = [p for p in predicted if p & g]
        coverage.append(max((len(p & g) / len(g) for p in touching), default=0.0))
        precision.append(max((len(p & g) / len(p) for p in touching), default=0.0))
    report = EvalReport(
        cr=float(np.mean(completeness)),
        f1=f1,
        auc=auc,
        threshold=threshold,
        num_groups=len(verdicts),
        num_predicted=len(predicted),
        num_gt_groups=len(gt_groups),
        completeness=completeness,
        coverage_histogram=histogram(coverage),
        precision_histogram=histogram(precision),
        confusion=confusion,
    )
    logger.info(f"Evaluation: CR {report.cr:.4f}, F1 {report.f1:.4f}, AUC {report.auc}")
    return report, labelled
