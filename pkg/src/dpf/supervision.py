"""Losses and metrics for point-supervised training.

Parsing uses a c-way cross-entropy at labeled points and mIoU for
evaluation.  Reflectance uses a hinge loss over two-point comparisons
(margins delta=0.12, eps=0.08 during training) and the weighted human
disagreement rate for evaluation (classification threshold delta=0.1,
strict inequalities; a ratio of exactly 1.1 counts as "equal").
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .autograd import Tensor, gather_cols, log_softmax, maximum
from .errors import ContractError

TRAIN_DELTA = 0.12
TRAIN_EPS = 0.08
EVAL_DELTA = 0.1


class PairLabel(enum.IntEnum):
    """Relative reflectance judgment between two points."""

    EQUAL = 0
    POINT1_DARKER = 1
    POINT2_DARKER = 2


@dataclass(frozen=True)
class PointLabel:
    row: int
    col: int
    label: int


@dataclass(frozen=True)
class ComparisonPair:
    """Two points in [0,1]^2 image fractions, a judgment, and a confidence."""

    p1: tuple[float, float]
    p2: tuple[float, float]
    label: PairLabel
    weight: float = 1.0


@dataclass
class WhdrReport:
    whdr: float
    total_weight: float
    error_weight_by_label: dict[PairLabel, float] = field(default_factory=dict)


# -- parsing ---------------------------------------------------------------------

def ce_point_loss(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean negative log-likelihood of the labeled class at each point."""
    labels = np.asarray(labels, dtype=np.int64)
    if logits.data.ndim != 2 or logits.data.shape[0] != labels.shape[0]:
        raise ContractError(f"expected (n, c) logits for {labels.shape[0]} labels, "
                            f"got {logits.data.shape}")
    c = logits.data.shape[1]
    if labels.min(initial=0) < 0 or (labels.size and labels.max() >= c):
        raise ContractError(f"label outside [0, {c})")
    return -gather_cols(log_softmax(logits, axis=1), labels).mean()


def miou(pred: np.ndarray, gt: np.ndarray, num_classes: int,
         ignore_value: int = 255) -> tuple[float, dict[int, float]]:
    """Mean IoU over classes present in either map; ignored pixels drop out."""
    conf = confusion_matrix(pred, gt, num_classes, ignore_value)
    return miou_from_confusion(conf)


def confusion_matrix(pred: np.ndarray, gt: np.ndarray, num_classes: int,
                     ignore_value: int = 255) -> np.ndarray:
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ContractError(f"shape mismatch {pred.shape} vs {gt.shape}")
    valid = (gt != ignore_value) & (pred != ignore_value)
    if not valid.any():
        raise ContractError("no valid pixels for mIoU")
    p = pred[valid].astype(np.int64)
    g = gt[valid].astype(np.int64)
    if p.max() >= num_classes or g.max() >= num_classes:
        raise ContractError("class index out of range")
    conf = np.bincount(g * num_classes + p, minlength=num_classes ** 2)
    return conf.reshape(num_classes, num_classes)


def miou_from_confusion(conf: np.ndarray) -> tuple[float, dict[int, float]]:
    inter = np.diag(conf).astype(np.float64)
    union = conf.sum(axis=0) + conf.sum(axis=1) - inter
    present = union > 0
    if not present.any():
        raise ContractError("no classes present")
    per_class = {int(k): float(inter[k] / union[k]) for k in np.nonzero(present)[0]}
    return float(np.mean([per_class[k] for k in per_class])), per_class


# -- reflectance comparisons ------------------------------------------------------

def _check_positive(r: np.ndarray):
    if np.any(r <= 0) or not np.all(np.isfinite(r)):
        raise ContractError("reflectance values must be strictly positive and finite")


def hinge_pair_losses(r1: Tensor, r2: Tensor, labels: np.ndarray,
                      delta: float = TRAIN_DELTA, eps: float = TRAIN_EPS) -> Tensor:
    """Per-pair hinge losses on the ratio r1/r2 (vectorized, differentiable).

    Zero exactly when the judgment's margin holds: ratio <= 1/(1+delta+eps)
    for POINT1_DARKER, ratio >= 1+delta+eps for POINT2_DARKER, and ratio
    within [1/(1+delta-eps), 1+delta-eps] for EQUAL.
    """
    labels = np.asarray(labels, dtype=np.int64)
    _check_positive(r1.data)
    _check_positive(r2.data)
    ratio = r1 / r2
    wide = 1.0 + delta + eps
    narrow = 1.0 + delta - eps
    loss_p1 = (ratio - 1.0 / wide).relu()
    loss_p2 = (wide - ratio).relu()
    loss_eq = maximum(1.0 / narrow - ratio, ratio - narrow).relu()
    dt = ratio.data.dtype
    m_eq = Tensor((labels == PairLabel.EQUAL).astype(dt))
    m_p1 = Tensor((labels == PairLabel.POINT1_DARKER).astype(dt))
    m_p2 = Tensor((labels == PairLabel.POINT2_DARKER).astype(dt))
    return m_eq * loss_eq + m_p1 * loss_p1 + m_p2 * loss_p2


def hinge_pair_loss(r1: float, r2: float, label: PairLabel,
                    delta: float = TRAIN_DELTA, eps: float = TRAIN_EPS) -> float:
    """Scalar convenience form of :func:`hinge_pair_losses`."""
    out = hinge_pair_losses(Tensor(np.asarray([r1], dtype=np.float64)),
                            Tensor(np.asarray([r2], dtype=np.float64)),
                            np.asarray([int(label)]), delta, eps)
    return float(out.data[0])


def pair_loss_total(losses: Tensor, weights: np.ndarray) -> Tensor:
    """Confidence-weighted sum over all pairs (no normalization)."""
    weights = np.asarray(weights)
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ContractError("pair weights must be finite and >= 0")
    return (losses * Tensor(weights.astype(losses.data.dtype))).sum()


def classify_pairs(r1: np.ndarray, r2: np.ndarray,
                   delta: float = EVAL_DELTA) -> np.ndarray:
    """Predicted judgment per pair; strict > comparisons against 1 + delta."""
    r1 = np.asarray(r1, dtype=np.float64)
    r2 = np.asarray(r2, dtype=np.float64)
    _check_positive(r1)
    _check_positive(r2)
    out = np.full(r1.shape, int(PairLabel.EQUAL), dtype=np.int64)
    out[r2 / r1 > 1.0 + delta] = int(PairLabel.POINT1_DARKER)
    out[r1 / r2 > 1.0 + delta] = int(PairLabel.POINT2_DARKER)
    return out


def classify_pair(r1: float, r2: float, delta: float = EVAL_DELTA) -> PairLabel:
    return PairLabel(int(classify_pairs(np.asarray([r1]), np.asarray([r2]), delta)[0]))


def whdr(labels: np.ndarray, weights: np.ndarray,
         predicted: np.ndarray) -> WhdrReport:
    """Weighted fraction of pairs whose predicted judgment disagrees."""
    labels = np.asarray(labels, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if labels.size == 0:
        raise ContractError("empty pair set")
    total = float(weights.sum())
    if total <= 0:
        raise ContractError("total pair weight must be positive")
    wrong = predicted != labels
    by_label = {lab: float(weights[wrong & (labels == lab)].sum()) for lab in PairLabel}
    return WhdrReport(whdr=float(weights[wrong].sum() / total),
                      total_weight=total, error_weight_by_label=by_label)


def total_loss(field_loss: Tensor, aux_loss: Tensor, lambda_aux: float = 1.0) -> Tensor:
    """Field-query loss plus the weighted auxiliary loss on the baseline map."""
    if not (np.isfinite(field_loss.data).all() and np.isfinite(aux_loss.data).all()):
        raise ContractError("loss terms must be finite")
    return field_loss + lambda_aux * aux_loss
