"""Rank metrics (AUROC, average-precision AUPRC) and per-group evaluation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .data import Table
from .errors import DimensionMismatch, NoPositives, SingleClass, SkippedCell
from .model import LogisticModel, predict_proba


def _check_pair(labels, scores) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(labels)
    s = np.asarray(scores, dtype=float)
    if y.shape != s.shape or y.ndim != 1:
        raise DimensionMismatch(f"labels {y.shape} and scores {s.shape} must be equal-length vectors")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be binary 0/1")
    return y.astype(np.int64), s


def _midranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks with tied values assigned the mean of their rank range."""
    order = np.argsort(scores, kind="mergesort")
    s = scores[order]
    n = len(s)
    starts = np.flatnonzero(np.r_[True, s[1:] != s[:-1]])
    ends = np.r_[starts[1:], n]
    mid = (starts + 1 + ends) / 2.0  # average of ranks start+1 .. end
    ranks_sorted = np.repeat(mid, ends - starts)
    ranks = np.empty(n)
    ranks[order] = ranks_sorted
    return ranks


def auroc(labels, scores) -> float:
    """Mann-Whitney AUROC with midrank tie handling."""
    y, s = _check_pair(labels, scores)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass(f"need both classes; got {n_pos} positives, {n_neg} negatives")
    ranks = _midranks(s)
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auprc(labels, scores) -> float:
    """Average precision over descending unique score thresholds."""
    y, s = _check_pair(labels, scores)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise NoPositives("average precision needs at least one positive label")
    order = np.argsort(-s, kind="mergesort")
    y_sorted = y[order]
    s_sorted = s[order]
    tp = np.cumsum(y_sorted)
    # last index of each tied block = the threshold's operating point
    ends = np.flatnonzero(np.r_[s_sorted[1:] != s_sorted[:-1], True])
    tp_k = tp[ends].astype(float)
    total_k = ends + 1.0
    precision = tp_k / total_k
    recall = tp_k / n_pos
    delta = np.diff(np.r_[0.0, recall])
    return float(delta @ precision)


@dataclass(frozen=True)
class EvalResult:
    group: str
    outcome: str
    method: str | None
    auroc: float
    auprc: float
    n_pos: int
    n_neg: int


def evaluate_group(
    model: LogisticModel | Mapping[str, LogisticModel],
    holdout: Table,
    group: str,
    outcome: str,
    encoder,
    method: str | None = None,
) -> EvalResult:
    """Score one group's holdout rows and compute both rank metrics.

    ``model`` is either a single pooled model or a mapping from group label to
    that group's own model (the separate-models method). Raises SkippedCell
    when the group's holdout rows do not contain both outcome classes.
    """
    idx = holdout.group_indices(group)
    if len(idx) == 0:
        raise SkippedCell(f"no holdout rows for group {group!r}")
    rows = holdout.rows(idx)
    y = np.asarray(rows[outcome], dtype=np.int64)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SkippedCell(
            f"holdout for group {group!r} has {n_pos} positive and {n_neg} negative "
            f"{outcome!r} rows; both classes required"
        )
    if isinstance(model, Mapping):
        if group not in model:
            raise SkippedCell(f"no model fitted for group {group!r}")
        scorer = model[group]
    else:
        scorer = model
    X = encoder.transform(rows, group_label=group)
    scores = predict_proba(scorer, X)
    return EvalResult(
        group=group,
        outcome=outcome,
        method=method,
        auroc=auroc(y, scores),
        auprc=auprc(y, scores),
        n_pos=n_pos,
        n_neg=n_neg,
    )
