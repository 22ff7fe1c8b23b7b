"""Small-group remedies: SMOTE, group upweighting, separate models, and
assembly of LLM-augmented training sets.

All assembly routines are pure: they copy out of the sampled table and tag
each row's provenance (real-majority, real-minority, synthetic-smote,
synthetic-llm).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .data import BINARY, CATEGORICAL, Encoder, GroupSample, Schema
from .errors import MissingSynthetic, SingleGroup, TooFewRows
from .genclient import GenerationBatch
from .model import LogisticModel

TAG_REAL_MAJORITY = "real-majority"
TAG_REAL_MINORITY = "real-minority"
TAG_SYNTHETIC_SMOTE = "synthetic-smote"
TAG_SYNTHETIC_LLM = "synthetic-llm"


class MethodId(str, Enum):
    """The six compared training strategies."""

    BASELINE = "baseline"
    UPWEIGHTED = "upweighted"
    SEPARATE = "separate"
    SMOTE = "smote"
    GPT_GROUP = "gpt_group"
    GPT_GENERIC = "gpt_generic"

    @property
    def is_llm(self) -> bool:
        return self in (MethodId.GPT_GROUP, MethodId.GPT_GENERIC)

    @property
    def display_name(self) -> str:
        return _DISPLAY[self]


_DISPLAY = {
    MethodId.BASELINE: "Baseline",
    MethodId.UPWEIGHTED: "Upweighted",
    MethodId.SEPARATE: "Separate",
    MethodId.SMOTE: "SMOTE",
    MethodId.GPT_GROUP: "Group",
    MethodId.GPT_GENERIC: "Generic",
}


@dataclass(frozen=True)
class TrainingSet:
    """Encoded design matrix plus outcome, weights, and row provenance."""

    X: np.ndarray
    y: np.ndarray
    weights: np.ndarray
    tags: np.ndarray
    feature_names: tuple[str, ...]
    group_label: str | None = None  # set for the separate-models sets

    @property
    def n(self) -> int:
        return len(self.y)


@dataclass(frozen=True)
class AssembledMethod:
    """assemble() output: one pooled set or one set per group, plus encoder."""

    method: MethodId
    sets: dict[str, TrainingSet]
    encoder: Encoder


@dataclass(frozen=True)
class FittedMethod:
    """Fitted models for one method; key 'pooled' or the group label."""

    method: MethodId
    models: dict[str, LogisticModel]
    encoder: Encoder

    def model_for(self, group: str) -> LogisticModel | dict[str, LogisticModel]:
        if "pooled" in self.models:
            return self.models["pooled"]
        return self.models


@dataclass(frozen=True)
class SmoteResult:
    """Synthetic rows plus their construction provenance.

    ``raw`` holds the interpolated rows before any rounding, for geometry
    checks; ``parents`` gives the (base, neighbor) row indices and ``lambdas``
    the interpolation factors.
    """

    rows: np.ndarray
    raw: np.ndarray
    parents: np.ndarray
    lambdas: np.ndarray


def smote_upsample(
    X: np.ndarray,
    target_n: int,
    k: int = 5,
    rng_seed: int = 0,
    round_cols: tuple[int, ...] = (),
    neighbor_cols: tuple[int, ...] | None = None,
    scale_mean: np.ndarray | None = None,
    scale_sd: np.ndarray | None = None,
) -> SmoteResult:
    """Interpolate target_n - len(X) synthetic rows between nearest neighbors.

    Each synthetic row is x + lambda * (x_nn - x) for a uniformly drawn base
    row x, one of its k nearest neighbors x_nn (Euclidean on z-scored
    coordinates), and lambda ~ Uniform(0, 1). Neighbor search is restricted to
    ``neighbor_cols`` (default: all columns), standardized by the given
    mean/sd or, absent those, by the rows' own moments. Columns listed in
    ``round_cols`` (binary/one-hot coordinates and the outcome) are rounded to
    the nearest integer after interpolation.
    """
    X = np.asarray(X, dtype=float)
    n = len(X)
    if n < k + 1:
        raise TooFewRows(f"SMOTE with k={k} needs at least {k + 1} rows, got {n}")
    if target_n < n:
        raise ValueError(f"target_n {target_n} smaller than current {n} rows")
    n_syn = target_n - n
    d = X.shape[1]
    if n_syn == 0:
        empty = np.empty((0, d))
        return SmoteResult(empty, empty.copy(), np.empty((0, 2), dtype=np.int64), np.empty(0))

    metric = X[:, list(neighbor_cols)] if neighbor_cols is not None else X
    mean = np.asarray(scale_mean, dtype=float) if scale_mean is not None else metric.mean(axis=0)
    sd = np.asarray(scale_sd, dtype=float) if scale_sd is not None else metric.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    Z = (metric - mean) / sd
    sq = np.einsum("ij,ij->i", Z, Z)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (Z @ Z.T)
    np.fill_diagonal(d2, np.inf)
    neighbors = np.argsort(d2, axis=1, kind="stable")[:, :k]

    rng = np.random.default_rng(rng_seed)
    base = rng.integers(0, n, size=n_syn)
    pick = rng.integers(0, k, size=n_syn)
    nn = neighbors[base, pick]
    lam = rng.random(n_syn)
    raw = X[base] + lam[:, None] * (X[nn] - X[base])
    rows = raw.copy()
    if round_cols:
        cols = list(round_cols)
        rows[:, cols] = np.rint(raw[:, cols])
    return SmoteResult(
        rows=rows,
        raw=raw,
        parents=np.column_stack([base, nn]).astype(np.int64),
        lambdas=lam,
    )


def group_weights(group_indicator: np.ndarray) -> np.ndarray:
    """Equalize total group weight: minority rows get n_majority / n_minority."""
    ind = np.asarray(group_indicator)
    if not np.isin(ind, (0, 1)).all():
        raise ValueError("group indicator must be 0/1")
    n_min = int((ind == 1).sum())
    n_maj = int((ind == 0).sum())
    if n_min == 0 or n_maj == 0:
        raise SingleGroup(f"both groups required; got {n_maj} majority, {n_min} minority rows")
    return np.where(ind == 1, n_maj / n_min, 1.0)


def _binary_design_cols(schema: Schema, encoder: Encoder) -> tuple[int, ...]:
    """Design-matrix column indices holding 0/1 values (binary + one-hot)."""
    cols = []
    j = 0
    for f in schema.features:
        if f.kind == CATEGORICAL:
            for _ in f.categories[1:]:
                cols.append(j)
                j += 1
        else:
            if f.kind == BINARY:
                cols.append(j)
            j += 1
    return tuple(cols)


def assemble(
    method: MethodId,
    sample: GroupSample,
    synthetic: GenerationBatch | None,
    schema: Schema,
    outcome: str,
    rng_seed: int = 0,
    smote_k: int = 5,
) -> AssembledMethod:
    """Build the training set(s) for one method.

    Pooled methods carry a binary group indicator column (1 = minority);
    the separate-models method returns one indicator-free set per group.
    Synthetic rows are appended as minority-group rows.
    """
    method = MethodId(method)
    if method.is_llm and synthetic is None:
        raise MissingSynthetic(f"method {method.value} needs a GenerationBatch")
    if not method.is_llm and synthetic is not None:
        raise ValueError(f"method {method.value} does not take synthetic rows")
    if outcome not in schema.outcomes:
        raise ValueError(f"unknown outcome {outcome!r}")

    include_group = method != MethodId.SEPARATE
    encoder = Encoder(schema, include_group=include_group, minority_label=sample.minority_label)
    maj_rows = sample.majority_rows
    min_rows = sample.minority_rows
    X_maj = encoder.transform(maj_rows, group_label=sample.majority_label)
    X_min = encoder.transform(min_rows, group_label=sample.minority_label)
    y_maj = np.asarray(maj_rows[outcome], dtype=float)
    y_min = np.asarray(min_rows[outcome], dtype=float)

    if method == MethodId.SEPARATE:
        sets = {
            sample.majority_label: TrainingSet(
                X=X_maj,
                y=y_maj,
                weights=np.ones(len(y_maj)),
                tags=np.full(len(y_maj), TAG_REAL_MAJORITY, dtype=object),
                feature_names=encoder.column_names,
                group_label=sample.majority_label,
            ),
            sample.minority_label: TrainingSet(
                X=X_min,
                y=y_min,
                weights=np.ones(len(y_min)),
                tags=np.full(len(y_min), TAG_REAL_MINORITY, dtype=object),
                feature_names=encoder.column_names,
                group_label=sample.minority_label,
            ),
        }
        return AssembledMethod(method=method, sets=sets, encoder=encoder)

    X = np.vstack([X_maj, X_min])
    y = np.concatenate([y_maj, y_min])
    tags = np.concatenate(
        [
            np.full(len(y_maj), TAG_REAL_MAJORITY, dtype=object),
            np.full(len(y_min), TAG_REAL_MINORITY, dtype=object),
        ]
    )
    weights = np.ones(len(y))

    if method == MethodId.UPWEIGHTED:
        indicator = X[:, -1]
        weights = group_weights(indicator)
    elif method == MethodId.SMOTE:
        # Up-sample the minority group to the majority size. Neighbor search
        # runs on features standardized against the pooled training rows; the
        # outcome rides along as an extra interpolated-then-rounded column.
        n_feat = encoder.width - 1  # all but the group indicator
        pooled_feat = X[:, :n_feat]
        min_feat = X_min[:, :n_feat]
        work = np.column_stack([min_feat, y_min])
        round_cols = tuple(_binary_design_cols(schema, encoder)) + (n_feat,)
        result = smote_upsample(
            work,
            target_n=len(y_maj),
            k=smote_k,
            rng_seed=rng_seed,
            round_cols=round_cols,
            neighbor_cols=tuple(range(n_feat)),
            scale_mean=pooled_feat.mean(axis=0),
            scale_sd=pooled_feat.std(axis=0),
        )
        n_syn = len(result.rows)
        X_syn = np.column_stack([result.rows[:, :n_feat], np.ones(n_syn)])
        X = np.vstack([X, X_syn])
        y = np.concatenate([y, result.rows[:, n_feat]])
        tags = np.concatenate([tags, np.full(n_syn, TAG_SYNTHETIC_SMOTE, dtype=object)])
        weights = np.ones(len(y))
    elif method.is_llm:
        X_syn = encoder.transform(synthetic.rows, group_label=sample.minority_label)
        y_syn = np.asarray(synthetic.rows[outcome], dtype=float)
        X = np.vstack([X, X_syn])
        y = np.concatenate([y, y_syn])
        tags = np.concatenate([tags, np.full(len(y_syn), TAG_SYNTHETIC_LLM, dtype=object)])
        weights = np.ones(len(y))

    sets = {
        "pooled": TrainingSet(
            X=X,
            y=y,
            weights=weights,
            tags=tags,
            feature_names=encoder.column_names,
        )
    }
    return AssembledMethod(method=method, sets=sets, encoder=encoder)
