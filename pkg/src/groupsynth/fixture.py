"""Calibrated synthetic fixture generation.

Stands in for restricted clinical datasets: each group draws feature vectors
from a Gaussian-copula model (independent marginals plus optional pairwise
correlation) and outcome labels from a per-group logistic model whose
intercept is calibrated to a target prevalence. The same group-conditional
distributions back the mock backend's oracle mode, so "ideal" generated rows
and fixture rows come from one source of truth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit, ndtr

from .data import BINARY, CATEGORICAL, NUMERIC, Columns, Schema, Table, make_table, schema_from_dict
from .errors import ConfigError
from .seeds import derive_seed

_CALIBRATION_DRAWS = 200_000


@dataclass(frozen=True)
class OutcomeModel:
    """Logistic outcome model: coefficients over features, calibrated intercept.

    Numeric features enter standardized by their configured (mean, sd);
    binary features enter as 0/1; categorical effects are per-category offsets.
    When ``prevalence`` is set the intercept is solved so the group's expected
    positive rate matches it; otherwise ``intercept`` is used as given.
    """

    coefficients: dict[str, float | dict[str, float]]
    intercept: float = 0.0
    prevalence: float | None = None

    def __post_init__(self):
        if self.prevalence is not None and not (0.0 < self.prevalence < 1.0):
            raise ConfigError(f"prevalence target {self.prevalence} outside (0, 1)")


@dataclass(frozen=True)
class GroupSpec:
    """Size, feature marginals, correlations, and outcome models for one group."""

    size: int
    features: dict[str, dict]
    correlations: tuple[tuple[str, str, float], ...] = ()
    outcomes: dict[str, OutcomeModel] = field(default_factory=dict)

    def __post_init__(self):
        if self.size <= 0:
            raise ConfigError(f"group size must be > 0, got {self.size}")
        for a, b, rho in self.correlations:
            if not (-1.0 < rho < 1.0):
                raise ConfigError(f"correlation rho for ({a}, {b}) must be in (-1, 1)")


@dataclass(frozen=True)
class FixtureSpec:
    """Schema plus one GroupSpec per group label."""

    schema: Schema
    groups: dict[str, GroupSpec]
    _intercepts: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        for label in self.groups:
            if label not in self.schema.group_labels:
                raise ConfigError(f"fixture group {label!r} not in schema group labels")
        for label, g in self.groups.items():
            for f in self.schema.features:
                if f.name not in g.features:
                    raise ConfigError(f"group {label!r}: no distribution for feature {f.name!r}")
            for name in g.outcomes:
                if name not in self.schema.outcomes:
                    raise ConfigError(f"group {label!r}: unknown outcome {name!r}")
            for name in self.schema.outcomes:
                if name not in g.outcomes:
                    raise ConfigError(f"group {label!r}: no outcome model for {name!r}")


def load_fixture_spec(path: str | Path) -> FixtureSpec:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return fixture_spec_from_dict(doc)


def fixture_spec_from_dict(doc: dict) -> FixtureSpec:
    try:
        schema = schema_from_dict(doc["schema"])
        groups = {}
        for label, g in doc["groups"].items():
            outcomes = {
                name: OutcomeModel(
                    coefficients=dict(m.get("coefficients", {})),
                    intercept=float(m.get("intercept", 0.0)),
                    prevalence=m.get("prevalence"),
                )
                for name, m in g["outcomes"].items()
            }
            correlations = tuple(
                (c["a"], c["b"], float(c["rho"])) for c in g.get("correlations", ())
            )
            groups[label] = GroupSpec(
                size=int(g["size"]),
                features={k: dict(v) for k, v in g["features"].items()},
                correlations=correlations,
                outcomes=outcomes,
            )
        return FixtureSpec(schema=schema, groups=groups)
    except KeyError as exc:
        raise ConfigError(f"fixture spec missing key {exc}") from exc


def make_fixture(spec: FixtureSpec, rng_seed: int) -> Table:
    """Generate the full fixture table, one block of rows per group."""
    schema = spec.schema
    blocks: list[Columns] = []
    for label, group in spec.groups.items():
        rng = np.random.default_rng(derive_seed(rng_seed, "fixture", label))
        features = _sample_features(schema, group, group.size, rng)
        columns: Columns = dict(features)
        columns[schema.group_column] = np.full(group.size, label, dtype=object)
        for name in schema.outcomes:
            p = outcome_probabilities(spec, label, name, features)
            columns[name] = (rng.random(group.size) < p).astype(np.int64)
        blocks.append(columns)
    merged = {
        name: np.concatenate([b[name] for b in blocks]) for name in schema.column_names
    }
    return make_table(schema, merged, validate=True)


def sample_group_rows(spec: FixtureSpec, label: str, n: int, rng_seed: int) -> Columns:
    """Draw n rows (features + outcomes) from one group's true distribution."""
    if label not in spec.groups:
        raise ConfigError(f"no fixture group {label!r}")
    rng = np.random.default_rng(rng_seed)
    features = _sample_features(spec.schema, spec.groups[label], n, rng)
    columns: Columns = dict(features)
    for name in spec.schema.outcomes:
        p = outcome_probabilities(spec, label, name, features)
        columns[name] = (rng.random(n) < p).astype(np.int64)
    return columns


def _correlation_matrix(schema: Schema, group: GroupSpec) -> np.ndarray:
    d = len(schema.features)
    index = {name: i for i, name in enumerate(schema.feature_names)}
    corr = np.eye(d)
    for a, b, rho in group.correlations:
        if a not in index or b not in index:
            raise ConfigError(f"correlation names unknown feature in ({a}, {b})")
        corr[index[a], index[b]] = corr[index[b], index[a]] = rho
    try:
        chol = np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        # Clip tiny negative eigenvalues and renormalize the diagonal.
        w, v = np.linalg.eigh(corr)
        corr = (v * np.clip(w, 1e-9, None)) @ v.T
        scale = np.sqrt(np.diag(corr))
        corr = corr / np.outer(scale, scale)
        chol = np.linalg.cholesky(corr)
    return chol


def _sample_features(schema: Schema, group: GroupSpec, n: int, rng: np.random.Generator) -> Columns:
    chol = _correlation_matrix(schema, group)
    z = rng.standard_normal((n, len(schema.features))) @ chol.T
    columns: Columns = {}
    for i, f in enumerate(schema.features):
        params = group.features[f.name]
        if f.kind == NUMERIC:
            values = params["mean"] + params["sd"] * z[:, i]
            if f.bounds is not None:
                values = fold_into_bounds(values, *f.bounds)
            columns[f.name] = values
        elif f.kind == BINARY:
            p = params["p"]
            if not (0.0 <= p <= 1.0):
                raise ConfigError(f"binary feature {f.name!r}: p outside [0, 1]")
            columns[f.name] = (ndtr(z[:, i]) < p).astype(np.int64)
        else:
            probs = np.array([params["probs"][c] for c in f.categories], dtype=float)
            if abs(probs.sum() - 1.0) > 1e-9 or (probs < 0).any():
                raise ConfigError(f"categorical feature {f.name!r}: probs must sum to 1")
            cuts = np.cumsum(probs)[:-1]
            idx = np.searchsorted(cuts, ndtr(z[:, i]), side="right")
            columns[f.name] = np.array(f.categories, dtype=object)[idx]
    return columns


def fold_into_bounds(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Reflect values into [lo, hi] without creating point masses at the edges."""
    if hi <= lo:
        return np.full_like(np.asarray(values, dtype=float), lo)
    span = hi - lo
    t = np.mod(np.asarray(values, dtype=float) - lo, 2.0 * span)
    return lo + np.where(t > span, 2.0 * span - t, t)


def _linear_score(
    spec: FixtureSpec, label: str, outcome: str, features: Columns
) -> np.ndarray:
    """Coefficient contribution of every feature, before the intercept."""
    schema = spec.schema
    group = spec.groups[label]
    model = group.outcomes[outcome]
    n = len(next(iter(features.values())))
    score = np.zeros(n)
    for name, coef in model.coefficients.items():
        f = schema.feature(name)
        values = features[name]
        if f.kind == NUMERIC:
            params = group.features[name]
            sd = params["sd"] if params["sd"] > 0 else 1.0
            score += float(coef) * (np.asarray(values, dtype=float) - params["mean"]) / sd
        elif f.kind == BINARY:
            score += float(coef) * np.asarray(values, dtype=float)
        else:
            effects = coef if isinstance(coef, dict) else {}
            per_row = np.array([effects.get(v, 0.0) for v in values], dtype=float)
            score += per_row
    return score


def calibrated_intercept(spec: FixtureSpec, label: str, outcome: str) -> float:
    """Intercept for (group, outcome); solved once and memoized on the spec.

    Calibration uses a fixed internal seed so fixture tables and oracle-mode
    generation share identical outcome models regardless of caller seeds.
    """
    key = (label, outcome)
    if key in spec._intercepts:
        return spec._intercepts[key]
    model = spec.groups[label].outcomes[outcome]
    if model.prevalence is None:
        spec._intercepts[key] = model.intercept
        return model.intercept
    rng = np.random.default_rng(derive_seed("fixture-calibration", label, outcome))
    features = _sample_features(spec.schema, spec.groups[label], _CALIBRATION_DRAWS, rng)
    score = _linear_score(spec, label, outcome, features)
    target = model.prevalence

    def mean_rate(b: float) -> float:
        return float(np.mean(expit(score + b)))

    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mean_rate(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    intercept = 0.5 * (lo + hi)
    if not math.isfinite(intercept):
        raise ConfigError(f"intercept calibration failed for {label!r}/{outcome!r}")
    spec._intercepts[key] = intercept
    return intercept


def outcome_probabilities(
    spec: FixtureSpec, label: str, outcome: str, features: Columns
) -> np.ndarray:
    """True positive-class probabilities for rows drawn from a group."""
    score = _linear_score(spec, label, outcome, features)
    return expit(score + calibrated_intercept(spec, label, outcome))
