"""Synthetic-data quality diagnostics: nearest-neighbor distances, correlation
structure, 2-D kernel densities, and discriminator probability reports.

Every analysis emits a plot-ready CSV; ``write_diagnostics`` collects them
under one output directory with a JSON manifest.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import (
    BINARY,
    CATEGORICAL,
    NUMERIC,
    Columns,
    Encoder,
    Schema,
    Table,
    n_rows,
)
from .errors import ConfigError, EmptyReference, TooFewPoints, TooFewRows
from .model import ForestConfig, fit_forest, forest_predict_proba
from .seeds import derive_seed

DISCRIMINATOR_TRAIN_FRACTION = 0.7
KDE_GRID_SIZE = 100
KDE_MARGIN = 0.1


def l1_nn_distances(synthetic: Columns, reference: Columns, schema: Schema) -> np.ndarray:
    """Distance from each synthetic row to its closest reference row.

    Features are min-max normalized to [0, 1] using the reference ranges
    (degenerate ranges fall back to a unit span); categorical features are
    expanded to full one-hot blocks whose absolute differences count half, so
    one category mismatch contributes exactly 1.
    """
    m = n_rows(reference)
    if m == 0:
        raise EmptyReference("reference rows required for nearest-neighbor distances")
    n = n_rows(synthetic)
    if n == 0:
        return np.empty(0)

    # Build weighted numeric planes once: (values_syn, values_ref, weight).
    planes: list[tuple[np.ndarray, np.ndarray, float]] = []
    for f in schema.features:
        if f.kind == CATEGORICAL:
            syn = np.asarray(synthetic[f.name], dtype=object)
            ref = np.asarray(reference[f.name], dtype=object)
            for c in f.categories:
                planes.append(((syn == c).astype(float), (ref == c).astype(float), 0.5))
        else:
            syn = np.asarray(synthetic[f.name], dtype=float)
            ref = np.asarray(reference[f.name], dtype=float)
            lo, hi = float(ref.min()), float(ref.max())
            span = hi - lo if hi > lo else 1.0
            planes.append(((syn - lo) / span, (ref - lo) / span, 1.0))

    out = np.empty(n)
    chunk = max(1, min(n, 8_000_000 // max(m, 1)))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        acc = np.zeros((stop - start, m))
        for syn, ref, weight in planes:
            acc += weight * np.abs(syn[start:stop, None] - ref[None, :])
        out[start:stop] = acc.min(axis=1)
    return out


@dataclass(frozen=True)
class CorrelationResult:
    """Pearson matrix with undefined (constant-feature) entries flagged."""

    features: tuple[str, ...]
    matrix: np.ndarray  # NaN marks undefined entries
    missing: tuple[str, ...]  # constant features


def correlation_matrix(rows: Columns, features: tuple[str, ...]) -> CorrelationResult:
    """Pairwise Pearson correlations over the named numeric columns."""
    n = n_rows({f: rows[f] for f in features}) if features else 0
    if n < 2:
        raise TooFewRows("correlation needs at least 2 rows")
    data = np.column_stack([np.asarray(rows[f], dtype=float) for f in features])
    sd = data.std(axis=0)
    constant = sd == 0
    matrix = np.full((len(features), len(features)), np.nan)
    keep = np.flatnonzero(~constant)
    if len(keep) == 1:
        matrix[keep[0], keep[0]] = 1.0
    elif len(keep) > 1:
        sub = np.corrcoef(data[:, keep], rowvar=False)
        matrix[np.ix_(keep, keep)] = np.clip(sub, -1.0, 1.0)
        matrix[keep, keep] = 1.0
    missing = tuple(f for f, c in zip(features, constant) if c)
    return CorrelationResult(features=tuple(features), matrix=matrix, missing=missing)


@dataclass(frozen=True)
class Kde2dResult:
    x_grid: np.ndarray
    y_grid: np.ndarray
    density: np.ndarray  # density[i, j] = f(x_grid[i], y_grid[j])
    bandwidth_x: float
    bandwidth_y: float


def _kde_axis(values: np.ndarray, grid_size: int) -> tuple[np.ndarray, float]:
    lo, hi = float(values.min()), float(values.max())
    span = hi - lo if hi > lo else 1.0
    grid = np.linspace(lo - KDE_MARGIN * span, hi + KDE_MARGIN * span, grid_size)
    bw = float(np.std(values, ddof=1)) * len(values) ** (-1.0 / 6.0)
    return grid, max(bw, 1e-12)


def kde2d(
    x: np.ndarray, y: np.ndarray, grid_size: int = KDE_GRID_SIZE
) -> Kde2dResult:
    """Product-Gaussian kernel density on an evenly spaced grid.

    The grid spans the data range plus a 10% margin per axis; per-axis
    bandwidths follow Scott's rule for two dimensions, sd * n^(-1/6).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ConfigError("kde2d needs two equal-length vectors")
    n = len(x)
    if n < 2:
        raise TooFewPoints("kde2d needs at least 2 points")
    gx, bx = _kde_axis(x, grid_size)
    gy, by = _kde_axis(y, grid_size)
    kx = np.exp(-0.5 * ((gx[:, None] - x[None, :]) / bx) ** 2) / (bx * np.sqrt(2 * np.pi))
    ky = np.exp(-0.5 * ((gy[:, None] - y[None, :]) / by) ** 2) / (by * np.sqrt(2 * np.pi))
    density = (kx @ ky.T) / n
    return Kde2dResult(x_grid=gx, y_grid=gy, density=density, bandwidth_x=bx, bandwidth_y=by)


def discriminator_report(
    real_minority: Columns,
    real_majority: Columns,
    synthetic: Columns,
    schema: Schema,
    rng_seed: int = 0,
    forest_config: ForestConfig | None = None,
) -> dict[str, np.ndarray]:
    """Group-membership probabilities from a forest trained to tell groups apart.

    Each real group is split 70/30 (seeded); the forest learns minority = 1 on
    the 70% blocks, then scores both 30% holdouts and every synthetic row.
    """
    n_min = n_rows(real_minority)
    n_maj = n_rows(real_majority)
    if n_min < 20 or n_maj < 20:
        raise TooFewRows(
            f"discriminator needs >= 20 rows per group, got {n_maj} majority / {n_min} minority"
        )
    encoder = Encoder(schema, include_group=False)
    rng = np.random.default_rng(derive_seed(rng_seed, "discriminator"))

    def split(columns: Columns, n: int) -> tuple[Columns, Columns]:
        perm = rng.permutation(n)
        cut = int(n * DISCRIMINATOR_TRAIN_FRACTION)
        train = {k: np.asarray(v)[perm[:cut]] for k, v in columns.items()}
        hold = {k: np.asarray(v)[perm[cut:]] for k, v in columns.items()}
        return train, hold

    min_train, min_hold = split(real_minority, n_min)
    maj_train, maj_hold = split(real_majority, n_maj)
    X_train = np.vstack([encoder.transform(maj_train), encoder.transform(min_train)])
    y_train = np.concatenate(
        [np.zeros(n_rows(maj_train)), np.ones(n_rows(min_train))]
    )
    forest = fit_forest(
        X_train, y_train, forest_config or ForestConfig(), rng_seed=derive_seed(rng_seed, "forest")
    )
    return {
        "synthetic": forest_predict_proba(forest, encoder.transform(synthetic)),
        "minority_holdout": forest_predict_proba(forest, encoder.transform(min_hold)),
        "majority_holdout": forest_predict_proba(forest, encoder.transform(maj_hold)),
    }


@dataclass
class DiagnosticsReport:
    """All quality analyses for one synthetic batch."""

    nn_distances: dict[str, np.ndarray] = field(default_factory=dict)
    correlation: dict[str, CorrelationResult] = field(default_factory=dict)
    kde: dict[tuple[str, str], Kde2dResult] = field(default_factory=dict)
    discriminator: dict[str, np.ndarray] = field(default_factory=dict)


def build_diagnostics_report(
    table: Table,
    synthetic: Columns,
    minority: str,
    majority: str,
    rng_seed: int = 0,
    kde_pairs: tuple[tuple[str, str], ...] | None = None,
    forest_config: ForestConfig | None = None,
) -> DiagnosticsReport:
    """Run every analysis for one synthetic batch against the real table."""
    schema = table.schema
    min_rows = table.rows(table.group_indices(minority))
    maj_rows = table.rows(table.group_indices(majority))
    numeric = schema.numeric_features()
    if kde_pairs is None:
        kde_pairs = ((numeric[0], numeric[1]),) if len(numeric) >= 2 else ()

    report = DiagnosticsReport()
    report.nn_distances = {
        minority: l1_nn_distances(synthetic, min_rows, schema),
        majority: l1_nn_distances(synthetic, maj_rows, schema),
    }
    if len(numeric) >= 2:
        report.correlation = {
            minority: correlation_matrix(min_rows, numeric),
            majority: correlation_matrix(maj_rows, numeric),
            "synthetic": correlation_matrix(synthetic, numeric),
        }
    for xf, yf in kde_pairs:
        report.kde[(xf, yf)] = kde2d(
            np.asarray(synthetic[xf], dtype=float), np.asarray(synthetic[yf], dtype=float)
        )
    report.discriminator = discriminator_report(
        min_rows, maj_rows, synthetic, schema, rng_seed=rng_seed, forest_config=forest_config
    )
    return report


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in str(name))


def write_diagnostics(report: DiagnosticsReport, outdir: str | Path) -> dict:
    """Emit one CSV per analysis plus a manifest.json; returns the manifest."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files: dict[str, str] = {}

    for ref, distances in report.nn_distances.items():
        name = f"nn_distances_{_slug(ref)}.csv"
        with (outdir / name).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["distance"])
            writer.writerows([[repr(float(v))] for v in distances])
        files[f"nn_distances/{ref}"] = name

    for source, corr in report.correlation.items():
        name = f"corr_{_slug(source)}.csv"
        with (outdir / name).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["feature", *corr.features])
            for i, f in enumerate(corr.features):
                row = [f]
                for v in corr.matrix[i]:
                    row.append("" if np.isnan(v) else repr(float(v)))
                writer.writerow(row)
        files[f"correlation/{source}"] = name

    for (xf, yf), kde in report.kde.items():
        name = f"kde_{_slug(xf)}_{_slug(yf)}.csv"
        with (outdir / name).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y", "density"])
            for i, gx in enumerate(kde.x_grid):
                for j, gy in enumerate(kde.y_grid):
                    writer.writerow([repr(float(gx)), repr(float(gy)), repr(float(kde.density[i, j]))])
        files[f"kde/{xf}__{yf}"] = name

    if report.discriminator:
        name = "discriminator_probs.csv"
        with (outdir / name).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["source", "probability"])
            for source, probs in report.discriminator.items():
                for p in probs:
                    writer.writerow([source, repr(float(p))])
        files["discriminator"] = name

    manifest = {
        "files": files,
        "nn_references": sorted(report.nn_distances),
        "correlation_sources": sorted(report.correlation),
        "correlation_missing": {
            source: list(corr.missing) for source, corr in report.correlation.items()
        },
        "kde_pairs": [list(pair) for pair in report.kde],
        "discriminator_sources": sorted(report.discriminator),
        "counts": {
            "synthetic": int(len(next(iter(report.discriminator.values()))))
            if report.discriminator
            else None,
        },
    }
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    return manifest
