"""Dataset schema, CSV ingestion, model encoding, and group sampling.

A :class:`Table` stores validated columns (numeric, binary, categorical) plus
one group column and one or more binary outcome columns. Tables are immutable
after construction: the backing arrays are marked read-only and every sampling
operation is a pure function of (table, parameters, seed).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BoundsViolation,
    ConfigError,
    ConstraintInfeasible,
    InsufficientGroup,
    ParseError,
    SchemaMismatch,
)

NUMERIC = "numeric"
BINARY = "binary"
CATEGORICAL = "categorical"
_KINDS = (NUMERIC, BINARY, CATEGORICAL)


@dataclass(frozen=True)
class FeatureSpec:
    """One predictor column: its kind plus the domain it must live in."""

    name: str
    kind: str
    bounds: tuple[float, float] | None = None
    categories: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.name:
            raise ConfigError("feature name must be non-empty")
        if self.kind not in _KINDS:
            raise ConfigError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if self.bounds is not None:
            if self.kind != NUMERIC:
                raise ConfigError(f"feature {self.name!r}: bounds only apply to numeric features")
            lo, hi = self.bounds
            if not (lo <= hi):
                raise ConfigError(f"feature {self.name!r}: bounds must satisfy min <= max")
        if self.kind == CATEGORICAL:
            if not self.categories or len(self.categories) < 2:
                raise ConfigError(f"feature {self.name!r}: categorical needs >= 2 categories")
            if len(set(self.categories)) != len(self.categories):
                raise ConfigError(f"feature {self.name!r}: duplicate categories")
        elif self.categories is not None:
            raise ConfigError(f"feature {self.name!r}: categories only apply to categorical features")


@dataclass(frozen=True)
class Schema:
    """Column layout of a dataset: features, the group column, and outcomes."""

    features: tuple[FeatureSpec, ...]
    group_column: str
    group_labels: tuple[str, ...]
    outcomes: tuple[str, ...]

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate feature names in schema")
        if len(self.group_labels) < 2:
            raise ConfigError("schema needs >= 2 group labels")
        if len(set(self.group_labels)) != len(self.group_labels):
            raise ConfigError("duplicate group labels")
        if not self.outcomes:
            raise ConfigError("schema needs >= 1 outcome column")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise ConfigError("duplicate outcome names")
        reserved = {self.group_column, *self.outcomes}
        if overlap := reserved & set(names):
            raise ConfigError(f"columns {sorted(overlap)} listed both as features and group/outcome")
        if self.group_column in self.outcomes:
            raise ConfigError("group column cannot also be an outcome")

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    @property
    def column_names(self) -> tuple[str, ...]:
        """All columns in canonical order: features, group, outcomes."""
        return (*self.feature_names, self.group_column, *self.outcomes)

    def feature(self, name: str) -> FeatureSpec:
        for f in self.features:
            if f.name == name:
                return f
        raise KeyError(name)

    def numeric_features(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features if f.kind == NUMERIC)


def load_schema(path: str | Path) -> Schema:
    """Read a schema JSON document (keys: features, group_column, group_labels, outcomes)."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return schema_from_dict(doc)


def schema_from_dict(doc: dict) -> Schema:
    try:
        features = tuple(
            FeatureSpec(
                name=f["name"],
                kind=f["kind"],
                bounds=tuple(f["bounds"]) if f.get("bounds") is not None else None,
                categories=tuple(f["categories"]) if f.get("categories") is not None else None,
            )
            for f in doc["features"]
        )
        return Schema(
            features=features,
            group_column=doc["group_column"],
            group_labels=tuple(doc["group_labels"]),
            outcomes=tuple(doc["outcomes"]),
        )
    except KeyError as exc:
        raise ConfigError(f"schema document missing key {exc}") from exc


def schema_to_dict(schema: Schema) -> dict:
    return {
        "features": [
            {
                "name": f.name,
                "kind": f.kind,
                **({"bounds": list(f.bounds)} if f.bounds else {}),
                **({"categories": list(f.categories)} if f.categories else {}),
            }
            for f in schema.features
        ],
        "group_column": schema.group_column,
        "group_labels": list(schema.group_labels),
        "outcomes": list(schema.outcomes),
    }


Columns = dict[str, np.ndarray]


def _freeze(columns: Columns) -> Columns:
    for arr in columns.values():
        arr.setflags(write=False)
    return columns


def n_rows(columns: Columns) -> int:
    return len(next(iter(columns.values()))) if columns else 0


def take(columns: Columns, indices: np.ndarray) -> Columns:
    return {name: arr[indices] for name, arr in columns.items()}


@dataclass(frozen=True)
class Table:
    """Validated columnar dataset bound to its schema."""

    schema: Schema
    columns: Columns

    @property
    def n_rows(self) -> int:
        return n_rows(self.columns)

    def column(self, name: str) -> np.ndarray:
        return self.columns[name]

    def group_indices(self, label: str) -> np.ndarray:
        return np.flatnonzero(self.columns[self.schema.group_column] == label)

    def rows(self, indices: np.ndarray) -> Columns:
        return take(self.columns, indices)

    def slice(self, indices: np.ndarray) -> "Table":
        return Table(self.schema, _freeze(self.rows(indices)))


def make_table(schema: Schema, columns: Columns, validate: bool = True) -> Table:
    """Build a Table from column arrays, optionally re-running domain checks."""
    missing = set(schema.column_names) - set(columns)
    if missing:
        raise SchemaMismatch(f"missing columns: {sorted(missing)}")
    extra = set(columns) - set(schema.column_names)
    if extra:
        raise SchemaMismatch(f"unexpected columns: {sorted(extra)}")
    lengths = {len(v) for v in columns.values()}
    if len(lengths) > 1:
        raise SchemaMismatch(f"column lengths differ: {sorted(lengths)}")
    if validate:
        _validate_columns(schema, columns)
    return Table(schema, _freeze({name: np.asarray(columns[name]) for name in schema.column_names}))


def _validate_columns(schema: Schema, columns: Columns) -> None:
    for f in schema.features:
        col = columns[f.name]
        if f.kind == NUMERIC:
            values = np.asarray(col, dtype=float)
            if not np.all(np.isfinite(values)):
                raise BoundsViolation(f"column {f.name!r} contains non-finite values")
            if f.bounds is not None:
                lo, hi = f.bounds
                if np.any(values < lo) or np.any(values > hi):
                    raise BoundsViolation(f"column {f.name!r} outside bounds [{lo}, {hi}]")
        elif f.kind == BINARY:
            values = np.asarray(col)
            if not np.isin(values, (0, 1)).all():
                raise BoundsViolation(f"binary column {f.name!r} contains values outside {{0, 1}}")
        else:
            known = np.isin(np.asarray(col, dtype=object), f.categories)
            if not known.all():
                bad = np.asarray(col, dtype=object)[~known][0]
                raise BoundsViolation(f"categorical column {f.name!r} contains unknown value {bad!r}")
    group = np.asarray(columns[schema.group_column], dtype=object)
    if not np.isin(group, schema.group_labels).all():
        bad = group[~np.isin(group, schema.group_labels)][0]
        raise BoundsViolation(f"group column contains unknown label {bad!r}")
    for name in schema.outcomes:
        if not np.isin(np.asarray(columns[name]), (0, 1)).all():
            raise BoundsViolation(f"outcome column {name!r} contains values outside {{0, 1}}")


def load_table(path: str | Path, schema: Schema) -> Table:
    """Ingest a CSV file (UTF-8, header row, '.' decimal separator).

    Rows are validated cell by cell; the first offending cell aborts ingestion
    with its 1-based data row index and column name. Missing values are an
    ingestion error, not an imputation case.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{path}: empty file, header row required") from None
        expected = set(schema.column_names)
        got = set(header)
        if got != expected:
            missing, extra = sorted(expected - got), sorted(got - expected)
            parts = []
            if missing:
                parts.append(f"missing columns {missing}")
            if extra:
                parts.append(f"unexpected columns {extra}")
            raise SchemaMismatch(f"{path}: {'; '.join(parts)}")
        if len(header) != len(set(header)):
            raise SchemaMismatch(f"{path}: duplicate header columns")
        raw: dict[str, list] = {name: [] for name in header}
        for i, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise ParseError(i, "<row>", f"expected {len(header)} cells, got {len(row)}")
            for name, cell in zip(header, row):
                raw[name].append(cell)

    n = len(raw[header[0]])
    columns: Columns = {}
    for f in schema.features:
        columns[f.name] = _parse_feature(raw[f.name], f)
    columns[schema.group_column] = _parse_group(raw[schema.group_column], schema)
    for name in schema.outcomes:
        columns[name] = _parse_binary(raw[name], name)
    table = Table(schema, _freeze({name: columns[name] for name in schema.column_names}))
    assert table.n_rows == n
    return table


def _parse_feature(cells: list[str], f: FeatureSpec) -> np.ndarray:
    if f.kind == NUMERIC:
        values = np.empty(len(cells), dtype=float)
        for i, cell in enumerate(cells, start=1):
            text = cell.strip()
            if not text:
                raise ParseError(i, f.name, "missing value")
            try:
                values[i - 1] = float(text)
            except ValueError:
                raise ParseError(i, f.name, f"not a number: {cell!r}") from None
        if not np.all(np.isfinite(values)):
            i = int(np.flatnonzero(~np.isfinite(values))[0]) + 1
            raise ParseError(i, f.name, "non-finite value")
        if f.bounds is not None:
            lo, hi = f.bounds
            bad = np.flatnonzero((values < lo) | (values > hi))
            if bad.size:
                i = int(bad[0]) + 1
                raise BoundsViolation(
                    f"row {i}, column {f.name!r}: value {values[i - 1]} outside bounds [{lo}, {hi}]"
                )
        return values
    if f.kind == BINARY:
        return _parse_binary(cells, f.name)
    values = np.array([c.strip() for c in cells], dtype=object)
    known = np.isin(values, f.categories)
    if not known.all():
        i = int(np.flatnonzero(~known)[0]) + 1
        raise BoundsViolation(f"row {i}, column {f.name!r}: unknown category {values[i - 1]!r}")
    return values


def _parse_binary(cells: list[str], name: str) -> np.ndarray:
    values = np.empty(len(cells), dtype=np.int64)
    for i, cell in enumerate(cells, start=1):
        text = cell.strip()
        if not text:
            raise ParseError(i, name, "missing value")
        try:
            v = float(text)
        except ValueError:
            raise ParseError(i, name, f"not a number: {cell!r}") from None
        if v not in (0.0, 1.0):
            raise BoundsViolation(f"row {i}, column {name!r}: value {cell!r} outside {{0, 1}}")
        values[i - 1] = int(v)
    return values


def _parse_group(cells: list[str], schema: Schema) -> np.ndarray:
    values = np.array([c.strip() for c in cells], dtype=object)
    known = np.isin(values, schema.group_labels)
    if not known.all():
        i = int(np.flatnonzero(~known)[0]) + 1
        raise BoundsViolation(
            f"row {i}, column {schema.group_column!r}: unknown group label {values[i - 1]!r}"
        )
    return values


def write_table_csv(table_or_columns, path: str | Path, schema: Schema | None = None) -> None:
    """Write a table (or raw columns with a schema) back to CSV."""
    if isinstance(table_or_columns, Table):
        schema = table_or_columns.schema
        columns = table_or_columns.columns
    else:
        if schema is None:
            raise ValueError("schema required when writing raw columns")
        columns = table_or_columns
    names = [c for c in schema.column_names if c in columns]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(n_rows(columns)):
            writer.writerow([_csv_cell(columns[name][i]) for name in names])


def _csv_cell(value) -> str:
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return str(int(value)) if value.is_integer() else repr(value)
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    return str(value)


# -- model encoding -----------------------------------------------------------
#
# Categorical features are one-hot encoded with the first category dropped;
# the binary group indicator (1 = minority) is appended last when requested.

@dataclass(frozen=True)
class Encoder:
    """Maps schema-space rows to the design matrix used for model fitting."""

    schema: Schema
    include_group: bool
    minority_label: str | None = None
    column_names: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        names: list[str] = []
        for f in self.schema.features:
            if f.kind == CATEGORICAL:
                names.extend(f"{f.name}={c}" for c in f.categories[1:])
            else:
                names.append(f.name)
        if self.include_group:
            if self.minority_label is None:
                raise ConfigError("group-indicator encoding needs the minority label")
            names.append("group_indicator")
        object.__setattr__(self, "column_names", tuple(names))

    @property
    def width(self) -> int:
        return len(self.column_names)

    def transform(self, columns: Columns, group_label: str | None = None) -> np.ndarray:
        """Encode rows to a float matrix.

        ``group_label`` fixes the indicator for a single-group row block;
        when omitted and the rows carry the group column, the indicator is
        derived per row.
        """
        n = n_rows(columns)
        out = np.empty((n, self.width), dtype=float)
        j = 0
        for f in self.schema.features:
            if f.kind == CATEGORICAL:
                col = np.asarray(columns[f.name], dtype=object)
                for c in f.categories[1:]:
                    out[:, j] = col == c
                    j += 1
            else:
                out[:, j] = np.asarray(columns[f.name], dtype=float)
                j += 1
        if self.include_group:
            if group_label is not None:
                out[:, j] = 1.0 if group_label == self.minority_label else 0.0
            elif self.schema.group_column in columns:
                out[:, j] = columns[self.schema.group_column] == self.minority_label
            else:
                raise ConfigError("rows carry no group column; pass group_label")
        return out


# -- sampling -----------------------------------------------------------------

@dataclass(frozen=True)
class GroupSample:
    """One experiment's sampled row partition, stored as source-row indices."""

    table: Table
    majority_label: str
    minority_label: str
    majority_idx: np.ndarray
    minority_idx: np.ndarray
    prompt_idx: np.ndarray
    holdout_idx: np.ndarray
    seed: int

    @property
    def majority_rows(self) -> Columns:
        return self.table.rows(self.majority_idx)

    @property
    def minority_rows(self) -> Columns:
        return self.table.rows(self.minority_idx)

    @property
    def prompt_example_rows(self) -> Columns:
        return self.table.rows(self.prompt_idx)

    @property
    def holdout_rows(self) -> Columns:
        return self.table.rows(self.holdout_idx)


def sample_groups(
    table: Table,
    majority: str,
    minority: str,
    n_maj: int,
    n_min: int,
    k_prompt: int,
    rng_seed: int,
    prompt_pool: str = "minority",
    outcomes: tuple[str, ...] | None = None,
    max_redraws: int = 1000,
) -> GroupSample:
    """Sample the majority/minority training rows, prompt examples, and holdout.

    All draws are uniform without replacement. Prompt examples come from the
    remaining minority rows (``prompt_pool="minority"``) or from all remaining
    rows of the table (``prompt_pool="all"``, the group-generic convention).
    When ``outcomes`` is given, the prompt examples are redrawn until every
    listed outcome has at least one positive among them. The holdout is the
    exact complement of the three sampled sets.
    """
    if prompt_pool not in ("minority", "all"):
        raise ValueError(f"unknown prompt_pool {prompt_pool!r}")
    for label in (majority, minority):
        if label not in table.schema.group_labels:
            raise ConfigError(f"group label {label!r} not in schema")
    if majority == minority:
        raise ConfigError("majority and minority labels must differ")

    rng = np.random.default_rng(rng_seed)
    maj_pool = table.group_indices(majority)
    min_pool = table.group_indices(minority)
    if len(maj_pool) < n_maj:
        raise InsufficientGroup(majority, n_maj, len(maj_pool))
    min_needed = n_min + (k_prompt if prompt_pool == "minority" else 0)
    if len(min_pool) < min_needed:
        raise InsufficientGroup(minority, min_needed, len(min_pool))

    maj_idx = np.sort(rng.choice(maj_pool, size=n_maj, replace=False))
    min_idx = np.sort(rng.choice(min_pool, size=n_min, replace=False))

    if prompt_pool == "minority":
        pool = np.setdiff1d(min_pool, min_idx)
    else:
        drawn = np.concatenate([maj_idx, min_idx])
        pool = np.setdiff1d(np.arange(table.n_rows), drawn)
    if k_prompt > 0:
        if len(pool) < k_prompt:
            raise InsufficientGroup(f"prompt pool ({prompt_pool})", k_prompt, len(pool))
        if outcomes:
            prompt_idx = select_prompt_examples(
                table, pool, outcomes, k_prompt, rng_seed=rng, max_redraws=max_redraws
            )
        else:
            prompt_idx = np.sort(rng.choice(pool, size=k_prompt, replace=False))
    else:
        prompt_idx = np.empty(0, dtype=maj_idx.dtype)

    used = np.concatenate([maj_idx, min_idx, prompt_idx])
    holdout_idx = np.setdiff1d(np.arange(table.n_rows), used)
    return GroupSample(
        table=table,
        majority_label=majority,
        minority_label=minority,
        majority_idx=maj_idx,
        minority_idx=min_idx,
        prompt_idx=prompt_idx,
        holdout_idx=holdout_idx,
        seed=rng_seed,
    )


def select_prompt_examples(
    table: Table,
    pool: np.ndarray,
    outcomes: tuple[str, ...],
    k: int,
    rng_seed: int | np.random.Generator,
    max_redraws: int = 1000,
) -> np.ndarray:
    """Draw k rows from ``pool`` so that every outcome has >= 1 positive.

    The whole k-sample is redrawn until the constraint is met, up to
    ``max_redraws`` attempts. Outcomes with zero positives anywhere in the
    pool make the constraint infeasible up front.
    """
    if k > len(pool):
        raise InsufficientGroup("prompt pool", k, len(pool))
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    for name in outcomes:
        if name not in table.schema.outcomes:
            raise ConfigError(f"unknown outcome {name!r}")
        if not table.columns[name][pool].any():
            raise ConstraintInfeasible(
                f"outcome {name!r} has no positive rows in the candidate pool"
            )
    outcome_cols = [table.columns[name] for name in outcomes]
    for _ in range(max_redraws):
        drawn = np.sort(rng.choice(pool, size=k, replace=False))
        if all(col[drawn].any() for col in outcome_cols):
            return drawn
    raise ConstraintInfeasible(
        f"no draw of {k} rows satisfied the positive-example constraint "
        f"within {max_redraws} redraws"
    )
