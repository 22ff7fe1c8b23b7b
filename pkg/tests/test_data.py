"""Ingestion, validation, and group-sampling behavior."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from groupsynth.data import (
    Encoder,
    FeatureSpec,
    Schema,
    load_schema,
    load_table,
    sample_groups,
    select_prompt_examples,
)
from groupsynth.errors import (
    BoundsViolation,
    ConfigError,
    ConstraintInfeasible,
    InsufficientGroup,
    ParseError,
    SchemaMismatch,
)

from conftest import build_table


def write_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def csv_rows(n, bad=None):
    rows = []
    for i in range(n):
        row = [30 + i % 40, 45.5, i % 2, "a", "alpha" if i % 3 else "beta", i % 2, 0]
        rows.append(row)
    if bad:
        idx, col, value = bad
        rows[idx][col] = value
    return rows


HEADER = ["age", "income", "smoker", "site", "group", "y1", "y2"]


class TestLoadTable:
    def test_valid_csv_round_trips(self, schema, tmp_path):
        path = tmp_path / "data.csv"
        write_csv(path, HEADER, csv_rows(50))
        table = load_table(path, schema)
        assert table.n_rows == 50
        assert table.column("age")[0] == 30.0
        assert table.column("site").dtype == object

    def test_missing_group_column(self, schema, tmp_path):
        path = tmp_path / "data.csv"
        header = [c for c in HEADER if c != "group"]
        write_csv(path, header, [[30, 45.5, 1, "a", 0, 1]])
        with pytest.raises(SchemaMismatch):
            load_table(path, schema)

    def test_parse_error_reports_row(self, schema, tmp_path):
        path = tmp_path / "data.csv"
        write_csv(path, HEADER, csv_rows(10, bad=(6, 0, "abc")))
        with pytest.raises(ParseError) as err:
            load_table(path, schema)
        assert err.value.row == 7
        assert err.value.column == "age"

    def test_bounds_violation(self, schema, tmp_path):
        path = tmp_path / "data.csv"
        write_csv(path, HEADER, csv_rows(5, bad=(2, 0, 180)))
        with pytest.raises(BoundsViolation):
            load_table(path, schema)

    def test_missing_cell_is_an_error(self, schema, tmp_path):
        path = tmp_path / "data.csv"
        write_csv(path, HEADER, csv_rows(5, bad=(1, 1, "")))
        with pytest.raises(ParseError):
            load_table(path, schema)

    def test_unknown_category(self, schema, tmp_path):
        path = tmp_path / "data.csv"
        write_csv(path, HEADER, csv_rows(5, bad=(0, 3, "z")))
        with pytest.raises(BoundsViolation):
            load_table(path, schema)

    def test_row_order_preserved(self, schema, tmp_path):
        path = tmp_path / "data.csv"
        rows = csv_rows(20)
        write_csv(path, HEADER, rows)
        table = load_table(path, schema)
        assert list(table.column("age")) == [float(r[0]) for r in rows]


class TestSchema:
    def test_duplicate_feature_rejected(self):
        with pytest.raises(ConfigError):
            Schema(
                features=(FeatureSpec("x", "numeric"), FeatureSpec("x", "numeric")),
                group_column="g",
                group_labels=("a", "b"),
                outcomes=("y",),
            )

    def test_outcome_among_features_rejected(self):
        with pytest.raises(ConfigError):
            Schema(
                features=(FeatureSpec("y", "numeric"),),
                group_column="g",
                group_labels=("a", "b"),
                outcomes=("y",),
            )

    def test_bad_bounds(self):
        with pytest.raises(ConfigError):
            FeatureSpec("x", "numeric", bounds=(2.0, 1.0))

    def test_schema_json_round_trip(self, schema, tmp_path):
        from groupsynth.data import schema_to_dict
        import json

        path = tmp_path / "schema.json"
        path.write_text(json.dumps(schema_to_dict(schema)), encoding="utf-8")
        assert load_schema(path) == schema


class TestSampleGroups:
    def test_paper_sized_split(self, schema):
        table = build_table(schema, n_alpha=5000, n_beta=800, seed=1)
        sample = sample_groups(table, "alpha", "beta", 1000, 100, 20, rng_seed=9)
        assert len(sample.majority_idx) == 1000
        assert len(sample.minority_idx) == 100
        assert len(sample.prompt_idx) == 20
        assert len(sample.holdout_idx) == 5800 - 1120

    @pytest.mark.parametrize("n_min", [50, 200])
    def test_sensitivity_sizes_accepted(self, schema, n_min):
        table = build_table(schema, n_alpha=2000, n_beta=400, seed=2)
        sample = sample_groups(table, "alpha", "beta", 500, n_min, 20, rng_seed=4)
        assert len(sample.minority_idx) == n_min

    def test_insufficient_group(self, schema):
        table = build_table(schema, n_alpha=500, n_beta=90, seed=5)
        with pytest.raises(InsufficientGroup) as err:
            sample_groups(table, "alpha", "beta", 100, 100, 0, rng_seed=0)
        assert err.value.group == "beta"
        assert err.value.available == 90

    def test_prompt_rows_disjoint_from_training(self, schema, table):
        sample = sample_groups(table, "alpha", "beta", 100, 50, 10, rng_seed=7)
        assert not set(sample.prompt_idx) & set(sample.minority_idx)
        assert not set(sample.prompt_idx) & set(sample.majority_idx)

    def test_partition_is_exact(self, schema, table):
        sample = sample_groups(table, "alpha", "beta", 100, 50, 10, rng_seed=7)
        pieces = [sample.majority_idx, sample.minority_idx, sample.prompt_idx, sample.holdout_idx]
        union = np.concatenate(pieces)
        assert len(union) == len(set(union.tolist())) == table.n_rows

    @given(
        n_maj=st.integers(5, 120),
        n_min=st.integers(2, 60),
        k=st.integers(0, 20),
        seed=st.integers(0, 2**32),
        pool=st.sampled_from(["minority", "all"]),
    )
    def test_partition_property(self, n_maj, n_min, k, seed, pool):
        schema = Schema(
            features=(FeatureSpec("age", "numeric", bounds=(0.0, 100.0)),
                      FeatureSpec("income", "numeric"),
                      FeatureSpec("smoker", "binary"),
                      FeatureSpec("site", "categorical", categories=("a", "b", "c"))),
            group_column="group",
            group_labels=("alpha", "beta"),
            outcomes=("y1", "y2"),
        )
        table = build_table(schema, n_alpha=150, n_beta=90, seed=11)
        if n_min + (k if pool == "minority" else 0) > 90:
            return
        sample = sample_groups(
            table, "alpha", "beta", n_maj, n_min, k, rng_seed=seed, prompt_pool=pool
        )
        pieces = [sample.majority_idx, sample.minority_idx, sample.prompt_idx, sample.holdout_idx]
        union = np.concatenate(pieces)
        assert len(union) == table.n_rows
        assert len(set(union.tolist())) == table.n_rows

    def test_deterministic_under_seed(self, schema, table):
        a = sample_groups(table, "alpha", "beta", 120, 60, 15, rng_seed=42)
        b = sample_groups(table, "alpha", "beta", 120, 60, 15, rng_seed=42)
        for field in ("majority_idx", "minority_idx", "prompt_idx", "holdout_idx"):
            assert np.array_equal(getattr(a, field), getattr(b, field))

    def test_different_seed_differs(self, schema, table):
        a = sample_groups(table, "alpha", "beta", 120, 60, 15, rng_seed=42)
        b = sample_groups(table, "alpha", "beta", 120, 60, 15, rng_seed=43)
        assert not np.array_equal(a.majority_idx, b.majority_idx)

    def test_generic_pool_draws_from_both_groups(self, schema):
        # with k close to the leftover pool, examples must span groups
        table = build_table(schema, n_alpha=60, n_beta=40, seed=13)
        sample = sample_groups(
            table, "alpha", "beta", 55, 35, 10, rng_seed=3, prompt_pool="all"
        )
        groups = set(table.column("group")[sample.prompt_idx].tolist())
        assert groups == {"alpha", "beta"}


class TestSelectPromptExamples:
    def test_first_draw_kept_when_feasible(self, schema):
        table = build_table(schema, n_alpha=10, n_beta=120, seed=8, y_rate=0.5)
        pool = table.group_indices("beta")
        rng = np.random.default_rng(5)
        expected = np.sort(rng.choice(pool, size=12, replace=False))
        got = select_prompt_examples(table, pool, ("y1", "y2"), 12, rng_seed=5)
        if all(table.column(c)[expected].any() for c in ("y1", "y2")):
            assert np.array_equal(got, expected)

    def test_rare_positive_simulation(self, schema):
        # 3 positives among 111 rows: every returned sample still satisfies the
        # constraint, across 1000 independent seeds.
        rng = np.random.default_rng(0)
        n = 111
        y1 = np.zeros(n, dtype=np.int64)
        y1[rng.choice(n, 3, replace=False)] = 1
        columns = {
            "age": rng.uniform(20, 80, n),
            "income": rng.normal(50, 10, n),
            "smoker": rng.integers(0, 2, n),
            "site": rng.choice(np.array(["a", "b", "c"], dtype=object), n),
            "group": np.array(["beta"] * n, dtype=object),
            "y1": y1,
            "y2": rng.integers(0, 2, n),
        }
        from groupsynth.data import make_table

        schema2 = Schema(
            features=schema.features,
            group_column="group",
            group_labels=("alpha", "beta"),
            outcomes=("y1", "y2"),
        )
        table = make_table(schema2, columns)
        pool = np.arange(n)
        for seed in range(1000):
            drawn = select_prompt_examples(table, pool, ("y1", "y2"), 20, rng_seed=seed)
            assert table.column("y1")[drawn].any()
            assert table.column("y2")[drawn].any()
            assert len(drawn) == 20

    def test_zero_positives_infeasible(self, schema):
        table = build_table(schema, n_alpha=10, n_beta=50, seed=2, y_rate=0.4)
        pool = table.group_indices("beta")
        zeroed = {name: np.array(col) for name, col in table.columns.items()}
        zeroed["y2"] = np.zeros(table.n_rows, dtype=np.int64)
        from groupsynth.data import make_table

        table0 = make_table(table.schema, zeroed)
        with pytest.raises(ConstraintInfeasible):
            select_prompt_examples(table0, pool, ("y1", "y2"), 10, rng_seed=0)


class TestEncoder:
    def test_layout_and_group_indicator(self, schema, table):
        enc = Encoder(schema, include_group=True, minority_label="beta")
        assert enc.column_names == ("age", "income", "smoker", "site=b", "site=c", "group_indicator")
        X = enc.transform(table.rows(np.arange(4)))
        assert X.shape == (4, 6)
        site = table.column("site")[:4]
        assert np.array_equal(X[:, 3], (site == "b").astype(float))

    def test_fixed_label_indicator(self, schema, table):
        enc = Encoder(schema, include_group=True, minority_label="beta")
        X = enc.transform(table.rows(np.arange(3)), group_label="beta")
        assert np.all(X[:, -1] == 1.0)
        X = enc.transform(table.rows(np.arange(3)), group_label="alpha")
        assert np.all(X[:, -1] == 0.0)

    def test_no_group_column(self, schema, table):
        enc = Encoder(schema, include_group=False)
        X = enc.transform(table.rows(np.arange(3)))
        assert X.shape == (3, 5)
