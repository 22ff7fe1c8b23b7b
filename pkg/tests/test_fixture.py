"""Calibrated fixture generation: prevalence targets, counts, determinism."""

from __future__ import annotations

import numpy as np
import pytest

from groupsynth.data import FeatureSpec, Schema
from groupsynth.errors import ConfigError
from groupsynth.fixture import (
    FixtureSpec,
    GroupSpec,
    OutcomeModel,
    fixture_spec_from_dict,
    fold_into_bounds,
    make_fixture,
    sample_group_rows,
)

from conftest import two_group_fixture_spec


def one_group_spec(schema, size=10_000, prevalence=0.10):
    return FixtureSpec(
        schema=schema,
        groups={
            "alpha": GroupSpec(
                size=size,
                features={
                    "age": {"mean": 50.0, "sd": 12.0},
                    "income": {"mean": 50.0, "sd": 12.0},
                    "smoker": {"p": 0.4},
                    "site": {"probs": {"a": 0.5, "b": 0.3, "c": 0.2}},
                },
                outcomes={
                    "y1": OutcomeModel(coefficients={"age": 1.0}, prevalence=prevalence),
                    "y2": OutcomeModel(coefficients={"age": 1.0}, prevalence=prevalence),
                },
            ),
            "beta": GroupSpec(
                size=10,
                features={
                    "age": {"mean": 50.0, "sd": 12.0},
                    "income": {"mean": 50.0, "sd": 12.0},
                    "smoker": {"p": 0.4},
                    "site": {"probs": {"a": 0.5, "b": 0.3, "c": 0.2}},
                },
                outcomes={
                    "y1": OutcomeModel(coefficients={}, prevalence=prevalence),
                    "y2": OutcomeModel(coefficients={}, prevalence=prevalence),
                },
            ),
        },
    )


class TestMakeFixture:
    def test_prevalence_calibration_monte_carlo(self, schema):
        # intercept tuned for 10%: empirical rate within +/- 1% absolute at n=10k
        spec = one_group_spec(schema, size=10_000, prevalence=0.10)
        table = make_fixture(spec, rng_seed=123)
        alpha = table.group_indices("alpha")
        rate = float(table.column("y1")[alpha].mean())
        assert abs(rate - 0.10) <= 0.01

    def test_exact_group_counts(self, schema):
        spec = two_group_fixture_spec(schema, n_alpha=2927, n_beta=215)
        table = make_fixture(spec, rng_seed=5)
        assert len(table.group_indices("alpha")) == 2927
        assert len(table.group_indices("beta")) == 215
        assert table.n_rows == 2927 + 215

    def test_identical_parameters_give_same_means(self, schema):
        # two-sample comparison: pooled feature means differ by < 3 standard errors
        spec = two_group_fixture_spec(
            schema, n_alpha=4000, n_beta=4000, alpha_coefs={"age": 1.0}, beta_coefs={"age": 1.0}
        )
        table = make_fixture(spec, rng_seed=17)
        a = table.group_indices("alpha")
        b = table.group_indices("beta")
        for feature in ("age", "income"):
            va = np.asarray(table.column(feature)[a], dtype=float)
            vb = np.asarray(table.column(feature)[b], dtype=float)
            se = np.sqrt(va.var(ddof=1) / len(va) + vb.var(ddof=1) / len(vb))
            assert abs(va.mean() - vb.mean()) < 3 * se

    def test_deterministic_under_seed(self, schema):
        spec = two_group_fixture_spec(schema, n_alpha=300, n_beta=200)
        t1 = make_fixture(spec, rng_seed=9)
        t2 = make_fixture(spec, rng_seed=9)
        for name in schema.column_names:
            assert np.array_equal(t1.column(name), t2.column(name))

    def test_prevalence_converges_with_n(self, schema):
        # Monte Carlo tolerance shrinks as 1/sqrt(n)
        errs = []
        for size in (1_000, 16_000):
            spec = one_group_spec(schema, size=size, prevalence=0.2)
            table = make_fixture(spec, rng_seed=31)
            alpha = table.group_indices("alpha")
            errs.append(abs(float(table.column("y1")[alpha].mean()) - 0.2))
        # 16x the sample: allow generous slack on the 4x error reduction
        assert errs[1] < max(errs[0], 0.02)

    def test_bounds_respected(self, schema):
        spec = one_group_spec(schema, size=5_000)
        table = make_fixture(spec, rng_seed=2)
        age = table.column("age")
        assert age.min() >= 0.0 and age.max() <= 100.0

    def test_correlation_structure_present(self, schema):
        spec = two_group_fixture_spec(schema, n_alpha=6000, n_beta=100)
        table = make_fixture(spec, rng_seed=13)
        a = table.group_indices("alpha")
        corr = np.corrcoef(table.column("age")[a], table.column("income")[a])[0, 1]
        assert 0.1 < corr < 0.3  # configured rho = 0.2

    def test_categorical_probabilities(self, schema):
        spec = one_group_spec(schema, size=20_000)
        table = make_fixture(spec, rng_seed=4)
        alpha = table.group_indices("alpha")
        site = table.column("site")[alpha]
        assert abs((site == "a").mean() - 0.5) < 0.02
        assert abs((site == "b").mean() - 0.3) < 0.02

    def test_invalid_prevalence_rejected(self):
        with pytest.raises(ConfigError):
            OutcomeModel(coefficients={}, prevalence=1.5)

    def test_invalid_size_rejected(self, schema):
        with pytest.raises(ConfigError):
            GroupSpec(size=0, features={}, outcomes={})

    def test_missing_feature_distribution_rejected(self, schema):
        with pytest.raises(ConfigError):
            FixtureSpec(
                schema=schema,
                groups={
                    "alpha": GroupSpec(
                        size=10,
                        features={"age": {"mean": 0, "sd": 1}},
                        outcomes={
                            "y1": OutcomeModel(coefficients={}),
                            "y2": OutcomeModel(coefficients={}),
                        },
                    )
                },
            )


class TestSampleGroupRows:
    def test_oracle_rows_match_fixture_distribution(self, schema):
        spec = two_group_fixture_spec(schema, n_alpha=100, n_beta=100)
        rows = sample_group_rows(spec, "beta", 10_000, rng_seed=77)
        age = rows["age"]
        se = 12.0 / np.sqrt(len(age))
        assert abs(age.mean() - 50.0) < 3 * se

    def test_outcome_model_shared_with_fixture(self, schema):
        # calibrated intercepts are seed-independent, so oracle rows and the
        # fixture table share one outcome distribution
        spec1 = two_group_fixture_spec(schema, n_alpha=100, n_beta=8000, prevalence=0.25)
        spec2 = two_group_fixture_spec(schema, n_alpha=100, n_beta=8000, prevalence=0.25)
        table = make_fixture(spec1, rng_seed=1)
        rows = sample_group_rows(spec2, "beta", 8000, rng_seed=999)
        beta_idx = table.group_indices("beta")
        rate_fixture = float(table.column("y1")[beta_idx].mean())
        rate_oracle = float(np.asarray(rows["y1"]).mean())
        assert abs(rate_fixture - rate_oracle) < 0.03

    def test_deterministic(self, schema):
        spec = two_group_fixture_spec(schema)
        a = sample_group_rows(spec, "beta", 50, rng_seed=3)
        b = sample_group_rows(spec, "beta", 50, rng_seed=3)
        for name in a:
            assert np.array_equal(a[name], b[name])


class TestFoldIntoBounds:
    def test_values_inside_untouched(self):
        v = np.array([1.0, 2.5, 4.0])
        assert np.array_equal(fold_into_bounds(v, 0.0, 5.0), v)

    def test_reflection(self):
        assert fold_into_bounds(np.array([6.0]), 0.0, 5.0)[0] == 4.0
        assert fold_into_bounds(np.array([-1.0]), 0.0, 5.0)[0] == 1.0

    def test_deep_excursion_folds_back(self):
        out = fold_into_bounds(np.array([23.0, -17.0]), 0.0, 5.0)
        assert np.all((out >= 0.0) & (out <= 5.0))


def test_fixture_spec_json_round_trip(schema):
    import json

    from groupsynth.data import schema_to_dict

    doc = {
        "schema": schema_to_dict(schema),
        "groups": {
            "alpha": {
                "size": 100,
                "features": {
                    "age": {"mean": 50, "sd": 10},
                    "income": {"mean": 50, "sd": 10},
                    "smoker": {"p": 0.5},
                    "site": {"probs": {"a": 0.4, "b": 0.4, "c": 0.2}},
                },
                "correlations": [{"a": "age", "b": "income", "rho": 0.3}],
                "outcomes": {
                    "y1": {"coefficients": {"age": 1.0}, "prevalence": 0.2},
                    "y2": {"coefficients": {}, "intercept": -1.0},
                },
            },
            "beta": {
                "size": 60,
                "features": {
                    "age": {"mean": 40, "sd": 8},
                    "income": {"mean": 55, "sd": 9},
                    "smoker": {"p": 0.3},
                    "site": {"probs": {"a": 0.2, "b": 0.5, "c": 0.3}},
                },
                "outcomes": {
                    "y1": {"coefficients": {"income": 1.0}, "prevalence": 0.3},
                    "y2": {"coefficients": {}, "prevalence": 0.1},
                },
            },
        },
    }
    spec = fixture_spec_from_dict(json.loads(json.dumps(doc)))
    table = make_fixture(spec, rng_seed=8)
    assert table.n_rows == 160
    assert spec.groups["alpha"].correlations == (("age", "income", 0.3),)
