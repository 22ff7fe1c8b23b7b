"""Shared test fixtures: small schemas, directly-constructed tables, and
designed fixture specs."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from groupsynth.data import FeatureSpec, Schema, Table, make_table
from groupsynth.fixture import FixtureSpec, GroupSpec, OutcomeModel

settings.register_profile("suite", max_examples=25, deadline=None)
settings.load_profile("suite")


@pytest.fixture
def schema() -> Schema:
    return Schema(
        features=(
            FeatureSpec("age", "numeric", bounds=(0.0, 100.0)),
            FeatureSpec("income", "numeric"),
            FeatureSpec("smoker", "binary"),
            FeatureSpec("site", "categorical", categories=("a", "b", "c")),
        ),
        group_column="group",
        group_labels=("alpha", "beta"),
        outcomes=("y1", "y2"),
    )


def build_table(
    schema: Schema,
    n_alpha: int,
    n_beta: int,
    seed: int = 0,
    y_rate: float = 0.3,
) -> Table:
    """Random but schema-valid table, built without the fixture machinery."""
    rng = np.random.default_rng(seed)
    n = n_alpha + n_beta
    columns = {
        "age": rng.uniform(20, 80, n),
        "income": rng.normal(50.0, 12.0, n),
        "smoker": rng.integers(0, 2, n),
        "site": rng.choice(np.array(["a", "b", "c"], dtype=object), n),
        "group": np.array(["alpha"] * n_alpha + ["beta"] * n_beta, dtype=object),
        "y1": (rng.random(n) < y_rate).astype(np.int64),
        "y2": (rng.random(n) < y_rate).astype(np.int64),
    }
    return make_table(schema, columns)


@pytest.fixture
def table(schema) -> Table:
    return build_table(schema, n_alpha=220, n_beta=160, seed=3)


def two_group_fixture_spec(
    schema: Schema,
    n_alpha: int = 2000,
    n_beta: int = 600,
    beta_coefs: dict | None = None,
    alpha_coefs: dict | None = None,
    prevalence: float = 0.3,
) -> FixtureSpec:
    """Fixture spec over the shared test schema with controllable outcome models."""
    alpha_coefs = alpha_coefs if alpha_coefs is not None else {"age": 1.5}
    beta_coefs = beta_coefs if beta_coefs is not None else {"income": 1.5}

    def group(size, coefs):
        return GroupSpec(
            size=size,
            features={
                "age": {"mean": 50.0, "sd": 12.0},
                "income": {"mean": 50.0, "sd": 12.0},
                "smoker": {"p": 0.35},
                "site": {"probs": {"a": 0.5, "b": 0.3, "c": 0.2}},
            },
            correlations=(("age", "income", 0.2),),
            outcomes={
                "y1": OutcomeModel(coefficients=coefs, prevalence=prevalence),
                "y2": OutcomeModel(coefficients=coefs, prevalence=prevalence),
            },
        )

    return FixtureSpec(
        schema=schema,
        groups={"alpha": group(n_alpha, alpha_coefs), "beta": group(n_beta, beta_coefs)},
    )
