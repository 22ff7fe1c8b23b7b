"""Quality diagnostics: NN distances, correlations, KDE, discriminator."""

from __future__ import annotations

import json

import numpy as np
import pytest

from groupsynth.data import FeatureSpec, Schema, make_table
from groupsynth.diagnostics import (
    build_diagnostics_report,
    correlation_matrix,
    discriminator_report,
    kde2d,
    l1_nn_distances,
    write_diagnostics,
)
from groupsynth.errors import EmptyReference, TooFewPoints, TooFewRows
from groupsynth.fixture import make_fixture, sample_group_rows

from conftest import build_table, two_group_fixture_spec


def l1_nn_bruteforce(synthetic, reference, schema):
    """O(n*m) restatement of the distance contract, row by row."""
    bounds = {}
    for f in schema.features:
        if f.kind != "categorical":
            ref = np.asarray(reference[f.name], dtype=float)
            lo, hi = float(ref.min()), float(ref.max())
            bounds[f.name] = (lo, (hi - lo) if hi > lo else 1.0)
    m = len(next(iter(reference.values())))
    n = len(next(iter(synthetic.values())))
    out = np.empty(n)
    for i in range(n):
        best = np.inf
        for j in range(m):
            total = 0.0
            for f in schema.features:
                if f.kind == "categorical":
                    a = synthetic[f.name][i]
                    b = reference[f.name][j]
                    block = sum(abs(float(a == c) - float(b == c)) for c in f.categories)
                    total += 0.5 * block
                else:
                    lo, span = bounds[f.name]
                    a = (float(synthetic[f.name][i]) - lo) / span
                    b = (float(reference[f.name][j]) - lo) / span
                    total += abs(a - b)
            best = min(best, total)
        out[i] = best
    return out


class TestL1NnDistances:
    def test_copied_row_has_zero_distance(self, schema, table):
        reference = table.rows(np.arange(50))
        synthetic = table.rows(np.array([7]))
        d = l1_nn_distances(synthetic, reference, schema)
        assert d[0] == 0.0

    def test_single_reference_row_is_direct_distance(self, schema, table):
        reference = table.rows(np.array([0]))
        synthetic = table.rows(np.array([1, 2]))
        got = l1_nn_distances(synthetic, reference, schema)
        expected = l1_nn_bruteforce(synthetic, reference, schema)
        assert np.allclose(got, expected, atol=1e-12)

    def test_matches_bruteforce_on_random_instances(self, schema):
        table = build_table(schema, n_alpha=40, n_beta=25, seed=51)
        synthetic = table.rows(table.group_indices("beta"))
        reference = table.rows(table.group_indices("alpha"))
        got = l1_nn_distances(synthetic, reference, schema)
        expected = l1_nn_bruteforce(synthetic, reference, schema)
        assert np.allclose(got, expected, atol=1e-10)

    def test_adding_reference_never_increases_distance(self, schema):
        table = build_table(schema, n_alpha=60, n_beta=20, seed=52)
        synthetic = table.rows(table.group_indices("beta"))
        alpha = table.group_indices("alpha")
        small = l1_nn_distances(synthetic, table.rows(alpha[:30]), schema)
        # keep the same normalization ranges: only append rows inside them
        grown_idx = np.concatenate([alpha[:30], alpha[30:31]])
        grown = l1_nn_distances(synthetic, table.rows(grown_idx), schema)
        lo30 = {f.name: np.asarray(table.rows(alpha[:30])[f.name], dtype=float)
                for f in schema.features if f.kind != "categorical"}
        extra = table.rows(alpha[30:31])
        inside = all(
            lo30[name].min() <= float(extra[name][0]) <= lo30[name].max()
            for name in lo30
        )
        if inside:
            assert np.all(grown <= small + 1e-12)

    def test_empty_reference(self, schema, table):
        synthetic = table.rows(np.arange(3))
        empty = table.rows(np.arange(0))
        with pytest.raises(EmptyReference):
            l1_nn_distances(synthetic, empty, schema)

    def test_category_mismatch_costs_one(self):
        schema = Schema(
            features=(FeatureSpec("site", "categorical", categories=("a", "b", "c")),),
            group_column="g",
            group_labels=("x", "y"),
            outcomes=("y1",),
        )
        reference = {
            "site": np.array(["a", "b"], dtype=object),
            "g": np.array(["x", "x"], dtype=object),
            "y1": np.array([0, 1]),
        }
        synthetic = {"site": np.array(["c"], dtype=object), "y1": np.array([0])}
        d = l1_nn_distances(synthetic, reference, schema)
        assert d[0] == 1.0


class TestCorrelationMatrix:
    def test_diagonal_is_one(self, schema, table):
        result = correlation_matrix(table.columns, ("age", "income"))
        assert result.matrix[0, 0] == 1.0
        assert result.matrix[1, 1] == 1.0

    def test_perfect_linear_relation(self):
        x = np.linspace(0, 10, 50)
        result = correlation_matrix({"x": x, "y": 2 * x}, ("x", "y"))
        assert result.matrix[0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_constant_column_flagged_missing(self):
        x = np.linspace(0, 1, 30)
        result = correlation_matrix({"x": x, "c": np.full(30, 5.0)}, ("x", "c"))
        assert result.missing == ("c",)
        assert np.isnan(result.matrix[0, 1])
        assert np.isnan(result.matrix[1, 1])
        assert result.matrix[0, 0] == 1.0

    def test_symmetry(self, schema):
        table = build_table(schema, n_alpha=200, n_beta=10, seed=53)
        result = correlation_matrix(table.columns, ("age", "income"))
        assert np.all(np.abs(result.matrix - result.matrix.T) <= 1e-12)

    def test_too_few_rows(self):
        with pytest.raises(TooFewRows):
            correlation_matrix({"x": np.array([1.0])}, ("x",))


class TestKde2d:
    def test_mass_close_to_one(self):
        rng = np.random.default_rng(60)
        x = rng.normal(0, 1, 400)
        y = rng.normal(0, 2, 400)
        result = kde2d(x, y)
        dx = result.x_grid[1] - result.x_grid[0]
        dy = result.y_grid[1] - result.y_grid[0]
        mass = result.density.sum() * dx * dy
        assert 0.95 <= mass <= 1.0

    def test_mirrored_data_mirrors_grid(self):
        rng = np.random.default_rng(61)
        x = rng.normal(3, 1, 200)
        y = rng.normal(-1, 1, 200)
        a = kde2d(x, y, grid_size=50)
        b = kde2d(-x, y, grid_size=50)
        assert np.allclose(b.x_grid, -a.x_grid[::-1], atol=1e-12)
        assert np.allclose(b.density, a.density[::-1, :], atol=1e-12)

    def test_tight_cluster_peaks_at_nearest_node(self):
        # a cluster much tighter than the grid: density max lands on the node
        # nearest the cluster's sample mean
        rng = np.random.default_rng(62)
        cx, cy = 0.31, 0.57
        x = np.concatenate([cx + rng.normal(0, 1e-6, 98), [cx - 1.0, cx + 1.0]])
        y = np.concatenate([cy + rng.normal(0, 1e-6, 98), [cy - 1.0, cy + 1.0]])
        result = kde2d(x, y, grid_size=41)
        i, j = np.unravel_index(np.argmax(result.density), result.density.shape)
        cluster_x = x[:98].mean()
        cluster_y = y[:98].mean()
        assert i == int(np.argmin(np.abs(result.x_grid - cluster_x)))
        assert j == int(np.argmin(np.abs(result.y_grid - cluster_y)))

    def test_scott_bandwidth(self):
        rng = np.random.default_rng(63)
        x = rng.normal(0, 1, 300)
        y = rng.normal(0, 1, 300)
        result = kde2d(x, y)
        assert result.bandwidth_x == pytest.approx(np.std(x, ddof=1) * 300 ** (-1 / 6))

    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            kde2d(np.array([1.0]), np.array([2.0]))

    def test_grid_margin(self):
        x = np.array([0.0, 10.0, 5.0])
        y = np.array([0.0, 1.0, 0.5])
        result = kde2d(x, y, grid_size=11)
        assert result.x_grid[0] == pytest.approx(-1.0)
        assert result.x_grid[-1] == pytest.approx(11.0)


def separable_table(schema, n=250, seed=70, gap=8.0):
    rng = np.random.default_rng(seed)
    n_each = n
    age_a = rng.normal(35, 2, n_each)
    age_b = rng.normal(35 + gap * 2, 2, n_each)
    columns = {
        "age": np.concatenate([age_a, age_b]),
        "income": np.concatenate([rng.normal(30, 2, n_each), rng.normal(70, 2, n_each)]),
        "smoker": rng.integers(0, 2, 2 * n_each),
        "site": rng.choice(np.array(["a", "b", "c"], dtype=object), 2 * n_each),
        "group": np.array(["alpha"] * n_each + ["beta"] * n_each, dtype=object),
        "y1": rng.integers(0, 2, 2 * n_each),
        "y2": rng.integers(0, 2, 2 * n_each),
    }
    return make_table(schema, columns)


class TestDiscriminatorReport:
    def test_separable_groups(self, schema):
        table = separable_table(schema)
        minority = table.rows(table.group_indices("beta"))
        majority = table.rows(table.group_indices("alpha"))
        synthetic = {k: v[:50] for k, v in minority.items() if k != "group"}
        probs = discriminator_report(minority, majority, synthetic, schema, rng_seed=1)
        assert probs["majority_holdout"].mean() <= 0.2
        assert probs["minority_holdout"].mean() >= 0.8

    def test_oracle_synthetic_matches_minority(self, schema):
        spec = two_group_fixture_spec(schema, n_alpha=400, n_beta=400)
        table = make_fixture(spec, rng_seed=2)
        minority = table.rows(table.group_indices("beta"))
        majority = table.rows(table.group_indices("alpha"))
        synthetic = sample_group_rows(spec, "beta", 300, rng_seed=3)
        probs = discriminator_report(minority, majority, synthetic, schema, rng_seed=4)
        gap = abs(probs["synthetic"].mean() - probs["minority_holdout"].mean())
        assert gap <= 0.1

    def test_copied_majority_scores_like_majority(self, schema):
        table = separable_table(schema, seed=71)
        minority = table.rows(table.group_indices("beta"))
        majority = table.rows(table.group_indices("alpha"))
        synthetic = {k: np.array(v) for k, v in majority.items() if k != "group"}
        probs = discriminator_report(minority, majority, synthetic, schema, rng_seed=5)
        gap = abs(probs["synthetic"].mean() - probs["majority_holdout"].mean())
        assert gap <= 0.05

    def test_deterministic_under_seed(self, schema):
        table = separable_table(schema, seed=72, gap=1.0)
        minority = table.rows(table.group_indices("beta"))
        majority = table.rows(table.group_indices("alpha"))
        synthetic = {k: v[:40] for k, v in minority.items() if k != "group"}
        a = discriminator_report(minority, majority, synthetic, schema, rng_seed=6)
        b = discriminator_report(minority, majority, synthetic, schema, rng_seed=6)
        for key in a:
            assert np.array_equal(a[key], b[key])

    def test_too_few_rows(self, schema, table):
        minority = table.rows(table.group_indices("beta")[:10])
        majority = table.rows(table.group_indices("alpha"))
        with pytest.raises(TooFewRows):
            discriminator_report(minority, majority, minority, schema, rng_seed=0)


class TestReportEmission:
    def test_files_and_manifest(self, schema, tmp_path):
        spec = two_group_fixture_spec(schema, n_alpha=300, n_beta=200)
        table = make_fixture(spec, rng_seed=7)
        synthetic = sample_group_rows(spec, "beta", 80, rng_seed=8)
        report = build_diagnostics_report(
            table, synthetic, minority="beta", majority="alpha", rng_seed=9,
            kde_pairs=(("age", "income"),),
        )
        manifest = write_diagnostics(report, tmp_path)
        expected_files = {
            "nn_distances_beta.csv",
            "nn_distances_alpha.csv",
            "corr_beta.csv",
            "corr_alpha.csv",
            "corr_synthetic.csv",
            "kde_age_income.csv",
            "discriminator_probs.csv",
            "manifest.json",
        }
        assert expected_files <= {p.name for p in tmp_path.iterdir()}
        on_disk = json.loads((tmp_path / "manifest.json").read_text())
        assert on_disk["files"] == manifest["files"]
        # kde long form: x, y, density
        header = (tmp_path / "kde_age_income.csv").read_text().splitlines()[0]
        assert header == "x,y,density"
        disc = (tmp_path / "discriminator_probs.csv").read_text().splitlines()
        assert disc[0] == "source,probability"
        assert len(disc) == 1 + 80 + len(report.discriminator["minority_holdout"]) + len(
            report.discriminator["majority_holdout"]
        )

    def test_nn_distance_vector_round_trips(self, schema, tmp_path):
        spec = two_group_fixture_spec(schema, n_alpha=120, n_beta=100)
        table = make_fixture(spec, rng_seed=10)
        synthetic = sample_group_rows(spec, "beta", 30, rng_seed=11)
        report = build_diagnostics_report(
            table, synthetic, minority="beta", majority="alpha", rng_seed=12
        )
        write_diagnostics(report, tmp_path)
        lines = (tmp_path / "nn_distances_beta.csv").read_text().splitlines()[1:]
        assert np.allclose([float(v) for v in lines], report.nn_distances["beta"])
