"""Config-driven experiment orchestration.

A grid runs every (minority group, outcome, method) cell for a configured
number of repetitions. Each repetition derives its seed purely from
(master seed, cell key, repetition index), so cells can run in any order or
in parallel and still produce bit-identical results.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .augment import MethodId, assemble
from .data import Schema, Table, load_schema, load_table, sample_groups
from .errors import (
    BackendExhausted,
    ConfigError,
    ConstraintInfeasible,
    InsufficientGroup,
    SingleClass,
    SkippedCell,
    TooFewExamples,
)
from .fixture import FixtureSpec, load_fixture_spec, make_fixture
from .genclient import BackendConfig, GenerationCache, generate_to_target
from .metrics import evaluate_group
from .model import LogisticConfig, fit_logistic
from .prompt import DEFAULT_DATASET_CONTEXTS, GENERIC, GROUP_TAILORED, build_prompt
from .seeds import derive_seed

EXHAUSTED_PREFIX = "backend exhausted"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BACKEND = 2
EXIT_PARTIAL = 3


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one grid run needs; mirrors the JSON config file."""

    majority: str
    minorities: tuple[str, ...]
    outcomes: tuple[str, ...]
    methods: tuple[MethodId, ...]
    dataset_path: str | None = None
    schema_path: str | None = None
    fixture_path: str | None = None
    n_majority: int = 1000
    n_minority: int = 100
    k_prompt: int = 20
    reps: int = 25
    backend: BackendConfig = field(default_factory=BackendConfig)
    temperature: float = 0.9
    master_seed: int = 0
    output_dir: str = "results"
    workers: int = 1
    dataset_context: str = DEFAULT_DATASET_CONTEXTS["heart"]
    target_synthetic: int | None = None
    batch_size: int = 10
    smote_k: int = 5
    max_redraws: int = 1000
    logistic: LogisticConfig = field(default_factory=LogisticConfig)
    kde_pairs: tuple[tuple[str, str], ...] | None = None
    oracle_fixture: str | bool | None = None
    use_cache: bool | None = None

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if not self.methods:
            raise ConfigError("methods list must be non-empty")
        if not self.minorities:
            raise ConfigError("at least one minority group is required")
        if not self.outcomes:
            raise ConfigError("at least one outcome is required")
        if self.fixture_path is None and (self.dataset_path is None or self.schema_path is None):
            raise ConfigError("config needs either fixture or dataset+schema paths")

    @property
    def has_llm_method(self) -> bool:
        return any(m.is_llm for m in self.methods)

    def synthetic_target(self) -> int:
        return self.target_synthetic or (self.n_majority - self.n_minority)


def load_experiment_config(path: str | Path, **overrides) -> ExperimentConfig:
    """Read the JSON config; relative paths resolve against the config file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    base = path.parent

    def resolve(p):
        return str((base / p).resolve()) if p else None

    backend_doc = dict(doc.get("backend", {}))
    oracle_fixture = backend_doc.pop("oracle_fixture", None)
    if isinstance(oracle_fixture, str):
        oracle_fixture = resolve(oracle_fixture)
    try:
        backend = BackendConfig(**backend_doc)
    except TypeError as exc:
        raise ConfigError(f"bad backend config: {exc}") from exc
    logistic_doc = doc.get("logistic", {})
    try:
        logistic = LogisticConfig(**logistic_doc)
    except TypeError as exc:
        raise ConfigError(f"bad logistic config: {exc}") from exc

    kde_pairs = doc.get("kde_pairs")
    if kde_pairs is not None:
        kde_pairs = tuple((a, b) for a, b in kde_pairs)
    try:
        config = ExperimentConfig(
            majority=doc["majority"],
            minorities=tuple(doc["minorities"]),
            outcomes=tuple(doc["outcomes"]),
            methods=tuple(MethodId(m) for m in doc["methods"]),
            dataset_path=resolve(doc.get("dataset")),
            schema_path=resolve(doc.get("schema")),
            fixture_path=resolve(doc.get("fixture")),
            n_majority=int(doc.get("n_majority", 1000)),
            n_minority=int(doc.get("n_minority", 100)),
            k_prompt=int(doc.get("k_prompt", 20)),
            reps=int(doc.get("reps", 25)),
            backend=backend,
            temperature=float(doc.get("temperature", backend.temperature)),
            master_seed=int(doc.get("master_seed", 0)),
            output_dir=doc.get("output_dir", "results"),
            workers=int(doc.get("workers", 1)),
            dataset_context=doc.get("dataset_context", DEFAULT_DATASET_CONTEXTS["heart"]),
            target_synthetic=doc.get("target_synthetic"),
            batch_size=int(doc.get("batch_size", 10)),
            smote_k=int(doc.get("smote_k", 5)),
            max_redraws=int(doc.get("max_redraws", 1000)),
            logistic=logistic,
            kde_pairs=kde_pairs,
            oracle_fixture=oracle_fixture,
            use_cache=doc.get("use_cache"),
        )
    except KeyError as exc:
        raise ConfigError(f"config missing key {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    if overrides:
        config = replace(config, **{k: v for k, v in overrides.items() if v is not None})
    return config


@dataclass(frozen=True)
class ExperimentContext:
    """Materialized inputs for one run: the table plus backend wiring."""

    config: ExperimentConfig
    table: Table
    backend: BackendConfig
    cache: GenerationCache | None

    @property
    def schema(self) -> Schema:
        return self.table.schema


def build_context(config: ExperimentConfig) -> ExperimentContext:
    """Load or generate the dataset, wire the backend, and validate counts."""
    if config.fixture_path is not None:
        spec = load_fixture_spec(config.fixture_path)
        table = make_fixture(spec, derive_seed(config.master_seed, "fixture-table"))
        fixture_spec: FixtureSpec | None = spec
    else:
        schema = load_schema(config.schema_path)
        table = load_table(config.dataset_path, schema)
        fixture_spec = None

    oracle = None
    if config.oracle_fixture:
        if config.oracle_fixture is True:
            if fixture_spec is None:
                raise ConfigError("oracle_fixture=true needs a fixture-backed dataset")
            oracle = fixture_spec
        else:
            oracle = load_fixture_spec(config.oracle_fixture)
    backend = replace(
        config.backend,
        temperature=config.temperature,
        schema=table.schema,
        oracle=oracle,
    )
    use_cache = config.use_cache
    if use_cache is None:
        use_cache = backend.kind == "http"
    cache = GenerationCache() if use_cache else None
    ctx = ExperimentContext(config=config, table=table, backend=backend, cache=cache)
    validate_context(ctx)
    return ctx


def validate_context(ctx: ExperimentContext) -> None:
    config, schema = ctx.config, ctx.schema
    for label in (config.majority, *config.minorities):
        if label not in schema.group_labels:
            raise ConfigError(f"group label {label!r} not in schema")
    for outcome in config.outcomes:
        if outcome not in schema.outcomes:
            raise ConfigError(f"outcome {outcome!r} not in schema")
    if config.has_llm_method and config.synthetic_target() < 1:
        raise ConfigError("synthetic target must be >= 1 for LLM methods")
    maj_count = len(ctx.table.group_indices(config.majority))
    if maj_count < config.n_majority:
        raise InsufficientGroup(config.majority, config.n_majority, maj_count)
    need_prompt = config.k_prompt if config.has_llm_method else 0
    for label in config.minorities:
        count = len(ctx.table.group_indices(label))
        if count < config.n_minority + need_prompt:
            raise InsufficientGroup(label, config.n_minority + need_prompt, count)


@dataclass(frozen=True)
class CellStats:
    """Aggregated metrics for one (group, outcome, method) cell."""

    group: str
    outcome: str
    method: str
    auroc_mean: float | None
    auroc_std: float | None
    auprc_mean: float | None
    auprc_std: float | None
    reps_completed: int
    skipped: bool
    reason: str = ""


@dataclass(frozen=True)
class ResultsGrid:
    """All cells of one run, keyed (group, outcome, method value)."""

    cells: dict[tuple[str, str, str], CellStats]
    groups: tuple[str, ...]
    outcomes: tuple[str, ...]
    methods: tuple[str, ...]

    def cell(self, group: str, outcome: str, method: str | MethodId) -> CellStats:
        method = method.value if isinstance(method, MethodId) else method
        return self.cells[(group, outcome, method)]


def _rep_seed(master_seed: int, group: str, outcome: str, method: MethodId, rep: int) -> int:
    return derive_seed(master_seed, group, outcome, method.value, rep)


def _run_rep(
    ctx: ExperimentContext, group: str, outcome: str, method: MethodId, rep_seed: int
) -> tuple[float, float]:
    config = ctx.config
    llm = method.is_llm
    sample = sample_groups(
        ctx.table,
        config.majority,
        group,
        n_maj=config.n_majority,
        n_min=config.n_minority,
        k_prompt=config.k_prompt if llm else 0,
        rng_seed=derive_seed(rep_seed, "sample"),
        prompt_pool="all" if method == MethodId.GPT_GENERIC else "minority",
        outcomes=(outcome,) if llm else None,
        max_redraws=config.max_redraws,
    )
    synthetic = None
    if llm:
        variant = GROUP_TAILORED if method == MethodId.GPT_GROUP else GENERIC
        prompt = build_prompt(
            ctx.schema,
            sample.prompt_example_rows,
            config.dataset_context,
            variant,
            n_generate=config.batch_size,
            group_label=group if variant == GROUP_TAILORED else None,
        )
        backend = replace(ctx.backend, seed=derive_seed(rep_seed, "generate"))
        synthetic = generate_to_target(
            prompt,
            config.synthetic_target(),
            batch_size=config.batch_size,
            cfg=backend,
            schema=ctx.schema,
            cache=ctx.cache,
        )
    assembled = assemble(
        method,
        sample,
        synthetic,
        ctx.schema,
        outcome=outcome,
        rng_seed=derive_seed(rep_seed, "smote"),
        smote_k=config.smote_k,
    )
    models = {
        key: fit_logistic(ts.X, ts.y, ts.weights, config.logistic)
        for key, ts in assembled.sets.items()
    }
    scorer = models if method == MethodId.SEPARATE else models["pooled"]
    holdout = ctx.table.slice(sample.holdout_idx)
    result = evaluate_group(
        scorer, holdout, group, outcome, encoder=assembled.encoder, method=method.value
    )
    return result.auroc, result.auprc


def run_cell(ctx: ExperimentContext, group: str, outcome: str, method: MethodId) -> CellStats:
    """Run every repetition of one cell, aggregating completed reps.

    Repetition-level failures (a single-class holdout, an infeasible prompt
    constraint) skip that repetition; systematic failures (backend exhaustion,
    insufficient rows) abort the cell with whatever reps completed.
    """
    config = ctx.config
    aurocs: list[float] = []
    auprcs: list[float] = []
    reason = ""
    for rep in range(1, config.reps + 1):
        rep_seed = _rep_seed(config.master_seed, group, outcome, method, rep)
        try:
            a, p = _run_rep(ctx, group, outcome, method, rep_seed)
        except (SkippedCell, SingleClass, ConstraintInfeasible, TooFewExamples) as exc:
            if not reason:
                reason = f"rep {rep}: {exc}"
            continue
        except BackendExhausted as exc:
            reason = f"{EXHAUSTED_PREFIX}: {exc}"
            break
        except InsufficientGroup as exc:
            reason = str(exc)
            break
        aurocs.append(a)
        auprcs.append(p)

    completed = len(aurocs)
    if completed == 0:
        return CellStats(
            group=group,
            outcome=outcome,
            method=method.value,
            auroc_mean=None,
            auroc_std=None,
            auprc_mean=None,
            auprc_std=None,
            reps_completed=0,
            skipped=True,
            reason=reason or "no repetition completed",
        )
    if completed == config.reps:
        reason = ""  # isolated rep failures only matter if they left gaps
    return CellStats(
        group=group,
        outcome=outcome,
        method=method.value,
        auroc_mean=float(np.mean(aurocs)),
        auroc_std=float(np.std(aurocs, ddof=1)) if completed > 1 else 0.0,
        auprc_mean=float(np.mean(auprcs)),
        auprc_std=float(np.std(auprcs, ddof=1)) if completed > 1 else 0.0,
        reps_completed=completed,
        skipped=False,
        reason=reason,
    )


def run_grid(ctx: ExperimentContext) -> ResultsGrid:
    """Run all configured cells; per-cell failures never abort the grid."""
    config = ctx.config
    keys = [
        (group, outcome, method)
        for group in config.minorities
        for outcome in config.outcomes
        for method in config.methods
    ]
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            stats = list(pool.map(lambda k: run_cell(ctx, *k), keys))
    else:
        stats = [run_cell(ctx, *key) for key in keys]
    cells = {
        (s.group, s.outcome, s.method): s for s in stats
    }
    return ResultsGrid(
        cells=cells,
        groups=config.minorities,
        outcomes=config.outcomes,
        methods=tuple(m.value for m in config.methods),
    )


def sweep_temperature(
    config: ExperimentConfig, temps: tuple[float, ...] = (0.5, 0.9, 1.2)
) -> dict[float, ResultsGrid]:
    """One grid per temperature, restricted to the LLM methods."""
    llm_methods = tuple(m for m in config.methods if m.is_llm)
    if not llm_methods:
        raise ConfigError("temperature sweep needs at least one LLM method")
    grids: dict[float, ResultsGrid] = {}
    for t in temps:
        sub = replace(config, temperature=float(t), methods=llm_methods)
        grids[float(t)] = run_grid(build_context(sub))
    return grids


def sweep_minority_size(
    config: ExperimentConfig, sizes: tuple[int, ...] = (50, 100, 200)
) -> dict[int, ResultsGrid]:
    """One grid per minority training size, all methods."""
    grids: dict[int, ResultsGrid] = {}
    for size in sizes:
        sub = replace(config, n_minority=int(size))
        grids[int(size)] = run_grid(build_context(sub))
    return grids


def grid_exit_code(grid: ResultsGrid, reps: int) -> int:
    if any(c.reason.startswith(EXHAUSTED_PREFIX) for c in grid.cells.values()):
        return EXIT_BACKEND
    if any(c.skipped or c.reps_completed < reps for c in grid.cells.values()):
        return EXIT_PARTIAL
    return EXIT_OK


# -- report emission ------------------------------------------------------------

_CSV_HEADER = ("group", "outcome", "method", "metric", "mean", "std", "reps", "skipped", "reason")


def _fmt_float(v: float | None) -> str:
    return "" if v is None else repr(float(v))


def write_results_csv(grid: ResultsGrid, path: str | Path) -> Path:
    """Long-form results: one row per (cell, metric); floats round-trip via repr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_HEADER)
        for group in grid.groups:
            for outcome in grid.outcomes:
                for method in grid.methods:
                    c = grid.cells[(group, outcome, method)]
                    for metric, mean, std in (
                        ("auroc", c.auroc_mean, c.auroc_std),
                        ("auprc", c.auprc_mean, c.auprc_std),
                    ):
                        writer.writerow(
                            [
                                group,
                                outcome,
                                method,
                                metric,
                                _fmt_float(mean),
                                _fmt_float(std),
                                c.reps_completed,
                                int(c.skipped),
                                c.reason,
                            ]
                        )
    return path


def read_results_csv(path: str | Path) -> ResultsGrid:
    """Inverse of write_results_csv."""
    rows: list[dict] = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(_CSV_HEADER) - set(reader.fieldnames):
            raise ConfigError(f"{path}: not a results CSV")
        rows.extend(reader)
    partial: dict[tuple[str, str, str], dict] = {}
    groups: list[str] = []
    outcomes: list[str] = []
    methods: list[str] = []
    for row in rows:
        key = (row["group"], row["outcome"], row["method"])
        if row["group"] not in groups:
            groups.append(row["group"])
        if row["outcome"] not in outcomes:
            outcomes.append(row["outcome"])
        if row["method"] not in methods:
            methods.append(row["method"])
        entry = partial.setdefault(
            key,
            {
                "reps": int(row["reps"]),
                "skipped": bool(int(row["skipped"])),
                "reason": row["reason"],
            },
        )
        mean = float(row["mean"]) if row["mean"] else None
        std = float(row["std"]) if row["std"] else None
        entry[row["metric"]] = (mean, std)
    cells = {}
    for key, entry in partial.items():
        group, outcome, method = key
        auroc = entry.get("auroc", (None, None))
        auprc = entry.get("auprc", (None, None))
        cells[key] = CellStats(
            group=group,
            outcome=outcome,
            method=method,
            auroc_mean=auroc[0],
            auroc_std=auroc[1],
            auprc_mean=auprc[0],
            auprc_std=auprc[1],
            reps_completed=entry["reps"],
            skipped=entry["skipped"],
            reason=entry["reason"],
        )
    return ResultsGrid(
        cells=cells, groups=tuple(groups), outcomes=tuple(outcomes), methods=tuple(methods)
    )


def _method_display(method: str) -> str:
    try:
        return MethodId(method).display_name
    except ValueError:
        return method


def _markdown_table(header: list[str], rows: list[list[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |", "| " + " | ".join("---" for _ in header) + " |"]
    lines.extend("| " + " | ".join(row) + " |" for row in rows)
    return "\n".join(lines)


def _metric_cells(grid: ResultsGrid, group: str, outcome: str, metric: str):
    for method in grid.methods:
        c = grid.cells[(group, outcome, method)]
        yield method, (c.auroc_mean if metric == "auroc" else c.auprc_mean), c


def markdown_report(grid: ResultsGrid) -> str:
    """Wide-form report: one table per metric, per-row best method in bold."""
    sections = []
    footnotes: list[str] = []
    for metric in ("auroc", "auprc"):
        header = ["Group", "Outcome"] + [_method_display(m) for m in grid.methods]
        rows = []
        for group in grid.groups:
            for outcome in grid.outcomes:
                values = list(_metric_cells(grid, group, outcome, metric))
                defined = [v for _, v, c in values if not c.skipped and v is not None]
                best = max(defined) if defined else None
                row = [group, outcome]
                for method, v, c in values:
                    if c.skipped or v is None:
                        row.append("—")
                        note = f"{group}/{outcome}/{_method_display(method)}: {c.reason}"
                        if note not in footnotes:
                            footnotes.append(note)
                    elif best is not None and v == best:
                        row.append(f"**{v:.4f}**")
                    else:
                        row.append(f"{v:.4f}")
                rows.append(row)
        sections.append(f"## {metric.upper()}\n\n" + _markdown_table(header, rows))
    text = "\n\n".join(sections)
    if footnotes:
        text += "\n\n— skipped cells:\n"
        text += "\n".join(f"- {note}" for note in footnotes)
    return text + "\n"


def write_report(
    grid: ResultsGrid, outdir: str | Path, formats: tuple[str, ...] = ("csv", "markdown")
) -> dict[str, Path]:
    """Emit the delimited results and/or the markdown tables."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    for fmt in formats:
        if fmt == "csv":
            written["csv"] = write_results_csv(grid, outdir / "results.csv")
        elif fmt == "markdown":
            path = outdir / "report.md"
            path.write_text(markdown_report(grid), encoding="utf-8")
            written["markdown"] = path
        else:
            raise ConfigError(f"unknown report format {fmt!r}")
    return written


def markdown_temperature_report(grids: dict[float, ResultsGrid]) -> str:
    """Rows (group, outcome), one AUROC column per temperature, best bold."""
    temps = sorted(grids)
    if not temps:
        raise ConfigError("no sweep results")
    first = grids[temps[0]]
    sections = []
    for method in first.methods:
        header = ["Group", "Outcome"] + [f"Temp = {t:g}" for t in temps]
        rows = []
        for group in first.groups:
            for outcome in first.outcomes:
                values = []
                for t in temps:
                    c = grids[t].cells.get((group, outcome, method))
                    values.append(None if c is None or c.skipped else c.auroc_mean)
                defined = [v for v in values if v is not None]
                best = max(defined) if defined else None
                row = [group, outcome]
                for v in values:
                    if v is None:
                        row.append("—")
                    elif v == best:
                        row.append(f"**{v:.4f}**")
                    else:
                        row.append(f"{v:.4f}")
                rows.append(row)
        sections.append(
            f"## AUROC by temperature — {_method_display(method)}\n\n"
            + _markdown_table(header, rows)
        )
    return "\n\n".join(sections) + "\n"


def write_temperature_report(
    grids: dict[float, ResultsGrid], outdir: str | Path
) -> dict[str, Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "sweep_temperature.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("temperature", *_CSV_HEADER))
        for t in sorted(grids):
            grid = grids[t]
            for group in grid.groups:
                for outcome in grid.outcomes:
                    for method in grid.methods:
                        c = grid.cells[(group, outcome, method)]
                        for metric, mean, std in (
                            ("auroc", c.auroc_mean, c.auroc_std),
                            ("auprc", c.auprc_mean, c.auprc_std),
                        ):
                            writer.writerow(
                                [
                                    repr(float(t)),
                                    group,
                                    outcome,
                                    method,
                                    metric,
                                    _fmt_float(mean),
                                    _fmt_float(std),
                                    c.reps_completed,
                                    int(c.skipped),
                                    c.reason,
                                ]
                            )
    md_path = outdir / "sweep_temperature.md"
    md_path.write_text(markdown_temperature_report(grids), encoding="utf-8")
    return {"csv": csv_path, "markdown": md_path}


def markdown_size_report(grids: dict[int, ResultsGrid]) -> str:
    """AUROC rows ordered (group, outcome, size) with one column per method."""
    sizes = sorted(grids)
    if not sizes:
        raise ConfigError("no sweep results")
    first = grids[sizes[0]]
    header = ["Group", "Outcome", "Size"] + [_method_display(m) for m in first.methods]
    rows = []
    for group in first.groups:
        for outcome in first.outcomes:
            for size in sizes:
                grid = grids[size]
                values = []
                for method in first.methods:
                    c = grid.cells.get((group, outcome, method))
                    values.append(None if c is None or c.skipped else c.auroc_mean)
                defined = [v for v in values if v is not None]
                best = max(defined) if defined else None
                row = [group, outcome, str(size)]
                for v in values:
                    if v is None:
                        row.append("—")
                    elif v == best:
                        row.append(f"**{v:.4f}**")
                    else:
                        row.append(f"{v:.4f}")
                rows.append(row)
    return "## AUROC by minority size\n\n" + _markdown_table(header, rows) + "\n"


def write_size_report(grids: dict[int, ResultsGrid], outdir: str | Path) -> dict[str, Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "sweep_minority_size.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("size", *_CSV_HEADER))
        for size in sorted(grids):
            grid = grids[size]
            for group in grid.groups:
                for outcome in grid.outcomes:
                    for method in grid.methods:
                        c = grid.cells[(group, outcome, method)]
                        for metric, mean, std in (
                            ("auroc", c.auroc_mean, c.auroc_std),
                            ("auprc", c.auprc_mean, c.auprc_std),
                        ):
                            writer.writerow(
                                [
                                    size,
                                    group,
                                    outcome,
                                    method,
                                    metric,
                                    _fmt_float(mean),
                                    _fmt_float(std),
                                    c.reps_completed,
                                    int(c.skipped),
                                    c.reason,
                                ]
                            )
    md_path = outdir / "sweep_minority_size.md"
    md_path.write_text(markdown_size_report(grids), encoding="utf-8")
    return {"csv": csv_path, "markdown": md_path}
