"""Command-line interface.

Subcommands: fixture, generate, run, sweep-temp, sweep-size, diagnose, report.
Exit codes: 0 success, 1 configuration error, 2 backend exhaustion,
3 partial grid (some cells skipped or incomplete).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .augment import MethodId
from .data import sample_groups, schema_to_dict, write_table_csv
from .diagnostics import build_diagnostics_report, write_diagnostics
from .errors import BackendExhausted, GroupSynthError
from .fixture import load_fixture_spec, make_fixture
from .genclient import generate_to_target
from .prompt import GENERIC, GROUP_TAILORED, build_prompt, render
from .runner import (
    EXIT_BACKEND,
    EXIT_CONFIG,
    EXIT_OK,
    build_context,
    grid_exit_code,
    load_experiment_config,
    read_results_csv,
    run_grid,
    sweep_minority_size,
    sweep_temperature,
    write_report,
    write_size_report,
    write_temperature_report,
)
from .seeds import derive_seed


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment config JSON")
    parser.add_argument("--seed", type=int, default=None, help="override master seed")
    parser.add_argument("--out", default=None, help="override output directory")
    parser.add_argument("--backend", choices=("mock", "http"), default=None, help="override backend kind")
    parser.add_argument("--temperature", type=float, default=None, help="override generation temperature")
    parser.add_argument("--workers", type=int, default=None, help="parallel cell workers")
    parser.add_argument("--no-figures", action="store_true", help="skip PNG rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groupsynth",
        description="Group-conditional synthetic data augmentation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixture", help="emit a calibrated fixture CSV from a fixture spec")
    p.add_argument("--spec", required=True, help="fixture spec JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--schema-out", default=None, help="also write the schema JSON here")

    p = sub.add_parser("generate", help="build one prompt and generate a synthetic CSV")
    _add_common(p)
    p.add_argument("--group", default=None, help="minority group for a tailored prompt")
    p.add_argument("--generic", action="store_true", help="use the group-generic prompt")
    p.add_argument("--n", type=int, default=None, help="number of rows (default: majority - minority)")
    p.add_argument("--prompt-out", default=None, help="also write the rendered prompt here")

    p = sub.add_parser("run", help="run the full experiment grid")
    _add_common(p)

    p = sub.add_parser("sweep-temp", help="temperature sweep over the LLM methods")
    _add_common(p)
    p.add_argument("--temps", default="0.5,0.9,1.2", help="comma-separated temperatures")

    p = sub.add_parser("sweep-size", help="minority-size sensitivity sweep")
    _add_common(p)
    p.add_argument("--sizes", default="50,100,200", help="comma-separated minority sizes")

    p = sub.add_parser("diagnose", help="generate one synthetic batch and run quality diagnostics")
    _add_common(p)
    p.add_argument("--group", default=None, help="minority group (default: first configured)")
    p.add_argument("--n", type=int, default=None, help="synthetic rows (default: majority - minority)")

    p = sub.add_parser("report", help="re-render reports from a results CSV")
    p.add_argument("--results", required=True, help="results.csv produced by `run`")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-figures", action="store_true")

    return parser


def _load(args) -> tuple:
    overrides = {
        "master_seed": args.seed,
        "output_dir": args.out,
        "temperature": args.temperature,
        "workers": args.workers,
    }
    config = load_experiment_config(args.config, **overrides)
    if args.backend is not None:
        config = replace(config, backend=replace(config.backend, kind=args.backend))
    return config, build_context(config)


def _cmd_fixture(args) -> int:
    spec = load_fixture_spec(args.spec)
    table = make_fixture(spec, args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_table_csv(table, args.out)
    print(f"wrote {table.n_rows} rows to {args.out}")
    if args.schema_out:
        Path(args.schema_out).write_text(
            json.dumps(schema_to_dict(spec.schema), indent=2), encoding="utf-8"
        )
        print(f"wrote schema to {args.schema_out}")
    return EXIT_OK


def _cmd_generate(args) -> int:
    config, ctx = _load(args)
    if args.generic and args.group:
        raise GroupSynthError("--group and --generic are mutually exclusive")
    group = args.group or config.minorities[0]
    variant = GENERIC if args.generic else GROUP_TAILORED
    n = args.n or config.synthetic_target()
    seed = derive_seed(config.master_seed, "generate-cli", group, variant)
    sample = sample_groups(
        ctx.table,
        config.majority,
        group,
        n_maj=config.n_majority,
        n_min=config.n_minority,
        k_prompt=config.k_prompt,
        rng_seed=seed,
        prompt_pool="all" if variant == GENERIC else "minority",
        outcomes=config.outcomes,
        max_redraws=config.max_redraws,
    )
    prompt = build_prompt(
        ctx.schema,
        sample.prompt_example_rows,
        config.dataset_context,
        variant,
        n_generate=config.batch_size,
        group_label=group if variant == GROUP_TAILORED else None,
    )
    if args.prompt_out:
        Path(args.prompt_out).write_text(render(prompt), encoding="utf-8")
        print(f"wrote prompt to {args.prompt_out}")
    backend = replace(ctx.backend, seed=derive_seed(seed, "generate"))
    batch = generate_to_target(
        prompt, n, batch_size=config.batch_size, cfg=backend, schema=ctx.schema, cache=ctx.cache
    )
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    out_csv = outdir / "synthetic.csv"
    write_table_csv(batch.rows, out_csv, schema=ctx.schema)
    print(f"wrote {batch.n} synthetic rows to {out_csv} (retries per batch: {sum(batch.retries)})")
    return EXIT_OK


def _cmd_run(args) -> int:
    config, ctx = _load(args)
    grid = run_grid(ctx)
    written = write_report(grid, config.output_dir)
    if not args.no_figures:
        from .figures import render_results_figures

        written["figures"] = render_results_figures(grid, config.output_dir)
    for name, path in written.items():
        print(f"{name}: {path}")
    code = grid_exit_code(grid, config.reps)
    skipped = sum(c.skipped for c in grid.cells.values())
    print(f"{len(grid.cells)} cells, {skipped} skipped, exit code {code}")
    return code


def _cmd_sweep_temp(args) -> int:
    config, _ = _load(args)
    temps = tuple(float(t) for t in args.temps.split(","))
    grids = sweep_temperature(config, temps)
    written = write_temperature_report(grids, config.output_dir)
    if not args.no_figures:
        from .figures import render_sweep_figures

        written["figures"] = render_sweep_figures(
            grids, config.output_dir, "sweep_temperature", "temperature"
        )
    for name, path in written.items():
        print(f"{name}: {path}")
    return max(grid_exit_code(g, config.reps) for g in grids.values())


def _cmd_sweep_size(args) -> int:
    config, _ = _load(args)
    sizes = tuple(int(s) for s in args.sizes.split(","))
    grids = sweep_minority_size(config, sizes)
    written = write_size_report(grids, config.output_dir)
    if not args.no_figures:
        from .figures import render_sweep_figures

        written["figures"] = render_sweep_figures(
            grids, config.output_dir, "sweep_minority_size", "minority training size"
        )
    for name, path in written.items():
        print(f"{name}: {path}")
    return max(grid_exit_code(g, config.reps) for g in grids.values())


def _cmd_diagnose(args) -> int:
    config, ctx = _load(args)
    group = args.group or config.minorities[0]
    n = args.n or config.synthetic_target()
    seed = derive_seed(config.master_seed, "diagnose", group)
    sample = sample_groups(
        ctx.table,
        config.majority,
        group,
        n_maj=config.n_majority,
        n_min=config.n_minority,
        k_prompt=config.k_prompt,
        rng_seed=seed,
        prompt_pool="minority",
        outcomes=config.outcomes,
        max_redraws=config.max_redraws,
    )
    prompt = build_prompt(
        ctx.schema,
        sample.prompt_example_rows,
        config.dataset_context,
        GROUP_TAILORED,
        n_generate=config.batch_size,
        group_label=group,
    )
    backend = replace(ctx.backend, seed=derive_seed(seed, "generate"))
    batch = generate_to_target(
        prompt, n, batch_size=config.batch_size, cfg=backend, schema=ctx.schema, cache=ctx.cache
    )
    report = build_diagnostics_report(
        ctx.table,
        batch.rows,
        minority=group,
        majority=config.majority,
        rng_seed=derive_seed(seed, "diagnostics"),
        kde_pairs=config.kde_pairs,
    )
    manifest = write_diagnostics(report, config.output_dir)
    print(f"wrote {len(manifest['files'])} diagnostics files to {config.output_dir}")
    if not args.no_figures:
        from .figures import render_diagnostics_figures

        for path in render_diagnostics_figures(report, config.output_dir):
            print(f"figure: {path}")
    return EXIT_OK


def _cmd_report(args) -> int:
    grid = read_results_csv(args.results)
    written = write_report(grid, args.out)
    if not args.no_figures:
        from .figures import render_results_figures

        written["figures"] = render_results_figures(grid, args.out)
    for name, path in written.items():
        print(f"{name}: {path}")
    return EXIT_OK


_COMMANDS = {
    "fixture": _cmd_fixture,
    "generate": _cmd_generate,
    "run": _cmd_run,
    "sweep-temp": _cmd_sweep_temp,
    "sweep-size": _cmd_sweep_size,
    "diagnose": _cmd_diagnose,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except BackendExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (GroupSynthError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
