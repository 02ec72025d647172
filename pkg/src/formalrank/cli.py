"""Command-line interface.

Exit codes: 0 success, 1 partial failures (some problem failed), 2
configuration or schema errors.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import ConfigError, load_config
from .dataset import SchemaError, load_dataset
from .equiv import check_premise_contradiction, check_statement_equivalence
from .llmclient import ChatClient, generate_candidates
from .parser import ParseError, parse_statement
from .pipeline import (
    ALL_METHODS,
    build_services,
    default_run_id,
    eval_results_payload,
    informalize_candidates,
    run_alpha_sweep,
    run_eval,
    run_rank,
    sweep_csv,
    write_json,
    write_text,
)
from .standardize import is_numerical_goal, standardize_numerical
from .statement import print_statement

_BACKEND_CHOICES = {
    "builtin": ("syntactic", "builtin"),
    "smt": ("syntactic", "smt"),
    "chain": ("syntactic", "builtin", "smt"),
}


def _common_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(exists=True),
                      default=None, help="TOML config file")(fn)
    fn = click.option("--alpha", type=float, default=None)(fn)
    fn = click.option("--strategy", "rho",
                      type=click.Choice(["log", "linear", "quad"]), default=None)(fn)
    fn = click.option("--backend", type=click.Choice(sorted(_BACKEND_CHOICES)),
                      default=None, help="prover chain preset")(fn)
    fn = click.option("--top-k-matchings", "matching_top_k", type=int, default=None)(fn)
    fn = click.option("--replay/--live", "replay", default=None,
                      help="serve providers from cache only")(fn)
    fn = click.option("--seed", type=int, default=None)(fn)
    fn = click.option("--skip-failed", "skip_failed", is_flag=True, default=None)(fn)
    fn = click.option("--true-softmax", "true_softmax", is_flag=True, default=None)(fn)
    fn = click.option("--cache-dir", default=None)(fn)
    fn = click.option("--out-dir", default=None)(fn)
    fn = click.option("--run-id", default=None)(fn)
    return fn


def _build_config(config_path, **overrides):
    backend = overrides.pop("backend", None)
    if backend is not None:
        overrides["backends"] = _BACKEND_CHOICES[backend]
    try:
        return load_config(config_path, overrides)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)


def _load(dataset):
    try:
        return load_dataset(dataset)
    except SchemaError as exc:
        click.echo(f"schema error: {exc}", err=True)
        sys.exit(2)


@click.group()
def main():
    """Rank and evaluate autoformalization candidates."""


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True))
@_common_options
def rank(dataset, config_path, **overrides):
    """Run the full ranking pipeline over a JSONL dataset."""
    config = _build_config(config_path, **overrides)
    labeled = _load(dataset)
    problems = [lp.problem for lp in labeled]
    reports, artifacts = run_rank(problems, config)
    run_id = config.run_id or default_run_id(config, dataset)
    out = Path(config.out_dir) / run_id
    write_json(out / "rank_reports.json", artifacts)
    failed = [r for r in reports if r.failed]
    for report in reports:
        if report.failed:
            click.echo(f"{report.problem_id}: FAILED ({report.error})")
        else:
            top = report.selection[0] if report.selection else ("-", 0.0)
            click.echo(f"{report.problem_id}: top = {top[0]} (score {top[1]:.4f})")
    click.echo(f"wrote {out / 'rank_reports.json'}")
    sys.exit(1 if failed else 0)


@main.command("eval")
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--methods", default=",".join(ALL_METHODS),
              help="comma-separated subset of " + ",".join(ALL_METHODS))
@_common_options
def eval_cmd(dataset, methods, config_path, **overrides):
    """Evaluate ranking methods with n@k, sigma, and relative efficiency."""
    config = _build_config(config_path, **overrides)
    labeled = _load(dataset)
    chosen = tuple(m.strip() for m in methods.split(",") if m.strip())
    for m in chosen:
        if m not in ALL_METHODS:
            click.echo(f"config error: unknown method {m!r}", err=True)
            sys.exit(2)
    if config.skip_failed:
        labeled = [
            lp for lp in labeled
            if lp.problem.labels is not None or lp.problem.oracle_formal is not None
        ]
    results, table, stages = run_eval(labeled, chosen, config)
    run_id = config.run_id or default_run_id(config, dataset)
    out = Path(config.out_dir) / run_id
    write_json(out / "eval.json", eval_results_payload(results))
    write_text(out / "table.txt", table)
    click.echo(table, nl=False)
    click.echo(f"wrote {out / 'eval.json'} and {out / 'table.txt'}")


@main.command("sweep-alpha")
@click.option("--dataset", required=True, type=click.Path(exists=True))
@_common_options
def sweep_alpha(dataset, config_path, **overrides):
    """1@k of the combined strategy across alpha = 0.00 .. 1.00."""
    config = _build_config(config_path, **overrides)
    labeled = _load(dataset)
    points = run_alpha_sweep(labeled, config)
    run_id = config.run_id or default_run_id(config, dataset)
    out = Path(config.out_dir) / run_id
    write_text(out / "alpha_sweep.csv", sweep_csv(points))
    click.echo(f"wrote {out / 'alpha_sweep.csv'} ({len(points)} rows)")


@main.command("check-equiv")
@click.argument("file_a", type=click.Path(exists=True))
@click.argument("file_b", type=click.Path(exists=True))
@_common_options
def check_equiv(file_a, file_b, config_path, **overrides):
    """Check symbolic equivalence of two statement files."""
    config = _build_config(config_path, **overrides)
    services = build_services(config)
    try:
        s1 = parse_statement(Path(file_a).read_text(encoding="utf-8"))
        s2 = parse_statement(Path(file_b).read_text(encoding="utf-8"))
    except ParseError as exc:
        click.echo(f"schema error: {exc}", err=True)
        sys.exit(2)
    outcome = check_statement_equivalence(
        s1, s2, services.backends, top_k=config.matching_top_k
    )
    click.echo(f"{outcome.status} ({outcome.backend}, {outcome.elapsed:.3f}s)")
    if outcome.detail:
        click.echo(outcome.detail)


@main.command()
@click.argument("file", type=click.Path(exists=True))
@_common_options
def standardize(file, config_path, **overrides):
    """Print the standardized form of a statement file."""
    config = _build_config(config_path, **overrides)
    services = build_services(config)
    try:
        statement = parse_statement(Path(file).read_text(encoding="utf-8"))
    except ParseError as exc:
        click.echo(f"schema error: {exc}", err=True)
        sys.exit(2)
    if is_numerical_goal(statement):
        std = standardize_numerical(statement)
        click.echo(print_statement(std.statement))
        click.echo(f"kind: numerical (goal variable {std.goal_var})")
    else:
        click.echo(print_statement(statement))
        click.echo("kind: aligned (variable alignment happens pairwise)")
    degenerate = check_premise_contradiction(statement, services.backends)
    if degenerate.is_proved:
        click.echo("warning: premises are contradictory")


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--output", required=True, type=click.Path(),
              help="where to write the dataset with generated candidates")
@click.option("--k", type=int, default=None, help="candidates per problem")
@_common_options
def generate(dataset, output, k, config_path, **overrides):
    """Generate candidates for each problem via the chat endpoint."""
    config = _build_config(config_path, **overrides)
    labeled = _load(dataset)
    few_shot = None
    if config.few_shot_file:
        few_shot = json.loads(Path(config.few_shot_file).read_text(encoding="utf-8"))
    from .cache import JsonFileCache

    client = ChatClient(
        endpoint=config.gen_endpoint,
        model=config.gen_model,
        api_key_env=config.api_key_env,
        temperature=config.temperature,
        replay=config.replay,
        cache=JsonFileCache(config.cache_path("gen")),
    )
    count = k or config.gen_n
    lines = []
    for lp in labeled:
        problem = lp.problem
        texts = generate_candidates(
            problem.informal_text, count, client, few_shot, seed=config.seed
        )
        record = {
            "id": problem.id,
            "informal_text": problem.informal_text,
            "candidates": [
                {"id": f"gen{i}", "formal_text": t} for i, t in enumerate(texts)
            ],
        }
        lines.append(json.dumps(record, sort_keys=True))
    Path(output).write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo(f"wrote {output}")


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True))
@_common_options
def informalize(dataset, config_path, **overrides):
    """Fill the informalization cache for every candidate in the dataset."""
    config = _build_config(config_path, **overrides)
    labeled = _load(dataset)
    services = build_services(config)
    misses = 0
    for lp in labeled:
        records = informalize_candidates(lp.problem, services)
        misses += sum(1 for r in records if r.failed)
        click.echo(
            f"{lp.problem.id}: {sum(1 for r in records if not r.failed)}"
            f"/{len(records)} informalized"
        )
    sys.exit(1 if misses else 0)


if __name__ == "__main__":
    main()
