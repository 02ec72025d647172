"""End-to-end orchestration: rank, evaluate, sweep.

Ranking runs the stages in order (parse, partition, symbolic scores,
informalize, semantic scores, combine, select).  Provider-facing stages
go through content-addressed caches, so a rerun with warm caches touches
no network and reproduces outputs byte for byte.  A failing problem
yields a report flagged failed; it never aborts the batch.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from .cache import JsonFileCache, canonical_json, content_key
from .config import RunConfig
from .dataset import LabeledProblem, Problem
from .equiv import EquivalencePartition, partition_candidates, symbolic_scores
from .llmclient import ChatClient, ProviderError, ReplayMiss
from .metrics import (
    EvalResult,
    accuracy_curve,
    correctness_labels,
    evaluate_method,
    n_at_k,
    rank_baseline_logprob,
    rank_cluster,
    rank_naive_filter,
)
from .provers import BuiltinProver, ProverBackend, SmtProver, SyntacticProver
from .scoring import CombinationStrategy, RankingReport, select_top_n
from .semantic import (
    EmbeddingProvider,
    HashedTfEmbedder,
    HttpEmbedder,
    InformalizationRecord,
    failed_record,
    informalize,
    semantic_scores,
)

PIPELINE_METHODS = ("symeq", "semco", "comb")
ALL_METHODS = ("baseline", "naive", "cluster") + PIPELINE_METHODS


class _InformalProvider:
    """Named text-generation provider; may be cache-only in replay mode."""

    def __init__(self, name: str, client: ChatClient | None):
        self.name = name
        self.client = client

    def complete_text(self, prompt: str) -> str:
        if self.client is None:
            raise ProviderError("no informalization endpoint configured")
        return self.client.complete_text(prompt)


@dataclass
class Services:
    config: RunConfig
    backends: list[ProverBackend]
    embedder: EmbeddingProvider
    informal_provider: _InformalProvider
    informal_cache: JsonFileCache


def build_services(config: RunConfig) -> Services:
    backends: list[ProverBackend] = []
    for name in config.backends:
        if name == "syntactic":
            backends.append(SyntacticProver())
        elif name == "builtin":
            backends.append(
                BuiltinProver(
                    max_samples=config.builtin_max_samples,
                    seed=config.seed,
                    nat_max=config.builtin_nat_max,
                )
            )
        else:
            backends.append(
                SmtProver(
                    executable=config.smt_executable,
                    args=config.smt_args,
                    timeout=config.smt_timeout,
                    cache=JsonFileCache(config.cache_path("proofs")),
                )
            )
    if config.embed_provider == "builtin":
        embedder: EmbeddingProvider = HashedTfEmbedder(config.embed_dimension)
    else:
        embedder = HttpEmbedder(
            endpoint=config.embed_endpoint,
            name=config.embed_provider,
            dimension=config.embed_dimension,
        )
    client = None
    if config.informal_endpoint:
        client = ChatClient(
            endpoint=config.informal_endpoint,
            model=config.informal_model,
            api_key_env=config.api_key_env,
            temperature=config.temperature,
            replay=config.replay,
            cache=JsonFileCache(config.cache_path("gen")),
        )
    return Services(
        config=config,
        backends=backends,
        embedder=embedder,
        informal_provider=_InformalProvider(config.informal_provider, client),
        informal_cache=JsonFileCache(config.cache_path("informal")),
    )


# --- Ranking -------------------------------------------------------------------


@dataclass
class StageData:
    """Per-problem intermediate results shared by the pipeline methods."""

    ids: list[str]
    partition: EquivalencePartition
    sym: list[float]
    sem: list[float]
    tau_flags: list[bool]
    records: list[InformalizationRecord]


def informalize_candidates(
    problem: Problem, services: Services
) -> list[InformalizationRecord]:
    config = services.config

    def one(candidate) -> InformalizationRecord:
        try:
            return informalize(
                candidate.formal_text,
                services.informal_provider,
                services.informal_cache,
                candidate_id=candidate.id,
                replay=config.replay,
            )
        except (ProviderError, ReplayMiss) as exc:
            return failed_record(candidate.id, services.informal_provider.name, str(exc))

    live = not config.replay and services.informal_provider.client is not None
    if live and config.max_inflight > 1:
        with ThreadPoolExecutor(max_workers=config.max_inflight) as pool:
            return list(pool.map(one, problem.candidates))
    return [one(c) for c in problem.candidates]


def compute_stage_data(problem: Problem, services: Services) -> StageData:
    config = services.config
    for candidate in problem.candidates:
        candidate.ensure_parsed()
    ids = [c.id for c in problem.candidates]
    partition = partition_candidates(
        [c.parse for c in problem.candidates],
        services.backends,
        ids=ids,
        top_k=config.matching_top_k,
    )
    sym = symbolic_scores(partition)
    records = informalize_candidates(problem, services)
    sem, flags = semantic_scores(
        problem.informal_text, records, services.embedder, tau=config.tau
    )
    for candidate, s_sym, s_sem in zip(problem.candidates, sym, sem):
        candidate.s_sym = s_sym
        candidate.s_sem = s_sem
    return StageData(
        ids=ids, partition=partition, sym=sym, sem=sem, tau_flags=flags, records=records
    )


def select_from_stage(
    stage: StageData,
    problem_id: str,
    strategy: CombinationStrategy,
    true_softmax: bool = False,
    n: int | None = None,
) -> RankingReport:
    return select_top_n(
        stage.ids,
        stage.partition,
        stage.sym,
        stage.sem,
        strategy,
        n=len(stage.ids) if n is None else n,
        problem_id=problem_id,
        true_softmax=true_softmax,
    )


def rank_problem(problem: Problem, services: Services) -> tuple[RankingReport, dict]:
    config = services.config
    stage = compute_stage_data(problem, services)
    strategy = CombinationStrategy(config.rho, config.alpha)
    report = select_from_stage(
        stage, problem.id, strategy, true_softmax=config.true_softmax
    )
    combined = dict(report.selection)
    for candidate in problem.candidates:
        candidate.combined = combined.get(candidate.id)
    artifact = {
        "problem_id": problem.id,
        "strategy": report.strategy,
        "selection": [[cid, score] for cid, score in report.selection],
        "removed_classes": report.removed_classes,
        "scores": {
            "sym": stage.sym,
            "sem": stage.sem,
            "tau_flags": stage.tau_flags,
        },
        "partition": {
            "classes": [
                [stage.ids[i] for i in group] for group in stage.partition.classes()
            ],
            "opaque": sorted(stage.ids[i] for i in stage.partition.opaque),
            "degenerate": sorted(stage.ids[i] for i in stage.partition.degenerate),
            "checks_performed": stage.partition.checks_performed,
            "checks_skipped": stage.partition.checks_skipped,
        },
        "informal": [
            {"candidate_id": r.candidate_id, "text": r.informal_text, "failed": r.failed}
            for r in stage.records
        ],
        "failed": False,
        "error": "",
    }
    return report, artifact


def run_rank(
    problems: list[Problem], config: RunConfig, services: Services | None = None
) -> tuple[list[RankingReport], list[dict]]:
    services = services or build_services(config)

    def one(problem: Problem) -> tuple[RankingReport, dict]:
        try:
            return rank_problem(problem, services)
        except Exception as exc:  # noqa: BLE001 - a bad problem must not kill the batch
            report = RankingReport(
                problem_id=problem.id,
                selection=[],
                removed_classes=[],
                strategy=f"{config.rho}@{config.alpha}",
                failed=True,
                error=str(exc),
            )
            artifact = {
                "problem_id": problem.id,
                "strategy": report.strategy,
                "selection": [],
                "removed_classes": [],
                "failed": True,
                "error": str(exc),
            }
            return report, artifact

    if config.workers > 1 and len(problems) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            paired = list(pool.map(one, problems))
    else:
        paired = [one(p) for p in problems]
    reports = [r for r, _ in paired]
    artifacts = [a for _, a in paired]
    return reports, artifacts


# --- Evaluation ------------------------------------------------------------------


def method_reports(
    method: str,
    problems: list[Problem],
    services: Services,
    stages: dict[str, StageData] | None = None,
) -> list[RankingReport]:
    config = services.config
    if method == "baseline":
        return [rank_baseline_logprob(p) for p in problems]
    if method == "naive":
        for p in problems:
            for c in p.candidates:
                c.ensure_parsed()
        return [rank_naive_filter(p, services.backends) for p in problems]
    if method == "cluster":
        return [rank_cluster(p, services.embedder, seed=config.seed) for p in problems]
    if method not in PIPELINE_METHODS:
        raise ValueError(f"unknown method {method!r}")
    assert stages is not None
    alpha = {"symeq": 1.0, "semco": 0.0, "comb": config.alpha}[method]
    strategy = CombinationStrategy(config.rho, alpha)
    return [
        select_from_stage(stages[p.id], p.id, strategy, config.true_softmax)
        for p in problems
    ]


def run_eval(
    labeled: list[LabeledProblem],
    methods: tuple[str, ...],
    config: RunConfig,
    services: Services | None = None,
) -> tuple[list[EvalResult], str, dict[str, StageData]]:
    """Per-method n@k, sigma (both variants), and E against the baseline."""
    services = services or build_services(config)
    problems = [lp.problem for lp in labeled]
    labels_by_problem = {
        lp.problem.id: correctness_labels(
            lp, services.backends, top_k=config.matching_top_k
        )
        for lp in labeled
    }
    stages: dict[str, StageData] = {}
    if any(m in PIPELINE_METHODS for m in methods):
        for problem in problems:
            stages[problem.id] = compute_stage_data(problem, services)
    k = max((len(p.candidates) for p in problems), default=1)
    sigma_ref = None
    if "baseline" in methods:
        base_reports = method_reports("baseline", problems, services, stages)
        base_curve = accuracy_curve(base_reports, labels_by_problem, k)
        from .metrics import labeling_cost

        sigma_ref = labeling_cost(base_curve, "paper")
    results = []
    for method in methods:
        reports = method_reports(method, problems, services, stages)
        results.append(
            evaluate_method(
                method,
                reports,
                labels_by_problem,
                k,
                sigma_ref=sigma_ref if method != "baseline" else None,
            )
        )
    return results, format_eval_table(results), stages


def format_eval_table(results: list[EvalResult], ns=(1, 2, 3)) -> str:
    """Aligned-column text table, methods by n."""
    headers = ["method"] + [f"{n}@k" for n in ns] + ["sigma", "sigma+1", "E"]
    rows = [headers]
    for result in results:
        row = [result.method]
        for n in ns:
            value = result.n_at_k.get(n)
            row.append("--" if value is None else f"{value:.3f}")
        row.append(f"{result.sigma_paper:.3f}")
        row.append(f"{result.sigma_inspected:.3f}")
        row.append(
            "--"
            if result.relative_efficiency is None
            else f"{result.relative_efficiency:+.3f}"
        )
        rows.append(row)
    widths = [max(len(row[i]) for row in rows) for i in range(len(headers))]
    lines = [
        "  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
        for row in rows
    ]
    return "\n".join(lines) + "\n"


ALPHA_SWEEP_STEPS = 26  # 0.0 to 1.0 in steps of 0.04


def run_alpha_sweep(
    labeled: list[LabeledProblem],
    config: RunConfig,
    services: Services | None = None,
    stages: dict[str, StageData] | None = None,
) -> list[tuple[float, float]]:
    """1@k of the combined strategy for alpha = 0.00, 0.04, ..., 1.00."""
    services = services or build_services(config)
    problems = [lp.problem for lp in labeled]
    labels_by_problem = {
        lp.problem.id: correctness_labels(
            lp, services.backends, top_k=config.matching_top_k
        )
        for lp in labeled
    }
    if stages is None:
        stages = {p.id: compute_stage_data(p, services) for p in problems}
    points = []
    for step in range(ALPHA_SWEEP_STEPS):
        alpha = round(step * 0.04, 2)
        strategy = CombinationStrategy(config.rho, alpha)
        reports = [
            select_from_stage(stages[p.id], p.id, strategy, config.true_softmax)
            for p in problems
        ]
        points.append((alpha, n_at_k(reports, labels_by_problem, 1)))
    return points


def sweep_csv(points: list[tuple[float, float]]) -> str:
    lines = ["alpha,one_at_k"]
    for alpha, acc in points:
        lines.append(f"{alpha:.2f},{acc:.6f}")
    return "\n".join(lines) + "\n"


# --- Output persistence -----------------------------------------------------------


def default_run_id(config: RunConfig, dataset_path: str) -> str:
    payload = canonical_json({**asdict(config), "dataset": str(dataset_path)})
    return content_key("run", payload)[:12]


def write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def eval_results_payload(results: list[EvalResult]) -> list[dict]:
    payload = []
    for result in results:
        payload.append(
            {
                "method": result.method,
                "n_at_k": {str(n): v for n, v in result.n_at_k.items()},
                "sigma_paper": result.sigma_paper,
                "sigma_inspected": result.sigma_inspected,
                "relative_efficiency": result.relative_efficiency,
            }
        )
    return payload
