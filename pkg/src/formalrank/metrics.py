"""Selection-quality metrics and the comparison ranking methods.

n@k: fraction of problems whose top-n ranked candidates include a correct
one.  The labeling-cost curve functional sigma and the relative efficiency
E = 1 - sigma/sigma_ref quantify saved human verification effort.  The
three comparison methods (log-probability baseline, prover filter,
embedding clusters) emit the same RankingReport shape as the main
pipeline, so the evaluation harness is method-agnostic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import LabeledProblem, Problem
from .equiv import check_statement_equivalence, prove_statement
from .parser import ParseError, parse_statement
from .scoring import RankingReport, extended_order
from .semantic import EmbeddingProvider, cosine_similarity


class MissingLabel(Exception):
    pass


class NonMonotoneCurve(Exception):
    pass


class DivisionByZeroReference(Exception):
    pass


@dataclass
class EvalResult:
    method: str
    n_at_k: dict[int, float]
    sigma_paper: float
    sigma_inspected: float
    relative_efficiency: float | None = None


# --- Correctness labels ----------------------------------------------------


def correctness_labels(
    labeled: LabeledProblem, backends, top_k: int = 3
) -> dict[str, bool]:
    """Per-candidate correctness, from manual labels or the oracle.

    Oracle mode calls the equivalence checker against the reference
    statement; unparseable candidates are incorrect.
    """
    problem = labeled.problem
    if labeled.manual:
        return labeled.label_map()
    if problem.oracle_formal is None:
        raise MissingLabel(f"problem {problem.id} has no labels and no oracle")
    try:
        oracle = parse_statement(problem.oracle_formal)
    except ParseError as exc:
        raise MissingLabel(f"oracle for {problem.id} does not parse: {exc}") from exc
    labels: dict[str, bool] = {}
    for candidate in problem.candidates:
        candidate.ensure_parsed()
        if candidate.parse is None:
            labels[candidate.id] = False
            continue
        outcome = check_statement_equivalence(
            candidate.parse, oracle, backends, top_k=top_k
        )
        labels[candidate.id] = outcome.is_proved
    return labels


# --- n@k and labeling cost ---------------------------------------------------


def n_at_k(
    reports: list[RankingReport],
    labels_by_problem: dict[str, dict[str, bool]],
    n: int,
) -> float:
    """Fraction of problems whose top-n selection contains a correct
    candidate (partial selections are extended to a total order)."""
    if not reports:
        return 0.0
    hits = 0
    for report in reports:
        labels = labels_by_problem.get(report.problem_id)
        if labels is None:
            raise MissingLabel(f"no labels for problem {report.problem_id}")
        order = extended_order(report, list(labels.keys()))
        if any(labels[cid] for cid in order[:n]):
            hits += 1
    return hits / len(reports)


def accuracy_curve(
    reports: list[RankingReport],
    labels_by_problem: dict[str, dict[str, bool]],
    k: int,
) -> list[float]:
    return [n_at_k(reports, labels_by_problem, n) for n in range(1, k + 1)]


def labeling_cost(curve: list[float], variant: str = "paper") -> float:
    """Average labeling cost of an n@k accuracy curve (n = 1..k).

    ``paper`` is the verbatim expression
    ``sum_{n=2}^{k-1} n*(n@k - (n-1)@k) + (1 - k@k)``; ``inspected`` adds
    the n=1 term ``1*(1@k)`` so the value counts labels actually read.
    """
    if variant not in ("paper", "inspected"):
        raise ValueError(f"unknown sigma variant {variant!r}")
    if not curve:
        raise NonMonotoneCurve("empty curve")
    for earlier, later in zip(curve, curve[1:]):
        if later < earlier - 1e-12:
            raise NonMonotoneCurve(f"{later} after {earlier}")
    k = len(curve)
    total = sum(n * (curve[n - 1] - curve[n - 2]) for n in range(2, k))
    total += 1.0 - curve[k - 1]
    if variant == "inspected":
        total += curve[0]
    return total


def relative_efficiency(sigma: float, sigma_ref: float) -> float:
    """E = 1 - sigma/sigma_ref; negative when the method is worse than
    the reference."""
    if sigma_ref <= 0.0:
        raise DivisionByZeroReference(f"reference cost {sigma_ref}")
    return 1.0 - sigma / sigma_ref


def evaluate_method(
    method: str,
    reports: list[RankingReport],
    labels_by_problem: dict[str, dict[str, bool]],
    k: int,
    ns: tuple[int, ...] = (1, 2, 3),
    sigma_ref: float | None = None,
) -> EvalResult:
    curve = accuracy_curve(reports, labels_by_problem, k)
    result = EvalResult(
        method=method,
        n_at_k={n: curve[n - 1] for n in ns if n <= k},
        sigma_paper=labeling_cost(curve, "paper"),
        sigma_inspected=labeling_cost(curve, "inspected"),
    )
    if sigma_ref is not None:
        result.relative_efficiency = relative_efficiency(result.sigma_paper, sigma_ref)
    return result


# --- Comparison ranking methods ----------------------------------------------


def _singleton_report(problem: Problem, order: list[int], scores, tag) -> RankingReport:
    ids = [problem.candidates[i].id for i in order]
    return RankingReport(
        problem_id=problem.id,
        selection=[(cid, float(scores[i])) for cid, i in zip(ids, order)],
        removed_classes=[[cid] for cid in ids],
        strategy=tag,
    )


def rank_baseline_logprob(problem: Problem) -> RankingReport:
    """Descending model log-probability; an explicit rank list overrides;
    with neither, input order is preserved."""
    k = len(problem.candidates)
    indices = list(range(k))
    if any(c.baseline_rank is not None for c in problem.candidates):
        indices.sort(
            key=lambda i: (
                problem.candidates[i].baseline_rank is None,
                problem.candidates[i].baseline_rank
                if problem.candidates[i].baseline_rank is not None
                else 0,
                i,
            )
        )
    elif any(c.logprob is not None for c in problem.candidates):
        indices.sort(
            key=lambda i: (
                -(problem.candidates[i].logprob
                  if problem.candidates[i].logprob is not None
                  else float("-inf")),
                i,
            )
        )
    scores = [
        c.logprob if c.logprob is not None else 0.0 for c in problem.candidates
    ]
    return _singleton_report(problem, indices, scores, "baseline")


def rank_naive_filter(problem: Problem, backends) -> RankingReport:
    """Candidates the prover can outright prove come first (stable),
    the rest keep input order."""
    provable = []
    rest = []
    for i, candidate in enumerate(problem.candidates):
        candidate.ensure_parsed()
        ok = (
            candidate.parse is not None
            and prove_statement(candidate.parse, backends).is_proved
        )
        (provable if ok else rest).append(i)
    order = provable + rest
    scores = [1.0 if i in set(provable) else 0.0 for i in range(len(problem.candidates))]
    return _singleton_report(problem, order, scores, "naive")


def rank_cluster(
    problem: Problem,
    provider: EmbeddingProvider,
    threshold: float = 0.9,
    seed: int = 0,
) -> RankingReport:
    """Adaptive k-means over formal-text embeddings.

    Starting from one cluster, the cluster with the lowest mean
    member-to-centroid similarity is split (farthest-point init, Lloyd
    refinement) until every cluster passes the threshold or K = k.
    Ranking: bigger clusters first, centroid proximity within.
    """
    texts = [c.formal_text for c in problem.candidates]
    k = len(texts)
    if k == 0:
        return _singleton_report(problem, [], [], "cluster")
    vectors = np.stack([provider.embed(t) for t in texts])
    clusters = _adaptive_kmeans(vectors, threshold)
    ranked: list[tuple[tuple, int]] = []
    for cluster in clusters:
        centroid = vectors[cluster].mean(axis=0)
        for i in cluster:
            sim = cosine_similarity(vectors[i], centroid)
            ranked.append(((-len(cluster), min(cluster), -sim, i), i))
    ranked.sort(key=lambda pair: pair[0])
    order = [i for _, i in ranked]
    sims = {i: -key[2] for key, i in ranked}
    return _singleton_report(
        problem, order, [sims.get(i, 0.0) for i in range(k)], "cluster"
    )


def _adaptive_kmeans(vectors: np.ndarray, threshold: float) -> list[list[int]]:
    k = vectors.shape[0]
    clusters: list[list[int]] = [list(range(k))]

    def mean_intra(cluster: list[int]) -> float:
        if len(cluster) <= 1:
            return 1.0
        centroid = vectors[cluster].mean(axis=0)
        return float(
            np.mean([cosine_similarity(vectors[i], centroid) for i in cluster])
        )

    stuck: set[tuple[int, ...]] = set()
    while len(clusters) < k:
        splittable = [
            (mean_intra(c), idx)
            for idx, c in enumerate(clusters)
            if len(c) > 1 and mean_intra(c) < threshold
            and tuple(c) not in stuck
        ]
        if not splittable:
            break
        splittable.sort()
        _, idx = splittable[0]
        halves = _split_cluster(vectors, clusters[idx])
        if len(halves) == 1:  # degenerate cluster refuses to separate
            stuck.add(tuple(clusters[idx]))
            continue
        clusters[idx: idx + 1] = halves
    return clusters


def _split_cluster(vectors: np.ndarray, cluster: list[int]) -> list[list[int]]:
    centroid = vectors[cluster].mean(axis=0)
    distances = [float(np.linalg.norm(vectors[i] - centroid)) for i in cluster]
    first = cluster[int(np.argmax(distances))]
    away = [float(np.linalg.norm(vectors[i] - vectors[first])) for i in cluster]
    second = cluster[int(np.argmax(away))]
    if first == second:
        second = next(i for i in cluster if i != first)
    seeds = vectors[[first, second]].copy()
    assignment = [0] * len(cluster)
    for _ in range(20):
        changed = False
        for pos, i in enumerate(cluster):
            pick = int(
                np.argmin([np.linalg.norm(vectors[i] - s) for s in seeds])
            )
            if pick != assignment[pos]:
                assignment[pos] = pick
                changed = True
        for side in (0, 1):
            members = [i for pos, i in enumerate(cluster) if assignment[pos] == side]
            if members:
                seeds[side] = vectors[members].mean(axis=0)
        if not changed:
            break
    left = [i for pos, i in enumerate(cluster) if assignment[pos] == 0]
    right = [i for pos, i in enumerate(cluster) if assignment[pos] == 1]
    if not left or not right:
        return [cluster]
    return [left, right]
