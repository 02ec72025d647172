"""Top-k maximum-weight bipartite matching.

Variable alignment reduces to an assignment problem on a padded square
weight matrix.  The best assignment comes from the Hungarian method
(scipy's solver); the next-best ones from Murty-style partitioning of the
assignment space, which guarantees descending weight order and no
duplicates.  Forbidden pairings carry weight ``-inf``.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

PAD = "\x00pad"  # prefix for dummy vertices added to the smaller side

FORBIDDEN = float("-inf")


class DimensionMismatch(Exception):
    """Weight matrix is not square or does not match the vertex lists."""


@dataclass(frozen=True)
class MatchingProblem:
    """Bipartite matching instance over already-padded vertex lists."""

    left: tuple[str, ...]
    right: tuple[str, ...]
    weights: tuple[tuple[float, ...], ...]

    def validate(self) -> None:
        n = len(self.left)
        if len(self.right) != n:
            raise DimensionMismatch(
                f"{len(self.left)} left vs {len(self.right)} right vertices"
            )
        if len(self.weights) != n or any(len(row) != n for row in self.weights):
            raise DimensionMismatch("weight matrix does not match vertex lists")


@dataclass(frozen=True)
class Matching:
    """One bijection: pairs[i] is the right index assigned to left index i."""

    pairs: tuple[int, ...]
    weight: float

    def as_dict(self, problem: MatchingProblem) -> dict[str, str]:
        """Real-to-real pairings only; dummy pairings mean 'unmatched'."""
        out = {}
        for i, j in enumerate(self.pairs):
            left, right = problem.left[i], problem.right[j]
            if not left.startswith(PAD) and not right.startswith(PAD):
                out[left] = right
        return out


def pad_problem(
    left: list[str], right: list[str], weights: list[list[float]]
) -> MatchingProblem:
    """Square up a rectangular instance with zero-weight dummy vertices."""
    n = max(len(left), len(right))
    full_left = list(left) + [f"{PAD}{i}" for i in range(n - len(left))]
    full_right = list(right) + [f"{PAD}{i}" for i in range(n - len(right))]
    matrix = []
    for i in range(n):
        row = []
        for j in range(n):
            if i < len(left) and j < len(right):
                row.append(float(weights[i][j]))
            else:
                row.append(0.0)  # dummy pairings are free, never forbidden
        matrix.append(tuple(row))
    return MatchingProblem(tuple(full_left), tuple(full_right), tuple(matrix))


def top_k_matchings(problem: MatchingProblem, k: int) -> list[Matching]:
    """Up to ``k`` distinct maximum-weight bijections, best first.

    The first entry attains the global optimum.  Bijections that would use
    a forbidden edge are never produced; fewer than ``k`` results means the
    space is exhausted.
    """
    problem.validate()
    if k <= 0:
        return []
    n = len(problem.left)
    if n == 0:
        return [Matching((), 0.0)]
    weights = np.array(problem.weights, dtype=float)
    cost = np.where(np.isneginf(weights), np.inf, -weights)

    counter = itertools.count()
    results: list[Matching] = []
    best = _solve(cost)
    if best is None:
        return []
    heap = [(best[1], best[0], next(counter), (), ())]
    while heap and len(results) < k:
        total, perm, _, fixed, excluded = heapq.heappop(heap)
        results.append(Matching(perm, -total))
        fixed_now = list(fixed)
        for i in range(n):
            pair = (i, perm[i])
            if pair in fixed_now:
                continue
            child = _solve(cost, tuple(fixed_now), excluded + (pair,))
            if child is not None:
                heapq.heappush(
                    heap,
                    (child[1], child[0], next(counter), tuple(fixed_now), excluded + (pair,)),
                )
            fixed_now.append(pair)
    return results


def _solve(cost, fixed=(), excluded=()):
    """Optimal assignment under forced and forbidden pairs; None if infeasible."""
    work = cost.copy()
    for i, j in excluded:
        work[i, j] = np.inf
    for i, j in fixed:
        row = np.full(work.shape[1], np.inf)
        row[j] = work[i, j]
        work[i] = row
    try:
        rows, cols = linear_sum_assignment(work)
    except ValueError:
        return None
    total = work[rows, cols].sum()
    if not np.isfinite(total):
        return None
    perm = tuple(int(c) for c in cols[np.argsort(rows)])
    return perm, float(total)
