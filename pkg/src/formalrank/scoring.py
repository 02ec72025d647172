"""Score normalization, combination, and iterative top-n selection.

Raw symbolic and semantic scores are ratio-normalized to sum to one,
combined per the chosen strategy (log, linear, or quadratic with trade-off
weight alpha), and the best candidate is picked repeatedly with its whole
equivalence class removed and the survivors renormalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .equiv import EquivalencePartition

LOG_FLOOR = 1e-9  # semantic scores can be exactly 0 after failures

STRATEGIES = ("log", "linear", "quad")


@dataclass(frozen=True)
class CombinationStrategy:
    rho: str = "log"
    alpha: float = 0.5

    def __post_init__(self):
        if self.rho not in STRATEGIES:
            raise ValueError(f"unknown combination strategy {self.rho!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


def normalize(raw: list[float], true_softmax: bool = False) -> list[float]:
    """Scale nonnegative scores to sum to 1; all-zero input becomes uniform.

    ``true_softmax`` switches to exp-weighting (off by default; the ratio
    form is the documented behavior).
    """
    if not raw:
        return []
    if any(x < 0 for x in raw):
        raise ValueError("scores must be nonnegative")
    if true_softmax:
        peak = max(raw)
        weights = [math.exp(x - peak) for x in raw]
        total = sum(weights)
        return [w / total for w in weights]
    total = sum(raw)
    if total == 0:
        return [1.0 / len(raw)] * len(raw)
    return [x / total for x in raw]


def combine(
    sym_norm: list[float], sem_norm: list[float], strategy: CombinationStrategy
) -> list[float]:
    """Final score per candidate from the two normalized score lists."""
    if len(sym_norm) != len(sem_norm):
        raise ValueError("score lists differ in length")
    a = strategy.alpha
    if strategy.rho == "log":
        return [
            a * math.log(max(s, LOG_FLOOR)) + (1 - a) * math.log(max(t, LOG_FLOOR))
            for s, t in zip(sym_norm, sem_norm)
        ]
    if strategy.rho == "linear":
        return [a * s + (1 - a) * t for s, t in zip(sym_norm, sem_norm)]
    return [a * s * s + (1 - a) * t * t for s, t in zip(sym_norm, sem_norm)]


@dataclass
class ScoreVector:
    sym: list[float]
    sem: list[float]
    sym_norm: list[float] = field(default_factory=list)
    sem_norm: list[float] = field(default_factory=list)
    combined: list[float] = field(default_factory=list)

    @classmethod
    def compute(
        cls,
        sym: list[float],
        sem: list[float],
        strategy: CombinationStrategy,
        true_softmax: bool = False,
    ) -> "ScoreVector":
        sym_norm = normalize(sym, true_softmax)
        sem_norm = normalize(sem, true_softmax)
        return cls(
            sym=list(sym),
            sem=list(sem),
            sym_norm=sym_norm,
            sem_norm=sem_norm,
            combined=combine(sym_norm, sem_norm, strategy),
        )


@dataclass
class RankingReport:
    """Selection order with the classes removed at each step."""

    problem_id: str
    selection: list[tuple[str, float]]
    removed_classes: list[list[str]]
    strategy: str
    failed: bool = False
    error: str = ""

    def selected_ids(self) -> list[str]:
        return [cid for cid, _ in self.selection]


def select_top_n(
    candidate_ids: list[str],
    partition: EquivalencePartition,
    sym: list[float],
    sem: list[float],
    strategy: CombinationStrategy,
    n: int,
    problem_id: str = "",
    true_softmax: bool = False,
) -> RankingReport:
    """Iteratively pick the best-combined candidate, dropping its class.

    Each step renormalizes over the surviving candidates.  Ties go to the
    lowest candidate index.  Asking for more steps than there are classes
    returns one pick per class.
    """
    k = len(candidate_ids)
    active = list(range(k))
    selection: list[tuple[str, float]] = []
    removed_classes: list[list[str]] = []
    while active and len(selection) < n:
        vector = ScoreVector.compute(
            [sym[i] for i in active],
            [sem[i] for i in active],
            strategy,
            true_softmax,
        )
        best_pos = 0
        for pos in range(1, len(active)):
            if vector.combined[pos] > vector.combined[best_pos]:
                best_pos = pos
        winner = active[best_pos]
        selection.append((candidate_ids[winner], vector.combined[best_pos]))
        removed = [i for i in active if partition.same(i, winner)]
        removed_classes.append([candidate_ids[i] for i in removed])
        active = [i for i in active if i not in removed]
    return RankingReport(
        problem_id=problem_id,
        selection=selection,
        removed_classes=removed_classes,
        strategy=f"{strategy.rho}@{strategy.alpha}",
    )


def extended_order(report: RankingReport, all_ids: list[str]) -> list[str]:
    """Total order implied by a (possibly partial) selection.

    Representatives first, then the classmates removed alongside them in
    step order, then anything the selection never reached, in input order.
    """
    order = list(report.selected_ids())
    seen = set(order)
    for removed in report.removed_classes:
        for cid in removed:
            if cid not in seen:
                order.append(cid)
                seen.add(cid)
    for cid in all_ids:
        if cid not in seen:
            order.append(cid)
            seen.add(cid)
    return order
