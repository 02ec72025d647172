"""Rewrite statements into comparable standard form.

Case 1 (numerical conclusion ``f(x...) ⋈ 0``): introduce a fresh goal
variable so the conclusion becomes ``goal ⋈ 0`` and the defining equality
joins the premises.  Case 2 (everything else): align the two statements'
variables by top-k maximum bipartite matching on string edit distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .matching import FORBIDDEN, Matching, MatchingProblem, pad_problem, top_k_matchings
from .normalform import eliminate_defined
from .parser import ANY, term_sort
from .statement import (
    Arrow,
    Compare,
    FormalStatement,
    NAT,
    NumLit,
    REAL,
    Sort,
    Sub,
    Var,
    VarDecl,
    all_names,
    free_variables,
    rename_statement,
)

GOAL_BASE = "alpha"


class ArityMismatch(Exception):
    """Variable sets cannot be matched even after padding."""


@dataclass
class StandardizedStatement:
    statement: FormalStatement
    kind: str  # "numerical" | "aligned"
    goal_var: str | None = None
    renaming: dict[str, str] = field(default_factory=dict)


def is_numerical_goal(statement: FormalStatement) -> bool:
    """True when the conclusion is a bare arithmetic comparison.

    nat-sorted comparisons are excluded: rewriting them through a
    subtraction would change meaning (nat subtraction truncates), so they
    take the variable-alignment route instead.
    """
    conclusion = statement.conclusion
    if not isinstance(conclusion, Compare):
        return False
    env = {d.name: d.sort for d in statement.fixes}
    try:
        left = term_sort(conclusion.left, env)
        right = term_sort(conclusion.right, env)
    except Exception:
        return False
    return NAT not in (left, right)


def standardize_numerical(statement: FormalStatement) -> StandardizedStatement:
    """Case 1: conclusion ``lhs ⋈ rhs`` becomes premise ``goal = lhs - rhs``
    plus conclusion ``goal ⋈ 0``; original variables stay as auxiliaries."""
    conclusion = statement.conclusion
    assert isinstance(conclusion, Compare)
    goal = _fresh_goal_name(statement)
    difference = Sub(conclusion.left, conclusion.right)
    env = {d.name: d.sort for d in statement.fixes}
    sort = term_sort(difference, env)
    if sort == ANY:
        sort = REAL
    rewritten = FormalStatement(
        fixes=statement.fixes + (VarDecl(goal, sort),),
        premises=statement.premises + (Compare(Var(goal), "=", difference),),
        conclusion=Compare(Var(goal), conclusion.op, NumLit(0)),
        source_text=statement.source_text,
    )
    return StandardizedStatement(rewritten, "numerical", goal_var=goal)


def _fresh_goal_name(statement: FormalStatement) -> str:
    taken = {d.name for d in statement.fixes}
    if GOAL_BASE not in taken:
        return GOAL_BASE
    i = 1
    while f"{GOAL_BASE}_{i}" in taken:
        i += 1
    return f"{GOAL_BASE}_{i}"


# --- Edit distance -----------------------------------------------------------


def levenshtein(a: str, b: str) -> int:
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return previous[-1]


def normalized_edit_distance(a: str, b: str) -> float:
    """Levenshtein distance scaled into [0, 1]; 0 iff the strings match."""
    return levenshtein(a, b) / max(len(a), len(b), 1)


# --- Case 2: variable alignment ----------------------------------------------


def _alignable_variables(statement: FormalStatement) -> list[str]:
    """Free variables that actually need matching.

    Variables pinned down by a defining premise equality (``n = a+b+...``)
    are projected away during the equivalence check, so they stay out of
    the matching and keep their names.
    """
    names = set(free_variables(statement))
    _, _, eliminated = eliminate_defined(
        list(statement.premises), names, [statement.conclusion]
    )
    return [n for n in free_variables(statement) if n not in eliminated]


def build_matching_problem(s1: FormalStatement, s2: FormalStatement) -> MatchingProblem:
    """Similarity-weighted bipartite instance between the two variable sets.

    Weight is ``1 - normalized_edit_distance``; pairs of different sorts are
    forbidden; the smaller side is padded with zero-weight dummies (a
    dummy pairing leaves the variable unrenamed).
    """
    left = _alignable_variables(s1)
    right = _alignable_variables(s2)
    sort1 = {d.name: d.sort for d in s1.fixes}
    sort2 = {d.name: d.sort for d in s2.fixes}
    weights = []
    for a in left:
        row = []
        for b in right:
            if sort1[a] != sort2[b]:
                row.append(FORBIDDEN)
            else:
                row.append(1.0 - normalized_edit_distance(a, b))
        weights.append(row)
    return pad_problem(left, right, weights)


@dataclass
class AlignedPair:
    """One candidate alignment: both statements with matched variables
    renamed to the same canonical names."""

    left: FormalStatement
    right: FormalStatement
    shared: tuple[VarDecl, ...]
    renaming_left: dict[str, str]
    renaming_right: dict[str, str]
    weight: float


def align_pair(
    s1: FormalStatement, s2: FormalStatement, k: int
) -> list[AlignedPair]:
    """Top-k alignments of s2's variables onto s1's, canonically renamed.

    Raises ArityMismatch when no sort-compatible perfect matching exists on
    the padded instance.
    """
    problem = build_matching_problem(s1, s2)
    if not problem.left:
        return [AlignedPair(s1, s2, (), {}, {}, 0.0)]
    matchings = top_k_matchings(problem, k)
    if not matchings:
        raise ArityMismatch(
            f"no sort-compatible matching between {problem.left} and {problem.right}"
        )
    sort1 = {d.name: d.sort for d in s1.fixes}
    order1 = {name: i for i, name in enumerate(free_variables(s1))}
    results = []
    for matching in matchings:
        pairs = sorted(matching.as_dict(problem).items(), key=lambda kv: order1[kv[0]])
        prefix = _canonical_prefix(s1, s2, [a for a, _ in pairs], [b for _, b in pairs])
        renaming1 = {a: f"{prefix}{i + 1}" for i, (a, _) in enumerate(pairs)}
        renaming2 = {b: f"{prefix}{i + 1}" for i, (_, b) in enumerate(pairs)}
        shared = tuple(
            VarDecl(f"{prefix}{i + 1}", sort1[a]) for i, (a, _) in enumerate(pairs)
        )
        results.append(
            AlignedPair(
                left=rename_statement(s1, renaming1),
                right=rename_statement(s2, renaming2),
                shared=shared,
                renaming_left=renaming1,
                renaming_right=renaming2,
                weight=matching.weight,
            )
        )
    return results


def _canonical_prefix(
    s1: FormalStatement,
    s2: FormalStatement,
    renamed1: list[str],
    renamed2: list[str],
) -> str:
    """Shortest prefix whose numbered names collide with nothing kept."""
    kept = (all_names(s1) - set(renamed1)) | (all_names(s2) - set(renamed2))
    n = len(renamed1)
    for prefix in ("v", "u", "w", "vv", "uu", "ww"):
        if all(f"{prefix}{i + 1}" not in kept for i in range(n)):
            return prefix
    return "canonvar"


def align_variables(
    s1: FormalStatement, s2: FormalStatement, k: int
) -> list[FormalStatement]:
    """s2 renamed per each of the top-k matchings (best first)."""
    return [pair.right for pair in align_pair(s1, s2, k)]
