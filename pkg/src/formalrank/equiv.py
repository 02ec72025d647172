"""Symbolic equivalence of statements and the candidate partition.

Two statements are symbolically equivalent when their premise sets and
conclusions are each logically equivalent (over shared variables, with
auxiliaries existentially projected).  Candidates are grouped into
equivalence classes with a union-find; pairs already connected are
skipped thanks to transitivity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .normalform import eliminate_defined
from .provers import (
    DISPROVED,
    EquivalenceQuery,
    PROVED,
    ProofOutcome,
    ProverBackend,
    QuerySide,
    UNKNOWN,
    prove_with_chain,
)
from .standardize import (
    AlignedPair,
    ArityMismatch,
    StandardizedStatement,
    align_pair,
    is_numerical_goal,
    standardize_numerical,
)
from .statement import (
    Arrow,
    Compare,
    FormalStatement,
    Formula,
    NumLit,
    VarDecl,
    all_names,
    formula_free_vars,
    free_variables,
    funapp_names,
    print_statement,
    rename_statement,
)

_CONTRADICTION = Compare(NumLit(0), "=", NumLit(1))


def _side_for(
    statement: FormalStatement, formulas: Sequence[Formula], shared_names: set[str]
) -> QuerySide:
    """Auxiliary declarations actually used by the given formulas."""
    used_vars: set[str] = set()
    used_fns: set[str] = set()
    for f in formulas:
        used_vars |= formula_free_vars(f)
        used_fns |= funapp_names(f)
    aux = tuple(
        d
        for d in statement.fixes
        if d.name not in shared_names
        and (
            d.name in used_vars
            or (isinstance(d.sort, Arrow) and d.name in used_fns)
        )
    )
    return QuerySide(tuple(formulas), aux)


def _reduce_statement(
    statement: FormalStatement, keep: set[str]
) -> tuple[list[Formula], Formula]:
    """Project out auxiliary variables pinned by a defining premise,
    rewriting the conclusion along the way."""
    eligible = set(free_variables(statement)) - keep
    premises, carried, _ = eliminate_defined(
        list(statement.premises), eligible, [statement.conclusion]
    )
    return premises, carried[0]


def _queries_for_pair(
    s1: FormalStatement,
    s2: FormalStatement,
    shared: tuple[VarDecl, ...],
) -> list[EquivalenceQuery] | None:
    """Premise-set and conclusion queries for an aligned statement pair.

    Returns None when the conclusions mention auxiliaries that cannot be
    folded into the comparison (mismatched signature).
    """
    shared_names = {d.name for d in shared}
    premises1, conclusion1 = _reduce_statement(s1, shared_names)
    premises2, conclusion2 = _reduce_statement(s2, shared_names)
    premise_query = EquivalenceQuery(
        shared,
        _side_for(s1, premises1, shared_names),
        _side_for(s2, premises2, shared_names),
    )
    folded = _fold_conclusion_query(s1, conclusion1, s2, conclusion2, shared)
    if folded is None:
        return None
    return [premise_query, folded]


def _fold_conclusion_query(
    s1: FormalStatement,
    conclusion1: Formula,
    s2: FormalStatement,
    conclusion2: Formula,
    shared: tuple[VarDecl, ...],
) -> EquivalenceQuery | None:
    """Conclusions are compared as set comprehensions over every variable
    they mention: leftover non-shared variables are renamed positionally
    into the shared tuple when their sort signatures line up."""
    shared_names = {d.name for d in shared}
    sorts1 = {d.name: d.sort for d in s1.fixes}
    sorts2 = {d.name: d.sort for d in s2.fixes}
    extra1 = [n for n in _ordered_vars(conclusion1) if n not in shared_names]
    extra2 = [n for n in _ordered_vars(conclusion2) if n not in shared_names]
    fns1 = funapp_names(conclusion1)
    fns2 = funapp_names(conclusion2)
    if [sorts1[n] for n in extra1] != [sorts2[n] for n in extra2]:
        return None
    taken = all_names(s1) | all_names(s2) | shared_names
    renaming1: dict[str, str] = {}
    renaming2: dict[str, str] = {}
    extra_decls: list[VarDecl] = []
    for i, (a, b) in enumerate(zip(extra1, extra2)):
        fresh = _fresh(f"cv{i + 1}", taken)
        taken.add(fresh)
        renaming1[a] = fresh
        renaming2[b] = fresh
        extra_decls.append(VarDecl(fresh, sorts1[a]))
    if renaming1:
        from .statement import _rename_formula

        conclusion1 = _rename_formula(conclusion1, renaming1)
        conclusion2 = _rename_formula(conclusion2, renaming2)
    full_shared = shared + tuple(extra_decls)
    side1 = _side_for(s1, [conclusion1], {d.name for d in full_shared})
    side2 = _side_for(s2, [conclusion2], {d.name for d in full_shared})
    if side1.aux or side2.aux:
        # only function symbols can remain; keep them side-local
        if any(not isinstance(d.sort, Arrow) for d in side1.aux + side2.aux):
            return None
    return EquivalenceQuery(full_shared, side1, side2)


def _ordered_vars(formula: Formula) -> list[str]:
    from .statement import (
        And,
        Compare,
        Divides,
        Exists,
        Forall,
        FunApp,
        Implies,
        Neg,
        Not,
        Or,
        PredApp,
        Var,
    )
    from .statement import Add, Div, Mod, Mul, PowNat, PowReal, Sub

    order: list[str] = []

    def walk_term(t, bound):
        if isinstance(t, Var):
            if t.name not in bound and t.name not in order:
                order.append(t.name)
        elif isinstance(t, Neg):
            walk_term(t.child, bound)
        elif isinstance(t, (Add, Sub, Mul, Div, Mod)):
            walk_term(t.left, bound)
            walk_term(t.right, bound)
        elif isinstance(t, (PowNat, PowReal)):
            walk_term(t.base, bound)
            walk_term(t.exponent, bound)
        elif isinstance(t, FunApp):
            for a in t.args:
                walk_term(a, bound)

    def walk(f, bound):
        if isinstance(f, (Compare, Divides)):
            walk_term(f.left, bound)
            walk_term(f.right, bound)
        elif isinstance(f, (And, Or, Implies)):
            walk(f.left, bound)
            walk(f.right, bound)
        elif isinstance(f, Not):
            walk(f.child, bound)
        elif isinstance(f, (Forall, Exists)):
            walk(f.body, bound | {f.var.name})
        elif isinstance(f, PredApp):
            for a in f.args:
                walk_term(a, bound)

    walk(formula, set())
    return order


def _fresh(base: str, taken: set[str]) -> str:
    if base not in taken:
        return base
    i = 1
    while f"{base}_{i}" in taken:
        i += 1
    return f"{base}_{i}"


def _numerical_pair_queries(
    std1: StandardizedStatement, std2: StandardizedStatement
) -> list[EquivalenceQuery] | None:
    s1, s2 = std1.statement, std2.statement
    sort1 = s1.sort_of(std1.goal_var)
    sort2 = s2.sort_of(std2.goal_var)
    if sort1 != sort2:
        return None
    taken = (all_names(s1) - {std1.goal_var}) | (all_names(s2) - {std2.goal_var})
    common = std1.goal_var if std1.goal_var not in taken else _fresh("alpha", taken)
    if std1.goal_var != common:
        s1 = rename_statement(s1, {std1.goal_var: common})
    if std2.goal_var != common:
        s2 = rename_statement(s2, {std2.goal_var: common})
    return _queries_for_pair(s1, s2, (VarDecl(common, sort1),))


def check_equivalence(
    std1: StandardizedStatement,
    std2: StandardizedStatement,
    backends: Sequence[ProverBackend],
) -> ProofOutcome:
    """Decide equivalence of one standardized pair (same kind; Case 2
    inputs already aligned)."""
    if std1.kind != std2.kind:
        return ProofOutcome(UNKNOWN, 0.0, "structural", "mixed standardization kinds")
    if print_statement(std1.statement) == print_statement(std2.statement):
        return ProofOutcome(PROVED, 0.0, "syntactic", "identical statements")
    if std1.kind == "numerical":
        queries = _numerical_pair_queries(std1, std2)
    else:
        shared = _common_shared(std1.statement, std2.statement)
        queries = _queries_for_pair(std1.statement, std2.statement, shared)
    if queries is None:
        return ProofOutcome(UNKNOWN, 0.0, "structural", "incomparable statements")
    return _verdict([prove_with_chain(q, backends) for q in queries])


def _common_shared(
    s1: FormalStatement, s2: FormalStatement
) -> tuple[VarDecl, ...]:
    sorts2 = {d.name: d.sort for d in s2.fixes}
    names2 = set(free_variables(s2))
    return tuple(
        d
        for d in s1.fixes
        if d.name in names2 and sorts2[d.name] == d.sort
        and d.name in free_variables(s1)
    )


def _verdict(outcomes: list[ProofOutcome]) -> ProofOutcome:
    elapsed = sum(o.elapsed for o in outcomes)
    seen: list[str] = []
    for o in outcomes:
        if o.backend not in seen:
            seen.append(o.backend)
    backend = "+".join(seen) if seen else "none"
    if all(o.is_proved for o in outcomes):
        return ProofOutcome(PROVED, elapsed, backend)
    for o in outcomes:
        if o.is_disproved:
            return ProofOutcome(DISPROVED, elapsed, o.backend, o.detail)
    return ProofOutcome(UNKNOWN, elapsed, backend)


def check_statement_equivalence(
    s1: FormalStatement,
    s2: FormalStatement,
    backends: Sequence[ProverBackend],
    top_k: int = 3,
) -> ProofOutcome:
    """Full pairwise check: standardize, align if needed, try the chain.

    For Case 2 the pair is Proved if any of the top-k alignments proves;
    Disproved only when the alignment space was exhausted and every
    alignment was disproved.
    """
    if print_statement(s1) == print_statement(s2):
        return ProofOutcome(PROVED, 0.0, "syntactic", "identical statements")
    numeric1, numeric2 = is_numerical_goal(s1), is_numerical_goal(s2)
    if numeric1 != numeric2:
        return ProofOutcome(UNKNOWN, 0.0, "structural", "mixed conclusion shapes")
    if numeric1:
        return check_equivalence(
            standardize_numerical(s1), standardize_numerical(s2), backends
        )
    try:
        pairs = align_pair(s1, s2, top_k)
    except ArityMismatch as exc:
        return ProofOutcome(UNKNOWN, 0.0, "structural", str(exc))
    exhausted = len(pairs) < top_k
    results = []
    elapsed = 0.0
    for pair in pairs:
        queries = _queries_for_pair(pair.left, pair.right, pair.shared)
        if queries is None:
            results.append(ProofOutcome(UNKNOWN, 0.0, "structural"))
            continue
        outcome = _verdict([prove_with_chain(q, backends) for q in queries])
        elapsed += outcome.elapsed
        if outcome.is_proved:
            mapping = ", ".join(f"{a}->{b}" for a, b in pair.renaming_right.items())
            return ProofOutcome(PROVED, elapsed, outcome.backend, mapping)
        results.append(outcome)
    if exhausted and results and all(o.is_disproved for o in results):
        return ProofOutcome(DISPROVED, elapsed, results[0].backend, results[0].detail)
    return ProofOutcome(UNKNOWN, elapsed, results[-1].backend if results else "none")


def check_premise_contradiction(
    statement: FormalStatement, backends: Sequence[ProverBackend]
) -> ProofOutcome:
    """Proved means the premises are contradictory (P proves 0 = 1)."""
    side = _side_for(statement, list(statement.premises), set())
    query = EquivalenceQuery(
        (), side, QuerySide((_CONTRADICTION,), ())
    )
    return prove_with_chain(query, backends)


def prove_statement(
    statement: FormalStatement, backends: Sequence[ProverBackend]
) -> ProofOutcome:
    """Is the statement itself a theorem?  Checks P ∧ ¬Q unsatisfiable."""
    from .statement import Not

    formulas = list(statement.premises) + [Not(statement.conclusion)]
    side = _side_for(statement, formulas, set())
    query = EquivalenceQuery((), side, QuerySide((_CONTRADICTION,), ()))
    return prove_with_chain(query, backends)


# --- Partition -----------------------------------------------------------------


@dataclass
class EquivalencePartition:
    """Union-find over candidate indices with proof evidence."""

    candidate_ids: list[str]
    parent: list[int] = field(default_factory=list)
    size: list[int] = field(default_factory=list)
    evidence: dict[tuple[int, int], ProofOutcome] = field(default_factory=dict)
    checks_performed: int = 0
    checks_skipped: int = 0
    opaque: set[int] = field(default_factory=set)
    degenerate: set[int] = field(default_factory=set)

    def __post_init__(self):
        if not self.parent:
            self.parent = list(range(len(self.candidate_ids)))
            self.size = [1] * len(self.candidate_ids)

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:  # path compression
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return
        if self.size[ri] < self.size[rj]:
            ri, rj = rj, ri
        self.parent[rj] = ri
        self.size[ri] += self.size[rj]

    def same(self, i: int, j: int) -> bool:
        return self.find(i) == self.find(j)

    def class_size(self, i: int) -> int:
        return self.size[self.find(i)]

    def classes(self) -> list[list[int]]:
        groups: dict[int, list[int]] = {}
        for i in range(len(self.candidate_ids)):
            groups.setdefault(self.find(i), []).append(i)
        return sorted(groups.values(), key=lambda g: g[0])


def partition_candidates(
    parsed: Sequence[FormalStatement | None],
    backends: Sequence[ProverBackend],
    ids: Sequence[str] | None = None,
    top_k: int = 3,
) -> EquivalencePartition:
    """Group candidates into symbolic-equivalence classes.

    Unparsed (opaque) and contradictory-premise (degenerate) candidates
    form singleton classes.  Pairs already connected through earlier
    merges are skipped; iteration order is fixed so the result is
    deterministic given deterministic backends.
    """
    k = len(parsed)
    if ids is None:
        ids = [str(i) for i in range(k)]
    partition = EquivalencePartition(candidate_ids=list(ids))
    for i, statement in enumerate(parsed):
        if statement is None:
            partition.opaque.add(i)
        elif check_premise_contradiction(statement, backends).is_proved:
            partition.degenerate.add(i)
    inert = partition.opaque | partition.degenerate
    for i in range(k):
        for j in range(i + 1, k):
            if i in inert or j in inert:
                partition.checks_skipped += 1
                continue
            if partition.same(i, j):
                partition.checks_skipped += 1
                continue
            outcome = check_statement_equivalence(
                parsed[i], parsed[j], backends, top_k=top_k
            )
            partition.checks_performed += 1
            partition.evidence[(i, j)] = outcome
            if outcome.is_proved:
                partition.union(i, j)
    return partition


def symbolic_scores(partition: EquivalencePartition) -> list[float]:
    """Per-candidate score: relative size of its equivalence class."""
    k = len(partition.candidate_ids)
    return [partition.class_size(i) / k for i in range(k)]
