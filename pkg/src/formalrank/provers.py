"""Prover backends deciding equivalence queries.

A query compares two formula sets over shared variables; non-shared
(auxiliary) variables are existentially projected.  Premise sets,
contradiction checks (``P ≡ false``) and whole-statement provability
(``P ∧ ¬Q ≡ false``) all take this shape.

Backends: a syntactic check, the built-in normalize-and-sample prover,
and an external SMT solver spoken to over SMT-LIB v2 on its standard
streams.  ``Unknown`` never merges anything.
"""

from __future__ import annotations

import re
import subprocess
from dataclasses import dataclass, field
from fractions import Fraction
from time import perf_counter

from .cache import JsonFileCache, content_key
from .normalform import (
    Undefined,
    canonical_conjunction,
    eliminate_defined,
    eval_conjunction,
    fkey,
    sample_assignments,
)
from .parser import ANY, BUILTIN_FUNCTIONS, term_sort
from .statement import (
    Add,
    And,
    Arrow,
    BOOL,
    Compare,
    Div,
    Divides,
    Exists,
    Forall,
    Formula,
    FunApp,
    Implies,
    INT,
    Mod,
    Mul,
    NAT,
    Neg,
    Not,
    NumLit,
    Or,
    PowNat,
    PowReal,
    PredApp,
    REAL,
    Sort,
    Sub,
    Term,
    Var,
    VarDecl,
    _rename_formula,
    formula_free_vars,
    funapp_names,
    print_formula,
    print_sort,
)

PROVED = "proved"
DISPROVED = "disproved"
UNKNOWN = "unknown"


class BackendUnavailable(Exception):
    """The prover process could not be spawned or spoken to."""


class MalformedSolverReply(Exception):
    """The solver answered something that is not sat/unsat/unknown."""


@dataclass
class ProofOutcome:
    status: str
    elapsed: float
    backend: str
    detail: str = ""

    @property
    def is_proved(self) -> bool:
        return self.status == PROVED

    @property
    def is_disproved(self) -> bool:
        return self.status == DISPROVED

    @property
    def is_unknown(self) -> bool:
        return self.status == UNKNOWN


@dataclass(frozen=True)
class QuerySide:
    formulas: tuple[Formula, ...]
    aux: tuple[VarDecl, ...]


@dataclass(frozen=True)
class EquivalenceQuery:
    """Is {shared | ∃aux_l. left} the same set as {shared | ∃aux_r. right}?"""

    shared: tuple[VarDecl, ...]
    left: QuerySide
    right: QuerySide

    def key(self) -> str:
        def side(s: QuerySide) -> str:
            decls = ",".join(f"{d.name}:{print_sort(d.sort)}" for d in s.aux)
            body = " & ".join(print_formula(f) for f in s.formulas)
            return f"[{decls}]{body}"

        shared = ",".join(f"{d.name}:{print_sort(d.sort)}" for d in self.shared)
        return f"({shared}) {side(self.left)} == {side(self.right)}"


class ProverBackend:
    """Interface shared by all provers."""

    name = "abstract"
    supports_quantifiers = False
    timeout = 0.0

    def prove(self, query: EquivalenceQuery) -> ProofOutcome:
        raise NotImplementedError


class SyntacticProver(ProverBackend):
    """Zero-cost stage: identical sides are equivalent."""

    name = "syntactic"
    supports_quantifiers = True
    timeout = 0.0

    def prove(self, query: EquivalenceQuery) -> ProofOutcome:
        same = (
            query.left.aux == query.right.aux
            and len(query.left.formulas) == len(query.right.formulas)
            and all(
                a == b for a, b in zip(query.left.formulas, query.right.formulas)
            )
        )
        status = PROVED if same else UNKNOWN
        return ProofOutcome(status, 0.0, self.name)


class BuiltinProver(ProverBackend):
    """Total, deterministic prover over exact rationals.

    Proof rule: after eliminating defined auxiliaries, both sides have the
    same canonical normal form (constant folding, canonical polynomials,
    flattened sorted connectives, auxiliaries renamed by first occurrence).
    Disproof rule: a sampled assignment certifies the two sets differ.
    Everything else is Unknown.  The work budget is a sample count rather
    than wall time so results do not depend on machine speed.
    """

    name = "builtin"
    supports_quantifiers = False
    timeout = 0.05  # advisory; determinism comes from the sample budget

    def __init__(self, max_samples: int = 1000, seed: int = 0, nat_max: int = 20):
        self.max_samples = max_samples
        self.seed = seed
        self.nat_max = nat_max

    def prove(self, query: EquivalenceQuery) -> ProofOutcome:
        start = perf_counter()
        shared_env = {d.name: d.sort for d in query.shared}
        left_forms, left_aux = _reduce_side(query.left)
        right_forms, right_aux = _reduce_side(query.right)

        left_key = _side_key(left_forms, left_aux, shared_env)
        right_key = _side_key(right_forms, right_aux, shared_env)
        if left_key == right_key:
            return ProofOutcome(PROVED, perf_counter() - start, self.name)

        witness = self._search_counterexample(
            query.shared, left_forms, left_aux, right_forms, right_aux
        )
        if witness is not None:
            return ProofOutcome(
                DISPROVED, perf_counter() - start, self.name, detail=witness
            )
        return ProofOutcome(UNKNOWN, perf_counter() - start, self.name)

    def _search_counterexample(self, shared, left_forms, left_aux, right_forms, right_aux):
        left_sampled = [d for d in left_aux if not isinstance(d.sort, Arrow)]
        right_sampled = [d for d in right_aux if not isinstance(d.sort, Arrow)]
        sample_decls = list(shared)
        sample_decls += [VarDecl(f"\x02L{d.name}", d.sort) for d in left_sampled]
        sample_decls += [VarDecl(f"\x02R{d.name}", d.sort) for d in right_sampled]
        left_env = {d.name: d.sort for d in shared} | {d.name: d.sort for d in left_aux}
        right_env = {d.name: d.sort for d in shared} | {d.name: d.sort for d in right_aux}
        left_certain = not left_aux
        right_certain = not right_aux

        for sample in sample_assignments(
            sample_decls, self.max_samples, seed=self.seed, nat_max=self.nat_max
        ):
            shared_vals = {d.name: sample[d.name] for d in shared}
            left_vals = shared_vals | {
                d.name: sample[f"\x02L{d.name}"] for d in left_sampled
            }
            right_vals = shared_vals | {
                d.name: sample[f"\x02R{d.name}"] for d in right_sampled
            }
            left = _try_eval(left_forms, left_vals, left_env)
            right = _try_eval(right_forms, right_vals, right_env)
            if left is True and right is False and right_certain:
                return _witness_text(shared_vals)
            if right is True and left is False and left_certain:
                return _witness_text(shared_vals)
        return None


def _try_eval(formulas, values, env):
    try:
        return eval_conjunction(formulas, values, env)
    except Undefined:
        return None


def _witness_text(values: dict[str, Fraction]) -> str:
    if not values:
        return "countermodel: (empty assignment)"
    assigns = ", ".join(f"{k} = {v}" for k, v in sorted(values.items()))
    return f"countermodel: {assigns}"


def _reduce_side(side: QuerySide) -> tuple[list[Formula], list[VarDecl]]:
    eligible = {d.name for d in side.aux if not isinstance(d.sort, Arrow)}
    reduced, _, eliminated = eliminate_defined(list(side.formulas), eligible)
    remaining = [d for d in side.aux if d.name not in eliminated]
    return reduced, remaining


_AUX_CANON = "\x00a"
_VAR_KEY = re.compile(r"v:([A-Za-z_][A-Za-z0-9_]*)")


def _side_key(formulas, aux, shared_env) -> str:
    env = dict(shared_env)
    for d in aux:
        env[d.name] = d.sort
    node = fkey(canonical_conjunction(formulas, env))
    aux_names = {d.name for d in aux}
    seen: list[str] = []
    for match in _VAR_KEY.finditer(node):
        name = match.group(1)
        if name in aux_names and name not in seen:
            seen.append(name)
    if not seen:
        return node
    renaming = {name: f"{_AUX_CANON}{i}" for i, name in enumerate(seen)}
    renamed = [_rename_formula(f, renaming) for f in formulas]
    env2 = dict(shared_env)
    sorts = []
    for d in aux:
        if d.name in renaming:
            env2[renaming[d.name]] = d.sort
            sorts.append((renaming[d.name], d.sort))
    canonical = fkey(canonical_conjunction(renamed, env2))
    sort_tag = ",".join(f"{print_sort(s)}" for _, s in sorted(sorts))
    return f"{canonical}|aux:{sort_tag}"


# --- SMT-LIB backend -----------------------------------------------------------


class _EmitError(Exception):
    pass


class SmtProver(ProverBackend):
    """External solver over the SMT-LIB v2 text protocol.

    Emits the negated equivalence with shared variables skolemized as
    constants and auxiliaries existentially quantified; ``unsat`` proves
    the equivalence, ``sat`` disproves it, anything slower or stranger is
    Unknown.  Results are cached content-addressed by the emitted script.
    """

    name = "smt"
    supports_quantifiers = True

    def __init__(
        self,
        executable: str,
        args: tuple[str, ...] = (),
        timeout: float = 10.0,
        cache: JsonFileCache | None = None,
    ):
        self.executable = executable
        self.args = tuple(args)
        self.timeout = timeout
        self.cache = cache

    def prove(self, query: EquivalenceQuery) -> ProofOutcome:
        start = perf_counter()
        try:
            script = emit_smtlib(query)
        except _EmitError as exc:
            return ProofOutcome(UNKNOWN, perf_counter() - start, self.name, str(exc))
        key = content_key("smt-query", script)
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return ProofOutcome(
                    hit["outcome"], hit["elapsed_ms"] / 1000.0, hit["backend"], "cached"
                )
        reply = self._ask_solver(script)
        elapsed = perf_counter() - start
        status = {"unsat": PROVED, "sat": DISPROVED, "unknown": UNKNOWN}[reply]
        if self.cache is not None and reply != "unknown":
            self.cache.put(
                key,
                {
                    "outcome": status,
                    "elapsed_ms": round(elapsed * 1000.0, 3),
                    "backend": self.name,
                },
            )
        return ProofOutcome(status, elapsed, self.name)

    def _ask_solver(self, script: str) -> str:
        try:
            proc = subprocess.run(
                [self.executable, *self.args],
                input=script,
                capture_output=True,
                text=True,
                timeout=self.timeout,
            )
        except subprocess.TimeoutExpired:
            return "unknown"
        except OSError as exc:
            raise BackendUnavailable(f"cannot run {self.executable}: {exc}") from exc
        for line in proc.stdout.splitlines():
            word = line.strip()
            if word in ("sat", "unsat", "unknown"):
                return word
        raise MalformedSolverReply(
            f"no verdict in solver output: {proc.stdout[:200]!r} {proc.stderr[:200]!r}"
        )


def emit_smtlib(query: EquivalenceQuery) -> str:
    """Render the negated equivalence as an SMT-LIB v2 script."""
    emitter = _SmtEmitter()
    shared_env = {d.name: d.sort for d in query.shared}
    left = emitter.side(query.left, shared_env)
    right = emitter.side(query.right, shared_env)
    lines = ["(set-logic ALL)"]
    lines.extend(emitter.declarations)
    for decl in query.shared:
        lines.append(f"(declare-const {decl.name} {_smt_sort(decl.sort)})")
        if decl.sort == NAT:
            lines.append(f"(assert (>= {decl.name} 0))")
    lines.extend(emitter.axioms)
    lines.append(f"(assert (not (= {left} {right})))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def _smt_sort(sort: Sort) -> str:
    if sort in (NAT, INT):
        return "Int"
    if sort == REAL:
        return "Real"
    if sort == BOOL:
        return "Bool"
    raise _EmitError(f"cannot translate sort {sort!r}")


class _SmtEmitter:
    def __init__(self):
        self.declarations: list[str] = []
        self.axioms: list[str] = []
        self._declared: set[str] = set()

    def side(self, side: QuerySide, shared_env: dict[str, Sort]) -> str:
        env = dict(shared_env)
        for d in side.aux:
            env[d.name] = d.sort
        used_fns: set[str] = set()
        for f in side.formulas:
            used_fns |= funapp_names(f)
        if any(isinstance(d.sort, Arrow) and d.name in used_fns for d in side.aux):
            # a side-local function symbol would need second-order exists
            raise _EmitError("function-sorted auxiliary variable")
        binders_decls = [d for d in side.aux if not isinstance(d.sort, Arrow)]
        body = [self.formula(f, env) for f in side.formulas]
        guards = [f"(>= {d.name} 0)" for d in binders_decls if d.sort == NAT]
        conj = _conjoin(guards + body)
        if binders_decls:
            binders = " ".join(
                f"({d.name} {_smt_sort(d.sort)})" for d in binders_decls
            )
            return f"(exists ({binders}) {conj})"
        return conj

    # -- formulas --

    def formula(self, f: Formula, env: dict[str, Sort]) -> str:
        if isinstance(f, Compare):
            target = self._compare_target(f.left, f.right, env)
            a = self.term(f.left, env, target)
            b = self.term(f.right, env, target)
            op = {"=": "=", "<": "<", ">": ">", "<=": "<=", ">=": ">="}.get(f.op)
            if op:
                return f"({op} {a} {b})"
            return f"(not (= {a} {b}))"
        if isinstance(f, Divides):
            target = self._compare_target(f.left, f.right, env)
            a = self.term(f.left, env, target)
            b = self.term(f.right, env, target)
            if target == REAL:
                zero = self._literal(Fraction(0), REAL)
                return f"(or (not (= {a} {zero})) (= {b} {zero}))"
            return f"(ite (= {a} 0) (= {b} 0) (= (mod {b} {a}) 0))"
        if isinstance(f, And):
            return f"(and {self.formula(f.left, env)} {self.formula(f.right, env)})"
        if isinstance(f, Or):
            return f"(or {self.formula(f.left, env)} {self.formula(f.right, env)})"
        if isinstance(f, Implies):
            return f"(=> {self.formula(f.left, env)} {self.formula(f.right, env)})"
        if isinstance(f, Not):
            return f"(not {self.formula(f.child, env)})"
        if isinstance(f, (Forall, Exists)):
            inner = dict(env)
            inner[f.var.name] = f.var.sort
            body = self.formula(f.body, inner)
            binder = f"(({f.var.name} {_smt_sort(f.var.sort)}))"
            if f.var.sort == NAT:
                guard = f"(>= {f.var.name} 0)"
                if isinstance(f, Forall):
                    return f"(forall {binder} (=> {guard} {body}))"
                return f"(exists {binder} (and {guard} {body}))"
            word = "forall" if isinstance(f, Forall) else "exists"
            return f"({word} {binder} {body})"
        if isinstance(f, PredApp):
            sorts = [self._term_target(a, env) for a in f.args]
            self._declare_fun(f.name, [_smt_sort(s) for s in sorts], "Bool")
            if not f.args:
                return f.name
            args = " ".join(self.term(a, env, s) for a, s in zip(f.args, sorts))
            return f"({f.name} {args})"
        raise _EmitError(f"cannot translate formula {f!r}")

    def _compare_target(self, left: Term, right: Term, env) -> str:
        a = self._term_target(left, env)
        b = self._term_target(right, env)
        if a == ANY and b == ANY:
            return REAL
        return a if a != ANY else b

    def _term_target(self, term: Term, env) -> str:
        try:
            return term_sort(term, env)
        except Exception as exc:
            raise _EmitError(f"ill-sorted term: {exc}") from exc

    # -- terms --

    def term(self, t: Term, env: dict[str, Sort], target: str) -> str:
        actual = self._term_target(t, env)
        sort = target if actual == ANY else actual
        if isinstance(t, NumLit):
            return self._literal(t.value, sort)
        if isinstance(t, Var):
            return t.name
        if isinstance(t, Add):
            return f"(+ {self.term(t.left, env, sort)} {self.term(t.right, env, sort)})"
        if isinstance(t, Sub):
            a, b = self.term(t.left, env, sort), self.term(t.right, env, sort)
            if sort == NAT:
                return f"(ite (<= {b} {a}) (- {a} {b}) 0)"  # truncated nat minus
            return f"(- {a} {b})"
        if isinstance(t, Mul):
            return f"(* {self.term(t.left, env, sort)} {self.term(t.right, env, sort)})"
        if isinstance(t, Neg):
            return f"(- {self.term(t.child, env, sort)})"
        if isinstance(t, Div):
            a = self.term(t.left, env, REAL)
            b = self.term(t.right, env, REAL)
            zero = self._literal(Fraction(0), REAL)
            return f"(ite (= {b} {zero}) {zero} (/ {a} {b}))"
        if isinstance(t, Mod):
            a, b = self.term(t.left, env, sort), self.term(t.right, env, sort)
            if sort == REAL:
                zero = self._literal(Fraction(0), REAL)
                floor = f"(to_real (to_int (/ {a} {b})))"
                return f"(ite (= {b} {zero}) {a} (- {a} (* {b} {floor})))"
            # SMT mod is Euclidean, Isabelle's is floor-based; they agree
            # for the positive divisors seen in practice
            return f"(ite (= {b} 0) {a} (mod {a} {b}))"
        if isinstance(t, PowNat):
            return self._pow_nat(t, env, sort)
        if isinstance(t, PowReal):
            self._declare_fun("powr$", ["Real", "Real"], "Real")
            a = self.term(t.base, env, REAL)
            b = self.term(t.exponent, env, REAL)
            return f"(powr$ {a} {b})"
        if isinstance(t, FunApp):
            return self._funapp(t, env, sort)
        raise _EmitError(f"cannot translate term {t!r}")

    def _literal(self, value: Fraction, sort: str) -> str:
        if sort in (NAT, INT, ANY) and value.denominator == 1:
            n = value.numerator
            return str(n) if n >= 0 else f"(- {-n})"
        if sort in (NAT, INT):
            raise _EmitError(f"non-integer literal {value} in an Int context")
        num, den = value.numerator, value.denominator
        text = f"{abs(num)}.0" if den == 1 else f"(/ {abs(num)}.0 {den}.0)"
        return text if num >= 0 else f"(- {text})"

    def _pow_nat(self, t: PowNat, env, sort: str) -> str:
        exponent = t.exponent
        if isinstance(exponent, NumLit) and exponent.value.denominator == 1:
            k = exponent.value.numerator
            if 0 <= k <= 16:
                if k == 0:
                    return self._literal(Fraction(1), sort)
                base = self.term(t.base, env, sort)
                return base if k == 1 else f"(* {' '.join([base] * k)})"
        base_sort = self._term_target(t.base, env)
        base_sort = sort if base_sort == ANY else base_sort
        smt_base = _smt_sort(base_sort)
        fn = f"pownat${smt_base.lower()}"
        self._declare_fun(fn, [smt_base, "Int"], smt_base)
        base = self.term(t.base, env, base_sort)
        exp = self.term(t.exponent, env, NAT)
        return f"({fn} {base} {exp})"

    def _funapp(self, t: FunApp, env, sort: str) -> str:
        name = t.name
        if name == "abs":
            a = self.term(t.args[0], env, sort)
            if sort in (NAT, INT, ANY):
                return f"(abs {a})"
            zero = self._literal(Fraction(0), REAL)
            return f"(ite (< {a} {zero}) (- {a}) {a})"
        if name in BUILTIN_FUNCTIONS:
            fn = f"real${name}"
            arity = len(BUILTIN_FUNCTIONS[name][0])
            self._declare_fun(fn, ["Real"] * arity, "Real")
            args = " ".join(self.term(a, env, REAL) for a in t.args)
            return f"({fn} {args})"
        declared = env.get(name)
        if not isinstance(declared, Arrow):
            raise _EmitError(f"cannot translate function {name!r}")
        arg_sorts = []
        node: Sort = declared
        while isinstance(node, Arrow):
            arg_sorts.append(node.arg)
            node = node.result
        self._declare_fun(
            name,
            [_smt_sort(s) for s in arg_sorts],
            _smt_sort(node),
            nat_result=(node == NAT),
            nat_args=[s == NAT for s in arg_sorts],
        )
        args = " ".join(
            self.term(a, env, s if isinstance(s, str) else REAL)
            for a, s in zip(t.args, arg_sorts)
        )
        return f"({name} {args})"

    def _declare_fun(
        self,
        name: str,
        args: list[str],
        result: str,
        nat_result: bool = False,
        nat_args: list[bool] | None = None,
    ) -> None:
        if name in self._declared:
            return
        self._declared.add(name)
        self.declarations.append(
            f"(declare-fun {name} ({' '.join(args)}) {result})"
        )
        if nat_result and args:
            binders = " ".join(f"(x{i} {s})" for i, s in enumerate(args))
            call = f"({name} {' '.join(f'x{i}' for i in range(len(args)))})"
            self.axioms.append(
                f"(assert (forall ({binders}) (>= {call} 0)))"
            )
        elif nat_result:
            self.axioms.append(f"(assert (>= {name} 0))")


def _conjoin(parts: list[str]) -> str:
    if not parts:
        return "true"
    if len(parts) == 1:
        return parts[0]
    return f"(and {' '.join(parts)})"


# --- Chain ----------------------------------------------------------------------


def prove_with_chain(query: EquivalenceQuery, backends) -> ProofOutcome:
    """Run the backends in order; the first non-Unknown verdict wins.

    BackendUnavailable propagates only when every backend is unavailable.
    """
    failures = []
    last = None
    for backend in backends:
        try:
            outcome = backend.prove(query)
        except BackendUnavailable as exc:
            failures.append(exc)
            continue
        last = outcome
        if not outcome.is_unknown:
            return outcome
    if last is None and failures:
        raise BackendUnavailable("; ".join(str(f) for f in failures))
    return last or ProofOutcome(UNKNOWN, 0.0, "none")
