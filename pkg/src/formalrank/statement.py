"""AST for the Isabelle-like statement mini-language.

A statement is ``theorem fixes ... assumes "P1" and "P2" ... shows "Q"``.
Terms and formulas are immutable trees; number literals are exact
rationals (``fractions.Fraction``), never floats.  ``print_statement``
emits a canonical text form that re-parses to a structurally equal
statement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

# Atomic sorts.  Function symbols carry arrow sorts built from these.
REAL = "real"
INT = "int"
NAT = "nat"
BOOL = "bool"
ATOMIC_SORTS = (REAL, INT, NAT, BOOL)


@dataclass(frozen=True)
class Arrow:
    """Function sort ``arg => result`` (curried for higher arities)."""

    arg: "Sort"
    result: "Sort"


Sort = Union[str, Arrow]


def arrow_arity(sort: Sort) -> int:
    n = 0
    while isinstance(sort, Arrow):
        n += 1
        sort = sort.result
    return n


def arrow_args(sort: Sort) -> list[Sort]:
    args = []
    while isinstance(sort, Arrow):
        args.append(sort.arg)
        sort = sort.result
    return args


def arrow_result(sort: Sort) -> Sort:
    while isinstance(sort, Arrow):
        sort = sort.result
    return sort


@dataclass(frozen=True)
class VarDecl:
    name: str
    sort: Sort


# --- Terms ---------------------------------------------------------------


class Term:
    """Base class for arithmetic terms."""

    __slots__ = ()


@dataclass(frozen=True)
class NumLit(Term):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Add(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Sub(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Mul(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Div(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Mod(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class PowNat(Term):
    """``base ^ exponent`` with a nat-sorted exponent."""

    base: Term
    exponent: Term


@dataclass(frozen=True)
class PowReal(Term):
    """``base powr exponent`` — real exponentiation, distinct from ``^``."""

    base: Term
    exponent: Term


@dataclass(frozen=True)
class Neg(Term):
    child: Term


@dataclass(frozen=True)
class FunApp(Term):
    name: str
    args: tuple[Term, ...]


# --- Formulas ------------------------------------------------------------


class Formula:
    """Base class for boolean formulas."""

    __slots__ = ()


RELOPS = ("<=", ">=", "<", ">", "=", "~=")


@dataclass(frozen=True)
class Compare(Formula):
    left: Term
    op: str
    right: Term

    def __post_init__(self):
        if self.op not in RELOPS:
            raise ValueError(f"bad relational operator {self.op!r}")


@dataclass(frozen=True)
class Divides(Formula):
    """``a dvd b`` — a divides b."""

    left: Term
    right: Term


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: VarDecl
    body: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: VarDecl
    body: Formula


@dataclass(frozen=True)
class PredApp(Formula):
    name: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class FormalStatement:
    """Premise/conclusion form of one candidate: ``P1 ∧ ... ∧ Pn → Q``."""

    fixes: tuple[VarDecl, ...]
    premises: tuple[Formula, ...]
    conclusion: Formula
    source_text: str = field(default="", compare=False)

    def sort_of(self, name: str) -> Sort | None:
        for decl in self.fixes:
            if decl.name == name:
                return decl.sort
        return None


# --- Traversal helpers ----------------------------------------------------


def term_vars(term: Term) -> set[str]:
    """Names of variables occurring in a term."""
    out: set[str] = set()
    _collect_term_vars(term, out)
    return out


def _collect_term_vars(term: Term, out: set[str]) -> None:
    if isinstance(term, Var):
        out.add(term.name)
    elif isinstance(term, NumLit):
        pass
    elif isinstance(term, Neg):
        _collect_term_vars(term.child, out)
    elif isinstance(term, (Add, Sub, Mul, Div, Mod)):
        _collect_term_vars(term.left, out)
        _collect_term_vars(term.right, out)
    elif isinstance(term, (PowNat, PowReal)):
        _collect_term_vars(term.base, out)
        _collect_term_vars(term.exponent, out)
    elif isinstance(term, FunApp):
        for a in term.args:
            _collect_term_vars(a, out)
    else:
        raise TypeError(f"unknown term node {term!r}")


def formula_free_vars(formula: Formula) -> set[str]:
    """Free variable names in a formula (quantifier-bound names excluded)."""
    if isinstance(formula, Compare):
        return term_vars(formula.left) | term_vars(formula.right)
    if isinstance(formula, Divides):
        return term_vars(formula.left) | term_vars(formula.right)
    if isinstance(formula, (And, Or, Implies)):
        return formula_free_vars(formula.left) | formula_free_vars(formula.right)
    if isinstance(formula, Not):
        return formula_free_vars(formula.child)
    if isinstance(formula, (Forall, Exists)):
        return formula_free_vars(formula.body) - {formula.var.name}
    if isinstance(formula, PredApp):
        out: set[str] = set()
        for a in formula.args:
            _collect_term_vars(a, out)
        return out
    raise TypeError(f"unknown formula node {formula!r}")


def funapp_names(formula: Formula) -> set[str]:
    """Function and predicate symbols applied anywhere in the formula."""
    names: set[str] = set()

    def walk_term(term: Term) -> None:
        if isinstance(term, FunApp):
            names.add(term.name)
            for a in term.args:
                walk_term(a)
        elif isinstance(term, Neg):
            walk_term(term.child)
        elif isinstance(term, (Add, Sub, Mul, Div, Mod)):
            walk_term(term.left)
            walk_term(term.right)
        elif isinstance(term, (PowNat, PowReal)):
            walk_term(term.base)
            walk_term(term.exponent)

    stack: list[Formula] = [formula]
    while stack:
        f = stack.pop()
        if isinstance(f, (Compare, Divides)):
            walk_term(f.left)
            walk_term(f.right)
        elif isinstance(f, (And, Or, Implies)):
            stack.extend((f.left, f.right))
        elif isinstance(f, Not):
            stack.append(f.child)
        elif isinstance(f, (Forall, Exists)):
            stack.append(f.body)
        elif isinstance(f, PredApp):
            names.add(f.name)
            for a in f.args:
                walk_term(a)
    return names


def free_variables(statement: FormalStatement) -> list[str]:
    """Variables occurring free in premises or conclusion.

    Ordered by first occurrence in ``fixes``; quantifier-bound names are
    excluded.  Declared-but-unused names do not appear.
    """
    used: set[str] = formula_free_vars(statement.conclusion)
    for p in statement.premises:
        used |= formula_free_vars(p)
    return [d.name for d in statement.fixes if d.name in used]


def all_names(statement: FormalStatement) -> set[str]:
    """Every declared or bound name in the statement (for fresh-name picks)."""
    names = {d.name for d in statement.fixes}
    stack: list[Formula] = [statement.conclusion, *statement.premises]
    while stack:
        f = stack.pop()
        if isinstance(f, (And, Or, Implies)):
            stack.extend((f.left, f.right))
        elif isinstance(f, Not):
            stack.append(f.child)
        elif isinstance(f, (Forall, Exists)):
            names.add(f.var.name)
            stack.append(f.body)
    return names


def rename_statement(statement: FormalStatement, renaming: dict[str, str]) -> FormalStatement:
    """Apply a simultaneous free-variable renaming.

    Quantifier-bound occurrences shadow and are left alone.  The renaming
    must not map two distinct names to the same target.
    """
    targets = list(renaming.values())
    if len(targets) != len(set(targets)):
        raise ValueError("renaming is not injective")
    fixes = tuple(
        VarDecl(renaming.get(d.name, d.name), d.sort) for d in statement.fixes
    )
    names = [d.name for d in fixes]
    if len(names) != len(set(names)):
        raise ValueError("renaming collides with an existing variable")
    return FormalStatement(
        fixes=fixes,
        premises=tuple(_rename_formula(p, renaming) for p in statement.premises),
        conclusion=_rename_formula(statement.conclusion, renaming),
        source_text=statement.source_text,
    )


def _rename_term(term: Term, renaming: dict[str, str]) -> Term:
    if isinstance(term, Var):
        return Var(renaming.get(term.name, term.name))
    if isinstance(term, NumLit):
        return term
    if isinstance(term, Neg):
        return Neg(_rename_term(term.child, renaming))
    if isinstance(term, (Add, Sub, Mul, Div, Mod)):
        return type(term)(
            _rename_term(term.left, renaming), _rename_term(term.right, renaming)
        )
    if isinstance(term, (PowNat, PowReal)):
        return type(term)(
            _rename_term(term.base, renaming), _rename_term(term.exponent, renaming)
        )
    if isinstance(term, FunApp):
        return FunApp(term.name, tuple(_rename_term(a, renaming) for a in term.args))
    raise TypeError(f"unknown term node {term!r}")


def _rename_formula(formula: Formula, renaming: dict[str, str]) -> Formula:
    if isinstance(formula, Compare):
        return Compare(
            _rename_term(formula.left, renaming),
            formula.op,
            _rename_term(formula.right, renaming),
        )
    if isinstance(formula, Divides):
        return Divides(
            _rename_term(formula.left, renaming), _rename_term(formula.right, renaming)
        )
    if isinstance(formula, (And, Or, Implies)):
        return type(formula)(
            _rename_formula(formula.left, renaming),
            _rename_formula(formula.right, renaming),
        )
    if isinstance(formula, Not):
        return Not(_rename_formula(formula.child, renaming))
    if isinstance(formula, (Forall, Exists)):
        inner = dict(renaming)
        inner.pop(formula.var.name, None)  # bound name shadows
        return type(formula)(formula.var, _rename_formula(formula.body, inner))
    if isinstance(formula, PredApp):
        return PredApp(
            formula.name, tuple(_rename_term(a, renaming) for a in formula.args)
        )
    raise TypeError(f"unknown formula node {formula!r}")


# --- Printing -------------------------------------------------------------

# Precedence levels; higher binds tighter.  Parens are emitted when a
# child's level is below what its context requires.
_P_QUANT = 5
_P_IMP = 10
_P_OR = 20
_P_AND = 30
_P_NOT = 40
_P_CMP = 50
_P_ADD = 65
_P_MUL = 70
_P_NEG = 75
_P_POW = 80
_P_APP = 90
_P_ATOM = 100


def print_sort(sort: Sort) -> str:
    if isinstance(sort, Arrow):
        left = print_sort(sort.arg)
        if isinstance(sort.arg, Arrow):
            left = f"({left})"
        return f"{left} => {print_sort(sort.result)}"
    return sort


def _num_text(value: Fraction) -> tuple[str, int]:
    """Literal text plus the precedence level of its shape.

    Fractions embed a `/` and therefore bind like a division, whatever
    their sign; bare negative integers bind like unary minus.
    """
    if value.denominator == 1:
        if value >= 0:
            return str(value.numerator), _P_ATOM
        return f"-{-value.numerator}", _P_NEG
    sign = "" if value >= 0 else "-"
    return f"{sign}{abs(value.numerator)}/{value.denominator}", _P_MUL


def print_term(term: Term) -> str:
    text, _ = _term_text(term)
    return text


def _wrap(child: Term, minimum: int) -> str:
    text, level = _term_text(child)
    if level < minimum:
        return f"({text})"
    return text


def _term_text(term: Term) -> tuple[str, int]:
    if isinstance(term, NumLit):
        return _num_text(term.value)
    if isinstance(term, Var):
        return term.name, _P_ATOM
    if isinstance(term, Add):
        return f"{_wrap(term.left, _P_ADD)} + {_wrap(term.right, _P_ADD + 1)}", _P_ADD
    if isinstance(term, Sub):
        return f"{_wrap(term.left, _P_ADD)} - {_wrap(term.right, _P_ADD + 1)}", _P_ADD
    if isinstance(term, Mul):
        return f"{_wrap(term.left, _P_MUL)} * {_wrap(term.right, _P_MUL + 1)}", _P_MUL
    if isinstance(term, Div):
        return f"{_wrap(term.left, _P_MUL)} / {_wrap(term.right, _P_MUL + 1)}", _P_MUL
    if isinstance(term, Mod):
        return f"{_wrap(term.left, _P_MUL)} mod {_wrap(term.right, _P_MUL + 1)}", _P_MUL
    if isinstance(term, Neg):
        return f"-{_wrap(term.child, _P_NEG)}", _P_NEG
    if isinstance(term, PowNat):
        return f"{_wrap(term.base, _P_POW + 1)} ^ {_wrap(term.exponent, _P_POW)}", _P_POW
    if isinstance(term, PowReal):
        return (
            f"{_wrap(term.base, _P_POW + 1)} powr {_wrap(term.exponent, _P_POW)}",
            _P_POW,
        )
    if isinstance(term, FunApp):
        args = " ".join(_wrap(a, _P_ATOM) for a in term.args)
        return f"{term.name} {args}", _P_APP
    raise TypeError(f"unknown term node {term!r}")


def print_formula(formula: Formula) -> str:
    text, _ = _formula_text(formula)
    return text


def _fwrap(child: Formula, minimum: int) -> str:
    text, level = _formula_text(child)
    if level < minimum:
        return f"({text})"
    return text


def _formula_text(formula: Formula) -> tuple[str, int]:
    if isinstance(formula, Compare):
        return f"{print_term(formula.left)} {formula.op} {print_term(formula.right)}", _P_CMP
    if isinstance(formula, Divides):
        return f"{_wrap(formula.left, _P_ADD)} dvd {_wrap(formula.right, _P_ADD)}", _P_CMP
    if isinstance(formula, Implies):
        return (
            f"{_fwrap(formula.left, _P_IMP + 1)} --> {_fwrap(formula.right, _P_IMP)}",
            _P_IMP,
        )
    if isinstance(formula, Or):
        return f"{_fwrap(formula.left, _P_OR + 1)} | {_fwrap(formula.right, _P_OR)}", _P_OR
    if isinstance(formula, And):
        return f"{_fwrap(formula.left, _P_AND + 1)} & {_fwrap(formula.right, _P_AND)}", _P_AND
    if isinstance(formula, Not):
        return f"~{_fwrap(formula.child, _P_NOT)}", _P_NOT
    if isinstance(formula, (Forall, Exists)):
        word = "ALL" if isinstance(formula, Forall) else "EX"
        decl = formula.var.name
        if not isinstance(formula.var.sort, Arrow):
            decl = f"{decl} :: {formula.var.sort}"
        else:
            decl = f'{decl} :: "{print_sort(formula.var.sort)}"'
        return f"{word} {decl}. {print_formula(formula.body)}", _P_QUANT
    if isinstance(formula, PredApp):
        args = " ".join(_wrap(a, _P_ATOM) for a in formula.args)
        return f"{formula.name} {args}", _P_APP
    raise TypeError(f"unknown formula node {formula!r}")


def print_statement(statement: FormalStatement) -> str:
    """Canonical single-line rendering; re-parses to an equal statement."""
    parts = ["theorem"]
    if statement.fixes:
        groups: list[tuple[list[str], Sort]] = []
        for decl in statement.fixes:
            if groups and groups[-1][1] == decl.sort:
                groups[-1][0].append(decl.name)
            else:
                groups.append(([decl.name], decl.sort))
        rendered = []
        for names, sort in groups:
            if isinstance(sort, Arrow):
                rendered.append(f'{" ".join(names)} :: "{print_sort(sort)}"')
            else:
                rendered.append(f'{" ".join(names)} :: {sort}')
        parts.append("fixes " + " and ".join(rendered))
    if statement.premises:
        quoted = [f'"{print_formula(p)}"' for p in statement.premises]
        parts.append("assumes " + " and ".join(quoted))
    parts.append(f'shows "{print_formula(statement.conclusion)}"')
    return " ".join(parts)
