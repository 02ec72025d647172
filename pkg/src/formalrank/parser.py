"""Parser for the statement mini-language.

Accepts ASCII operators and the Isabelle-escaped equivalents
(``\\<and>``, ``\\<forall>``, ``\\<le>``, ...).  The grammar is the fixed
subset documented in ``docs/grammar.md``; anything outside it raises
``ParseError`` rather than being misread.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .statement import (
    Add,
    And,
    Arrow,
    ATOMIC_SORTS,
    BOOL,
    Compare,
    Div,
    Divides,
    Exists,
    Forall,
    FormalStatement,
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
    arrow_args,
    arrow_arity,
    arrow_result,
)

K_SYNTAX = "syntax"
K_UNKNOWN_SYMBOL = "unknown_symbol"
K_SORT = "sort"


class ParseError(Exception):
    """Parse failure with byte offset and the tokens that were expected."""

    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = (),
                 kind: str = K_SYNTAX):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.expected = expected
        self.kind = kind


# Escaped connectives are normalized to their ASCII spellings at lex time.
_ESCAPES = {
    r"\<and>": "&",
    r"\<or>": "|",
    r"\<not>": "~",
    r"\<longrightarrow>": "-->",
    r"\<le>": "<=",
    r"\<ge>": ">=",
    r"\<noteq>": "~=",
    r"\<forall>": "ALL",
    r"\<exists>": "EX",
    r"\<Rightarrow>": "=>",
}

_MULTI_SYMBOLS = ("-->", "::", "<=", ">=", "~=", "=>")
_SINGLE_SYMBOLS = set('^+-*/=<>()"~&|.:')

_KEYWORDS = {
    "theorem", "fixes", "assumes", "shows", "and",
    "dvd", "mod", "powr", "ALL", "EX",
}

# Built-in function symbols: name -> (argument sorts, result sort).
# "numeric" arguments accept nat/int/real and propagate the unified sort.
BUILTIN_FUNCTIONS: dict[str, tuple[tuple[str, ...], str]] = {
    "ln": ((REAL,), REAL),
    "exp": ((REAL,), REAL),
    "sqrt": ((REAL,), REAL),
    "log": ((REAL, REAL), REAL),
    "abs": (("numeric",), "same"),
}


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "num" | "sym" | "eof"
    text: str
    offset: int


def _lex(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if text.startswith(r"\<", i):
            end = text.find(">", i)
            if end < 0:
                raise ParseError("unterminated symbol escape", i)
            raw = text[i:end + 1]
            if raw not in _ESCAPES:
                raise ParseError(
                    f"unsupported symbol {raw}", i, kind=K_UNKNOWN_SYMBOL
                )
            mapped = _ESCAPES[raw]
            kind = "ident" if mapped.isalpha() else "sym"
            tokens.append(Token(kind, mapped, i))
            i = end + 1
            continue
        matched = False
        for sym in _MULTI_SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token("sym", sym, i))
                i += len(sym)
                matched = True
                break
        if matched:
            continue
        if c in _SINGLE_SYMBOLS:
            tokens.append(Token("sym", c, i))
            i += 1
            continue
        if c.isdigit():
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            tokens.append(Token("num", text[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("ident", text[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(Token("eof", "", n))
    return tokens


# Binding strengths for the formula/term grammar, tighter is higher.
_TERM_ATOM_FOLLOWERS = {"num", "ident"}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _lex(text)
        self.pos = 0
        self.fixes: list[VarDecl] = []
        self.fn_sorts: dict[str, Sort] = {}
        self.scope: list[str] = []  # quantifier binders, innermost last

    # -- token helpers ----------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str, *alternatives: str) -> Token:
        tok = self.peek()
        if tok.text == text or tok.text in alternatives:
            return self.advance()
        raise ParseError(
            f"expected {text!r}, found {tok.text!r}",
            tok.offset,
            expected=(text, *alternatives),
        )

    def at(self, text: str) -> bool:
        return self.peek().text == text

    # -- statement structure ----------------------------------------------

    def parse_statement(self) -> FormalStatement:
        self.expect("theorem")
        if self.at("fixes"):
            self.advance()
            self.parse_fixes()
        premises: list[Formula] = []
        if self.at("assumes"):
            self.advance()
            premises.append(self.parse_quoted_formula())
            while self.at("and"):
                self.advance()
                premises.append(self.parse_quoted_formula())
        self.expect("shows")
        conclusion = self.parse_quoted_formula()
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(
                f"trailing input {tok.text!r}", tok.offset, expected=("<end>",)
            )
        statement = FormalStatement(
            fixes=tuple(self.fixes),
            premises=tuple(premises),
            conclusion=conclusion,
            source_text=self.text,
        )
        _check_sorts(statement)
        return statement

    def parse_fixes(self) -> None:
        while True:
            names = [self.parse_fix_name()]
            while self.peek().kind == "ident" and self.peek().text not in _KEYWORDS:
                names.append(self.parse_fix_name())
            self.expect("::")
            sort = self.parse_sort_spec()
            for name in names:
                if any(d.name == name for d in self.fixes):
                    raise ParseError(
                        f"variable {name!r} declared twice", self.peek().offset
                    )
                self.fixes.append(VarDecl(name, sort))
                if isinstance(sort, Arrow):
                    self.fn_sorts[name] = sort
            if self.at("and"):
                self.advance()
                continue
            break

    def parse_fix_name(self) -> str:
        tok = self.peek()
        if tok.kind != "ident" or tok.text in _KEYWORDS:
            raise ParseError(
                f"expected variable name, found {tok.text!r}",
                tok.offset,
                expected=("<identifier>",),
            )
        return self.advance().text

    def parse_sort_spec(self) -> Sort:
        if self.at('"'):
            self.advance()
            sort = self.parse_sort()
            self.expect('"')
            return sort
        return self.parse_sort()

    def parse_sort(self) -> Sort:
        left = self.parse_sort_atom()
        if self.at("=>"):
            self.advance()
            return Arrow(left, self.parse_sort())
        return left

    def parse_sort_atom(self) -> Sort:
        tok = self.peek()
        if tok.text == "(":
            self.advance()
            inner = self.parse_sort()
            self.expect(")")
            return inner
        if tok.kind == "ident" and tok.text in ATOMIC_SORTS:
            self.advance()
            return tok.text
        raise ParseError(
            f"unknown sort {tok.text!r}",
            tok.offset,
            expected=ATOMIC_SORTS,
            kind=K_UNKNOWN_SYMBOL,
        )

    def parse_quoted_formula(self) -> Formula:
        # optional premise label, e.g. `h0 :`
        if (
            self.peek().kind == "ident"
            and self.peek().text not in _KEYWORDS
            and self.tokens[self.pos + 1].text == ":"
        ):
            self.advance()
            self.advance()
        self.expect('"')
        formula = self.parse_formula()
        self.expect('"')
        return formula

    # -- formulas -----------------------------------------------------------

    def parse_formula(self) -> Formula:
        return self.parse_implies()

    def parse_implies(self) -> Formula:
        left = self.parse_or()
        if self.at("-->"):
            self.advance()
            return Implies(left, self.parse_implies())
        return left

    def parse_or(self) -> Formula:
        left = self.parse_and()
        if self.at("|"):
            self.advance()
            return Or(left, self.parse_or())
        return left

    def parse_and(self) -> Formula:
        left = self.parse_not()
        if self.at("&"):
            self.advance()
            return And(left, self.parse_and())
        return left

    def parse_not(self) -> Formula:
        if self.at("~"):
            self.advance()
            return Not(self.parse_not())
        if self.at("ALL") or self.at("EX"):
            return self.parse_quantifier()
        return self.parse_atom_formula()

    def parse_quantifier(self) -> Formula:
        ctor = Forall if self.advance().text == "ALL" else Exists
        name = self.parse_fix_name()
        sort: Sort | None = None
        if self.at("::"):
            self.advance()
            sort = self.parse_sort_spec()
        self.expect(".")
        self.scope.append(name)
        try:
            body = self.parse_formula()
        finally:
            self.scope.pop()
        if sort is None:
            sort = self.infer_binder_sort(name, body)
        return ctor(VarDecl(name, sort), body)

    def infer_binder_sort(self, name: str, body: Formula) -> Sort:
        """Unannotated binder: first use as a typed function argument wins,
        then an identically named outer declaration, then real."""
        hit = _find_argument_sort(body, name, {**self.fn_sorts, **_builtin_arrows()})
        if hit is not None:
            return hit
        for decl in self.fixes:
            if decl.name == name and not isinstance(decl.sort, Arrow):
                return decl.sort
        return REAL

    def parse_atom_formula(self) -> Formula:
        if self.at("("):
            # Could be a parenthesized formula or a parenthesized term
            # starting a comparison; backtrack on the latter.
            saved = self.pos
            self.advance()
            try:
                inner = self.parse_formula()
                self.expect(")")
            except ParseError:
                self.pos = saved
            else:
                if self.peek().text in ("=", "~=", "<=", ">=", "<", ">", "dvd"):
                    self.pos = saved
                else:
                    return inner
        left = self.parse_term()
        tok = self.peek()
        if tok.text in ("=", "~=", "<=", ">=", "<", ">"):
            op = self.advance().text
            right = self.parse_term()
            return Compare(left, op, right)
        if tok.text == "dvd":
            self.advance()
            right = self.parse_term()
            return Divides(left, right)
        if isinstance(left, FunApp) and self.result_sort(left.name) == BOOL:
            return PredApp(left.name, left.args)
        if isinstance(left, Var) and self.var_sort(left.name) == BOOL:
            return PredApp(left.name, ())
        raise ParseError(
            f"expected relational operator, found {tok.text!r}",
            tok.offset,
            expected=("=", "~=", "<=", ">=", "<", ">", "dvd"),
        )

    def result_sort(self, name: str) -> Sort | None:
        if name in self.fn_sorts:
            return arrow_result(self.fn_sorts[name])
        if name in BUILTIN_FUNCTIONS:
            return BUILTIN_FUNCTIONS[name][1]
        return None

    def var_sort(self, name: str) -> Sort | None:
        for decl in self.fixes:
            if decl.name == name:
                return decl.sort
        return None

    # -- terms --------------------------------------------------------------

    def parse_term(self) -> Term:
        return self.parse_additive()

    def parse_additive(self) -> Term:
        left = self.parse_multiplicative()
        while self.peek().text in ("+", "-"):
            op = self.advance().text
            right = self.parse_multiplicative()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def parse_multiplicative(self) -> Term:
        left = self.parse_prefix()
        while self.peek().text in ("*", "/", "mod"):
            op = self.advance().text
            right = self.parse_prefix()
            if op == "*":
                left = Mul(left, right)
            elif op == "/":
                left = _fold_div(left, right)
            else:
                left = Mod(left, right)
        return left

    def parse_prefix(self) -> Term:
        if self.at("-"):
            self.advance()
            return _fold_neg(self.parse_prefix())
        return self.parse_power()

    def parse_power(self) -> Term:
        base = self.parse_application()
        if self.at("^"):
            self.advance()
            return PowNat(base, self.parse_prefix())
        if self.at("powr"):
            self.advance()
            return PowReal(base, self.parse_prefix())
        return base

    def parse_application(self) -> Term:
        tok = self.peek()
        if tok.kind == "ident" and tok.text not in _KEYWORDS:
            arity = self.fn_arity(tok.text)
            if arity is not None:
                self.advance()
                args = tuple(self.parse_term_atom() for _ in range(arity))
                return FunApp(tok.text, args)
        return self.parse_term_atom()

    def fn_arity(self, name: str) -> int | None:
        if name in self.fn_sorts:
            return arrow_arity(self.fn_sorts[name])
        if name in BUILTIN_FUNCTIONS:
            return len(BUILTIN_FUNCTIONS[name][0])
        return None

    def parse_term_atom(self) -> Term:
        tok = self.peek()
        if tok.text == "(":
            self.advance()
            inner = self.parse_term()
            self.expect(")")
            return inner
        if tok.text == "-":
            self.advance()
            return _fold_neg(self.parse_term_atom())
        if tok.kind == "num":
            self.advance()
            return NumLit(Fraction(tok.text))
        if tok.kind == "ident" and tok.text not in _KEYWORDS:
            name = tok.text
            if (
                name in self.scope
                or any(d.name == name for d in self.fixes)
                or self.fn_arity(name) is not None
            ):
                self.advance()
                if self.fn_arity(name) is not None and name not in self.scope:
                    args = tuple(
                        self.parse_term_atom() for _ in range(self.fn_arity(name))
                    )
                    return FunApp(name, args)
                return Var(name)
            raise ParseError(
                f"unknown symbol {name!r}", tok.offset, kind=K_UNKNOWN_SYMBOL
            )
        raise ParseError(
            f"expected term, found {tok.text!r}",
            tok.offset,
            expected=("<number>", "<identifier>", "("),
        )


def _fold_neg(term: Term) -> Term:
    if isinstance(term, NumLit):
        return NumLit(-term.value)
    return Neg(term)


def _fold_div(left: Term, right: Term) -> Term:
    # literal/literal with a nonzero denominator folds to an exact rational,
    # so `2/3` and `NumLit(2/3)` meet in one canonical node
    if isinstance(left, NumLit) and isinstance(right, NumLit) and right.value != 0:
        return NumLit(left.value / right.value)
    return Div(left, right)


def _builtin_arrows() -> dict[str, Sort]:
    out: dict[str, Sort] = {}
    for name, (args, result) in BUILTIN_FUNCTIONS.items():
        sort: Sort = result if result != "same" else REAL
        for a in reversed(args):
            sort = Arrow(a if a != "numeric" else REAL, sort)
        out[name] = sort
    return out


def _find_argument_sort(
    formula: Formula, name: str, fn_sorts: dict[str, Sort]
) -> Sort | None:
    """First atomic sort with which `name` is used as a function argument."""

    def from_term(term: Term) -> Sort | None:
        if isinstance(term, FunApp) and term.name in fn_sorts:
            for arg, sort in zip(term.args, arrow_args(fn_sorts[term.name])):
                if isinstance(arg, Var) and arg.name == name and not isinstance(sort, Arrow):
                    return sort
        for child in _term_children(term):
            hit = from_term(child)
            if hit is not None:
                return hit
        return None

    if isinstance(formula, (Compare, Divides)):
        return from_term(formula.left) or from_term(formula.right)
    if isinstance(formula, (And, Or, Implies)):
        return _find_argument_sort(formula.left, name, fn_sorts) or _find_argument_sort(
            formula.right, name, fn_sorts
        )
    if isinstance(formula, Not):
        return _find_argument_sort(formula.child, name, fn_sorts)
    if isinstance(formula, (Forall, Exists)):
        if formula.var.name == name:
            return None
        return _find_argument_sort(formula.body, name, fn_sorts)
    if isinstance(formula, PredApp):
        for arg in formula.args:
            hit = from_term(arg)
            if hit is not None:
                return hit
    return None


def _term_children(term: Term) -> tuple[Term, ...]:
    if isinstance(term, (Add, Sub, Mul, Div, Mod)):
        return (term.left, term.right)
    if isinstance(term, (PowNat, PowReal)):
        return (term.base, term.exponent)
    if isinstance(term, Neg):
        return (term.child,)
    if isinstance(term, FunApp):
        return term.args
    return ()


# --- Sort checking ---------------------------------------------------------

ANY = "any"  # polymorphic numeric literal, resolved by context
_NUMERIC = (NAT, INT, REAL, ANY)


def _unify(a: str, b: str, offset: int) -> str:
    if a == ANY:
        return b
    if b == ANY or a == b:
        return a
    raise ParseError(f"sort mismatch: {a} vs {b}", offset, kind=K_SORT)


def _require_numeric(sort: str, offset: int) -> str:
    if sort not in _NUMERIC:
        raise ParseError(f"expected a numeric sort, got {sort}", offset, kind=K_SORT)
    return sort


def term_sort(term: Term, env: dict[str, Sort], offset: int = 0) -> str:
    """Effective atomic sort of a term; ANY for purely literal trees."""
    if isinstance(term, NumLit):
        return ANY
    if isinstance(term, Var):
        sort = env.get(term.name)
        if sort is None:
            raise ParseError(
                f"unknown symbol {term.name!r}", offset, kind=K_UNKNOWN_SYMBOL
            )
        if isinstance(sort, Arrow):
            raise ParseError(
                f"function {term.name!r} used without arguments", offset, kind=K_SORT
            )
        return sort
    if isinstance(term, (Add, Sub, Mul)):
        left = _require_numeric(term_sort(term.left, env, offset), offset)
        right = _require_numeric(term_sort(term.right, env, offset), offset)
        return _unify(left, right, offset)
    if isinstance(term, Div):
        left = term_sort(term.left, env, offset)
        right = term_sort(term.right, env, offset)
        _unify(_unify(left, right, offset), REAL, offset)
        return REAL
    if isinstance(term, Mod):
        left = _require_numeric(term_sort(term.left, env, offset), offset)
        right = _require_numeric(term_sort(term.right, env, offset), offset)
        return _unify(left, right, offset)
    if isinstance(term, Neg):
        return _require_numeric(term_sort(term.child, env, offset), offset)
    if isinstance(term, PowNat):
        base = _require_numeric(term_sort(term.base, env, offset), offset)
        _unify(term_sort(term.exponent, env, offset), NAT, offset)
        return base
    if isinstance(term, PowReal):
        _unify(term_sort(term.base, env, offset), REAL, offset)
        _unify(term_sort(term.exponent, env, offset), REAL, offset)
        return REAL
    if isinstance(term, FunApp):
        return _funapp_sort(term, env, offset)
    raise TypeError(f"unknown term node {term!r}")


def _funapp_sort(term: FunApp, env: dict[str, Sort], offset: int) -> str:
    if term.name in env and isinstance(env[term.name], Arrow):
        sort = env[term.name]
        declared = arrow_args(sort)
        if len(declared) != len(term.args):
            raise ParseError(
                f"{term.name!r} expects {len(declared)} arguments", offset, kind=K_SORT
            )
        for arg, want in zip(term.args, declared):
            if isinstance(want, Arrow):
                raise ParseError(
                    "higher-order arguments are not supported", offset, kind=K_SORT
                )
            _unify(term_sort(arg, env, offset), want, offset)
        result = arrow_result(sort)
        if isinstance(result, Arrow):  # partially applied
            raise ParseError(
                f"{term.name!r} is partially applied", offset, kind=K_SORT
            )
        return result
    if term.name in BUILTIN_FUNCTIONS:
        args, result = BUILTIN_FUNCTIONS[term.name]
        unified = ANY
        for arg, want in zip(term.args, args):
            got = term_sort(arg, env, offset)
            if want == "numeric":
                unified = _unify(unified, _require_numeric(got, offset), offset)
            else:
                _unify(got, want, offset)
        return unified if result == "same" else result
    raise ParseError(f"unknown symbol {term.name!r}", offset, kind=K_UNKNOWN_SYMBOL)


def check_formula_sorts(formula: Formula, env: dict[str, Sort], offset: int = 0) -> None:
    if isinstance(formula, Compare):
        left = _require_numeric(term_sort(formula.left, env, offset), offset)
        right = _require_numeric(term_sort(formula.right, env, offset), offset)
        _unify(left, right, offset)
        return
    if isinstance(formula, Divides):
        left = _require_numeric(term_sort(formula.left, env, offset), offset)
        right = _require_numeric(term_sort(formula.right, env, offset), offset)
        _unify(left, right, offset)
        return
    if isinstance(formula, (And, Or, Implies)):
        check_formula_sorts(formula.left, env, offset)
        check_formula_sorts(formula.right, env, offset)
        return
    if isinstance(formula, Not):
        check_formula_sorts(formula.child, env, offset)
        return
    if isinstance(formula, (Forall, Exists)):
        inner = dict(env)
        inner[formula.var.name] = formula.var.sort
        check_formula_sorts(formula.body, inner, offset)
        return
    if isinstance(formula, PredApp):
        if formula.args:
            result = _funapp_sort(FunApp(formula.name, formula.args), env, offset)
            if result != BOOL:
                raise ParseError(
                    f"{formula.name!r} is not a predicate", offset, kind=K_SORT
                )
        elif env.get(formula.name) != BOOL:
            raise ParseError(
                f"unknown symbol {formula.name!r}", offset, kind=K_UNKNOWN_SYMBOL
            )
        return
    raise TypeError(f"unknown formula node {formula!r}")


def _check_sorts(statement: FormalStatement) -> None:
    env: dict[str, Sort] = {d.name: d.sort for d in statement.fixes}
    for premise in statement.premises:
        check_formula_sorts(premise, env)
    check_formula_sorts(statement.conclusion, env)


def parse_statement(text: str) -> FormalStatement:
    """Parse one theorem statement; raises ParseError on anything outside
    the supported subset."""
    return _Parser(text).parse_statement()
