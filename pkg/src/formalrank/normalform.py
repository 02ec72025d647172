"""Normalization and exact evaluation of statement formulas.

Two engines used by the built-in prover:

* a canonicalizer that maps terms to multivariate polynomials over exact
  rationals (non-polynomial subterms become opaque atoms) and formulas to
  a sorted, flattened normal form — syntactic equality of normal forms is
  the proof rule;
* an exact-rational evaluator used for counterexample search, with
  deterministic seeded sampling.

Semantics kept consistent between the two: division by zero yields 0,
``a mod 0 = a``, nat subtraction truncates at zero, ``powr`` is never
identified with ``^``.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from math import gcd, isqrt

from .parser import ANY, term_sort
from .statement import (
    Add,
    And,
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
    BOOL,
    Sort,
    Sub,
    Term,
    Var,
    VarDecl,
    formula_free_vars,
    term_vars,
    _rename_formula,
)

TRUE = ("true",)
FALSE = ("false",)

# exponent bound for unrolling `base ^ literal` into a polynomial
_MAX_EXPAND_POW = 16


class Undefined(Exception):
    """Raised when a term has no exact rational value under an assignment."""


# --- Substitution -----------------------------------------------------------


def substitute_term(term: Term, mapping: dict[str, Term]) -> Term:
    if isinstance(term, Var):
        return mapping.get(term.name, term)
    if isinstance(term, NumLit):
        return term
    if isinstance(term, Neg):
        return Neg(substitute_term(term.child, mapping))
    if isinstance(term, (Add, Sub, Mul, Div, Mod)):
        return type(term)(
            substitute_term(term.left, mapping), substitute_term(term.right, mapping)
        )
    if isinstance(term, (PowNat, PowReal)):
        return type(term)(
            substitute_term(term.base, mapping),
            substitute_term(term.exponent, mapping),
        )
    if isinstance(term, FunApp):
        return FunApp(term.name, tuple(substitute_term(a, mapping) for a in term.args))
    raise TypeError(f"unknown term node {term!r}")


def substitute_formula(formula: Formula, mapping: dict[str, Term]) -> Formula:
    """Capture-avoiding simultaneous substitution of terms for free variables."""
    if not mapping:
        return formula
    if isinstance(formula, Compare):
        return Compare(
            substitute_term(formula.left, mapping),
            formula.op,
            substitute_term(formula.right, mapping),
        )
    if isinstance(formula, Divides):
        return Divides(
            substitute_term(formula.left, mapping),
            substitute_term(formula.right, mapping),
        )
    if isinstance(formula, (And, Or, Implies)):
        return type(formula)(
            substitute_formula(formula.left, mapping),
            substitute_formula(formula.right, mapping),
        )
    if isinstance(formula, Not):
        return Not(substitute_formula(formula.child, mapping))
    if isinstance(formula, (Forall, Exists)):
        inner = {k: v for k, v in mapping.items() if k != formula.var.name}
        captured = set()
        for replacement in inner.values():
            captured |= term_vars(replacement)
        var = formula.var
        body = formula.body
        if var.name in captured:
            fresh = _fresh_name(
                var.name, captured | formula_free_vars(body) | set(inner)
            )
            body = _rename_formula(body, {var.name: fresh})
            var = VarDecl(fresh, var.sort)
        return type(formula)(var, substitute_formula(body, inner))
    if isinstance(formula, PredApp):
        return PredApp(
            formula.name, tuple(substitute_term(a, mapping) for a in formula.args)
        )
    raise TypeError(f"unknown formula node {formula!r}")


def _fresh_name(base: str, taken: set[str]) -> str:
    i = 1
    while f"{base}_{i}" in taken:
        i += 1
    return f"{base}_{i}"


def eliminate_defined(
    formulas: list[Formula],
    eligible: set[str],
    carried: list[Formula] | None = None,
) -> tuple[list[Formula], list[Formula], set[str]]:
    """Remove variables defined by an equality premise.

    A premise ``v = t`` (or ``t = v``) with ``v`` eligible and not free in
    ``t`` is dropped and ``t`` substituted for ``v`` in the remaining
    formulas and in ``carried`` (e.g. the conclusion).  Returns the reduced
    formulas, the rewritten carried list, and the eliminated names.
    """
    work = list(formulas)
    extra = list(carried or [])
    eliminated: set[str] = set()
    eligible = set(eligible)
    changed = True
    while changed:
        changed = False
        for i, f in enumerate(work):
            binding = _defining_equality(f, eligible)
            if binding is None:
                continue
            name, replacement = binding
            mapping = {name: replacement}
            work = [
                substitute_formula(g, mapping) for j, g in enumerate(work) if j != i
            ]
            extra = [substitute_formula(g, mapping) for g in extra]
            eligible.discard(name)
            eliminated.add(name)
            changed = True
            break
    return work, extra, eliminated


def _defining_equality(
    formula: Formula, eligible: set[str]
) -> tuple[str, Term] | None:
    if not isinstance(formula, Compare) or formula.op != "=":
        return None
    for var_side, term_side in ((formula.left, formula.right), (formula.right, formula.left)):
        if (
            isinstance(var_side, Var)
            and var_side.name in eligible
            and var_side.name not in term_vars(term_side)
        ):
            return var_side.name, term_side
    return None


# --- Polynomial canonical form ----------------------------------------------

# Poly maps monomial -> coefficient; a monomial is a sorted tuple of
# (atom key, positive integer power).  The empty monomial is the constant.
Mono = tuple[tuple[str, int], ...]
Poly = dict[Mono, Fraction]


def _const(value: Fraction) -> Poly:
    return {(): value} if value else {}


def _padd(a: Poly, b: Poly) -> Poly:
    out = dict(a)
    for mono, coef in b.items():
        got = out.get(mono, Fraction(0)) + coef
        if got:
            out[mono] = got
        else:
            out.pop(mono, None)
    return out


def _pscale(a: Poly, factor: Fraction) -> Poly:
    if not factor:
        return {}
    return {mono: coef * factor for mono, coef in a.items()}


def _pmul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            mono = _mono_mul(m1, m2)
            got = out.get(mono, Fraction(0)) + c1 * c2
            if got:
                out[mono] = got
            else:
                out.pop(mono, None)
    return out


def _mono_mul(a: Mono, b: Mono) -> Mono:
    powers: dict[str, int] = {}
    for key, exp in itertools.chain(a, b):
        powers[key] = powers.get(key, 0) + exp
    return tuple(sorted(powers.items()))


def _ppow(a: Poly, exponent: int) -> Poly:
    out = _const(Fraction(1))
    for _ in range(exponent):
        out = _pmul(out, a)
    return out


def _atom(key: str) -> Poly:
    return {((key, 1),): Fraction(1)}


def poly_key(p: Poly) -> str:
    parts = []
    for mono in sorted(p):
        coef = p[mono]
        factors = "*".join(f"{key}^{exp}" for key, exp in mono)
        parts.append(f"{coef}|{factors}")
    return " + ".join(parts) if parts else "0"


def _poly_constant(p: Poly) -> Fraction | None:
    if not p:
        return Fraction(0)
    if len(p) == 1 and () in p:
        return p[()]
    return None


def _primitive(p: Poly) -> Poly:
    """Scale by a positive rational so coefficients are coprime integers."""
    if not p:
        return p
    denom_lcm = 1
    for coef in p.values():
        denom_lcm = denom_lcm * coef.denominator // gcd(denom_lcm, coef.denominator)
    nums = [abs(coef.numerator * denom_lcm // coef.denominator) for coef in p.values()]
    g = 0
    for n in nums:
        g = gcd(g, n)
    scale = Fraction(denom_lcm, g or 1)
    return _pscale(p, scale)


def _sign_fix(p: Poly) -> Poly:
    """Flip sign so the lexicographically first monomial has a positive
    coefficient (sound only for sign-symmetric relations)."""
    if not p:
        return p
    first = sorted(p)[0]
    if p[first] < 0:
        return _pscale(p, Fraction(-1))
    return p


def canonical_term(term: Term, env: dict[str, Sort]) -> Poly:
    if isinstance(term, NumLit):
        return _const(term.value)
    if isinstance(term, Var):
        return _atom(f"v:{term.name}")
    if isinstance(term, Add):
        return _padd(canonical_term(term.left, env), canonical_term(term.right, env))
    if isinstance(term, Sub):
        if _is_nat(term, env):
            # truncated nat subtraction is not a ring operation
            left = poly_key(canonical_term(term.left, env))
            right = poly_key(canonical_term(term.right, env))
            return _atom(f"monus({left};{right})")
        return _padd(
            canonical_term(term.left, env),
            _pscale(canonical_term(term.right, env), Fraction(-1)),
        )
    if isinstance(term, Neg):
        return _pscale(canonical_term(term.child, env), Fraction(-1))
    if isinstance(term, Mul):
        return _pmul(canonical_term(term.left, env), canonical_term(term.right, env))
    if isinstance(term, Div):
        num = canonical_term(term.left, env)
        den = canonical_term(term.right, env)
        den_const = _poly_constant(den)
        if den_const is not None:
            if den_const == 0:
                return {}  # x / 0 = 0
            return _pscale(num, 1 / den_const)
        num, den = _normalize_fraction(num, den)
        return _atom(f"div({poly_key(num)};{poly_key(den)})")
    if isinstance(term, Mod):
        left = poly_key(canonical_term(term.left, env))
        den = canonical_term(term.right, env)
        if _poly_constant(den) == 0:
            return canonical_term(term.left, env)  # a mod 0 = a
        return _atom(f"mod({left};{poly_key(den)})")
    if isinstance(term, PowNat):
        exp = _poly_constant(canonical_term(term.exponent, env))
        base = canonical_term(term.base, env)
        if exp is not None and exp.denominator == 1 and 0 <= exp <= _MAX_EXPAND_POW:
            return _ppow(base, int(exp))
        exp_key = poly_key(canonical_term(term.exponent, env))
        return _atom(f"pow({poly_key(base)};{exp_key})")
    if isinstance(term, PowReal):
        base = poly_key(canonical_term(term.base, env))
        exp = poly_key(canonical_term(term.exponent, env))
        return _atom(f"powr({base};{exp})")
    if isinstance(term, FunApp):
        args = ",".join(poly_key(canonical_term(a, env)) for a in term.args)
        return _atom(f"fn:{term.name}({args})")
    raise TypeError(f"unknown term node {term!r}")


def _normalize_fraction(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    # x/(c*y) and (1/c)*(x/y) agree everywhere including y = 0; make the
    # denominator primitive with a positive leading coefficient
    prim = _primitive(den)
    if prim:
        first = sorted(prim)[0]
        if prim[first] < 0:
            prim = _pscale(prim, Fraction(-1))
    for mono, coef in den.items():
        scale = coef / prim[mono]
        break
    return _pscale(num, 1 / scale), prim


def _is_nat(term: Term, env: dict[str, Sort]) -> bool:
    try:
        return term_sort(term, env) == NAT
    except Exception:
        return False


# --- Formula canonical form ---------------------------------------------------

_NEGATED_OP = {"=": "~=", "~=": "=", "<": ">=", ">": "<=", "<=": ">", ">=": "<"}


def canonical_formula(formula: Formula, env: dict[str, Sort]) -> tuple:
    return _canon(formula, env, negate=False, depth=0)


def canonical_conjunction(formulas, env: dict[str, Sort]) -> tuple:
    children = [_canon(f, env, negate=False, depth=0) for f in formulas]
    return _make_junction("and", children)


def _canon(formula: Formula, env: dict[str, Sort], negate: bool, depth: int) -> tuple:
    if isinstance(formula, Compare):
        op = _NEGATED_OP[formula.op] if negate else formula.op
        p = _padd(
            canonical_term(formula.left, env),
            _pscale(canonical_term(formula.right, env), Fraction(-1)),
        )
        return _canon_compare(p, op)
    if isinstance(formula, Divides):
        left = _sign_fix(_primitive_keep_scale(canonical_term(formula.left, env)))
        right = _sign_fix(_primitive_keep_scale(canonical_term(formula.right, env)))
        lc, rc = _poly_constant(left), _poly_constant(right)
        if lc is not None and rc is not None:
            value = _dvd_ints(lc, rc)
            if value is not None:
                return _bool_node(value != negate)
        node = ("dvd", poly_key(left), poly_key(right))
        return ("not", node) if negate else node
    if isinstance(formula, Not):
        return _canon(formula.child, env, not negate, depth)
    if isinstance(formula, Implies):
        left = _canon(formula.left, env, not negate, depth)
        right = _canon(formula.right, env, negate, depth)
        return _make_junction("and" if negate else "or", [left, right])
    if isinstance(formula, (And, Or)):
        is_and = isinstance(formula, And)
        if negate:
            is_and = not is_and
        left = _canon(formula.left, env, negate, depth)
        right = _canon(formula.right, env, negate, depth)
        return _make_junction("and" if is_and else "or", [left, right])
    if isinstance(formula, (Forall, Exists)):
        is_forall = isinstance(formula, Forall)
        if negate:
            is_forall = not is_forall
        bound = f"\x00b{depth}"
        body = _rename_formula(formula.body, {formula.var.name: bound})
        inner_env = dict(env)
        inner_env[bound] = formula.var.sort
        child = _canon(body, inner_env, negate, depth + 1)
        sort_tag = formula.var.sort if isinstance(formula.var.sort, str) else "arrow"
        return ("all" if is_forall else "ex", sort_tag, child)
    if isinstance(formula, PredApp):
        args = tuple(poly_key(canonical_term(a, env)) for a in formula.args)
        node = ("pred", formula.name, args)
        return ("not", node) if negate else node
    raise TypeError(f"unknown formula node {formula!r}")


def _primitive_keep_scale(p: Poly) -> Poly:
    # dvd is not scale invariant; only integer-normalize the denominators
    return p


def _dvd_ints(a: Fraction, b: Fraction) -> bool | None:
    if a.denominator != 1 or b.denominator != 1:
        return None
    if a == 0:
        return b == 0
    return b.numerator % a.numerator == 0


def _canon_compare(p: Poly, op: str) -> tuple:
    constant = _poly_constant(p)
    if constant is not None:
        value = {
            "=": constant == 0,
            "~=": constant != 0,
            "<": constant < 0,
            ">": constant > 0,
            "<=": constant <= 0,
            ">=": constant >= 0,
        }[op]
        return _bool_node(value)
    if op == ">":
        p, op = _pscale(p, Fraction(-1)), "<"
    elif op == ">=":
        p, op = _pscale(p, Fraction(-1)), "<="
    p = _primitive(p)
    if op in ("=", "~="):
        p = _sign_fix(p)
    return ("cmp", op, poly_key(p))


def _bool_node(value: bool) -> tuple:
    return TRUE if value else FALSE


def _make_junction(kind: str, children: list[tuple]) -> tuple:
    absorber = FALSE if kind == "and" else TRUE
    neutral = TRUE if kind == "and" else FALSE
    flat: list[tuple] = []
    for child in children:
        if child == absorber:
            return absorber
        if child == neutral:
            continue
        if child[0] == kind:
            flat.extend(child[1])
        else:
            flat.append(child)
    unique = sorted(set(flat), key=repr)
    if not unique:
        return neutral
    if len(unique) == 1:
        return unique[0]
    return (kind, tuple(unique))


def fkey(node: tuple) -> str:
    """Stable serialization of a canonical node."""
    return repr(node)


# --- Exact evaluation ---------------------------------------------------------


def eval_term(term: Term, values: dict[str, Fraction], env: dict[str, Sort]) -> Fraction:
    value, _ = _eval(term, values, env)
    return value


def _eval(term: Term, values: dict[str, Fraction], env: dict[str, Sort]):
    if isinstance(term, NumLit):
        return term.value, ANY
    if isinstance(term, Var):
        if term.name not in values:
            raise Undefined(f"no value for {term.name}")
        sort = env.get(term.name, REAL)
        return values[term.name], sort if isinstance(sort, str) else REAL
    if isinstance(term, Add):
        (a, sa), (b, sb) = _eval(term.left, values, env), _eval(term.right, values, env)
        return a + b, _join(sa, sb)
    if isinstance(term, Sub):
        (a, sa), (b, sb) = _eval(term.left, values, env), _eval(term.right, values, env)
        sort = _join(sa, sb)
        if sort == NAT:
            return max(Fraction(0), a - b), NAT
        return a - b, sort
    if isinstance(term, Mul):
        (a, sa), (b, sb) = _eval(term.left, values, env), _eval(term.right, values, env)
        return a * b, _join(sa, sb)
    if isinstance(term, Div):
        (a, _), (b, _) = _eval(term.left, values, env), _eval(term.right, values, env)
        return (Fraction(0) if b == 0 else a / b), REAL
    if isinstance(term, Mod):
        (a, sa), (b, sb) = _eval(term.left, values, env), _eval(term.right, values, env)
        if b == 0:
            return a, _join(sa, sb)
        return a - b * (a / b).__floor__(), _join(sa, sb)
    if isinstance(term, Neg):
        a, sort = _eval(term.child, values, env)
        if sort == NAT:
            raise Undefined("unary minus on nat")
        return -a, sort
    if isinstance(term, PowNat):
        (base, sort), (exp, _) = (
            _eval(term.base, values, env),
            _eval(term.exponent, values, env),
        )
        if exp.denominator != 1 or exp < 0:
            raise Undefined("nat exponent out of range")
        return base ** int(exp), sort
    if isinstance(term, PowReal):
        (base, _), (exp, _) = (
            _eval(term.base, values, env),
            _eval(term.exponent, values, env),
        )
        return _powr(base, exp), REAL
    if isinstance(term, FunApp):
        return _eval_funapp(term, values, env)
    raise TypeError(f"unknown term node {term!r}")


def _join(a: str, b: str) -> str:
    if a == ANY:
        return b
    if b == ANY or a == b:
        return a
    raise Undefined(f"mixed sorts {a}/{b}")


def _powr(base: Fraction, exp: Fraction) -> Fraction:
    if base == 0:
        return Fraction(0)  # 0 powr y = 0
    if base < 0:
        raise Undefined("powr with negative base")
    if exp.denominator == 1:
        return base ** exp.numerator
    root = _exact_root(base, exp.denominator)
    if root is None:
        raise Undefined("irrational power")
    return root ** exp.numerator


def _exact_root(value: Fraction, degree: int) -> Fraction | None:
    num = _int_root(value.numerator, degree)
    den = _int_root(value.denominator, degree)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def _int_root(n: int, degree: int) -> int | None:
    if n < 0:
        return None
    if n in (0, 1):
        return n
    root = round(n ** (1.0 / degree))
    for candidate in (root - 1, root, root + 1):
        if candidate >= 0 and candidate ** degree == n:
            return candidate
    return None


def _eval_funapp(term: FunApp, values, env):
    args = [_eval(a, values, env) for a in term.args]
    name = term.name
    if name == "abs":
        return abs(args[0][0]), args[0][1]
    if name == "sqrt":
        value = args[0][0]
        if value < 0:
            raise Undefined("sqrt of a negative")
        root = _exact_root(value, 2)
        if root is None:
            raise Undefined("irrational sqrt")
        return root, REAL
    if name == "ln":
        if args[0][0] == 1:
            return Fraction(0), REAL
        raise Undefined("irrational ln")
    if name == "exp":
        if args[0][0] == 0:
            return Fraction(1), REAL
        raise Undefined("irrational exp")
    if name == "log":
        return _eval_log(args[0][0], args[1][0]), REAL
    raise Undefined(f"uninterpreted function {name}")


def _eval_log(base: Fraction, value: Fraction) -> Fraction:
    if base <= 0 or base == 1 or value <= 0:
        raise Undefined("log outside exact domain")
    power = Fraction(1)
    for k in range(65):
        if power == value:
            return Fraction(k)
        power *= base
    power = Fraction(1)
    for k in range(1, 65):
        power /= base
        if power == value:
            return Fraction(-k)
    raise Undefined("irrational log")


def eval_formula(formula: Formula, values: dict[str, Fraction], env: dict[str, Sort]) -> bool:
    if isinstance(formula, Compare):
        a = eval_term(formula.left, values, env)
        b = eval_term(formula.right, values, env)
        return {
            "=": a == b,
            "~=": a != b,
            "<": a < b,
            ">": a > b,
            "<=": a <= b,
            ">=": a >= b,
        }[formula.op]
    if isinstance(formula, Divides):
        (a, sa) = _eval(formula.left, values, env)
        (b, sb) = _eval(formula.right, values, env)
        if _join_or(sa, sb) == REAL:
            return a != 0 or b == 0  # field divisibility
        if a.denominator != 1 or b.denominator != 1:
            raise Undefined("dvd on non-integers")
        if a == 0:
            return b == 0
        return b.numerator % a.numerator == 0
    if isinstance(formula, And):
        return eval_formula(formula.left, values, env) and eval_formula(
            formula.right, values, env
        )
    if isinstance(formula, Or):
        return eval_formula(formula.left, values, env) or eval_formula(
            formula.right, values, env
        )
    if isinstance(formula, Implies):
        return (not eval_formula(formula.left, values, env)) or eval_formula(
            formula.right, values, env
        )
    if isinstance(formula, Not):
        return not eval_formula(formula.child, values, env)
    if isinstance(formula, (Forall, Exists)):
        raise Undefined("quantified formula")
    if isinstance(formula, PredApp):
        raise Undefined("uninterpreted predicate")
    raise TypeError(f"unknown formula node {formula!r}")


def _join_or(a: str, b: str) -> str:
    try:
        return _join(a, b)
    except Undefined:
        return REAL


def eval_conjunction(formulas, values, env) -> bool:
    for f in formulas:
        if not eval_formula(f, values, env):
            return False
    return True


# --- Deterministic sampling ----------------------------------------------------


def sample_assignments(
    decls: list[VarDecl],
    count: int,
    seed: int = 0,
    nat_max: int = 20,
) -> list[dict[str, Fraction]]:
    """Deterministic exact-rational assignments respecting variable sorts.

    The first few samples hit structured corners (all zeros, all ones,
    small mixed values) because equalities and guards concentrate there.
    """
    rng = random.Random(seed)
    samples: list[dict[str, Fraction]] = []
    corners = [Fraction(0), Fraction(1), Fraction(2), Fraction(1, 2), Fraction(-1)]
    for corner in corners:
        sample = {}
        for decl in decls:
            value = corner
            if decl.sort == NAT and value < 0:
                value = Fraction(3)
            if decl.sort in (NAT, INT) and value.denominator != 1:
                value = Fraction(4)
            sample[decl.name] = value
        samples.append(sample)
    while len(samples) < count:
        sample = {}
        for decl in decls:
            if decl.sort == NAT:
                sample[decl.name] = Fraction(rng.randint(0, nat_max))
            elif decl.sort == INT:
                sample[decl.name] = Fraction(rng.randint(-nat_max, nat_max))
            elif decl.sort == BOOL:
                sample[decl.name] = Fraction(rng.randint(0, 1))
            else:
                sample[decl.name] = Fraction(
                    rng.randint(-60, 60), rng.randint(1, 12)
                )
        samples.append(sample)
    return samples[:count]
