"""Test utilities: a random well-sorted statement generator and tiny
independent oracles."""

from __future__ import annotations

import random
from fractions import Fraction

from formalrank.statement import (
    Add,
    And,
    Arrow,
    Compare,
    Div,
    Divides,
    Exists,
    Forall,
    FormalStatement,
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
    RELOPS,
    Sub,
    Var,
    VarDecl,
)


def random_statement(rng: random.Random) -> FormalStatement:
    """A random statement satisfying the grammar's sort rules."""
    gen = _Gen(rng)
    return gen.statement()


class _Gen:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.vars: dict[str, str] = {}
        self.fn: tuple[str, str] | None = None  # (name, arg sort), real result
        self.pred: str | None = None
        self.quant_depth = 0

    def statement(self) -> FormalStatement:
        rng = self.rng
        decls = []
        for i in range(rng.randint(1, 4)):
            sort = rng.choice([REAL, REAL, INT, NAT])
            name = f"{'xyzwuv'[i]}"
            self.vars[name] = sort
            decls.append(VarDecl(name, sort))
        if rng.random() < 0.25:
            self.fn = ("f", REAL)
            decls.append(VarDecl("f", Arrow(REAL, REAL)))
        if rng.random() < 0.15:
            self.pred = "p"
            decls.append(VarDecl("p", Arrow(REAL, "bool")))
        premises = tuple(self.formula(2) for _ in range(self.rng.randint(0, 3)))
        conclusion = self.formula(2)
        return FormalStatement(tuple(decls), premises, conclusion)

    def vars_of(self, sort: str) -> list[str]:
        return [n for n, s in self.vars.items() if s == sort]

    def literal(self, sort: str) -> NumLit:
        rng = self.rng
        if sort == REAL and rng.random() < 0.5:
            return NumLit(Fraction(rng.randint(-12, 12), rng.randint(1, 9)))
        low = 0 if sort == NAT else -9
        return NumLit(Fraction(rng.randint(low, 9)))

    def term(self, sort: str, depth: int):
        rng = self.rng
        names = self.vars_of(sort)
        if depth <= 0 or (rng.random() < 0.3 and names):
            if names and rng.random() < 0.6:
                return Var(rng.choice(names))
            return self.literal(sort)
        roll = rng.random()
        if roll < 0.22:
            return Add(self.term(sort, depth - 1), self.term(sort, depth - 1))
        if roll < 0.40:
            return Sub(self.term(sort, depth - 1), self.term(sort, depth - 1))
        if roll < 0.58:
            return Mul(self.term(sort, depth - 1), self.term(sort, depth - 1))
        if roll < 0.68:
            return PowNat(self.term(sort, depth - 1), NumLit(Fraction(rng.randint(0, 5))))
        if roll < 0.74 and sort != NAT:
            inner = self.term(sort, depth - 1)
            if isinstance(inner, NumLit):
                inner = Add(inner, self.literal(sort))
            return Neg(inner)
        if sort == REAL:
            if roll < 0.84:
                denominator = self.term(REAL, depth - 1)
                numerator = self.term(REAL, depth - 1)
                if isinstance(numerator, NumLit) and isinstance(denominator, NumLit):
                    denominator = Add(denominator, Var(self.vars_of(REAL)[0])) \
                        if self.vars_of(REAL) else Mul(denominator, denominator)
                if isinstance(numerator, NumLit) and isinstance(denominator, NumLit):
                    return numerator
                return Div(numerator, denominator)
            if roll < 0.90:
                return PowReal(self.term(REAL, depth - 1), self.term(REAL, depth - 1))
            if roll < 0.95 and self.fn is not None:
                return FunApp(self.fn[0], (self.term(REAL, depth - 1),))
        if roll < 0.90:
            return Mod(self.term(sort, depth - 1), self.term(sort, depth - 1))
        return self.term(sort, depth - 1)

    def comparison(self, depth: int):
        rng = self.rng
        sort = rng.choice([REAL, REAL, INT, NAT])
        if not self.vars_of(sort):
            sort = REAL
        if rng.random() < 0.15 and sort in (INT, NAT):
            return Divides(self.term(sort, depth - 1), self.term(sort, depth - 1))
        op = rng.choice(RELOPS)
        return Compare(self.term(sort, depth), op, self.term(sort, depth))

    def formula(self, depth: int):
        rng = self.rng
        if depth <= 0:
            return self.comparison(1)
        roll = rng.random()
        if roll < 0.45:
            return self.comparison(depth)
        if roll < 0.58:
            return And(self.formula(depth - 1), self.formula(depth - 1))
        if roll < 0.68:
            return Or(self.formula(depth - 1), self.formula(depth - 1))
        if roll < 0.76:
            return Implies(self.formula(depth - 1), self.formula(depth - 1))
        if roll < 0.84:
            return Not(self.formula(depth - 1))
        if roll < 0.92 and self.quant_depth < 2:
            self.quant_depth += 1
            name = f"q{self.quant_depth}"
            sort = rng.choice([REAL, INT, NAT])
            previous = self.vars.get(name)
            self.vars[name] = sort
            ctor = Forall if rng.random() < 0.5 else Exists
            body = self.formula(depth - 1)
            if previous is None:
                del self.vars[name]
            else:
                self.vars[name] = previous
            self.quant_depth -= 1
            return ctor(VarDecl(name, sort), body)
        if self.pred is not None:
            return PredApp(self.pred, (self.term(REAL, depth - 1),))
        return self.comparison(depth)


def levenshtein_oracle(a: str, b: str) -> int:
    """Full-matrix dynamic program, kept independent of the library's
    rolling-row implementation."""
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        table[i][0] = i
    for j in range(len(b) + 1):
        table[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            table[i][j] = min(
                table[i - 1][j] + 1,
                table[i][j - 1] + 1,
                table[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
            )
    return table[len(a)][len(b)]
