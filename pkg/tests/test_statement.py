import json
import random
from fractions import Fraction
from pathlib import Path

import pytest

from formalrank.parser import (
    K_SORT,
    K_UNKNOWN_SYMBOL,
    ParseError,
    parse_statement,
)
from formalrank.statement import (
    Compare,
    Divides,
    Mul,
    NumLit,
    PowNat,
    PowReal,
    Var,
    free_variables,
    print_statement,
)
from .helpers import random_statement

VM1_NO2 = (
    'theorem fixes x y :: real assumes "x = 2/3" and "y = 6" shows "x * y = 4"'
)


class TestParse:
    def test_vm1_structure(self):
        s = parse_statement(VM1_NO2)
        assert [d.name for d in s.fixes] == ["x", "y"]
        assert [d.sort for d in s.fixes] == ["real", "real"]
        assert s.premises == (
            Compare(Var("x"), "=", NumLit(Fraction(2, 3))),
            Compare(Var("y"), "=", NumLit(Fraction(6))),
        )
        assert s.conclusion == Compare(Mul(Var("x"), Var("y")), "=", NumLit(Fraction(4)))

    def test_trivial_statement(self):
        s = parse_statement('theorem shows "4 = 4"')
        assert s.fixes == ()
        assert s.premises == ()
        assert s.conclusion == Compare(NumLit(Fraction(4)), "=", NumLit(Fraction(4)))

    def test_unknown_sort_is_unknown_symbol(self):
        with pytest.raises(ParseError) as err:
            parse_statement('theorem fixes R :: realmatrix shows "R = 1"')
        assert err.value.kind == K_UNKNOWN_SYMBOL
        assert err.value.offset > 0

    def test_unknown_function_symbol(self):
        with pytest.raises(ParseError) as err:
            parse_statement('theorem fixes x :: real shows "reflection_matrix x = 1"')
        assert err.value.kind == K_UNKNOWN_SYMBOL

    def test_undeclared_variable(self):
        with pytest.raises(ParseError) as err:
            parse_statement('theorem fixes x :: real shows "x + y = 1"')
        assert err.value.kind == K_UNKNOWN_SYMBOL

    def test_expected_token_set_reported(self):
        with pytest.raises(ParseError) as err:
            parse_statement('theorem fixes x :: real assumes "x = 1" shows')
        assert err.value.expected

    def test_premise_labels_are_accepted_and_dropped(self):
        labeled = parse_statement(
            'theorem fixes x :: real assumes h0 : "x = 1" shows "x > 0"'
        )
        plain = parse_statement(
            'theorem fixes x :: real assumes "x = 1" shows "x > 0"'
        )
        assert labeled == plain

    def test_isabelle_escapes_match_ascii(self):
        escaped = parse_statement(
            'theorem fixes x :: real assumes "x \\<ge> 1 \\<and> x \\<le> 2" '
            'shows "\\<not> (x \\<noteq> x)"'
        )
        ascii_form = parse_statement(
            'theorem fixes x :: real assumes "x >= 1 & x <= 2" shows "~(x ~= x)"'
        )
        assert escaped == ascii_form

    def test_caret_is_nat_power_and_powr_is_real(self):
        s = parse_statement(
            'theorem fixes a :: real assumes "a powr 2 = 4" shows "a ^ 2 = 4"'
        )
        assert isinstance(s.premises[0].left, PowReal)
        assert isinstance(s.conclusion.left, PowNat)

    def test_powr_on_nat_is_a_sort_error(self):
        with pytest.raises(ParseError) as err:
            parse_statement('theorem fixes n :: nat shows "n powr 2 = 4"')
        assert err.value.kind == K_SORT

    def test_nat_real_mix_is_a_sort_error(self):
        with pytest.raises(ParseError) as err:
            parse_statement(
                'theorem fixes n :: nat and x :: real shows "n + x = 1"'
            )
        assert err.value.kind == K_SORT

    def test_real_exponent_for_caret_is_a_sort_error(self):
        with pytest.raises(ParseError) as err:
            parse_statement('theorem fixes a b :: real shows "a ^ b = 4"')
        assert err.value.kind == K_SORT

    def test_duplicate_fixes_rejected(self):
        with pytest.raises(ParseError):
            parse_statement('theorem fixes x x :: real shows "x = 1"')

    def test_dvd_parses_as_divides(self):
        s = parse_statement('theorem fixes n :: nat shows "2 dvd (4^n)"')
        assert isinstance(s.conclusion, Divides)

    def test_determinism(self):
        text = 'theorem fixes x y :: real assumes "x = 2/3" shows "x * y = 4"'
        assert parse_statement(text) == parse_statement(text)

    def test_literal_division_folds_to_exact_rational(self):
        s = parse_statement('theorem fixes x :: real assumes "x = 2/3" shows "x > 0"')
        assert s.premises[0].right == NumLit(Fraction(2, 3))

    def test_decimals_are_exact(self):
        s = parse_statement('theorem fixes x :: real assumes "x = 0.6" shows "x > 0"')
        assert s.premises[0].right == NumLit(Fraction(3, 5))

    def test_function_sort_and_quantifier(self):
        s = parse_statement(
            'theorem fixes x :: real and f :: "real => real" '
            'assumes "\\<forall> x. f x = x * x" shows "f 2 = 4"'
        )
        assert free_variables(s) == []  # x only occurs bound


class TestFreeVariables:
    def test_trivial_empty(self):
        assert free_variables(parse_statement('theorem shows "4 = 4"')) == []

    def test_vm1(self):
        assert free_variables(parse_statement(VM1_NO2)) == ["x", "y"]

    def test_vm2(self):
        s = parse_statement(
            "theorem fixes n a b c d e :: nat "
            'assumes "n = a + b + c + d + e" shows "2 dvd (4^(n))"'
        )
        assert free_variables(s) == ["n", "a", "b", "c", "d", "e"]


class TestRoundtrip:
    def test_trivial_prints_as_expected(self):
        s = parse_statement('theorem shows "4 = 4"')
        assert print_statement(s) == 'theorem shows "4 = 4"'

    def test_fixture_corpus_roundtrips(self, fixtures_dir: Path):
        texts = []
        for path in sorted((fixtures_dir / "statements").glob("*.txt")):
            texts.append(path.read_text(encoding="utf-8"))
        for dataset in ("fig1.jsonl", "mini_math.jsonl", "mini_oracle.jsonl"):
            for line in (fixtures_dir / dataset).read_text().splitlines():
                record = json.loads(line)
                texts.extend(c["formal_text"] for c in record["candidates"])
                if record.get("oracle_formal"):
                    texts.append(record["oracle_formal"])
        assert texts
        for text in texts:
            statement = parse_statement(text)
            assert parse_statement(print_statement(statement)) == statement

    def test_random_ast_roundtrip(self):
        rng = random.Random(20240607)
        for _ in range(1000):
            statement = random_statement(rng)
            printed = print_statement(statement)
            reparsed = parse_statement(printed)
            assert reparsed == statement, printed

    def test_nested_implies_roundtrip(self):
        s = parse_statement(
            'theorem fixes x :: real shows "(x = 1 --> x > 0) --> (x = 2 --> x > 1)"'
        )
        assert parse_statement(print_statement(s)) == s
