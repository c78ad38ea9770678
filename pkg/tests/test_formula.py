from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from strategies import bitvectors, booleans
from tiup.formula import (BOOL, BV, BinOp, Const, CorpusError, FormulaError,
                          FormulaSyntaxError, FormulaTypeError, MemLd, MemRef, MemSt, Prop,
                          UnaryOp, Var, eval_formula, eval_propositional, free_vars,
                          is_propositional_tautology, load_seeds, load_templates, parse_formula,
                          parse_template, print_formula, read_corpus, substitute, to_signed,
                          type_of)

LISTING3 = "(x+y>0) && (y+z<0) -> (x+y)*(y+z)<0"


def sub(a, b):
    return BinOp("sub", a, b)


class TestParse:
    def test_associative_law(self):
        x, y, z = Var("x"), Var("y"), Var("z")
        f = parse_formula("x - y - z == x - (y + z)")
        assert f.root == BinOp("eq", sub(sub(x, y), z), sub(x, BinOp("add", y, z)))
        assert f.free_vars == ("x", "y", "z")

    def test_single_variable(self):
        assert parse_formula("x").root == Var("x")

    def test_listing3_structure(self):
        x, y, z = Var("x"), Var("y"), Var("z")
        xy, yz = BinOp("add", x, y), BinOp("add", y, z)
        want = BinOp("implies",
                     BinOp("logand", BinOp("gt_s", xy, Const(0)), BinOp("lt_s", yz, Const(0))),
                     BinOp("lt_s", BinOp("mul", xy, yz), Const(0)))
        assert parse_formula(LISTING3).root == want

    def test_implication_is_right_associative(self):
        f = parse_formula("x == 1 -> y == 2 -> z == 3")
        assert f.root.op == "implies"
        assert f.root.right.op == "implies"

    def test_precedence(self):
        f = parse_formula("x + y * z == x || x < y && y <u z")
        assert f.root.op == "logor"
        assert f.root.left.left == BinOp("add", Var("x"), BinOp("mul", Var("y"), Var("z")))
        assert f.root.right.op == "logand"

    def test_hex_and_negative_literals(self):
        assert parse_formula("0x2a").root == Const(42)
        assert parse_formula("x - -7").root == BinOp("sub", Var("x"), Const(-7))

    def test_memory_terms(self):
        f = parse_formula("ld(st(mem, j, v), j) == v")
        st_ = MemSt(MemRef("mem"), Var("j"), Var("v"))
        assert f.root == BinOp("eq", MemLd(st_, Var("j")), Var("v"))
        assert f.free_vars == ("j", "v")

    def test_syntax_error_position(self):
        with pytest.raises(FormulaSyntaxError) as err:
            parse_formula("x +\n  * y", line=5)
        assert (err.value.line, err.value.column) == (6, 3)

    def test_unknown_character(self):
        with pytest.raises(FormulaSyntaxError) as err:
            parse_formula("x / y")
        assert err.value.column == 3

    def test_unbalanced_paren(self):
        with pytest.raises(FormulaSyntaxError):
            parse_formula("(x == y")

    def test_type_error_carries_path(self):
        with pytest.raises(FormulaTypeError) as err:
            parse_formula("x + (y == z)")
        assert err.value.path == "root.right"

    def test_boolean_operand_to_implies_rejected(self):
        with pytest.raises(FormulaTypeError):
            parse_formula("x -> y")


class TestPrint:
    def test_reflexivity(self):
        assert print_formula(BinOp("eq", Var("x"), Var("x"))) == "x == x"

    def test_de_morgan_seed(self, seed_map):
        assert print_formula(seed_map["demorgan_xor"]) == "x ^ y == ~((x & y) | (~x & ~y))"

    def test_listing3_round_trip(self):
        f = parse_formula(LISTING3)
        assert parse_formula(print_formula(f)).root == f.root

    @given(booleans())
    def test_round_trip_boolean(self, root):
        assert parse_formula(print_formula(root)).root == root

    @given(bitvectors())
    def test_round_trip_bitvector(self, root):
        assert parse_formula(print_formula(root)).root == root


class TestEval:
    def test_associative_example(self):
        f = parse_formula("x-y-z == x-(y+z)")
        assert eval_formula(f, {"x": 3, "y": 1, "z": 2}) == 1

    def test_memory_example(self):
        f = parse_formula("ld(st(mem,j,v),j) == v")
        assert eval_formula(f, {"j": 5, "v": 9}) == 1

    def test_listing3_wraps_at_four_bits(self):
        # (4+0)*(0-4) = -16 wraps to 0 in 4 bits, and 0 < 0 fails
        f = parse_formula(LISTING3)
        assert eval_formula(f, {"x": 4, "y": 0, "z": -4}, width=4) == 0
        assert eval_formula(f, {"x": 4, "y": 0, "z": -4}, width=32) == 1

    def test_bitvector_results_are_unsigned(self):
        assert eval_formula(parse_formula("x + y"), {"x": -1, "y": 0}) == 0xFFFFFFFF
        assert eval_formula(parse_formula("x + y"), {"x": 7, "y": 1}, width=4) == 8

    def test_signed_versus_unsigned_compare(self):
        sigma = {"x": -1, "y": 0}
        assert eval_formula(parse_formula("x < y"), sigma) == 1
        assert eval_formula(parse_formula("x <u y"), sigma) == 0
        assert eval_formula(parse_formula("y > x"), sigma) == 1

    def test_initial_memory(self):
        f = parse_formula("ld(mem, j) == 7")
        assert eval_formula(f, {"j": 3}, mem0={3: 7}) == 1
        assert eval_formula(f, {"j": 3}) == 0

    def test_later_store_shadows_earlier(self):
        f = parse_formula("ld(st(st(mem, j, 1), j, 2), j) == 2")
        assert eval_formula(f, {"j": 0}) == 1

    @pytest.mark.parametrize("a,b", [(0, 0), (0, 1), (1, 0), (1, 1)])
    def test_connective_truth_tables(self, a, b):
        sigma = {"x": a, "y": b}
        p, q = "x == 1", "y == 1"
        assert eval_formula(parse_formula(f"{p} && {q}"), sigma) == int(a and b)
        assert eval_formula(parse_formula(f"{p} || {q}"), sigma) == int(a or b)
        assert eval_formula(parse_formula(f"{p} -> {q}"), sigma) == int((not a) or b)
        assert eval_formula(parse_formula(f"!({p})"), sigma) == int(not a)

    @pytest.mark.parametrize("width", range(2, 9))
    def test_associativity_exhaustive(self, width):
        f = parse_formula("x - y - z == x - (y + z)")
        lo, hi = -(1 << (width - 1)), 1 << (width - 1)
        for x in range(lo, hi, max(1, (hi - lo) // 8)):
            for y in range(lo, hi):
                for z in range(lo, hi, 3):
                    assert eval_formula(f, {"x": x, "y": y, "z": z}, width=width) == 1

    @given(st.integers(-2**31, 2**31 - 1), st.integers(-2**31, 2**31 - 1))
    def test_arithmetic_matches_python_modulo(self, a, b):
        mask = 0xFFFFFFFF
        env = {"x": a, "y": b}
        assert eval_formula(parse_formula("x * y"), env) == (a * b) & mask
        assert eval_formula(parse_formula("x - y"), env) == (a - b) & mask
        assert eval_formula(parse_formula("~x"), env) == ~a & mask
        assert eval_formula(parse_formula("-x"), env) == -a & mask

    def test_to_signed(self):
        assert to_signed(0xF, 4) == -1
        assert to_signed(7, 4) == 7
        assert to_signed(0x80000000, 32) == -2**31


class TestTypes:
    def test_kinds(self):
        assert type_of(parse_formula("x + 1").root) == BV
        assert type_of(parse_formula("x == 1").root) == BOOL

    def test_free_vars_sorted(self):
        assert free_vars(parse_formula("z + a == b").root) == ("a", "b", "z")


class TestTemplates:
    def test_shipped_templates(self, templates):
        assert [t.name for t in templates] == [
            "and_elim", "impl_intro", "excluded_middle", "modus_ponens"]
        assert [t.placeholders for t in templates] == [
            ("P", "Q"), ("P", "Q"), ("P",), ("P", "Q")]

    def test_non_tautology_rejected(self):
        with pytest.raises(FormulaError):
            parse_template("P -> Q")

    def test_bitvector_content_rejected(self):
        with pytest.raises(FormulaTypeError):
            parse_template("P && x == 1")

    def test_closed_atom_makes_zero_placeholder_template(self):
        t = parse_template("1 == 1", name="trivial")
        assert t.placeholders == ()

    def test_propositional_evaluation(self):
        t = parse_template("(P && (P -> Q)) -> Q")
        assert is_propositional_tautology(t.skeleton)
        assert eval_propositional(BinOp("implies", Prop("P"), Prop("Q")),
                                  {"P": True, "Q": False}) is False

    def test_substitute(self, seed_map):
        t = parse_template("P || !P")
        root = substitute(t.skeleton, {"P": seed_map["eq_reflexive"].root})
        assert print_formula(root) == "x == x || !(x == x)"
        assert root.left is seed_map["eq_reflexive"].root


class TestCorpus:
    def test_seven_seeds(self, seeds):
        assert [s.name for s in seeds] == [
            "assoc_sub", "demorgan_xor", "mem_ld_st", "signed_trichotomy",
            "unsigned_antisymmetry", "mul_by_two", "eq_reflexive"]
        assert all(type_of(s.root) == BOOL for s in seeds)

    def test_comments_and_blank_lines(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("# header\n\nfirst : x == x\n  # indented comment\nsecond : y == y\n")
        assert read_corpus(p) == [(3, "first", "x == x"), (5, "second", "y == y")]

    def test_bad_line_names_file_and_line(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("ok : x == x\nbroken : x == \n")
        with pytest.raises(CorpusError) as err:
            load_seeds(p)
        assert err.value.line == 2
        assert str(p) in str(err.value)

    def test_duplicate_names_rejected(self, tmp_path):
        p = tmp_path / "dup.txt"
        p.write_text("a : x == x\na : y == y\n")
        with pytest.raises(CorpusError):
            load_seeds(p)

    def test_template_file(self, tmp_path):
        p = tmp_path / "t.txt"
        p.write_text("em : P || !P\n")
        assert load_templates(p)[0].placeholders == ("P",)


def test_unary_node_printing():
    assert print_formula(UnaryOp("neg", Var("x"))) == "-x"
    assert print_formula(UnaryOp("bitnot", BinOp("add", Var("x"), Var("y")))) == "~(x + y)"
