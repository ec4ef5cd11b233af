import importlib.util
import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gen import FIXTURES, positions, random_expr, random_rewrite
from wkcalc.equivalence import decide_expr_equiv
from wkcalc.errors import DerivationError, ParseError
from wkcalc.expression import ZERO, Act, Out, Plus, alpha_eq, parse_expr
from wkcalc.proofcheck import (
    BISIM,
    LANG,
    R2L,
    Derivation,
    DerivationBuilder,
    Rewrite,
    UniqueFix,
    apply_axiom_at,
    check_derivation,
    format_derivation,
    parse_derivation,
    parse_path,
    semantic_audit,
    subterm,
)
from wkcalc.semiring import BOOLEAN, INTEGERS, NATURALS, RATIONALS

Z, Q, B = INTEGERS, RATIONALS, BOOLEAN
seeds = st.integers(0, 2**32 - 1)


def ez(text, sr=Z):
    return parse_expr(text, sr)


def script(name):
    return parse_derivation((FIXTURES / name).read_text())


def test_d3_example():
    got = apply_axiom_at(ez("a.(2 * out(3))"), (), "D3")
    assert got is ez("a.(1 * out(6))")


def test_plus_unit_example():
    e = ez("a.(1 * out(2))")
    assert apply_axiom_at(Plus(ZERO, e), (), "plus-unit") is e


def test_d1_below_root():
    e = ez("a.(2 * (b.(1 * out(1)) + out(3))) + c.(1 * out(1))")
    got = apply_axiom_at(e, parse_path("0"), "D1")
    assert got is ez("(a.(2 * b.(1 * out(1))) + a.(2 * out(3))) + c.(1 * out(1))")


def test_shape_mismatch_reports_pattern():
    with pytest.raises(DerivationError, match="a.\\(r \\* out\\(s\\)\\)"):
        apply_axiom_at(ez("out(3)"), (), "D3")


def test_path_out_of_range():
    with pytest.raises(DerivationError, match="path"):
        apply_axiom_at(ez("out(3)"), (0,), "out-zero")
    with pytest.raises(ParseError):
        parse_path("0.x")


def test_lang_axioms_rejected_at_bisim_level():
    e = ez("a.(2 * out(3))")
    for ax in ("D3", "scalardot"):
        with pytest.raises(DerivationError, match="language"):
            apply_axiom_at(e, (), ax, params={"r": "1", "s": "2"}, level=BISIM)
    # non-D axioms are fine at either level
    assert apply_axiom_at(e, (0,), "out-sum", R2L, {"r": 1, "s": 2}, level=BISIM)


def test_trace_axioms_boolean_only():
    text = "a.(b.(1 * out(1)) + out(1))"
    got = apply_axiom_at(parse_expr(text, B), (), "trace-dist", semiring=B)
    assert got is parse_expr("a.b.out(1) + a.out(1)", B)
    for sr in (Z, Q, NATURALS):
        with pytest.raises(DerivationError, match="Boolean"):
            apply_axiom_at(parse_expr(text, sr), (), "trace-dist", semiring=sr)
        with pytest.raises(DerivationError, match="Boolean"):
            apply_axiom_at(parse_expr("a.(1 * zero)", sr), (), "trace-zero", semiring=sr)
    assert apply_axiom_at(parse_expr("a.zero", B), (), "trace-zero", semiring=B) is ZERO


def test_boolean_trace_derivation_audit():
    start = parse_expr("a.(b.out(1) + c.out(1))", B)
    steps = [Rewrite((), "trace-dist"), Rewrite((1,), "plus-unit", R2L),
             Rewrite((1, 0), "trace-zero", R2L, {})]
    d = Derivation(LANG, start, steps, semiring=B)
    with pytest.raises(DerivationError, match="letter"):
        check_derivation(d)
    steps[2].params["letter"] = "c"
    assert check_derivation(d).chain[-1] is parse_expr("a.b.out(1) + (c.zero + a.c.out(1))", B)
    assert semantic_audit(d, 4)
    # the same steps are refused over the integers
    dz = Derivation(LANG, parse_expr("a.(b.out(1) + c.out(1))", Z), steps, semiring=Z)
    with pytest.raises(DerivationError, match="Boolean"):
        check_derivation(dz)


def test_out_sum_r2l_checks_sum():
    e = ez("out(5)")
    assert apply_axiom_at(e, (), "out-sum", R2L, {"r": 2, "s": 3}) is ez("out(2) + out(3)")
    with pytest.raises(DerivationError, match="is not"):
        apply_axiom_at(e, (), "out-sum", R2L, {"r": 2, "s": 2})


def test_fixpoint_both_ways():
    e = ez("mu x. a.(2 * x) + out(1)")
    unfolded = apply_axiom_at(e, (), "FP")
    assert unfolded is ez("a.(2 * mu x. a.(2 * x) + out(1)) + out(1)")
    back = apply_axiom_at(unfolded, (), "fixpoint", R2L,
                          {"var": "y", "template": "a.(2 * y) + out(1)"})
    assert alpha_eq(back, e)
    with pytest.raises(DerivationError, match="unfolding"):
        apply_axiom_at(unfolded, (), "fixpoint", R2L, {"var": "y", "template": "a.(3 * y) + out(1)"})


def test_scalardot_both_ways():
    e = ez("a.(6 * b.(1 * out(1)) + out(2))")
    moved = apply_axiom_at(e, (), "scalardot", params={"r": 3, "s": 2})
    assert moved is ez("a.(2 * b.(3 * out(1)) + out(6))")
    back = apply_axiom_at(moved, (), "scalardot", R2L, {"r": 3, "expr": "b.(1 * out(1)) + out(2)"})
    assert back is e


def test_unguarded_template_is_a_derivation_error():
    with pytest.raises(DerivationError, match="guarded|unguarded"):
        apply_axiom_at(ez("out(1)"), (), "fixpoint", R2L, {"var": "x", "template": "x + out(1)"})


def test_empty_derivation():
    e = ez("a.(1 * out(1))")
    r = check_derivation(Derivation(LANG, e, [], e))
    assert r.ok and r.chain == [e]
    with pytest.raises(DerivationError, match="ends in"):
        check_derivation(Derivation(LANG, e, [], ez("out(1)")))


def test_failing_step_is_reported_with_index():
    e = ez("a.(2 * out(3))")
    d = Derivation(LANG, e, [Rewrite((), "D3"), Rewrite((), "D4")])
    with pytest.raises(DerivationError) as info:
        check_derivation(d)
    assert info.value.step == 2
    assert str(info.value).startswith("step 2:")


def test_unique_fix_small():
    # out(1) + a.(1 * E) proves E = mu x. a.(1 * x) + out(1) for E = mu y. ...
    e = ez("mu y. a.(1 * y) + out(1)")
    b = DerivationBuilder(e, Z)
    b.unique_fix((), "x", ez("a.(1 * x) + out(1)"), lambda p: p.step((), "FP"))
    d = b.derivation()
    assert alpha_eq(d.end, ez("mu x. a.(1 * x) + out(1)"))
    assert check_derivation(d) and semantic_audit(d, 4)


def test_unique_fix_rejects_bad_premise():
    e = ez("mu y. a.(1 * y) + out(1)")
    premise = Derivation(LANG, None, [Rewrite((), "FP")])
    bad = UniqueFix("x", ez("a.(2 * x) + out(1)"), premise)
    with pytest.raises(DerivationError, match="ends in"):
        check_derivation(Derivation(LANG, e, [bad]))


def test_unique_fix_rejects_free_variable_candidate():
    e = ez("mu y. a.(1 * y) + out(1)")
    premise = Derivation(LANG, None, [])
    st_ = UniqueFix("x", ez("out(1)"), premise, path=(0, 0))  # candidate mentions y
    with pytest.raises(DerivationError):
        check_derivation(Derivation(LANG, e, [st_]))


@pytest.mark.parametrize("name,left,right,semiring", [
    ("intro1.proof", "intro1_left.expr", "intro1_right.expr", Z),
    ("intro2.proof", "intro2_left.expr", "intro2_right.expr", Q),
])
def test_bundled_scripts(name, left, right, semiring):
    d = script(name)
    assert d.semiring is semiring
    assert d.start is parse_expr((FIXTURES / left).read_text(), semiring)
    assert alpha_eq(d.end, parse_expr((FIXTURES / right).read_text(), semiring))
    assert check_derivation(d).ok
    assert semantic_audit(d, 4)
    assert decide_expr_equiv(d.start, d.end, semiring, d.alphabet).equivalent


def test_level_separation_witness():
    text = (FIXTURES / "intro1.proof").read_text().replace("level lang", "level bisim")
    with pytest.raises(DerivationError, match="language"):
        check_derivation(parse_derivation(text))


def test_bisim_derivation_also_checks_at_lang():
    e = ez("out(1) + out(2)")
    steps = [Rewrite((), "plus-comm"), Rewrite((), "out-sum")]
    for level in (BISIM, LANG):
        assert check_derivation(Derivation(level, e, steps, ez("out(3)"))).ok


@pytest.mark.parametrize("name", ["intro1.proof", "intro2.proof"])
def test_script_round_trip(name):
    text = (FIXTURES / name).read_text()
    assert format_derivation(parse_derivation(text)) == text


def test_script_errors_carry_line_numbers():
    text = "semiring integers\nlevel lang\nstart out(1)\nstep root D9 L2R\nend out(1)\n"
    with pytest.raises(DerivationError, match="line 4"):
        check_derivation(parse_derivation(text))
    with pytest.raises(ParseError) as info:
        parse_derivation("level lang\nstart out(1)\nstep root\nend\n")
    assert info.value.line == 3
    with pytest.raises(ParseError):
        parse_derivation("level lang\nstart out(1\nend\n")


def test_fixture_scripts_are_reproducible(tmp_path):
    path = Path(__file__).resolve().parent.parent / "tools" / "make_proofs.py"
    spec = importlib.util.spec_from_file_location("make_proofs", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    mod.main(["make_proofs", str(tmp_path)])
    for name in ("intro1.proof", "intro2.proof"):
        assert (tmp_path / name).read_text() == (FIXTURES / name).read_text()


def test_rearrange_emits_only_ac_steps():
    e = ez("out(1) + (a.(1 * out(1)) + b.(1 * out(1))) + c.(1 * out(1))")
    leaves = [subterm(e, p) for p, t in positions(e) if not isinstance(t, Plus)
              and len(p) and not isinstance(subterm(e, p[:-1]), (Act, Out))]
    target = Plus(Plus(leaves[3], leaves[1]), Plus(leaves[0], leaves[2]))
    b = DerivationBuilder(e, Z).rearrange((), target)
    assert b.current is target
    assert {s.axiom for s in b.steps} <= {"plus-comm", "plus-assoc"}
    assert check_derivation(b.derivation()).ok


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from([Z, Q, B, NATURALS]))
def test_random_rewrite_chains_pass_audit(seed, sr):
    rng = random.Random(seed)
    e = random_expr(rng, sr, size=7)
    b = DerivationBuilder(e, sr)
    for _ in range(20):
        pick = random_rewrite(rng, b.current, sr)
        if pick is None:
            break
        path, ax, d, params = pick
        b.step(path, ax, d, **params)
    d = b.derivation()
    assert check_derivation(d).ok
    assert semantic_audit(d, 4, alphabet="abc")


@settings(max_examples=60, deadline=None)
@given(seeds, st.sampled_from([Z, Q, B]))
def test_rewrite_is_a_congruence(seed, sr):
    rng = random.Random(seed)
    e = random_expr(rng, sr, size=9)
    pick = random_rewrite(rng, e, sr)
    if pick is None:
        return
    path, ax, d, params = pick
    new = apply_axiom_at(e, path, ax, d, params, sr)
    # every position not on or under the redex path is untouched
    for p, t in positions(e):
        k = min(len(p), len(path))
        if p[:k] != path[:k]:
            assert subterm(new, p) is t
