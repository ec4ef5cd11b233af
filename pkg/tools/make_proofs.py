"""Regenerate the bundled derivation scripts for the two introductory examples.

Usage: python3 tools/make_proofs.py [OUTDIR]
"""

import sys
from pathlib import Path

from wkcalc.expression import Act, Out, Plus, parse_expr, scale, substitute
from wkcalc.proofcheck import R2L, DerivationBuilder, format_derivation
from wkcalc.semiring import INTEGERS, RATIONALS

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "wkcalc" / "fixtures"


def read(name, sr):
    return parse_expr((FIXTURES / name).read_text().strip(), sr)


def example1():
    sr = INTEGERS
    left, right = read("intro1_left.expr", sr), read("intro1_right.expr", sr)
    mu_r = right.body

    def premise(p):
        p.step((), "fixpoint")
        p.step((0, 0, 0, 0), "fixpoint")
        p.step((0, 0), "D2")
        p.step((0, 0), "D2", R2L, r="2", s="3")
        p.step((0, 0, 0, 0, 0, 0), "D2")
        p.step((0, 0, 0, 0, 0, 1), "D3")
        p.step((0, 1), "D3")
        p.step((0, 1), "D3", R2L, r="4", s="1")

    b = DerivationBuilder(left, sr, alphabet=("a", "b", "c", "d"))
    b.unique_fix((0,), mu_r.var, mu_r.body, premise)
    return b.derivation(right)


def example2():
    sr = RATIONALS
    q = sr.weight
    left, right = read("intro2_left.expr", sr), read("intro2_right.expr", sr)
    e2_body = right.body
    e_pp = left.left.left.body                       # mu y. a.(1*y) + out(2)
    e_p = left.left.right.body                       # mu y. a.(1*y) + out(1)
    e_px = substitute(e2_body.left.left.right.body, "x", right)   # E'[E2/x]
    one = sr.one()
    t_m = Plus(Act("a", one, parse_expr("w", sr)), Out(one))
    s1 = Plus(e_pp, scale(q(-1), e_p))
    x1, x2, x3 = scale(q("3/2"), right), scale(q("-3/2"), e_px), scale(q("1/2"), e_pp)
    s2 = Plus(Plus(x1, x2), x3)

    def prove_s1(p):
        p.step((0,), "fixpoint")
        cur = p.current
        a1, o2 = cur.left.left, cur.left.right
        am1, om1 = cur.right.left, cur.right.right
        p.rearrange((), Plus(Plus(a1, am1), Plus(o2, om1)))
        p.step((0, 1), "scalardot", r="-1", s="1")
        p.step((0,), "D1", R2L)
        p.step((1,), "out-sum")

    def prove_s2(p):
        def parts(e):
            acts = [t for t in _leaves(e) if isinstance(t, Act)]
            outs = [t for t in _leaves(e) if isinstance(t, Out)]
            return acts, outs
        acts, outs = [], []
        for piece in (x1, x2, x3):
            a, o = parts(piece)
            acts += a
            outs += o

        def pick(body):
            return [t for t in acts if t.body is body]

        g1, g2, g3 = pick(right), pick(e_px), pick(e_pp)
        target = Plus(Plus(Plus(Plus(*g1), Plus(*g2)), Plus(Plus(*g3[:2]), g3[2])),
                      Plus(Plus(*outs[:2]), outs[2]))
        p.rearrange((), target)
        p.step((0, 0, 0), "act-weight-sum")
        p.step((0, 0, 1), "act-weight-sum")
        p.step((0, 1, 0), "act-weight-sum")
        p.step((0, 1), "act-weight-sum")
        p.step((1, 0), "out-sum")
        p.step((1,), "out-sum")
        p.step((0, 0, 0), "scalardot", r="3/2", s="1")
        p.step((0, 0, 1), "scalardot", r="-3/2", s="1")
        p.step((0, 1), "scalardot", r="1/2", s="1")
        p.step((0, 0), "D1", R2L)
        p.step((0,), "D1", R2L)

    b = DerivationBuilder(left, sr, alphabet=("a",))
    b.step((0, 1), "scalardot", r="-1", s="1")
    b.step((0,), "D1", R2L)
    b.unique_fix((0, 0), "w", t_m, prove_s1)
    b.unique_fix((0, 0), "w", t_m, prove_s2, direction=R2L, target=s2)
    b.step((0,), "D1")
    b.step((0, 0), "D1")
    b.step((0, 0, 0), "scalardot", R2L, r="3/2", expr=right)
    b.step((0, 0, 1), "scalardot", R2L, r="-3/2", expr=e_px)
    b.step((0, 1), "scalardot", R2L, r="1/2", expr=e_pp)
    b.step((), "fixpoint", R2L, var="x", template=e2_body)
    return b.derivation(right)


def _leaves(e):
    if isinstance(e, Plus):
        return _leaves(e.left) + _leaves(e.right)
    return [e]


def main(argv):
    out = Path(argv[1]) if len(argv) > 1 else FIXTURES
    for name, build in (("intro1.proof", example1), ("intro2.proof", example2)):
        (out / name).write_text(format_derivation(build()))
        print(f"wrote {out / name}")


if __name__ == "__main__":
    main(sys.argv)
