"""Command-line interface: ``wkcalc COMMAND [options]``.

Exit codes: 0 success (or EQUIVALENT), 1 a negative verdict
(counterexample, rejected derivation), 2 usage, parse or domain errors.
Expression options accept ``@FILE`` to read the text from a file.
"""

import argparse
import re
import sys

from .automaton import (
    eval_word,
    parse_automaton,
    parse_configuration,
    serialize_automaton,
    subset_construct,
    to_dot,
)
from .equivalence import decide_equiv
from .errors import DerivationError, WkError
from .expression import canonical_text, evaluate, letters, normalize, parse_expr, to_text
from .kleene import automaton_to_expr, expr_to_automaton
from .proofcheck import check_derivation, parse_derivation, semantic_audit
from .semiring import get_semiring


class UsageError(Exception):
    pass


def _text(value):
    if value.startswith("@"):
        with open(value[1:], encoding="utf-8") as fh:
            return fh.read().strip()
    return value


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _alphabet(value):
    if value is None:
        return None
    parts = [p for p in re.split(r"[,\s]+", value) if p]
    if not parts:
        raise UsageError("empty --alphabet")
    return tuple(parts)


def _word(text, alphabet):
    if not text:
        return ()
    if re.search(r"[,\s.]", text):
        return tuple(p for p in re.split(r"[,\s.]+", text) if p)
    if all(len(a) == 1 for a in alphabet):
        return tuple(text)
    return (text,)


def _semiring(args):
    if not args.semiring:
        raise UsageError("--semiring is required for expressions")
    return get_semiring(args.semiring)


def _expr(args, value, sr):
    return parse_expr(_text(value), sr, _alphabet(args.alphabet), strict=True)


def _expr_alphabet(args, *exprs):
    given = _alphabet(args.alphabet)
    if given:
        return given
    found = set()
    for e in exprs:
        found |= letters(e)
    if not found:
        raise UsageError("cannot infer an alphabet from the expression; pass --alphabet")
    return tuple(sorted(found))


def _automaton(path, start):
    aut = parse_automaton(_read(path))
    cfg = parse_configuration(aut, start) if start else aut.unit(aut.states[0])
    return aut, cfg


# commands


def cmd_eval(args, out):
    if args.expr is not None:
        sr = _semiring(args)
        e = _expr(args, args.expr, sr)
        given = _alphabet(args.alphabet)
        word = _word(args.word, given or tuple(letters(e)))
        bad = [a for a in word if given and a not in given]
        if bad:
            raise UsageError(f"letter {bad[0]!r} not in alphabet")
        out.write(f"{evaluate(e, word, sr)}\n")
    elif args.automaton:
        aut, cfg = _automaton(args.automaton, args.start)
        out.write(f"{eval_word(aut, cfg, _word(args.word, aut.alphabet))}\n")
    else:
        raise UsageError("eval needs --expr or --automaton")
    return 0


def cmd_equiv(args, out):
    if args.expr is not None:
        if args.expr2 is None:
            raise UsageError("equiv with --expr needs --expr2")
        sr = _semiring(args)
        e1, e2 = _expr(args, args.expr, sr), _expr(args, args.expr2, sr)
        alphabet = _expr_alphabet(args, e1, e2)
        left = expr_to_automaton(e1, alphabet, sr)
        right = expr_to_automaton(e2, alphabet, sr)
        verdict = decide_equiv(left.automaton, left.start, right.automaton, right.start)
    elif args.automaton and args.automaton2:
        autL, cfgL = _automaton(args.automaton, args.start)
        autR, cfgR = _automaton(args.automaton2, args.start2)
        verdict = decide_equiv(autL, cfgL, autR, cfgR)
    else:
        raise UsageError("equiv needs --expr/--expr2 or --automaton/--automaton2")
    out.write(verdict.describe() + "\n")
    return 0 if verdict.equivalent else 1


def cmd_to_automaton(args, out):
    sr = _semiring(args)
    e = _expr(args, args.expr, sr)
    result = expr_to_automaton(e, _expr_alphabet(args, e), sr)
    out.write(serialize_automaton(result.automaton))
    return 0


# raw elimination terms share subterms heavily; printing unfolds the sharing
PRINT_LIMIT = 1_000_000


def _printed_size(e):
    sizes = {}
    stack = [e]
    while stack:
        t = stack[-1]
        kids = [c for c in t.children() if id(c) not in sizes]
        if kids:
            stack.extend(kids)
            continue
        stack.pop()
        sizes[id(t)] = 1 + sum(sizes[id(c)] for c in t.children())
    return sizes[id(e)]


def cmd_to_expr(args, out):
    aut = parse_automaton(_read(args.automaton))
    state = args.state or aut.states[0]
    e = automaton_to_expr(aut, state, normalize_result=args.normalize)
    size = _printed_size(e)
    if size > PRINT_LIMIT:
        raise UsageError(f"the expression has {size} nodes when printed; use --normalize")
    out.write(to_text(e) + "\n")
    return 0


def cmd_normalize(args, out):
    sr = _semiring(args)
    e = parse_expr(_text(args.expr), sr, _alphabet(args.alphabet))
    out.write(canonical_text(normalize(e)) + "\n")
    return 0


def cmd_check_proof(args, out):
    d = parse_derivation(_read(args.script))
    try:
        result = check_derivation(d)
        if args.audit is not None:
            semantic_audit(d, args.audit)
    except DerivationError as exc:
        out.write(f"REJECTED {exc}\n")
        return 1
    if not args.quiet:
        for line in result.trace:
            out.write(line + "\n")
    out.write("OK\n")
    return 0


def cmd_determinize(args, out):
    aut, cfg = _automaton(args.automaton, args.start)
    dfa = subset_construct(aut, cfg)
    out.write(serialize_automaton(dfa.to_automaton()))
    return 0


def cmd_dot(args, out):
    out.write(to_dot(parse_automaton(_read(args.automaton))))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="wkcalc", description="Weighted expressions and automata.")
    sub = p.add_subparsers(dest="command", required=True)

    def expr_opts(sp, required=True):
        sp.add_argument("--semiring", help="boolean, naturals, integers or rationals")
        sp.add_argument("--alphabet", help="letters, comma or space separated")
        sp.add_argument("--expr", required=required, help="expression text or @FILE")

    sp = sub.add_parser("eval", help="weight of a word")
    expr_opts(sp, required=False)
    sp.add_argument("--automaton", help="automaton file")
    sp.add_argument("--start", help="start configuration, e.g. '{s0:1}'")
    sp.add_argument("--word", required=True, help="the word; '' for the empty word")
    sp.set_defaults(fn=cmd_eval)

    sp = sub.add_parser("equiv", help="decide language equivalence")
    expr_opts(sp, required=False)
    sp.add_argument("--expr2")
    sp.add_argument("--automaton")
    sp.add_argument("--start")
    sp.add_argument("--automaton2")
    sp.add_argument("--start2")
    sp.set_defaults(fn=cmd_equiv)

    sp = sub.add_parser("to-automaton", help="derivative automaton of an expression")
    expr_opts(sp)
    sp.set_defaults(fn=cmd_to_automaton)

    sp = sub.add_parser("to-expr", help="expression for a state of an automaton")
    sp.add_argument("--automaton", required=True)
    sp.add_argument("--state")
    sp.add_argument("--normalize", action="store_true")
    sp.set_defaults(fn=cmd_to_expr)

    sp = sub.add_parser("normalize", help="canonical form of an expression")
    expr_opts(sp)
    sp.set_defaults(fn=cmd_normalize)

    sp = sub.add_parser("check-proof", help="replay a derivation script")
    sp.add_argument("--script", required=True)
    sp.add_argument("--audit", type=int, metavar="N",
                    help="also compare languages of consecutive steps up to length N")
    sp.add_argument("--quiet", action="store_true", help="print only the verdict")
    sp.set_defaults(fn=cmd_check_proof)

    sp = sub.add_parser("determinize", help="subset construction (Boolean only)")
    sp.add_argument("--automaton", required=True)
    sp.add_argument("--start")
    sp.set_defaults(fn=cmd_determinize)

    sp = sub.add_parser("dot", help="GraphViz rendering")
    sp.add_argument("--automaton", required=True)
    sp.set_defaults(fn=cmd_dot)
    return p


def main(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args, out)
    except (WkError, UsageError, KeyError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        err.write(f"wkcalc: error: {msg}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
