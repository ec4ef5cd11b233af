"""Replaying equational derivations between expressions.

A derivation is a chain of rewrites, each applying one axiom at one
position (a path of child indices), plus nested uses of the unique
fixpoint rule.  Commutativity and associativity are explicit steps; there
is no matching modulo AC.
"""

import itertools
from dataclasses import dataclass, field

from .errors import DerivationError, OpenExpressionError, ParseError, UnguardedMuError
from .expression import (
    ZERO,
    Act,
    Mu,
    Out,
    Plus,
    Zero,
    alpha_eq,
    evaluate,
    letters,
    parse_expr,
    scale,
    substitute,
    to_text,
    with_children,
)
from .semiring import BOOLEAN, RATIONALS, Weight, get_semiring

BISIM = "bisim"
LANG = "lang"
L2R = "L2R"
R2L = "R2L"


# paths


def parse_path(text):
    text = text.strip()
    if text in ("", "root", "."):
        return ()
    try:
        return tuple(int(p) for p in text.split("."))
    except ValueError:
        raise ParseError(f"malformed path {text!r}") from None


def format_path(path):
    return ".".join(map(str, path)) if path else "root"


def subterm(e, path):
    for depth, i in enumerate(path):
        kids = e.children()
        if not 0 <= i < len(kids):
            raise DerivationError(
                f"path {format_path(path)} leaves the term at depth {depth}"
            )
        e = kids[i]
    return e


def replace_at(e, path, new):
    if not path:
        return new
    kids = list(e.children())
    i = path[0]
    if not 0 <= i < len(kids):
        raise DerivationError(f"path index {i} out of range")
    kids[i] = replace_at(kids[i], path[1:], new)
    return with_children(e, kids)


# axioms


@dataclass(frozen=True)
class Axiom:
    id: str
    statement: str
    lang_only: bool = False
    boolean_only: bool = False


AXIOMS = {
    a.id: a
    for a in [
        Axiom("out-zero", "out(0) = zero"),
        Axiom("out-sum", "out(r) + out(s) = out(r+s)"),
        Axiom("plus-unit", "zero + E = E"),
        Axiom("plus-comm", "E1 + E2 = E2 + E1"),
        Axiom("plus-assoc", "(E1 + E2) + E3 = E1 + (E2 + E3)"),
        Axiom("act-zero-weight", "a.(0 * E) = zero"),
        Axiom("act-weight-sum", "a.(r * E) + a.(s * E) = a.((r+s) * E)"),
        Axiom("fixpoint", "mu x. E = E[mu x. E / x]"),
        Axiom("alpha", "renaming of bound variables"),
        Axiom("D1", "a.(r * (E1 + E2)) = a.(r * E1) + a.(r * E2)", lang_only=True),
        Axiom("D2", "a.(r * b.(s * E)) = a.(rs * b.(1 * E))", lang_only=True),
        Axiom("D3", "a.(r * out(s)) = a.(1 * out(rs))", lang_only=True),
        Axiom("D4", "a.(r * zero) = zero", lang_only=True),
        Axiom("scalardot", "a.(rs * E) = a.(s * rE)", lang_only=True),
        Axiom("trace-dist", "a.(E1 + E2) = a.E1 + a.E2", lang_only=True, boolean_only=True),
        Axiom("trace-zero", "a.zero = zero", lang_only=True, boolean_only=True),
    ]
}

FP_ALIASES = {"FP": "fixpoint"}


def _shape(axiom, direction, want, got):
    return DerivationError(
        f"{axiom} {direction}: expected {want}, found {to_text(got, limit=80)}"
    )


def _weight(params, key, semiring):
    if key not in params:
        raise DerivationError(f"missing parameter {key}=")
    v = params[key]
    if isinstance(v, Weight):
        if v.semiring is not semiring:
            raise DerivationError(f"parameter {key} is not a {semiring.id} weight")
        return v
    try:
        return semiring.parse(str(v))
    except ParseError as exc:
        raise DerivationError(f"parameter {key}: {exc}") from None


def _expr(params, key, semiring):
    if key not in params:
        raise DerivationError(f"missing parameter {key}=")
    v = params[key]
    return v if not isinstance(v, str) else parse_expr(v, semiring)


def _mu(x, body):
    try:
        return Mu(x, body)
    except UnguardedMuError as exc:
        raise DerivationError(exc.message) from None


def _letter(params):
    if "letter" not in params:
        raise DerivationError("missing parameter letter=")
    return str(params["letter"])


def _rewrite(e, ax, d, p, sr):
    one = sr.one()
    if ax == "out-zero":
        if d == L2R:
            if not (isinstance(e, Out) and e.weight.is_zero):
                raise _shape(ax, d, "out(0)", e)
            return ZERO
        if not isinstance(e, Zero):
            raise _shape(ax, d, "zero", e)
        return Out(sr.zero())
    if ax == "out-sum":
        if d == L2R:
            if not (isinstance(e, Plus) and isinstance(e.left, Out) and isinstance(e.right, Out)):
                raise _shape(ax, d, "out(r) + out(s)", e)
            return Out(e.left.weight + e.right.weight)
        if not isinstance(e, Out):
            raise _shape(ax, d, "out(t)", e)
        r, s = _weight(p, "r", sr), _weight(p, "s", sr)
        if r + s != e.weight:
            raise DerivationError(f"out-sum R2L: {r} + {s} is not {e.weight}")
        return Plus(Out(r), Out(s))
    if ax == "plus-unit":
        if d == L2R:
            if not (isinstance(e, Plus) and isinstance(e.left, Zero)):
                raise _shape(ax, d, "zero + E", e)
            return e.right
        return Plus(ZERO, e)
    if ax == "plus-comm":
        if not isinstance(e, Plus):
            raise _shape(ax, d, "E1 + E2", e)
        return Plus(e.right, e.left)
    if ax == "plus-assoc":
        if d == L2R:
            if not (isinstance(e, Plus) and isinstance(e.left, Plus)):
                raise _shape(ax, d, "(E1 + E2) + E3", e)
            return Plus(e.left.left, Plus(e.left.right, e.right))
        if not (isinstance(e, Plus) and isinstance(e.right, Plus)):
            raise _shape(ax, d, "E1 + (E2 + E3)", e)
        return Plus(Plus(e.left, e.right.left), e.right.right)
    if ax == "act-zero-weight":
        if d == L2R:
            if not (isinstance(e, Act) and e.weight.is_zero):
                raise _shape(ax, d, "a.(0 * E)", e)
            return ZERO
        if not isinstance(e, Zero):
            raise _shape(ax, d, "zero", e)
        return Act(_letter(p), sr.zero(), _expr(p, "expr", sr))
    if ax == "act-weight-sum":
        if d == L2R:
            if not (isinstance(e, Plus) and isinstance(e.left, Act) and isinstance(e.right, Act)
                    and e.left.letter == e.right.letter and e.left.body is e.right.body):
                raise _shape(ax, d, "a.(r * E) + a.(s * E)", e)
            return Act(e.left.letter, e.left.weight + e.right.weight, e.left.body)
        if not isinstance(e, Act):
            raise _shape(ax, d, "a.(t * E)", e)
        r, s = _weight(p, "r", sr), _weight(p, "s", sr)
        if r + s != e.weight:
            raise DerivationError(f"act-weight-sum R2L: {r} + {s} is not {e.weight}")
        return Plus(Act(e.letter, r, e.body), Act(e.letter, s, e.body))
    if ax == "fixpoint":
        if d == L2R:
            if not isinstance(e, Mu):
                raise _shape(ax, d, "mu x. E", e)
            return substitute(e.body, e.var, e)
        x = str(p.get("var", ""))
        if not x:
            raise DerivationError("missing parameter var=")
        folded = _mu(x, _expr(p, "template", sr))
        if not alpha_eq(substitute(folded.body, x, folded), e):
            raise DerivationError("fixpoint R2L: term is not the unfolding of the template")
        return folded
    if ax == "alpha":
        other = _expr(p, "expr", sr)
        if not alpha_eq(e, other):
            raise DerivationError("alpha: terms are not alpha-equivalent")
        return other
    if ax == "D1":
        if d == L2R:
            if not (isinstance(e, Act) and isinstance(e.body, Plus)):
                raise _shape(ax, d, "a.(r * (E1 + E2))", e)
            return Plus(Act(e.letter, e.weight, e.body.left), Act(e.letter, e.weight, e.body.right))
        if not (isinstance(e, Plus) and isinstance(e.left, Act) and isinstance(e.right, Act)
                and e.left.letter == e.right.letter and e.left.weight == e.right.weight):
            raise _shape(ax, d, "a.(r * E1) + a.(r * E2)", e)
        return Act(e.left.letter, e.left.weight, Plus(e.left.body, e.right.body))
    if ax == "D2":
        if d == L2R:
            if not (isinstance(e, Act) and isinstance(e.body, Act)):
                raise _shape(ax, d, "a.(r * b.(s * E))", e)
            inner = e.body
            return Act(e.letter, e.weight * inner.weight, Act(inner.letter, one, inner.body))
        if not (isinstance(e, Act) and isinstance(e.body, Act) and e.body.weight.is_one):
            raise _shape(ax, d, "a.(t * b.(1 * E))", e)
        r, s = _weight(p, "r", sr), _weight(p, "s", sr)
        if r * s != e.weight:
            raise DerivationError(f"D2 R2L: {r} * {s} is not {e.weight}")
        return Act(e.letter, r, Act(e.body.letter, s, e.body.body))
    if ax == "D3":
        if d == L2R:
            if not (isinstance(e, Act) and isinstance(e.body, Out)):
                raise _shape(ax, d, "a.(r * out(s))", e)
            return Act(e.letter, one, Out(e.weight * e.body.weight))
        if not (isinstance(e, Act) and isinstance(e.body, Out) and e.weight.is_one):
            raise _shape(ax, d, "a.(1 * out(t))", e)
        r, s = _weight(p, "r", sr), _weight(p, "s", sr)
        if r * s != e.body.weight:
            raise DerivationError(f"D3 R2L: {r} * {s} is not {e.body.weight}")
        return Act(e.letter, r, Out(s))
    if ax == "D4":
        if d == L2R:
            if not (isinstance(e, Act) and isinstance(e.body, Zero)):
                raise _shape(ax, d, "a.(r * zero)", e)
            return ZERO
        if not isinstance(e, Zero):
            raise _shape(ax, d, "zero", e)
        return Act(_letter(p), _weight(p, "r", sr), ZERO)
    if ax == "scalardot":
        if not isinstance(e, Act):
            raise _shape(ax, d, "a.(t * E)", e)
        r = _weight(p, "r", sr)
        if d == L2R:
            s = _weight(p, "s", sr)
            if r * s != e.weight:
                raise DerivationError(f"scalardot L2R: {r} * {s} is not {e.weight}")
            try:
                return Act(e.letter, s, scale(r, e.body))
            except OpenExpressionError as exc:
                raise DerivationError(f"scalardot: {exc}") from None
        target = _expr(p, "expr", sr)
        try:
            scaled = scale(r, target)
        except OpenExpressionError as exc:
            raise DerivationError(f"scalardot: {exc}") from None
        if not alpha_eq(scaled, e.body):
            raise DerivationError("scalardot R2L: body is not the scaled expression")
        return Act(e.letter, r * e.weight, target)
    if ax == "trace-dist":
        if d == L2R:
            if not (isinstance(e, Act) and e.weight.is_one and isinstance(e.body, Plus)):
                raise _shape(ax, d, "a.(E1 + E2)", e)
            return Plus(Act(e.letter, one, e.body.left), Act(e.letter, one, e.body.right))
        if not (isinstance(e, Plus) and isinstance(e.left, Act) and isinstance(e.right, Act)
                and e.left.letter == e.right.letter
                and e.left.weight.is_one and e.right.weight.is_one):
            raise _shape(ax, d, "a.E1 + a.E2", e)
        return Act(e.left.letter, one, Plus(e.left.body, e.right.body))
    if ax == "trace-zero":
        if d == L2R:
            if not (isinstance(e, Act) and e.weight.is_one and isinstance(e.body, Zero)):
                raise _shape(ax, d, "a.zero", e)
            return ZERO
        if not isinstance(e, Zero):
            raise _shape(ax, d, "zero", e)
        return Act(_letter(p), one, ZERO)
    raise DerivationError(f"unknown axiom {ax!r}")


def apply_axiom_at(e, path, axiom, direction=L2R, params=None, semiring=None, level=LANG):
    """Rewrite the subterm of ``e`` at ``path`` with one axiom instance.

    Right-to-left uses of axioms that lose information need parameters:
    ``r``/``s`` weights, ``letter``, ``var``, ``expr`` or ``template``.
    """
    axiom = FP_ALIASES.get(axiom, axiom)
    if axiom not in AXIOMS:
        raise DerivationError(f"unknown axiom {axiom!r}")
    if direction not in (L2R, R2L):
        raise DerivationError(f"direction must be L2R or R2L, not {direction!r}")
    info = AXIOMS[axiom]
    sr = semiring or e.semiring or RATIONALS
    if info.lang_only and level != LANG:
        raise DerivationError(f"{axiom} holds only up to language equivalence")
    if info.boolean_only and sr is not BOOLEAN:
        raise DerivationError(f"{axiom} is valid only for Boolean weights")
    path = tuple(path)
    new = _rewrite(subterm(e, path), axiom, direction, dict(params or {}), sr)
    return replace_at(e, path, new)


# derivations


@dataclass
class Rewrite:
    path: tuple
    axiom: str
    direction: str = L2R
    params: dict = field(default_factory=dict)
    line: int = None


@dataclass
class UniqueFix:
    """The rule ``E1 = T[E1/x]  implies  E1 = mu x. T`` applied at ``path``.

    Left to right the subterm E1 becomes ``mu x. T``; right to left the
    subterm ``mu x. T`` becomes ``target``.  ``premise`` proves
    ``E1 = T[E1/x]`` starting from E1.
    """

    var: str
    template: object
    premise: "Derivation"
    path: tuple = ()
    direction: str = L2R
    target: object = None
    line: int = None


@dataclass
class Derivation:
    level: str
    start: object
    steps: list
    end: object = None
    semiring: object = None
    alphabet: tuple = None


@dataclass
class CheckResult:
    ok: bool
    trace: list
    chain: list
    premises: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def _short(e):
    return to_text(e, limit=70)


def _replay(d, indent, trace, premises):
    if d.level not in (BISIM, LANG):
        raise DerivationError(f"unknown level {d.level!r}")
    sr = d.semiring or d.start.semiring or RATIONALS
    cur = d.start
    chain = [cur]
    pad = "  " * indent
    trace.append(f"{pad}start {_short(cur)}")
    for idx, st in enumerate(d.steps, start=1):
        where = f"line {st.line}: " if st.line else ""
        try:
            if isinstance(st, Rewrite):
                nxt = apply_axiom_at(cur, st.path, st.axiom, st.direction, st.params, sr, d.level)
                trace.append(f"{pad}[{idx}] {st.axiom} {st.direction} at {format_path(st.path)}"
                             f"  => {_short(nxt)}")
            else:
                nxt = _unique_fix(cur, st, d, sr, indent, trace, premises)
        except DerivationError as exc:
            if exc.step is None:
                raise DerivationError(f"{where}{exc}", idx) from None
            raise
        cur = nxt
        chain.append(cur)
    if d.end is not None and not alpha_eq(cur, d.end):
        raise DerivationError(
            f"derivation ends in {_short(cur)}, not the stated {_short(d.end)}", len(d.steps)
        )
    trace.append(f"{pad}end {_short(cur)}")
    return chain


def _unique_fix(cur, st, d, sr, indent, trace, premises):
    pad = "  " * indent
    here = subterm(cur, tuple(st.path))
    if st.direction == L2R:
        e1, result = here, _mu(st.var, st.template)
    elif st.direction == R2L:
        if st.target is None:
            raise DerivationError("right-to-left unique fixpoint needs a target")
        if not alpha_eq(here, _mu(st.var, st.template)):
            raise DerivationError("subterm is not mu of the stated template")
        e1, result = st.target, st.target
    else:
        raise DerivationError(f"bad direction {st.direction!r}")
    if st.var in e1.fv:
        raise DerivationError(f"variable {st.var!r} is free in the fixpoint candidate")
    goal = substitute(st.template, st.var, e1)
    premise = st.premise
    if premise.start is None:
        premise = Derivation(d.level, e1, premise.steps, premise.end, sr, d.alphabet)
    elif not alpha_eq(premise.start, e1):
        raise DerivationError("premise does not start from the fixpoint candidate")
    if premise.level != d.level:
        raise DerivationError("premise level differs from the enclosing derivation")
    if premise.end is not None and not alpha_eq(premise.end, goal):
        raise DerivationError("premise end is not the template instantiated at the candidate")
    trace.append(f"{pad}ufix {st.direction} {st.var} at {format_path(st.path)}: premise")
    sub = _replay(Derivation(premise.level, premise.start, premise.steps, goal,
                             premise.semiring or sr, d.alphabet), indent + 1, trace, premises)
    premises.append(sub)
    nxt = replace_at(cur, tuple(st.path), result)
    trace.append(f"{pad}  => {_short(nxt)}")
    return nxt


def check_derivation(d):
    """Replay ``d``; raise DerivationError on the first failing step.

    Returns a CheckResult whose ``chain`` lists the expressions of the top
    level and ``premises`` the chains of nested unique-fixpoint premises.
    """
    trace = []
    premises = []
    chain = _replay(d, 0, trace, premises)
    return CheckResult(True, trace, chain, premises)


def language_table(e, semiring, alphabet, max_len):
    """Weights of ``e`` on all words up to ``max_len``, in length-lex order."""
    return [evaluate(e, w, semiring) for n in range(max_len + 1)
            for w in itertools.product(alphabet, repeat=n)]


def semantic_audit(d, max_len=4, alphabet=None):
    """Check every consecutive pair of the replay denotes the same language
    on words up to ``max_len``.  Pairs with free variables are skipped."""
    result = check_derivation(d)
    sr = d.semiring or d.start.semiring or RATIONALS
    if alphabet is None:
        alphabet = d.alphabet or tuple(sorted(letters(d.start) | letters(result.chain[-1])))
    for chain in [result.chain] + result.premises:
        for i in range(len(chain) - 1):
            a, b = chain[i], chain[i + 1]
            if a.fv or b.fv:
                continue
            if a is b:
                continue
            if language_table(a, sr, alphabet, max_len) != language_table(b, sr, alphabet, max_len):
                raise DerivationError(f"step {i + 1} changes the language", i + 1)
    return True


# script format


def _split_params(tokens):
    params = {}
    for j, tok in enumerate(tokens):
        key, eq, val = tok.partition("=")
        if not eq:
            raise ParseError(f"expected key=value, found {tok!r}")
        if key in ("expr", "template"):
            params[key] = " ".join([val] + tokens[j + 1:])
            break
        params[key] = val
    return params


class _ScriptParser:
    def __init__(self, text):
        self.lines = []
        for no, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                self.lines.append((no, line))
        self.i = 0
        self.semiring = RATIONALS
        self.alphabet = None

    def expr(self, text, no):
        try:
            return parse_expr(text, self.semiring, self.alphabet)
        except ParseError as exc:
            raise ParseError(exc.message, no, exc.column) from None

    def parse(self):
        level = LANG
        start = None
        while self.i < len(self.lines):
            no, line = self.lines[self.i]
            kw, _, rest = line.partition(" ")
            if kw == "semiring":
                self.semiring = get_semiring(rest.strip())
            elif kw == "alphabet":
                self.alphabet = tuple(rest.split())
            elif kw == "level":
                level = rest.strip()
                if level not in (BISIM, LANG):
                    raise ParseError(f"level must be {BISIM} or {LANG}", no, 1)
            elif kw == "start":
                start = self.expr(rest, no)
                self.i += 1
                break
            else:
                raise ParseError(f"expected header line, found {kw!r}", no, 1)
            self.i += 1
        if start is None:
            raise ParseError("missing 'start' line")
        steps, end = self.block()
        if self.i != len(self.lines):
            raise ParseError("text after final 'end'", self.lines[self.i][0], 1)
        if end is None:
            raise ParseError("missing final 'end <expr>' line")
        return Derivation(level, start, steps, end, self.semiring, self.alphabet)

    def block(self):
        steps = []
        while self.i < len(self.lines):
            no, line = self.lines[self.i]
            self.i += 1
            kw, _, rest = line.partition(" ")
            if kw == "end":
                return steps, (self.expr(rest, no) if rest.strip() else None)
            if kw == "step":
                toks = rest.split()
                if len(toks) < 3:
                    raise ParseError("expected 'step PATH AXIOM L2R|R2L [k=v ...]'", no, 1)
                params = _split_params(toks[3:])
                for key in ("expr", "template"):
                    if key in params:
                        params[key] = self.expr(params[key], no)
                steps.append(Rewrite(parse_path(toks[0]), toks[1], toks[2], params, no))
            elif kw in ("ufix", "ufix-r2l"):
                steps.append(self.ufix(kw, rest, no))
            else:
                raise ParseError(f"unknown directive {kw!r}", no, 1)
        raise ParseError("missing 'end'")

    def ufix(self, kw, rest, no):
        rest = rest.strip()
        if not rest.endswith(" begin") and rest != "begin":
            raise ParseError("unique fixpoint line must end with 'begin'", no, 1)
        rest = rest[: -len("begin")].strip()
        path = ()
        if rest.startswith("at "):
            _, ptext, rest = rest.split(None, 2)
            path = parse_path(ptext)
        var, _, rest = rest.partition(" ")
        target = None
        direction = L2R
        if kw == "ufix-r2l":
            direction = R2L
            rest, sep, ttext = rest.partition(";")
            if not sep:
                raise ParseError("ufix-r2l needs 'TEMPLATE ; TARGET'", no, 1)
            target = self.expr(ttext, no)
        template = self.expr(rest, no)
        steps, end = self.block()
        premise = Derivation(None, None, steps, end)
        return UniqueFix(var, template, premise, path, direction, target, no)


def parse_derivation(text):
    d = _ScriptParser(text).parse()
    _fill_levels(d)
    return d


def _fill_levels(d):
    for st in d.steps:
        if isinstance(st, UniqueFix):
            st.premise.level = d.level
            st.premise.semiring = d.semiring
            st.premise.alphabet = d.alphabet
            _fill_levels(st.premise)


def format_derivation(d, indent=0):
    """Script text for ``d``; inverse of parse_derivation."""
    pad = "  " * indent
    lines = []
    if indent == 0:
        if d.semiring is not None:
            lines.append(f"semiring {d.semiring.id}")
        if d.alphabet:
            lines.append("alphabet " + " ".join(d.alphabet))
        lines.append(f"level {d.level}")
        lines.append(f"start {to_text(d.start)}")
    for st in d.steps:
        if isinstance(st, Rewrite):
            params = " ".join(
                f"{k}={to_text(v) if hasattr(v, 'digest') else v}" for k, v in st.params.items()
            )
            lines.append(f"{pad}step {format_path(st.path)} {st.axiom} {st.direction}"
                         + (f" {params}" if params else ""))
        else:
            at = f"at {format_path(st.path)} " if st.path else ""
            if st.direction == L2R:
                lines.append(f"{pad}ufix {at}{st.var} {to_text(st.template)} begin")
            else:
                lines.append(f"{pad}ufix-r2l {at}{st.var} {to_text(st.template)} ; "
                             f"{to_text(st.target)} begin")
            lines.extend(format_derivation(st.premise, indent + 1).splitlines())
    end = f"end {to_text(d.end)}" if d.end is not None else "end"
    lines.append(pad[:-2] + end if indent else end)
    return "\n".join(lines) + "\n"


# building derivations programmatically


def _leaves(e):
    if isinstance(e, Plus):
        return _leaves(e.left) + _leaves(e.right)
    return [e]


class DerivationBuilder:
    """Record steps while tracking the current expression.

    ``rearrange`` emits the explicit associativity and commutativity steps
    turning the sum at a path into a given arrangement of the same
    summands.
    """

    def __init__(self, start, semiring, level=LANG, alphabet=None):
        self.start = start
        self.current = start
        self.semiring = semiring
        self.level = level
        self.alphabet = alphabet
        self.steps = []

    def step(self, path, axiom, direction=L2R, **params):
        path = tuple(path)
        self.current = apply_axiom_at(self.current, path, axiom, direction, params,
                                      self.semiring, self.level)
        self.steps.append(Rewrite(path, axiom, direction, params))
        return self

    def at(self, path):
        return subterm(self.current, tuple(path))

    def _flatten(self, path):
        # make the sum at path right-nested
        path = tuple(path)
        while isinstance(self.at(path), Plus):
            while isinstance(self.at(path).left, Plus):
                self.step(path, "plus-assoc")
            path = path + (1,)

    def _sort(self, path, order):
        path = tuple(path)
        leaves = _leaves(self.at(path))
        # bubble sort on the right-nested sum by position in ``order``
        rank = []
        pool = list(order)
        for leaf in leaves:
            j = next(k for k, t in enumerate(pool) if t is leaf and t is not None)
            rank.append(j)
            pool[j] = None
        n = len(rank)
        for end in range(n - 1, 0, -1):
            for i in range(end):
                if rank[i] > rank[i + 1]:
                    node = path + (1,) * i
                    if i + 1 == n - 1:
                        self.step(node, "plus-comm")
                    else:
                        self.step(node, "plus-assoc", R2L)
                        self.step(node + (0,), "plus-comm")
                        self.step(node, "plus-assoc")
                    rank[i], rank[i + 1] = rank[i + 1], rank[i]

    def _shape(self, path, target):
        if not isinstance(target, Plus):
            return
        self._flatten(path)
        for _ in range(len(_leaves(target.left)) - 1):
            self.step(path, "plus-assoc", R2L)
        self._shape(tuple(path) + (0,), target.left)
        self._shape(tuple(path) + (1,), target.right)

    def rearrange(self, path, target):
        path = tuple(path)
        have, want = _leaves(self.at(path)), _leaves(target)
        if sorted(map(id, have)) != sorted(map(id, want)):
            raise DerivationError("rearrange: summands differ")
        self._flatten(path)
        self._sort(path, want)
        self._shape(path, target)
        if self.at(path) is not target:
            raise DerivationError("rearrange did not reach the target shape")
        return self

    def unique_fix(self, path, var, template, prove, direction=L2R, target=None):
        """Apply the unique fixpoint rule; ``prove`` fills a nested builder."""
        path = tuple(path)
        e1 = self.at(path) if direction == L2R else target
        inner = DerivationBuilder(e1, self.semiring, self.level, self.alphabet)
        prove(inner)
        goal = substitute(template, var, e1)
        if not alpha_eq(inner.current, goal):
            raise DerivationError("nested proof does not reach the template instance")
        premise = Derivation(self.level, None, inner.steps, goal, self.semiring, self.alphabet)
        st = UniqueFix(var, template, premise, path, direction, target)
        self.current = _unique_fix(self.current, st, self.derivation(), self.semiring, 0, [], [])
        self.steps.append(st)
        return self

    def derivation(self, end=None):
        return Derivation(self.level, self.start, list(self.steps),
                          self.current if end is None else end, self.semiring, self.alphabet)
