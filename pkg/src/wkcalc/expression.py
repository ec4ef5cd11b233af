"""Weighted fixpoint expressions.

    E ::= x | zero | E + E | out(r) | a.(r * E) | mu x. E

Nodes are hash-consed: building the same tree twice returns the same
object, so structural equality is identity and every per-node cache is a
plain dict.  This keeps the heavily shared terms produced by
``automaton_to_expr`` (whose tree size is doubly exponential in the number
of states) cheap to manipulate, because every traversal below is memoized
over distinct nodes rather than tree positions.
"""

import hashlib
import re

from .errors import (
    AlphabetError,
    DomainMismatchError,
    OpenExpressionError,
    ParseError,
    UnboundVariableError,
    UnguardedMuError,
)
from .lincomb import LinComb, lc_add, lc_apply, lc_scale

_TABLE = {}


def _digest(*parts):
    h = hashlib.blake2b(digest_size=12)
    for p in parts:
        if isinstance(p, bytes):
            h.update(p)
        else:
            h.update(str(p).encode())
        h.update(b"\x00")
    return h.digest()


def _join_semiring(*srs):
    found = None
    for s in srs:
        if s is None:
            continue
        if found is None:
            found = s
        elif s is not found:
            raise DomainMismatchError(f"expression mixes {found.id} and {s.id} weights")
    return found


class Expr:
    """Base class of expression nodes.  Do not instantiate directly."""

    __slots__ = ("fv", "bv", "digest", "semiring", "n", "__weakref__")
    rank = 9

    def __reduce__(self):
        return (parse_expr, (to_text(self), self.semiring, None, False))

    def __repr__(self):
        text = to_text(self, limit=200)
        return f"<{type(self).__name__} {text}>"

    def __str__(self):
        return to_text(self)

    def children(self):
        return ()

    @property
    def sort_key(self):
        return (self.rank, "", self.digest)

    @property
    def is_closed(self):
        return not self.fv


def _make(cls, key, fill):
    node = _TABLE.get(key)
    if node is None:
        node = object.__new__(cls)
        fill(node)
        _TABLE[key] = node
    return node


class Var(Expr):
    __slots__ = ("name",)
    rank = 2

    def __new__(cls, name):
        def fill(n):
            n.name = name
            n.fv = frozenset((name,))
            n.bv = frozenset()
            n.semiring = None
            n.n = 0
            n.digest = _digest("var", name)
        return _make(cls, (cls, name), fill)

    @property
    def sort_key(self):
        return (self.rank, self.name, self.digest)


class Zero(Expr):
    __slots__ = ()
    rank = 4

    def __new__(cls):
        def fill(n):
            n.fv = n.bv = frozenset()
            n.semiring = None
            n.n = 0
            n.digest = _digest("zero")
        return _make(cls, (cls,), fill)


class Out(Expr):
    __slots__ = ("weight",)
    rank = 3

    def __new__(cls, weight):
        def fill(n):
            n.weight = weight
            n.fv = n.bv = frozenset()
            n.semiring = weight.semiring
            n.n = 0
            n.digest = _digest("out", weight.semiring.id, weight)
        return _make(cls, (cls, weight), fill)


class Plus(Expr):
    __slots__ = ("left", "right")
    rank = 5

    def __new__(cls, left, right):
        def fill(n):
            n.left = left
            n.right = right
            n.fv = left.fv | right.fv
            n.bv = left.bv | right.bv
            n.semiring = _join_semiring(left.semiring, right.semiring)
            n.n = 1 + max(left.n, right.n)
            n.digest = _digest("plus", left.digest, right.digest)
        return _make(cls, (cls, left, right), fill)

    def children(self):
        return (self.left, self.right)


class Act(Expr):
    """``a.(r * body)``: read ``letter`` with weight ``weight``, continue as ``body``."""

    __slots__ = ("letter", "weight", "body")
    rank = 0

    def __new__(cls, letter, weight, body):
        def fill(n):
            n.letter = letter
            n.weight = weight
            n.body = body
            n.fv = body.fv
            n.bv = body.bv
            n.semiring = _join_semiring(weight.semiring, body.semiring)
            n.n = 0
            n.digest = _digest("act", letter, weight.semiring.id, weight, body.digest)
        return _make(cls, (cls, letter, weight, body), fill)

    def children(self):
        return (self.body,)

    @property
    def sort_key(self):
        return (self.rank, self.letter, self.body.digest, self.digest)


class Mu(Expr):
    __slots__ = ("var", "body")
    rank = 1

    def __new__(cls, var, body):
        if not is_guarded(body, var):
            raise UnguardedMuError(f"variable {var!r} occurs unguarded in the body of mu {var}")

        def fill(n):
            n.var = var
            n.body = body
            n.fv = body.fv - {var}
            n.bv = body.bv | {var}
            n.semiring = body.semiring
            n.n = 1 + body.n
            n.digest = _digest("mu", var, body.digest)
        return _make(cls, (cls, var, body), fill)

    def children(self):
        return (self.body,)


ZERO = Zero()


def clear_caches():
    """Drop memoized normal forms and derivatives (the node table is kept)."""
    _NORM.clear()
    _HEAD.clear()
    _GUARD.clear()


def with_children(e, kids):
    """Rebuild ``e`` with new children (same arity as ``e.children()``)."""
    if isinstance(e, Plus):
        return Plus(kids[0], kids[1])
    if isinstance(e, Act):
        return Act(e.letter, e.weight, kids[0])
    if isinstance(e, Mu):
        return Mu(e.var, kids[0])
    return e


def sum_of(parts):
    """Left-nested sum of ``parts``; ``zero`` when empty."""
    result = None
    for p in parts:
        result = p if result is None else Plus(result, p)
    return ZERO if result is None else result


def summands(e):
    """Leaves of the maximal ``+``-tree rooted at ``e``, left to right."""
    out = []
    stack = [e]
    while stack:
        x = stack.pop()
        if isinstance(x, Plus):
            stack.append(x.right)
            stack.append(x.left)
        else:
            out.append(x)
    return out


# variables, guardedness, substitution

_GUARD = {}


def free_vars(e):
    return e.fv


def is_guarded(e, x):
    """True iff every free occurrence of ``x`` in ``e`` lies under an action."""
    if x not in e.fv:
        return True
    key = (e, x)
    hit = _GUARD.get(key)
    if hit is not None:
        return hit
    if isinstance(e, Var):
        res = False
    elif isinstance(e, Act):
        res = True
    elif isinstance(e, Plus):
        res = is_guarded(e.left, x) and is_guarded(e.right, x)
    elif isinstance(e, Mu):
        res = is_guarded(e.body, x)
    else:
        res = True
    _GUARD[key] = res
    return res


def fresh_name(base, avoid):
    stem = base.rstrip("0123456789'") or "v"
    i = 1
    while f"{stem}{i}" in avoid:
        i += 1
    return f"{stem}{i}"


def substitute(e, x, f):
    """Capture-avoiding substitution ``e[f/x]``."""
    ffv = f.fv
    memo = {}

    def go(t):
        if x not in t.fv:
            return t
        hit = memo.get(t)
        if hit is not None:
            return hit
        if isinstance(t, Var):
            res = f
        elif isinstance(t, Plus):
            res = Plus(go(t.left), go(t.right))
        elif isinstance(t, Act):
            res = Act(t.letter, t.weight, go(t.body))
        else:  # Mu binding some y != x, since x is free in t
            y, body = t.var, t.body
            if y in ffv:
                y2 = fresh_name(y, ffv | body.fv | body.bv | {x})
                body = substitute(body, y, Var(y2))
                y = y2
            res = Mu(y, go(body))
        memo[t] = res
        return res

    return go(e)


def syntactic_replace(e, x, f):
    """``e{f/x}``: replace free occurrences of ``x`` by ``f`` with no renaming.

    Free variables of ``f`` may be captured by binders of ``e``; that is
    the point of this operation.
    """
    memo = {}

    def go(t):
        if x not in t.fv:
            return t
        hit = memo.get(t)
        if hit is not None:
            return hit
        if isinstance(t, Var):
            res = f
        elif isinstance(t, Plus):
            res = Plus(go(t.left), go(t.right))
        elif isinstance(t, Act):
            res = Act(t.letter, t.weight, go(t.body))
        else:
            res = Mu(t.var, go(t.body))
        memo[t] = res
        return res

    return go(e)


def unfold(e):
    """One fixpoint unfolding ``mu x.B -> B[mu x.B / x]``."""
    if not isinstance(e, Mu):
        raise TypeError("unfold expects a mu-expression")
    return substitute(e.body, e.var, e)


def complexity_N(e):
    return e.n


def alpha_eq(e, f):
    """Equality up to renaming of bound variables."""
    memo = {}

    def go(s, t, env_s, env_t, depth):
        if type(s) is not type(t):
            return False
        if s is t and not s.fv:
            return True
        key = (s, t, tuple((v, env_s.get(v)) for v in sorted(s.fv)),
               tuple((v, env_t.get(v)) for v in sorted(t.fv)))
        hit = memo.get(key)
        if hit is not None:
            return hit
        if isinstance(s, Var):
            ls, lt = env_s.get(s.name), env_t.get(t.name)
            res = ls == lt and (ls is not None or s.name == t.name)
        elif isinstance(s, Zero):
            res = True
        elif isinstance(s, Out):
            res = s.weight == t.weight
        elif isinstance(s, Plus):
            res = (go(s.left, t.left, env_s, env_t, depth)
                   and go(s.right, t.right, env_s, env_t, depth))
        elif isinstance(s, Act):
            res = (s.letter == t.letter and s.weight == t.weight
                   and go(s.body, t.body, env_s, env_t, depth))
        else:
            es = dict(env_s)
            et = dict(env_t)
            es[s.var] = depth
            et[t.var] = depth
            res = go(s.body, t.body, es, et, depth + 1)
        memo[key] = res
        return res

    return go(e, f, {}, {}, 0)


# printing


def to_text(e, limit=None):
    """Concrete syntax; re-parses to the same tree."""
    out = []
    budget = [limit]

    def emit(s):
        out.append(s)
        if budget[0] is not None:
            budget[0] -= len(s)
            if budget[0] < 0:
                raise _Truncated

    def go(t):
        if isinstance(t, Var):
            emit(t.name)
        elif isinstance(t, Zero):
            emit("zero")
        elif isinstance(t, Out):
            emit(f"out({t.weight})")
        elif isinstance(t, Act):
            emit(f"{t.letter}.({t.weight} * ")
            go(t.body)
            emit(")")
        elif isinstance(t, Mu):
            emit(f"mu {t.var}. ")
            go(t.body)
        else:
            for side, child in ((0, t.left), (1, t.right)):
                if side:
                    emit(" + ")
                wrap = isinstance(child, Mu) or (side == 1 and isinstance(child, Plus))
                if wrap:
                    emit("(")
                go(child)
                if wrap:
                    emit(")")

    try:
        go(e)
    except _Truncated:
        return "".join(out)[:limit] + "..."
    return "".join(out)


class _Truncated(Exception):
    pass


# parsing

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)|(?P<num>-?[0-9]+(?:/[0-9]+)?)|(?P<id>[A-Za-z_][A-Za-z0-9_']*)|(?P<op>[.()*+])"
)
_KEYWORDS = {"zero", "out", "mu"}


class _Parser:
    def __init__(self, text, semiring, alphabet):
        self.text = text
        self.semiring = semiring
        self.alphabet = None if alphabet is None else set(alphabet)
        self.toks = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                self.fail(f"unexpected character {text[pos]!r}", pos)
            if m.lastgroup != "ws":
                self.toks.append((m.lastgroup, m.group(), pos))
            pos = m.end()
        self.toks.append(("eof", "", len(text)))
        self.i = 0

    def where(self, pos):
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return line, col

    def fail(self, msg, pos=None, cls=ParseError):
        if pos is None:
            pos = self.toks[self.i][2]
        raise cls(msg, *self.where(pos))

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def take(self, kind=None, value=None):
        tok = self.toks[self.i]
        if (kind is not None and tok[0] != kind) or (value is not None and tok[1] != value):
            want = value or kind
            got = tok[1] or "end of input"
            self.fail(f"expected {want!r}, found {got!r}")
        self.i += 1
        return tok

    def weight(self):
        kind, text, pos = self.take("num")
        if self.semiring is None:
            self.fail("weights need a semiring", pos)
        return self.semiring.parse(text, *self.where(pos))

    def parse(self):
        e = self.sum()
        if self.peek()[0] != "eof":
            self.fail(f"unexpected {self.peek()[1]!r}")
        return e

    def sum(self):
        e = self.atom()
        while self.peek()[1] == "+":
            self.take()
            e = Plus(e, self.atom())
        return e

    def atom(self):
        kind, text, pos = self.peek()
        if kind == "num":
            return Out(self.weight())
        if text == "(":
            self.take()
            e = self.sum()
            self.take("op", ")")
            return e
        if kind != "id":
            self.fail(f"unexpected {text or 'end of input'!r}")
        if text == "zero":
            self.take()
            return ZERO
        if text == "out":
            self.take()
            self.take("op", "(")
            w = self.weight()
            self.take("op", ")")
            return Out(w)
        if text == "mu":
            self.take()
            _, var, vpos = self.take("id")
            if var in _KEYWORDS:
                self.fail(f"{var!r} is reserved", vpos)
            self.take("op", ".")
            body = self.sum()
            if not is_guarded(body, var):
                self.fail(f"variable {var!r} occurs unguarded under mu {var}", vpos,
                          UnguardedMuError)
            return Mu(var, body)
        self.take()
        if self.peek()[1] != ".":
            return Var(text)
        if self.alphabet is not None and text not in self.alphabet:
            self.fail(f"letter {text!r} not in alphabet", pos, ParseError)
        self.take()
        if self.peek()[1] == "(" and self.peek(1)[0] == "num" and self.peek(2)[1] == "*":
            self.take()
            w = self.weight()
            self.take("op", "*")
            body = self.sum()
            self.take("op", ")")
            return Act(text, w, body)
        # unweighted sugar a.E, read as a.(1 * E)
        if self.semiring is None:
            self.fail("weights need a semiring", pos)
        return Act(text, self.semiring.one(), self.atom())


def parse_expr(text, semiring, alphabet=None, strict=False):
    """Parse an expression.  ``strict`` rejects free variables."""
    e = _Parser(text, semiring, alphabet).parse()
    if strict and e.fv:
        name = sorted(e.fv)[0]
        raise UnboundVariableError(f"unbound variable {name!r}")
    return e


def letters(e):
    seen = set()
    out = set()
    stack = [e]
    while stack:
        t = stack.pop()
        if t in seen:
            continue
        seen.add(t)
        if isinstance(t, Act):
            out.add(t.letter)
        stack.extend(t.children())
    return out


def check_alphabet(e, alphabet):
    extra = letters(e) - set(alphabet)
    if extra:
        raise AlphabetError(f"letters {sorted(extra)} not in alphabet")


# normalization

_NORM = {}


def normalize(e):
    """Canonical form modulo the rewrite orientation of the axioms.

    Sums are flattened, zero-free and sorted; outputs are merged into one
    summand; actions with equal letter and body are merged by adding their
    weights.  Action bodies are never sums, zero, or weighted chains: the
    distributivity, scalar-pushing and zero laws of the language calculus
    are applied left to right.  Fixpoints are normalized inside but never
    unfolded; a binder whose variable disappears is dropped, and the others
    are renamed canonically.
    """
    hit = _NORM.get(e)
    if hit is not None:
        return hit
    if isinstance(e, (Var, Zero)):
        res = e
    elif isinstance(e, Out):
        res = ZERO if e.weight.is_zero else e
    elif isinstance(e, Plus):
        res = _combine(summands(normalize(e.left)) + summands(normalize(e.right)))
    elif isinstance(e, Act):
        res = _act(e.letter, e.weight, normalize(e.body))
    else:
        body = normalize(e.body)
        if e.var not in body.fv:
            res = body
        else:
            name = _binder_name(body, e.var)
            if name != e.var:
                body = normalize(substitute(body, e.var, Var(name)))
            res = Mu(name, body)
    _NORM[e] = res
    return res


def _binder_name(body, var):
    # first of x1, x2, ... clashing with no other name in the body, so that
    # alpha-variants normalize to the same term
    avoid = (body.fv - {var}) | body.bv
    k = 1
    while f"x{k}" in avoid:
        k += 1
    return f"x{k}"


def _act(letter, r, body):
    if r.is_zero or isinstance(body, Zero):
        return ZERO
    if isinstance(body, Plus):
        return _combine([_act(letter, r, s) for s in summands(body)])
    if isinstance(body, Out):
        w = r * body.weight
        return ZERO if w.is_zero else Act(letter, r.semiring.one(), Out(w))
    if isinstance(body, Act):
        w = r * body.weight
        if w.is_zero:
            return ZERO
        return Act(letter, w, Act(body.letter, r.semiring.one(), body.body))
    return Act(letter, r, body)


def _combine(parts):
    out = None
    acts = {}
    rest = []
    for p in parts:
        if isinstance(p, Zero):
            continue
        if isinstance(p, Out):
            out = p.weight if out is None else out + p.weight
        elif isinstance(p, Act):
            key = (p.letter, p.body)
            acts[key] = acts[key] + p.weight if key in acts else p.weight
        else:
            rest.append(p)
    result = [Act(a, w, b) for (a, b), w in acts.items() if not w.is_zero]
    result.extend(rest)
    if out is not None and not out.is_zero:
        result.append(Out(out))
    result.sort(key=lambda t: t.sort_key)
    return sum_of(result)


NormalExpr = Expr


def canonical_text(e):
    return to_text(normalize(e))


# coalgebra structure: output weight and derivatives

_HEAD = {}


def _semiring_of(e, semiring):
    sr = semiring or e.semiring
    if sr is None:
        raise DomainMismatchError("cannot infer the semiring of a weightless expression; pass one")
    if e.semiring is not None and e.semiring is not sr:
        raise DomainMismatchError(f"expression has {e.semiring.id} weights, not {sr.id}")
    return sr


def head(e, semiring=None):
    """``(output weight, {letter: LinComb of normalized expressions})``."""
    if e.fv:
        raise OpenExpressionError(f"free variables {sorted(e.fv)}")
    sr = _semiring_of(e, semiring)
    return _head(e, sr)


def _head(e, sr):
    key = (e, sr.id)
    hit = _HEAD.get(key)
    if hit is not None:
        return hit
    if isinstance(e, Zero):
        res = (sr.zero(), {})
    elif isinstance(e, Out):
        res = (e.weight, {})
    elif isinstance(e, Act):
        body = normalize(e.body)
        if isinstance(body, Zero):
            res = (sr.zero(), {})
        else:
            res = (sr.zero(), {e.letter: LinComb(sr, {body: e.weight})})
    elif isinstance(e, Plus):
        o1, d1 = _head(e.left, sr)
        o2, d2 = _head(e.right, sr)
        ds = dict(d1)
        for a, lc in d2.items():
            ds[a] = lc_add(ds[a], lc) if a in ds else lc
        res = (o1 + o2, {a: lc for a, lc in ds.items() if lc})
    elif isinstance(e, Mu):
        res = _head(unfold(e), sr)
    else:
        raise OpenExpressionError(f"free variable {e.name!r}")
    _HEAD[key] = res
    return res


def output_weight(e, semiring=None):
    return head(e, semiring)[0]


def derivative(e, letter, semiring=None):
    sr = _semiring_of(e, semiring)
    return head(e, sr)[1].get(letter, LinComb(sr))


def evaluate(e, word, semiring=None):
    """Weight of ``word`` in the language of closed expression ``e``.

    Computed by iterating derivatives on a linear combination of
    normalized expressions.
    """
    sr = _semiring_of(e, semiring)
    cfg = LinComb(sr, {normalize(e): sr.one()})
    for a in word:
        cfg = lc_apply(lambda t: derivative(t, a, sr), cfg)
    total = sr.zero()
    for t, w in cfg:
        total = total + w * output_weight(t, sr)
    return total


# semimodule action and the inverse of the coalgebra map


def scale(r, e):
    """The scalar action ``r E`` on expressions.

    Distributes over sums, multiplies outputs and action weights, and
    unfolds fixpoints once before scaling them.
    """
    if isinstance(e, Zero):
        return e
    if isinstance(e, Out):
        return Out(r * e.weight)
    if isinstance(e, Act):
        return Act(e.letter, r * e.weight, e.body)
    if isinstance(e, Plus):
        return Plus(scale(r, e.left), scale(r, e.right))
    if isinstance(e, Mu):
        return scale(r, unfold(e))
    raise OpenExpressionError(f"cannot scale free variable {e.name!r}")


def build_from_head(r, branches, alphabet=None):
    """``out(r) + sum over letters of a.(1 * branches[a])``, normalized.

    ``branches`` maps letters to expressions; missing letters stand for
    ``zero``.
    """
    one = r.semiring.one()
    order = list(alphabet) if alphabet is not None else sorted(branches)
    parts = [Out(r)] + [Act(a, one, branches[a]) for a in order if a in branches]
    return normalize(sum_of(parts))
