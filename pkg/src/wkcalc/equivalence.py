"""Deciding language equivalence of weighted automata and expressions."""

import itertools
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .automaton import eval_word, subset_construct
from .errors import AlphabetError, CapabilityError, NotBisimulationError
from .kleene import expr_to_automaton
from .semiring import BOOLEAN, NO_EQUIVALENCE, RATIONALS, VIA_SUBSET_CONSTRUCTION, embed_to_rationals


@dataclass(frozen=True)
class EquivVerdict:
    """Outcome of an equivalence check.

    For a counterexample, ``word`` is a tuple of letters and the two
    weights are what each side assigns to it.  ``dimension`` is the size
    of the basis built by the linear-algebra procedure, when it ran.
    """

    equivalent: bool
    word: tuple = None
    weight_left: object = None
    weight_right: object = None
    dimension: int = None

    def __bool__(self):
        return self.equivalent

    def describe(self):
        if self.equivalent:
            return "EQUIVALENT"
        return f"COUNTEREXAMPLE {format_word(self.word)} {self.weight_left} {self.weight_right}"


def format_word(word):
    if not word:
        return "ε"
    if all(len(a) == 1 for a in word):
        return "".join(word)
    return ".".join(word)


def _alphabet(autL, autR):
    if set(autL.alphabet) != set(autR.alphabet):
        raise AlphabetError(
            f"alphabets differ: {' '.join(autL.alphabet)} vs {' '.join(autR.alphabet)}"
        )
    return autL.alphabet


def _counterexample(autL, startL, autR, startR, word, dimension=None):
    return EquivVerdict(False, tuple(word), eval_word(autL, startL, word),
                        eval_word(autR, startR, word), dimension)


def _same_weight(x, y):
    if x.semiring is y.semiring:
        return x == y
    return embed_to_rationals(x) == embed_to_rationals(y)


# linear algebra over Q


def _reduce(basis, v):
    v = list(v)
    for p, b in basis:
        c = v[p]
        if c:
            for j in range(p, len(v)):
                if b[j]:
                    v[j] -= c * b[j]
    return v


def decide_equiv_rational(autL, startL, autR, startR):
    """Equivalence of two N/Z/Q automata by linear span closure over Q.

    Explores, breadth first, the vectors reached from the difference of the
    two start configurations in the disjoint union, keeping an echelon
    basis of their span.  The languages agree iff the output functional
    vanishes on the span; the first explored vector with nonzero output
    yields a shortest distinguishing word.
    """
    for aut in (autL, autR):
        if aut.semiring is BOOLEAN:
            raise CapabilityError("Boolean automata are decided by decide_equiv_boolean")
    alphabet = _alphabet(autL, autR)
    index = {}
    for tag, aut in (("L", autL), ("R", autR)):
        for s in aut.states:
            index[tag, s] = len(index)
    n = len(index)
    outv = [Fraction(0)] * n
    mats = {a: [[] for _ in range(n)] for a in alphabet}
    for tag, aut in (("L", autL), ("R", autR)):
        for s in aut.states:
            i = index[tag, s]
            outv[i] = Fraction(aut.output[s].value)
            for a in alphabet:
                mats[a][i] = [(index[tag, t], Fraction(w.value)) for t, w in aut.trans[s, a]]
    d0 = [Fraction(0)] * n
    for s, w in startL:
        d0[index["L", s]] += Fraction(w.value)
    for s, w in startR:
        d0[index["R", s]] -= Fraction(w.value)

    basis = []
    queue = deque([(d0, ())])
    while queue:
        v, word = queue.popleft()
        r = _reduce(basis, v)
        p = next((j for j, c in enumerate(r) if c), None)
        if p is None:
            continue
        if sum(c * o for c, o in zip(v, outv) if c):
            return _counterexample(autL, startL, autR, startR, word, len(basis) + 1)
        pivot = r[p]
        basis.append((p, [c / pivot for c in r]))
        for a in alphabet:
            nv = [Fraction(0)] * n
            rows = mats[a]
            for i, c in enumerate(v):
                if c:
                    for j, w in rows[i]:
                        nv[j] += c * w
            queue.append((nv, word + (a,)))
    return EquivVerdict(True, dimension=len(basis))


# Boolean automata


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        root = x
        while self.parent.get(root, root) != root:
            root = self.parent[root]
        while x != root:
            nxt = self.parent.get(x, x)
            self.parent[x] = root
            x = nxt
        return root

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[ry] = rx
        return rx != ry


def _shortest_dfa_mismatch(dl, dr, alphabet):
    seen = {(dl.start, dr.start)}
    queue = deque([(dl.start, dr.start, ())])
    while queue:
        p, q, word = queue.popleft()
        if (p in dl.accepting) != (q in dr.accepting):
            return word
        for a in alphabet:
            nxt = (dl.delta[p][a], dr.delta[q][a])
            if nxt not in seen:
                seen.add(nxt)
                queue.append((*nxt, word + (a,)))
    return None


def decide_equiv_boolean(autL, startL, autR, startR):
    """NFA language equivalence: subset construction, then Hopcroft-Karp.

    A counterexample, when needed, is recovered by breadth-first search on
    the product of the two DFAs, so it is a shortest one.
    """
    if autL.semiring is not BOOLEAN or autR.semiring is not BOOLEAN:
        raise CapabilityError("decide_equiv_boolean needs Boolean automata")
    alphabet = _alphabet(autL, autR)
    dl = subset_construct(autL, startL)
    dr = subset_construct(autR, startR)
    uf = _UnionFind()
    uf.union(("L", dl.start), ("R", dr.start))
    todo = [(dl.start, dr.start)]
    equivalent = True
    while todo:
        p, q = todo.pop()
        if (p in dl.accepting) != (q in dr.accepting):
            equivalent = False
            break
        for a in alphabet:
            p2, q2 = dl.delta[p][a], dr.delta[q][a]
            if uf.union(("L", p2), ("R", q2)):
                todo.append((p2, q2))
    if equivalent:
        return EquivVerdict(True)
    word = _shortest_dfa_mismatch(dl, dr, alphabet)
    return _counterexample(autL, startL, autR, startR, word)


def decide_equiv(autL, startL, autR, startR):
    """Dispatch on the semiring's equivalence capability."""
    caps = {autL.semiring.equivalence_capability, autR.semiring.equivalence_capability}
    if NO_EQUIVALENCE in caps:
        raise CapabilityError("equivalence is not decidable for this semiring")
    if VIA_SUBSET_CONSTRUCTION in caps:
        return decide_equiv_boolean(autL, startL, autR, startR)
    return decide_equiv_rational(autL, startL, autR, startR)


def decide_expr_equiv(e1, e2, semiring, alphabet):
    left = expr_to_automaton(e1, alphabet, semiring)
    right = expr_to_automaton(e2, alphabet, semiring)
    return decide_equiv(left.automaton, left.start, right.automaton, right.start)


def _raw_system(aut, start):
    # plain-value adjacency lists; Booleans use or/and, the rest + and *
    if aut.semiring is BOOLEAN:
        add, mul, zero = (lambda x, y: x or y), (lambda x, y: x and y), False
        conv = bool
    else:
        add, mul, zero = (lambda x, y: x + y), (lambda x, y: x * y), 0
        conv = Fraction if aut.semiring is RATIONALS else int
    rows = {(s, a): [(t, conv(w.value)) for t, w in aut.trans[s, a]]
            for s in aut.states for a in aut.alphabet}
    out = {s: conv(aut.output[s].value) for s in aut.states}
    vec = {s: conv(w.value) for s, w in start}

    def step(v, a):
        nxt = {}
        for s, c in v.items():
            for t, w in rows[s, a]:
                nxt[t] = add(nxt.get(t, zero), mul(c, w))
        return {t: c for t, c in nxt.items() if c}

    def output(v):
        total = zero
        for s, c in v.items():
            total = add(total, mul(c, out[s]))
        return total

    return vec, step, output


def brute_force_equiv(autL, startL, autR, startR, max_len):
    """Compare the two languages on every word of length at most ``max_len``.

    Words are visited in length-lexicographic order (by alphabet order),
    so the first mismatch is a shortest one.  Prefixes that lead both
    sides to the zero configuration are not extended, since every
    extension then weighs 0 on both sides.
    """
    alphabet = _alphabet(autL, autR)
    if (autL.semiring is BOOLEAN) != (autR.semiring is BOOLEAN):
        raise CapabilityError("cannot compare Boolean and numeric languages")
    vl, stepL, outL = _raw_system(autL, startL)
    vr, stepR, outR = _raw_system(autR, startR)
    level = [((), vl, vr)]
    for length in range(max_len + 1):
        nxt = []
        for word, cl, cr in level:
            if outL(cl) != outR(cr):
                return _counterexample(autL, startL, autR, startR, word)
            if length < max_len and (cl or cr):
                for a in alphabet:
                    nxt.append((word + (a,), stepL(cl, a), stepR(cr, a)))
        level = nxt
    return EquivVerdict(True)


def words_up_to(alphabet, max_len):
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


# bisimulation


def _class_weights(aut, tag, s, a, find):
    acc = {}
    for t, w in aut.trans[s, a]:
        c = find((tag, t))
        acc[c] = acc[c] + w if c in acc else w
    return {c: w for c, w in acc.items() if not w.is_zero}


def check_bisimulation(autL, autR, relation):
    """Raise NotBisimulationError unless ``relation`` is a weighted bisimulation.

    The relation is closed under equivalence on the disjoint union; each
    related pair must agree on outputs and, per letter, on the total
    weight sent into every equivalence class.
    """
    alphabet = _alphabet(autL, autR)
    relation = list(relation)
    uf = _UnionFind()
    for p, q in relation:
        if p not in autL.output or q not in autR.output:
            raise KeyError(f"pair {(p, q)} mentions an unknown state")
        uf.union(("L", p), ("R", q))
    auts = {"L": autL, "R": autR}
    # compare every state against its class representative
    members = {}
    for tag, aut in auts.items():
        for s in aut.states:
            members.setdefault(uf.find((tag, s)), []).append((tag, s))
    for cls in members.values():
        if len(cls) < 2:
            continue
        tag0, s0 = cls[0]
        a0 = auts[tag0]
        for tag, s in cls[1:]:
            aut = auts[tag]
            pair = (s0, s) if tag0 == "L" else (s, s0)
            if not _same_weight(a0.output[s0], aut.output[s]):
                raise NotBisimulationError(pair, f"outputs {a0.output[s0]} and {aut.output[s]} differ")
            for a in alphabet:
                w0 = _class_weights(a0, tag0, s0, a, uf.find)
                w1 = _class_weights(aut, tag, s, a, uf.find)
                if w0 != w1:
                    raise NotBisimulationError(
                        pair, f"letter {a!r} reaches related classes with different weights"
                    )
    return True


def check_bisimilarity_implies_language(autL, autR, relation):
    """Verify ``relation`` is a bisimulation and that related pairs are language equivalent."""
    relation = list(relation)
    check_bisimulation(autL, autR, relation)
    return all(
        decide_equiv(autL, autL.unit(p), autR, autR.unit(q)).equivalent for p, q in relation
    )


def bisimilarity_classes(autL, autR):
    """Coarsest weighted bisimulation on the disjoint union of two automata.

    Returns a dict from ``("L", s)`` / ``("R", s)`` to a block number.
    """
    alphabet = _alphabet(autL, autR)
    auts = {"L": autL, "R": autR}
    nodes = [(tag, s) for tag, aut in auts.items() for s in aut.states]

    def out(node):
        w = auts[node[0]].output[node[1]]
        return w.value if w.semiring is BOOLEAN else Fraction(w.value)

    block = {}
    keys = {}
    for node in nodes:
        block[node] = keys.setdefault(out(node), len(keys))
    while True:
        keys = {}
        new = {}
        for tag, s in nodes:
            sig = [block[tag, s]]
            for a in alphabet:
                acc = {}
                for t, w in auts[tag].trans[s, a]:
                    b = block[tag, t]
                    v = w.value if w.semiring is BOOLEAN else Fraction(w.value)
                    acc[b] = (acc.get(b, False) or v) if w.semiring is BOOLEAN else acc.get(b, 0) + v
                sig.append(tuple(sorted((b, v) for b, v in acc.items() if v)))
            new[tag, s] = keys.setdefault(tuple(sig), len(keys))
        if len(keys) == len(set(block.values())):
            return new
        block = new


def are_bisimilar(autL, sL, autR, sR):
    classes = bisimilarity_classes(autL, autR)
    return classes["L", sL] == classes["R", sR]
