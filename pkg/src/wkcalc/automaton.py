"""Weighted automata: each state has an output weight and, per letter, a
linear combination of successor states.

Configurations (linear combinations of states) are the states of the
determinized automaton; ``step`` is its transition function.
"""

from collections import deque

from .errors import (
    AlphabetError,
    CapabilityError,
    DomainMismatchError,
    ParseError,
    UndeclaredStateError,
    UnsupportedSemiringError,
)
from .lincomb import LinComb, lc_apply, parse_lincomb
from .semiring import BOOLEAN, get_semiring

Configuration = LinComb


class WeightedAutomaton:
    """A finite weighted automaton over one of the built-in semirings.

    ``states`` keeps declaration order; ``trans`` maps ``(state, letter)``
    to a LinComb of states and is total (absent entries are empty).
    """

    def __init__(self, semiring, alphabet, states, output, trans=None):
        self.semiring = semiring
        self.alphabet = tuple(alphabet)
        self.states = tuple(states)
        if not self.alphabet:
            raise AlphabetError("alphabet must be nonempty")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise AlphabetError("duplicate letters in alphabet")
        if len(set(self.states)) != len(self.states):
            raise ValueError("duplicate state names")
        known = set(self.states)
        self.output = {}
        for s in self.states:
            w = output.get(s, semiring.zero())
            if w.semiring is not semiring:
                raise ValueError(f"output of {s} is not a {semiring.id} weight")
            self.output[s] = w
        for s in output:
            if s not in known:
                raise UndeclaredStateError(f"output given for undeclared state {s!r}")
        self.trans = {}
        empty = LinComb(semiring)
        trans = trans or {}
        for (s, a), lc in trans.items():
            if s not in known:
                raise UndeclaredStateError(f"transition from undeclared state {s!r}")
            if a not in self.alphabet:
                raise AlphabetError(f"letter {a!r} not in alphabet")
            for t in lc.keys():
                if t not in known:
                    raise UndeclaredStateError(f"transition to undeclared state {t!r}")
        for s in self.states:
            for a in self.alphabet:
                self.trans[s, a] = trans.get((s, a), empty)

    def __repr__(self):
        return (f"WeightedAutomaton({self.semiring.id}, alphabet={list(self.alphabet)}, "
                f"states={list(self.states)})")

    def __eq__(self, other):
        if not isinstance(other, WeightedAutomaton):
            return NotImplemented
        return (self.semiring is other.semiring and self.alphabet == other.alphabet
                and self.states == other.states and self.output == other.output
                and self.trans == other.trans)

    def __hash__(self):
        return hash((self.semiring.id, self.alphabet, self.states))

    def unit(self, state):
        """The configuration concentrated on a single state."""
        if state not in self.output:
            raise UndeclaredStateError(f"unknown state {state!r}")
        return LinComb.unit(self.semiring, state)

    def edges(self):
        """All (src, letter, weight, dst) with nonzero weight, in file order."""
        for s in self.states:
            for a in self.alphabet:
                for t, w in self.trans[s, a]:
                    yield s, a, w, t

    def step(self, cfg, a):
        return step(self, cfg, a)

    def output_of(self, cfg):
        return output_of(self, cfg)

    def eval_word(self, start, word):
        return eval_word(self, start, word)


def _check_letter(aut, a):
    if a not in aut.alphabet:
        raise AlphabetError(f"letter {a!r} not in alphabet {' '.join(aut.alphabet)}")


def step(aut, cfg, a):
    _check_letter(aut, a)
    return lc_apply(lambda s: aut.trans[s, a], cfg)


def output_of(aut, cfg):
    total = aut.semiring.zero()
    for s, w in cfg:
        total = total + w * aut.output[s]
    return total


def eval_word(aut, start, word):
    """Weight assigned to ``word`` by the language of configuration ``start``."""
    cfg = start
    for a in word:
        cfg = step(aut, cfg, a)
    return output_of(aut, cfg)


class DFA:
    """Result of the subset construction.

    ``states`` are frozensets of automaton states in discovery order,
    ``delta[i][a]`` is a state index, index 0 is the start.
    """

    def __init__(self, alphabet, states, accepting, delta):
        self.alphabet = tuple(alphabet)
        self.states = list(states)
        self.accepting = frozenset(accepting)
        self.delta = delta
        self.start = 0

    def accepts(self, word):
        q = self.start
        for a in word:
            q = self.delta[q][a]
        return q in self.accepting

    def to_automaton(self, prefix="d"):
        """Re-encode as a Boolean weighted automaton with states d0, d1, ..."""
        names = [f"{prefix}{i}" for i in range(len(self.states))]
        one = BOOLEAN.one()
        output = {names[i]: (one if i in self.accepting else BOOLEAN.zero())
                  for i in range(len(names))}
        trans = {(names[i], a): LinComb.unit(BOOLEAN, names[self.delta[i][a]])
                 for i in range(len(names)) for a in self.alphabet}
        return WeightedAutomaton(BOOLEAN, self.alphabet, names, output, trans)


def subset_construct(aut, start):
    """Classical powerset construction of a Boolean automaton from ``start``.

    Only reachable subsets are built; the empty subset appears as a
    rejecting sink when reachable.
    """
    if aut.semiring is not BOOLEAN:
        raise CapabilityError("subset construction needs a Boolean automaton")
    first = frozenset(start.keys())
    index = {first: 0}
    states = [first]
    delta = []
    queue = deque([first])
    while queue:
        cur = queue.popleft()
        row = {}
        for a in aut.alphabet:
            nxt = set()
            for s in cur:
                nxt.update(aut.trans[s, a].keys())
            nxt = frozenset(nxt)
            if nxt not in index:
                index[nxt] = len(states)
                states.append(nxt)
                queue.append(nxt)
            row[a] = index[nxt]
        delta.append(row)
    accepting = {i for i, q in enumerate(states) if any(aut.output[s] for s in q)}
    return DFA(aut.alphabet, states, accepting, delta)


# text format


def parse_automaton(text):
    """Parse the line-based automaton format.

    Directives: ``semiring NAME``, ``alphabet L1 L2 ...``,
    ``state NAME [output W]`` and ``trans SRC LETTER WEIGHT DST``.
    ``#`` starts a comment.  Repeated transitions are summed.
    """
    semiring = None
    alphabet = None
    states = []
    output = {}
    pending = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        fields = line.split()
        col = {}
        pos = 0
        for i, f in enumerate(fields):
            pos = line.index(f, pos)
            col[i] = pos + 1
            pos += len(f)
        kw = fields[0]
        if kw == "semiring":
            if len(fields) != 2:
                raise ParseError("expected 'semiring NAME'", lineno, col[0])
            if semiring is not None:
                raise ParseError("semiring declared twice", lineno, col[0])
            try:
                semiring = get_semiring(fields[1])
            except UnsupportedSemiringError as exc:
                raise ParseError(str(exc), lineno, col[1]) from None
        elif kw == "alphabet":
            if len(fields) < 2:
                raise ParseError("empty alphabet", lineno, col[0])
            if alphabet is not None:
                raise ParseError("alphabet declared twice", lineno, col[0])
            alphabet = fields[1:]
        elif kw == "state":
            if semiring is None:
                raise ParseError("'semiring' must precede states", lineno, col[0])
            if len(fields) == 2:
                w = semiring.zero()
            elif len(fields) == 4 and fields[2] == "output":
                w = semiring.parse(fields[3], lineno, col[3])
            else:
                raise ParseError("expected 'state NAME [output WEIGHT]'", lineno, col[0])
            name = fields[1]
            if name in output:
                raise ParseError(f"state {name!r} declared twice", lineno, col[1])
            states.append(name)
            output[name] = w
        elif kw == "trans":
            if semiring is None or alphabet is None:
                raise ParseError("'semiring' and 'alphabet' must precede transitions", lineno, col[0])
            if len(fields) != 5:
                raise ParseError("expected 'trans SRC LETTER WEIGHT DST'", lineno, col[0])
            src, letter, wtext, dst = fields[1:]
            if letter not in alphabet:
                raise ParseError(f"letter {letter!r} not in alphabet", lineno, col[2])
            w = semiring.parse(wtext, lineno, col[3])
            pending.append((lineno, col, src, letter, w, dst))
        else:
            raise ParseError(f"unknown directive {kw!r}", lineno, col[0])
    if semiring is None:
        raise ParseError("missing 'semiring' line")
    if alphabet is None:
        raise ParseError("missing 'alphabet' line")
    known = set(states)
    acc = {}
    for lineno, col, src, letter, w, dst in pending:
        for idx, name in ((1, src), (4, dst)):
            if name not in known:
                raise UndeclaredStateError(f"undeclared state {name!r}", lineno, col[idx])
        acc.setdefault((src, letter), []).append((dst, w))
    trans = {k: LinComb(semiring, v) for k, v in acc.items()}
    return WeightedAutomaton(semiring, alphabet, states, output, trans)


def serialize_automaton(aut):
    lines = [f"semiring {aut.semiring.id}", "alphabet " + " ".join(aut.alphabet)]
    for s in aut.states:
        w = aut.output[s]
        lines.append(f"state {s}" if w.is_zero else f"state {s} output {w}")
    for s, a, w, t in aut.edges():
        lines.append(f"trans {s} {a} {w} {t}")
    return "\n".join(lines) + "\n"


def to_dot(aut, name="wa"):
    """GraphViz digraph with ``letter,weight`` edge labels and outputs in node labels."""
    out = [f"digraph {name} {{", "  rankdir=LR;", "  node [shape=circle];"]
    for s in aut.states:
        out.append(f'  "{s}" [label="{s}\\n{aut.output[s]}"];')
    for s, a, w, t in aut.edges():
        out.append(f'  "{s}" -> "{t}" [label="{a},{w}"];')
    out.append("}")
    return "\n".join(out) + "\n"


def parse_configuration(aut, text):
    return parse_lincomb(text, aut.semiring, keys=set(aut.states))


def union(left, right, tags=("L", "R")):
    """Disjoint union of two automata over the same semiring and alphabet.

    States become ``(tag, state)`` pairs.  Returns the union and the two
    injections on configurations.
    """
    if left.semiring is not right.semiring:
        raise DomainMismatchError("automata over different semirings")
    if left.alphabet != right.alphabet:
        if set(left.alphabet) != set(right.alphabet):
            raise AlphabetError("automata over different alphabets")
    sr = left.semiring
    states = [(tags[0], s) for s in left.states] + [(tags[1], s) for s in right.states]
    output = {(tags[0], s): left.output[s] for s in left.states}
    output.update({(tags[1], s): right.output[s] for s in right.states})
    trans = {}
    for tag, aut in zip(tags, (left, right)):
        for s in aut.states:
            for a in left.alphabet:
                trans[(tag, s), a] = LinComb(sr, [((tag, t), w) for t, w in aut.trans[s, a]])
    u = WeightedAutomaton(sr, left.alphabet, states, output, trans)

    def inj(tag):
        return lambda cfg: LinComb(sr, [((tag, s), w) for s, w in cfg])

    return u, inj(tags[0]), inj(tags[1])


__all__ = [
    "Configuration", "WeightedAutomaton", "DFA", "step", "output_of", "eval_word",
    "subset_construct", "parse_automaton", "serialize_automaton", "to_dot",
    "parse_configuration", "union",
]
