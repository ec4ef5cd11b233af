"""Conversions between expressions and weighted automata."""

import os
from collections import deque
from dataclasses import dataclass

from .automaton import WeightedAutomaton
from .errors import ConstructionInvariantError, StateBoundExceeded
from .expression import (
    Act,
    Mu,
    Out,
    Var,
    check_alphabet,
    derivative,
    normalize,
    output_weight,
    sum_of,
    syntactic_replace,
)
from .lincomb import LinComb

DEFAULT_STATE_BOUND = 10000


def state_bound():
    value = os.environ.get("WK_STATE_BOUND")
    return int(value) if value else DEFAULT_STATE_BOUND


@dataclass(frozen=True)
class SynthesisResult:
    automaton: WeightedAutomaton
    start: LinComb
    state_labels: dict


def expr_to_automaton(e, alphabet, semiring=None, bound=None, prefix="q"):
    """Automaton whose states are the normalized derivatives of ``e``.

    States are explored breadth first from ``normalize(e)`` and numbered
    ``q0, q1, ...`` in discovery order.
    """
    if bound is None:
        bound = state_bound()
    sr = semiring or e.semiring
    if sr is None:
        raise ValueError("cannot infer the semiring of a weightless expression; pass one")
    alphabet = tuple(alphabet)
    check_alphabet(e, alphabet)
    root = normalize(e)
    names = {root: f"{prefix}0"}
    order = [root]
    queue = deque([root])
    trans = {}
    while queue:
        cur = queue.popleft()
        for a in alphabet:
            d = derivative(cur, a, sr)
            for t in d.keys():
                if t not in names:
                    if len(order) >= bound:
                        raise StateBoundExceeded(bound, [cur] + list(queue))
                    names[t] = f"{prefix}{len(order)}"
                    order.append(t)
                    queue.append(t)
            if d:
                trans[names[cur], a] = LinComb(sr, [(names[t], w) for t, w in d])
    output = {names[t]: output_weight(t, sr) for t in order}
    states = [names[t] for t in order]
    aut = WeightedAutomaton(sr, alphabet, states, output, trans)
    labels = {names[t]: t for t in order}
    return SynthesisResult(aut, LinComb.unit(sr, states[0]), labels)


def _variables(aut):
    return [f"x{i}" for i in range(1, len(aut.states) + 1)]


def initial_equations(aut):
    """The expressions E_i^0, one per state, binding x_i outermost."""
    xs = _variables(aut)
    index = {s: i for i, s in enumerate(aut.states)}
    eqs = []
    for i, s in enumerate(aut.states):
        parts = [Out(aut.output[s])]
        for a in aut.alphabet:
            row = aut.trans[s, a]
            for t in aut.states:
                parts.append(Act(a, row[t], Var(xs[index[t]])))
        eqs.append(Mu(xs[i], sum_of(parts)))
    return eqs


def elimination_stages(aut):
    """All stages E^0, ..., E^n of the elimination, as lists of expressions.

    Stage k+1 replaces the free variable x_{k+1} in every E_i^k with
    i != k+1 by E_{k+1}^k, syntactically.  The invariant that the free
    variables of E_i^k are exactly x_{k+1}..x_n minus x_i, all of whose
    occurrences are free, is checked at every stage.
    """
    xs = _variables(aut)
    n = len(xs)
    stage = initial_equations(aut)
    stages = [stage]
    _check_stage(stage, xs, 0)
    for k in range(n):
        pivot = stage[k]
        stage = [e if i == k else syntactic_replace(e, xs[k], pivot) for i, e in enumerate(stage)]
        stages.append(stage)
        _check_stage(stage, xs, k + 1)
    return stages


def _check_stage(stage, xs, k):
    pending = set(xs[k:])
    for i, e in enumerate(stage):
        expected = pending - {xs[i]}
        if e.fv != expected:
            raise ConstructionInvariantError(
                f"E_{i + 1}^{k} has free variables {sorted(e.fv)}, expected {sorted(expected)}"
            )
        bound_pending = e.bv & expected
        if bound_pending:
            raise ConstructionInvariantError(
                f"E_{i + 1}^{k} binds {sorted(bound_pending)}, which must only occur free"
            )


def automaton_to_expr(aut, state, normalize_result=False):
    """Closed expression denoting the language of ``state``.

    Follows the elimination order of the state declaration.  The result
    is the raw syntactic term unless ``normalize_result`` is set.
    """
    if state not in aut.output:
        raise KeyError(f"unknown state {state!r}")
    i = aut.states.index(state)
    result = elimination_stages(aut)[-1][i]
    return normalize(result) if normalize_result else result
