"""Weighted regular expressions and weighted automata over exact semirings."""

from .automaton import (
    DFA,
    WeightedAutomaton,
    eval_word,
    parse_automaton,
    parse_configuration,
    serialize_automaton,
    step,
    subset_construct,
    to_dot,
)
from .equivalence import (
    EquivVerdict,
    brute_force_equiv,
    check_bisimilarity_implies_language,
    check_bisimulation,
    decide_equiv,
    decide_equiv_boolean,
    decide_equiv_rational,
    decide_expr_equiv,
)
from .errors import *  # noqa: F401,F403
from .expression import (
    ZERO,
    Act,
    Mu,
    Out,
    Plus,
    Var,
    alpha_eq,
    canonical_text,
    derivative,
    evaluate,
    head,
    normalize,
    parse_expr,
    substitute,
    to_text,
)
from .kleene import automaton_to_expr, expr_to_automaton
from .lincomb import LinComb, lc_add, lc_apply, lc_scale
from .proofcheck import apply_axiom_at, check_derivation, parse_derivation, semantic_audit
from .semiring import BOOLEAN, INTEGERS, NATURALS, RATIONALS, get_semiring

__version__ = "0.1.0"
