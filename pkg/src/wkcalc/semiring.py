"""Exact weight domains.

Four semirings are built in: Booleans, naturals, integers and rationals.
Weights are small immutable wrappers that remember their semiring, so that
mixing domains is caught instead of silently coerced.
"""

import re
from fractions import Fraction

from .errors import (
    DomainMismatchError,
    ParseError,
    UnsupportedEmbeddingError,
    UnsupportedSemiringError,
)

VIA_RATIONALS = "via_rationals"
VIA_SUBSET_CONSTRUCTION = "via_subset_construction"
NO_EQUIVALENCE = "none"

_INT_RE = re.compile(r"-?[0-9]+\Z")
_RAT_RE = re.compile(r"(-?[0-9]+)(?:/([1-9][0-9]*))?\Z")

# semirings without a decision procedure for language equivalence
_REJECTED = {
    "tropical": "equivalence of weighted automata over the tropical semiring is undecidable",
    "min-plus": "equivalence of weighted automata over the tropical semiring is undecidable",
    "max-plus": "equivalence of weighted automata over the tropical semiring is undecidable",
    "reals": "floating point weights are not supported; use rationals",
}


class Semiring:
    """Descriptor of one of the built-in weight domains."""

    __slots__ = ("id", "equivalence_capability", "_zero", "_one")

    def __init__(self, id, equivalence_capability):
        self.id = id
        self.equivalence_capability = equivalence_capability
        self._zero = Weight(self, self._coerce(0))
        self._one = Weight(self, self._coerce(1))

    def __repr__(self):
        return f"Semiring({self.id!r})"

    def __reduce__(self):
        return (get_semiring, (self.id,))

    def _coerce(self, value):
        if self.id == "boolean":
            if value not in (0, 1):
                raise ValueError(f"not a Boolean value: {value!r}")
            return bool(value)
        if self.id == "rationals":
            return Fraction(value)
        if isinstance(value, Fraction):
            if value.denominator != 1:
                raise ValueError(f"{value} is not an integer")
            value = value.numerator
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"{value!r} is not an integer")
        if self.id == "naturals" and value < 0:
            raise ValueError(f"{value} is not a natural number")
        return value

    def zero(self):
        return self._zero

    def one(self):
        return self._one

    def weight(self, value):
        """Build a weight from a Python number (int, Fraction or bool)."""
        try:
            return Weight(self, self._coerce(value))
        except ValueError as exc:
            raise DomainMismatchError(f"{exc} (semiring {self.id})") from None

    def parse(self, text, line=None, column=None):
        """Parse a weight literal."""
        text = text.strip()
        if self.id == "rationals":
            m = _RAT_RE.match(text)
            if m:
                num = int(m.group(1))
                den = int(m.group(2)) if m.group(2) else 1
                return Weight(self, Fraction(num, den))
        elif _INT_RE.match(text):
            value = int(text)
            if self.id == "boolean" and value in (0, 1):
                return Weight(self, bool(value))
            if self.id == "integers" or (self.id == "naturals" and value >= 0):
                return Weight(self, value)
        raise ParseError(f"weight {text!r} is not a valid {self.id} literal", line, column)

    @property
    def is_ring(self):
        return self.id in ("integers", "rationals")


class Weight:
    """An exact scalar tagged with its semiring."""

    __slots__ = ("semiring", "value")

    def __init__(self, semiring, value):
        self.semiring = semiring
        self.value = value

    def _check(self, other):
        if not isinstance(other, Weight):
            return NotImplemented
        if other.semiring is not self.semiring:
            raise DomainMismatchError(
                f"cannot combine {self.semiring.id} weight with {other.semiring.id} weight"
            )
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        if self.semiring.id == "boolean":
            return Weight(self.semiring, self.value or other.value)
        return Weight(self.semiring, self.value + other.value)

    def __mul__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        if self.semiring.id == "boolean":
            return Weight(self.semiring, self.value and other.value)
        return Weight(self.semiring, self.value * other.value)

    def __neg__(self):
        if not self.semiring.is_ring:
            raise DomainMismatchError(f"no additive inverses in {self.semiring.id}")
        return Weight(self.semiring, -self.value)

    def __sub__(self, other):
        return self + (-other)

    def __bool__(self):
        return bool(self.value)

    @property
    def is_zero(self):
        return not self.value

    @property
    def is_one(self):
        return self.value == 1

    def __eq__(self, other):
        if isinstance(other, Weight):
            return self.semiring is other.semiring and self.value == other.value
        return NotImplemented

    def __hash__(self):
        return hash((self.semiring.id, self.value))

    def __str__(self):
        if self.semiring.id == "boolean":
            return "1" if self.value else "0"
        return str(self.value)

    def __repr__(self):
        return f"Weight({self.semiring.id}, {self})"


BOOLEAN = Semiring("boolean", VIA_SUBSET_CONSTRUCTION)
NATURALS = Semiring("naturals", VIA_RATIONALS)
INTEGERS = Semiring("integers", VIA_RATIONALS)
RATIONALS = Semiring("rationals", VIA_RATIONALS)

SEMIRINGS = {s.id: s for s in (BOOLEAN, NATURALS, INTEGERS, RATIONALS)}
_ALIASES = {"bool": "boolean", "b": "boolean", "nat": "naturals", "n": "naturals",
            "int": "integers", "z": "integers", "rat": "rationals", "q": "rationals"}


def get_semiring(name):
    """Look up a built-in semiring by name.

    >>> get_semiring("integers").id
    'integers'
    """
    key = name.strip().lower()
    key = _ALIASES.get(key, key)
    if key in _REJECTED:
        raise UnsupportedSemiringError(f"semiring {name!r} rejected: {_REJECTED[key]}")
    try:
        return SEMIRINGS[key]
    except KeyError:
        raise UnsupportedSemiringError(
            f"unknown semiring {name!r}; choose one of {', '.join(SEMIRINGS)}"
        ) from None


def add(x, y):
    return x + y


def mul(x, y):
    return x * y


def embed_to_rationals(x):
    """Value-preserving injection of an N/Z/Q weight into Q."""
    if x.semiring is BOOLEAN:
        raise UnsupportedEmbeddingError("Boolean weights do not embed into the rationals")
    return Weight(RATIONALS, Fraction(x.value))
