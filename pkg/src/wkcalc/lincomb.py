"""Finite formal linear combinations (the free semimodule on a set of keys)."""

import re

from .errors import DomainMismatchError, MissingKeyError, ParseError


def key_order(key):
    # expressions carry their own canonical sort key; plain keys sort as themselves
    return getattr(key, "sort_key", key)


class LinComb:
    """Finite-support map from keys to nonzero weights.

    Instances are immutable; zero coefficients are dropped on construction
    so that ``==`` coincides with equality in the semimodule.  Iteration
    yields ``(key, weight)`` pairs in canonical key order.
    """

    __slots__ = ("semiring", "_terms", "_hash")

    def __init__(self, semiring, terms=()):
        self.semiring = semiring
        acc = {}
        items = terms.items() if hasattr(terms, "items") else terms
        for key, w in items:
            if w.semiring is not semiring:
                raise DomainMismatchError(
                    f"{w.semiring.id} coefficient in a {semiring.id} combination"
                )
            if key in acc:
                acc[key] = acc[key] + w
            else:
                acc[key] = w
        self._terms = {k: acc[k] for k in sorted(acc, key=key_order) if not acc[k].is_zero}
        self._hash = None

    @classmethod
    def unit(cls, semiring, key):
        return cls(semiring, {key: semiring.one()})

    # mapping-like access

    def __getitem__(self, key):
        return self._terms.get(key, self.semiring.zero())

    def __contains__(self, key):
        return key in self._terms

    def __iter__(self):
        return iter(self._terms.items())

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def keys(self):
        return list(self._terms)

    def items(self):
        return list(self._terms.items())

    def support(self):
        return frozenset(self._terms)

    def __eq__(self, other):
        if not isinstance(other, LinComb):
            return NotImplemented
        return self.semiring is other.semiring and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.semiring.id, tuple(self._terms.items())))
        return self._hash

    # semimodule structure

    def __add__(self, other):
        return lc_add(self, other)

    def __rmul__(self, r):
        return lc_scale(r, self)

    def __neg__(self):
        return LinComb(self.semiring, {k: -w for k, w in self._terms.items()})

    def __sub__(self, other):
        return lc_add(self, -other)

    def map_weights(self, fn, semiring):
        return LinComb(semiring, {k: fn(w) for k, w in self._terms.items()})

    def __str__(self):
        return to_text(self)

    def __repr__(self):
        return f"LinComb({self.semiring.id}, {to_text(self)})"


def zero(semiring):
    return LinComb(semiring)


def _same(u, v):
    if u.semiring is not v.semiring:
        raise DomainMismatchError(
            f"cannot combine {u.semiring.id} and {v.semiring.id} combinations"
        )


def lc_add(u, v):
    _same(u, v)
    if not v:
        return u
    if not u:
        return v
    return LinComb(u.semiring, list(u) + list(v))


def lc_scale(r, u):
    if r.semiring is not u.semiring:
        raise DomainMismatchError(f"cannot scale {u.semiring.id} combination by {r.semiring.id} weight")
    if r.is_zero:
        return LinComb(u.semiring)
    if r.is_one:
        return u
    return LinComb(u.semiring, [(k, r * w) for k, w in u])


def lc_apply(f, u):
    """Extend ``f: key -> LinComb`` linearly and apply it to ``u``.

    ``f`` may be a callable or a mapping.
    """
    lookup = f.__getitem__ if hasattr(f, "__getitem__") and not callable(f) else f
    pairs = []
    for key, w in u:
        try:
            image = lookup(key)
        except KeyError:
            raise MissingKeyError(f"no image for key {key!s}") from None
        if image.semiring is not u.semiring:
            raise DomainMismatchError("image combination over a different semiring")
        if w.is_one:
            pairs.extend(image)
        else:
            pairs.extend((k, w * c) for k, c in image)
    return LinComb(u.semiring, pairs)


def to_text(u):
    if not u:
        return "{}"
    return "{" + ", ".join(f"{k!s}:{w!s}" for k, w in u) + "}"


_ITEM_RE = re.compile(r"\s*([^\s:{},]+)\s*:\s*([^\s,{}]+)\s*")


def parse_lincomb(text, semiring, keys=None):
    """Parse ``{key:weight, ...}``; keys are plain identifiers.

    When ``keys`` is given, every key must belong to it.
    """
    s = text.strip()
    if not (s.startswith("{") and s.endswith("}")):
        raise ParseError(f"linear combination must be enclosed in braces: {text!r}")
    body = s[1:-1].strip()
    pairs = []
    if body:
        for part in body.split(","):
            m = _ITEM_RE.fullmatch(part)
            if not m:
                raise ParseError(f"malformed term {part.strip()!r} in {text!r}")
            key, wtext = m.group(1), m.group(2)
            if keys is not None and key not in keys:
                raise MissingKeyError(f"unknown key {key!r}")
            pairs.append((key, semiring.parse(wtext)))
    return LinComb(semiring, pairs)
