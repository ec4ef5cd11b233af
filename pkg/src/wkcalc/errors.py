"""Exception hierarchy shared by all modules."""


class WkError(Exception):
    """Base class for every error raised by wkcalc."""


class DomainMismatchError(WkError):
    pass


class UnsupportedSemiringError(WkError):
    pass


class UnsupportedEmbeddingError(WkError):
    pass


class CapabilityError(WkError):
    pass


class MissingKeyError(WkError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class AlphabetError(WkError):
    pass


class ParseError(WkError):
    """Syntax error in one of the text formats, with a 1-based position."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class UndeclaredStateError(ParseError):
    pass


class UnguardedMuError(ParseError):
    pass


class UnboundVariableError(ParseError):
    pass


class OpenExpressionError(WkError):
    pass


class StateBoundExceeded(WkError):
    def __init__(self, bound, frontier):
        self.bound = bound
        self.frontier = list(frontier)
        super().__init__(
            f"derivative closure exceeded {bound} states "
            f"({len(self.frontier)} expressions still unexplored)"
        )


class ConstructionInvariantError(WkError):
    pass


class NotBisimulationError(WkError):
    def __init__(self, pair, reason):
        self.pair = pair
        self.reason = reason
        super().__init__(f"pair {pair[0]!s} ~ {pair[1]!s} violates bisimulation: {reason}")


class DerivationError(WkError):
    """A derivation step failed to replay."""

    def __init__(self, message, step=None):
        self.step = step
        prefix = f"step {step}: " if step is not None else ""
        super().__init__(prefix + message)
