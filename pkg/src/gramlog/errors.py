"""Exception types shared across the package."""


class GramlogError(Exception):
    """Base class for all package errors."""


class ParseError(GramlogError):
    """Malformed formula, grammar file or automaton file."""

    def __init__(self, message, line=None, column=None, source=None):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        where = ""
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
            if column is not None:
                where += f"{column}:"
        super().__init__(f"{where} {message}" if where else message)


class NotContextFreeError(GramlogError):
    """A prover entry point received a system with a multi-letter left-hand side."""


class MissingInitialStateError(GramlogError):
    """The automaton has no designated initial state for a letter that is needed."""


class EnumerationCapExceeded(GramlogError):
    """Bounded language enumeration ran out of fuel before completing."""


class LambdaSearchCapExceeded(GramlogError):
    """Too many loop-node assignments were tried while checking stability."""


class BudgetExceeded(GramlogError):
    """A prover run hit its wall-clock budget."""


class InternalError(GramlogError):
    """An internal invariant was violated; indicates a bug, never a user error."""


class ModelError(GramlogError):
    """A Kripke model file is malformed or breaks converse closure."""
