class EcdmError(Exception):
    pass


class DegenerateScale(EcdmError):
    """A block has zero estimated scale, so the standardized statistic is undefined."""

    def __init__(self, message, block=None, columns=()):
        super().__init__(message)
        self.block = block
        self.columns = tuple(columns)


class NonpositiveScale(EcdmError):
    """The Srivastava-Reid trace estimates give a nonpositive product."""


class UndefinedDiagnostic(EcdmError):
    pass


class UnsupportedAssumption(EcdmError):
    """Requested a population quantity whose moment assumptions fail for the chosen family."""
