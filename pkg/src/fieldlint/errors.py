class FieldLintError(Exception):
    """Base class for every error raised by the package."""


class IndexDisciplineError(FieldLintError):
    """An index name occurs more than twice, or twice with the same variance,
    or the free indices of summands disagree."""


class DSLSyntaxError(FieldLintError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        # line 0 means the error does not point into source text
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.message = message
        self.line = line
        self.col = col


class UndeclaredSymbolError(DSLSyntaxError):
    pass


class DeclarationError(DSLSyntaxError):
    """Conjugating a real field, wrong index arity, duplicate names."""


class DimensionConflictError(FieldLintError):
    def __init__(self, message: str, terms=()):
        super().__init__(message)
        self.terms = tuple(terms)


class UnderdeterminedDimensionError(FieldLintError):
    def __init__(self, message: str, fields=()):
        super().__init__(message)
        self.fields = tuple(fields)


class UnsupportedOrderError(FieldLintError):
    """The density contains second (or higher) derivatives of a varied field."""


class ReductionError(FieldLintError):
    """On-shell rewriting did not reach a fixpoint."""


class ConfigError(FieldLintError):
    """A symbol has no numeric assignment, or a profile parameter is invalid."""


class SingularityError(ConfigError):
    pass


class UnsupportedNumericError(FieldLintError):
    """Spinor-valued content cannot be evaluated numerically."""


class UnknownScenarioError(FieldLintError):
    pass
