"""Exception hierarchy shared by all nfl_lab modules."""


class NFLError(ValueError):
    """Base class for argument and configuration errors raised by nfl_lab."""


class NonSquare(NFLError):
    pass


class DimensionMismatch(NFLError):
    pass


class EmptyInput(NFLError):
    pass


class InvalidDimension(NFLError):
    pass


class RankOutOfRange(NFLError):
    pass


class OrthonormalOverflow(NFLError):
    pass


class InvalidArgs(NFLError):
    pass


class DegenerateSplit(InvalidArgs):
    pass


class NotUnitary(NFLError):
    pass


class NotHermitian(NFLError):
    pass


class ConfigInvalid(NFLError):
    """Raised when an experiment config fails validation.

    ``field`` names the offending key so the CLI can report it.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
