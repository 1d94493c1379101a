"""Exception and warning types shared across the package."""


class ParameterError(ValueError):
    """Invalid sizes, dimensions or distribution parameters."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class TieError(ValueError):
    """Raised where an identity only holds for distinct pooled scores."""


class ParseError(ValueError):
    """Malformed input file or configuration."""


class RankTieWarning(UserWarning):
    """Pooled scores contain exact ties; the <=-counting rank inflates them."""


class ClampWarning(UserWarning):
    """A probability was clamped away from 0 or 1."""
