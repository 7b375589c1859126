"""Exception hierarchy shared by every module."""


class LameLaxError(Exception):
    """Base class for all errors raised by lamelax."""


class UnboundVariable(LameLaxError, KeyError):
    def __str__(self):
        return f"unbound variable {self.args[0]!r}"


class DivisionByZero(LameLaxError, ZeroDivisionError):
    """An expression was evaluated at a pole."""


class PoleOnGrid(LameLaxError):
    """A field hit a pole (or a vanishing Lamé coefficient) at a grid node."""


class ZeroEigenvalue(LameLaxError):
    """Some pencil eigenvalue f^i vanishes at a node."""


class ZeroEigenvalueGap(LameLaxError):
    """Two pencil eigenvalues coincide at a node."""


class MissingPencil(LameLaxError):
    pass


class MissingCurvature(LameLaxError):
    pass


class SpectralPole(LameLaxError):
    """lambda = -f^i(u^i) at a requested node."""


class SingularCombination(LameLaxError):
    pass


class DegenerateSecondMetric(LameLaxError):
    pass


class UnknownExample(LameLaxError, KeyError):
    def __str__(self):
        return f"unknown example {self.args[0]!r}"


class ProblemFileError(LameLaxError, ValueError):
    """Malformed or inconsistent problem file."""
