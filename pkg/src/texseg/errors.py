"""Exception hierarchy shared by all texseg modules."""


class TexsegError(Exception):
    """Base class for every error raised deliberately by texseg."""


class DataError(TexsegError, ValueError):
    """Bad input data: unreadable files, shape mismatches, invalid specs."""


class DegenerateWindowError(DataError):
    """A window too small or too uniform for the requested statistic."""


class NumericalError(TexsegError, ArithmeticError):
    """A numerical procedure could not produce a finite answer."""


class SingularMatrixError(NumericalError):
    """A matrix that must be inverted is singular or badly conditioned."""
