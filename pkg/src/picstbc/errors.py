"""Exception types raised across the package."""

import numpy as np


class PicError(Exception):
    """Base class for all package errors."""


class RankDeficient(PicError, np.linalg.LinAlgError):
    """A matrix that must have full column rank does not.

    ``index`` is the position in a batch where the test failed, if known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index

    def __reduce__(self):
        return (type(self), (self.args[0], self.index))


class NotPositiveDefinite(PicError, np.linalg.LinAlgError):
    pass


class UnsupportedOrder(PicError, ValueError):
    pass


class DirectOnlyCode(PicError, TypeError):
    """The code has no dispersion matrices, only an equivalent-channel generator."""


class InvalidColumnType(PicError, ValueError):
    pass


class BudgetExceeded(PicError):
    """An exhaustive search would enumerate more points than allowed."""


class InsufficientData(PicError, ValueError):
    pass


class GroupUndecodable(PicError):
    """Interference cancellation removed all energy of a symbol group.

    Attributes
    ----------
    group : int or None
        Index of the offending group in the grouping scheme.
    index : int or None
        Trial position in the batch.
    h : ndarray or None
        Channel realisation of the offending trial, when the caller knows it.
    """

    def __init__(self, message, group=None, index=None, h=None):
        super().__init__(message)
        self.group = group
        self.index = index
        self.h = h
        self.partial = None

    def __reduce__(self):
        return (type(self), (self.args[0], self.group, self.index, self.h))
