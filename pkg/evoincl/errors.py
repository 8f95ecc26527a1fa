# Copyright The Evoincl Contributors.
#
# This file is part of Evoincl.
#
# Evoincl is free software: you can redistribute it and/or modify it under the terms of the GNU
# Affero General Public License as published by the Free Software Foundation, either version 3 of
# the License, or (at your option) any later version.
#
# Evoincl is distributed in the hope that it will be useful, but WITHOUT ANY WARRANTY; without
# even the implied warranty of MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the GNU
# Affero General Public License for more details.
#
# You should have received a copy of the GNU Affero General Public License along with Evoincl.
# If not, see <https://www.gnu.org/licenses/>.

from __future__ import annotations


class EvoinclError(Exception):
    """Base exception class."""


class InputError(EvoinclError):
    """Raised when an argument value is invalid."""


class DimensionError(InputError):
    """Raised when vector or set dimensions do not match."""


class CapacityError(EvoinclError):
    """Raised when a request exceeds a configured capacity."""


class NumericalError(EvoinclError):
    """
    Raised when a numerical procedure fails.

    :param message:
        Error message.
    :param residual:
        Final residual of the failed procedure, if known.
    :param node:
        Time grid node index where the failure occurred, if known.
    """

    def __init__(self, message: str, residual: float | None = None, node: int | None = None):
        super().__init__(message)
        self.residual = residual
        self.node = node


class ConvergenceError(NumericalError):
    """
    Raised when an iteration cap is reached without contraction.

    :param message:
        Error message.
    :param ratio:
        Last observed contraction ratio.
    """

    def __init__(self, message: str, ratio: float | None = None, residual: float | None = None):
        super().__init__(message, residual=residual)
        self.ratio = ratio


class ParamError(EvoinclError):
    """Raised when there is a problem reading a problem instance or run configuration."""


class EvoinclWarning(RuntimeWarning):
    """Evoincl runtime warning."""
