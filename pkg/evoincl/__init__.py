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

"""Parametric evolution inclusion toolkit."""
import logging

from evoincl.control import ControlProblem, optimize, value
from evoincl.convex_sets import Ball, Box, Point, hausdorff
from evoincl.enums import BodyKind, OperatorType, SelectionStrategy, Verdict
from evoincl.factory import create_instance
from evoincl.inclusion import AffineMultiMap, MultiMap, TimeGrid, filippov_construct, solve_forced
from evoincl.operators import (
    LinearOperator,
    SubdifferentialOperator,
    WeightedPLaplacian,
    validate_hypotheses,
)
from evoincl.pgconv import CoefficientFamily, run_pg_experiment

# Add a NullHandler to the package logger to hide logs by default.  Applications can then add
# their own handler(s).
log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())
