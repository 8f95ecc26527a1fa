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

from enum import Enum


class BodyKind(str, Enum):
    """Convex body representations."""

    point = 'point'
    """Singleton set."""
    box = 'box'
    """Axis-aligned box with lower and upper corners."""
    ball = 'ball'
    """Closed Euclidean ball with centre and radius."""

    def __repr__(self):
        return self._name_

    def __str__(self):
        return self._name_


class OperatorType(str, Enum):
    """Monotone operator evaluation rules."""

    linear = 'linear'
    """Linear map ``x -> M x`` with a monotone matrix ``M``."""

    gradient = 'gradient'
    """Gradient of a smooth convex potential."""

    prox = 'prox'
    """
    Subdifferential of a separable piecewise-linear convex potential.  Resolvents are exact
    proximal maps.
    """

    plaplacian = 'plaplacian'
    """Weighted discrete p-Laplacian with homogeneous Dirichlet boundary values."""

    def __repr__(self):
        return self._name_

    def __str__(self):
        return self._name_


class SelectionStrategy(str, Enum):
    """Rules for choosing a selection from a multimap value at each time step."""

    minimal_norm = 'minimal_norm'
    """Nearest point of the value set to the origin."""
    extreme = 'extreme'
    """Extreme point maximising a fixed random direction drawn once per sample."""
    random_extreme = 'random_extreme'
    """
    Extreme point maximising a per-sample direction or its reverse, switched at random each step
    with a per-sample bias.
    """
    project_previous = 'project_previous'
    """Nearest point of the value set to the previous selection."""
    greedy = 'greedy'
    """
    Candidate point (projection of the previous selection, centre or extreme corners) minimising
    the running plus terminal cost of the next state.  Used by the optimiser.
    """

    def __repr__(self):
        return self._name_

    def __str__(self):
        return self._name_


class Verdict(str, Enum):
    """Outcome of a hypothesis or harness check."""

    PASS = 'PASS'
    """All sampled margins are within tolerance."""
    FAIL = 'FAIL'
    """At least one sampled margin is out of tolerance."""
    REJECT = 'REJECT'
    """Declared constants are invalid, so no sampling was done."""

    def __repr__(self):
        return self._name_

    def __str__(self):
        return self._name_


class Sampling(str, Enum):
    """Coefficient sampling at p-Laplacian half-nodes."""

    point = 'point'
    """Generator value at each half-node."""
    mean = 'mean'
    """
    Conjugate-density mean of the generator over each cell, i.e. the constant ``c`` with
    ``c**(-1 / (p - 1))`` equal to the cell mean of ``a**(-1 / (p - 1))``.
    """

    def __repr__(self):
        return self._name_

    def __str__(self):
        return self._name_
