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

import json
import os
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from evoincl.control import (
    AdmissiblePair,
    ControlCost,
    ControlProblem,
    IntervalSpace,
    TerminalCost,
    check_admissible,
    simulate,
)
from evoincl.convex_sets import Ball, Box, ConvexBody, Point
from evoincl.enums import BodyKind
from evoincl.inclusion import AffineMultiMap, TimeGrid, solve_forced
from evoincl.operators import LinearOperator
from evoincl.pgconv import CoefficientFamily

if '__file__' in globals():
    root_path = Path(__file__).absolute().parents[1]
else:
    root_path = Path(os.getcwd())

lq_xi = 0.5
"""Initial state of the linear quadratic test instance."""


def random_body(rng: np.random.Generator, dim: int, kind: str | BodyKind = None) -> ConvexBody:
    """Return a random point, box or ball of dimension ``dim``."""
    kind = BodyKind(kind or rng.choice([k.value for k in BodyKind]))
    center = rng.uniform(-2, 2, dim)
    if kind == BodyKind.point:
        return Point(center)
    elif kind == BodyKind.box:
        half = rng.uniform(0, 1.5, dim)
        return Box(center - half, center + half)
    return Ball(center, rng.uniform(0, 1.5))


def create_lq_problem(steps: int = 500) -> ControlProblem:
    """
    Return the scalar problem ``-x' = x + u``, ``|u| <= 1``, ``J = x(1)`` on ``[0, 1]``, whose
    optimal control is ``u = 1`` and value is ``xi e^-1 - (1 - e^-1)``.
    """
    return ControlProblem(
        LinearOperator(1.0),
        AffineMultiMap(1, kind='point'),
        TimeGrid.uniform(1.0, steps),
        IntervalSpace(0.0, 1.0),
        radius=1.0,
        terminal_cost=TerminalCost(linear=1.0),
    )


def lq_value(xi: float = lq_xi) -> float:
    """Return the exact value of the linear quadratic test instance."""
    return xi * np.exp(-1) - (1 - np.exp(-1))


@pytest.fixture(scope='session')
def runner() -> CliRunner:
    """Click runner for command line execution."""
    return CliRunner()


@pytest.fixture(scope='session')
def lq_problem() -> ControlProblem:
    """Linear quadratic problem on a 500 step grid."""
    return create_lq_problem(500)


@pytest.fixture(scope='session')
def lq_problem_coarse() -> ControlProblem:
    """Linear quadratic problem on a 100 step grid."""
    return create_lq_problem(100)


@pytest.fixture(scope='session')
def brute_problem() -> ControlProblem:
    """
    Two step problem ``-x' ∈ x + [-0.5, 0.5] + u``, ``|u| <= 1``, ``J = x(1)``, small enough to
    enumerate.
    """
    return ControlProblem(
        LinearOperator(1.0),
        AffineMultiMap(1, kind='box', spread=0.5),
        TimeGrid.uniform(1.0, 2),
        IntervalSpace(0.0, 1.0),
        radius=1.0,
        terminal_cost=TerminalCost(linear=1.0),
    )


@pytest.fixture(scope='session')
def convex_problem() -> ControlProblem:
    """Problem with a strictly convex control cost ``|u - 0.3|^2`` that does not depend on the
    initial state.
    """
    return ControlProblem(
        LinearOperator(1.0),
        AffineMultiMap(1, kind='point'),
        TimeGrid.uniform(1.0, 20),
        IntervalSpace(0.0, 1.0),
        radius=1.0,
        control_cost=ControlCost(weight=1.0, target=0.3),
    )


@pytest.fixture(scope='session')
def shrinking_problem() -> ControlProblem:
    """
    Problem ``-x' ∈ x + [-0.5, 0.5] + u`` with the parameter dependent constraint ``|u| <= 1 -
    lambda / 2`` and ``J = x(1)``.
    """
    return ControlProblem(
        LinearOperator(1.0),
        AffineMultiMap(1, kind='box', spread=0.5),
        TimeGrid.uniform(1.0, 50),
        IntervalSpace(0.0, 1.0),
        radius=lambda t, lam: 1.0 - 0.5 * (0.0 if lam is None else lam),
        terminal_cost=TerminalCost(linear=1.0),
    )


@pytest.fixture(scope='session')
def shrinking_target_pair(shrinking_problem: ControlProblem) -> AdmissiblePair:
    """Pair driven by ``u = 1`` at ``(xi, lambda) = (0.5, 0)``, with its admissibility report."""
    control = np.ones((len(shrinking_problem.grid), 1))
    pair = simulate(shrinking_problem, control, [0.5], 0.0)
    return AdmissiblePair(
        state=pair.state,
        control=pair.control,
        selection=pair.selection,
        report=check_admissible(shrinking_problem, pair, [0.5], 0.0),
        cost=pair.cost,
    )


@pytest.fixture(scope='session')
def unit_defect_setup() -> tuple:
    """
    Filippov setup with ``A = 0``, ``F(x) = [x + 1, x + 3]`` and the zero reference, whose
    defect is 1 at every node.
    """
    A = LinearOperator(0.0)
    F = AffineMultiMap(1, kind='box', slope=1.0, center=2.0, spread=1.0)
    grid = TimeGrid.uniform(1.0, 100)
    reference = solve_forced(A, None, [0.0], grid)
    return A, F, reference


@pytest.fixture(scope='session')
def two_phase_family() -> CoefficientFamily:
    """Two phase ``p = 2`` coefficient family with values 1 and 4 on 200 interior nodes."""
    return CoefficientFamily('two_phase', p=2, m=200, low=1.0, high=4.0, fraction=0.5)


@pytest.fixture(scope='session')
def data_dir() -> Path:
    """Test data directory."""
    return root_path.joinpath('tests', 'data')


@pytest.fixture(scope='session')
def linear_instance_file(data_dir: Path) -> Path:
    """Linear quadratic problem instance file."""
    return data_dir.joinpath('linear_instance.json')


@pytest.fixture(scope='session')
def linear_instance_dict(linear_instance_file: Path) -> dict:
    """Linear quadratic problem instance dictionary."""
    return json.loads(linear_instance_file.read_text())


@pytest.fixture(scope='session')
def filippov_instance_file(data_dir: Path) -> Path:
    """Problem instance whose zero forced reference solves the inclusion."""
    return data_dir.joinpath('filippov_instance.json')


@pytest.fixture(scope='session')
def plaplacian_instance_file(data_dir: Path) -> Path:
    """p-Laplacian problem instance file with a weights file reference."""
    return data_dir.joinpath('plaplacian_instance.yaml')


@pytest.fixture(scope='session')
def weights_file(data_dir: Path) -> Path:
    """p-Laplacian half node weights file."""
    return data_dir.joinpath('weights.csv')


@pytest.fixture(scope='session')
def sweep_config_file(data_dir: Path) -> Path:
    """Value sweep run configuration file."""
    return data_dir.joinpath('sweep.yaml')


@pytest.fixture(scope='session')
def continuity_config_file(data_dir: Path) -> Path:
    """Continuity run configuration file."""
    return data_dir.joinpath('continuity.yaml')


@pytest.fixture(scope='session')
def qliminf_config_file(data_dir: Path) -> Path:
    """Liminf construction run configuration file."""
    return data_dir.joinpath('qliminf.yaml')


@pytest.fixture(scope='session')
def pgconv_config_file(data_dir: Path) -> Path:
    """Weak convergence experiment run configuration file."""
    return data_dir.joinpath('pgconv.yaml')


@pytest.fixture(scope='session')
def reject_instance_file(data_dir: Path) -> Path:
    """Problem instance with a zero coercivity constant."""
    return data_dir.joinpath('reject_instance.json')
