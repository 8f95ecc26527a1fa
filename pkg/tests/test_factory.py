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

import copy
from pathlib import Path

import numpy as np
import pytest

from evoincl import param_io
from evoincl.control import FiniteSpace, IntervalSpace
from evoincl.enums import OperatorType, Sampling
from evoincl.errors import ParamError
from evoincl.factory import OperatorFamily, create_family, create_grid, create_instance
from evoincl.operators import LinearOperator, SubdifferentialOperator, WeightedPLaplacian


def updated(config: dict, path: str, value) -> dict:
    """Return a copy of ``config`` with the dotted ``path`` set to ``value`` (or deleted if
    ``value`` is ``None``).
    """
    config = copy.deepcopy(config)
    *parents, key = path.split('.')
    node = config
    for parent in parents:
        node = node.setdefault(parent, {})
    if value is None:
        node.pop(key, None)
    else:
        node[key] = value
    return config


def test_create_instance(linear_instance_dict: dict):
    """Test ``create_instance()`` with the linear quadratic instance."""
    inst = create_instance(linear_instance_dict)
    assert inst.dim == 1
    assert inst.grid.n_steps == 100
    assert inst.grid.horizon == 1.0
    assert inst.xi.tolist() == [0.5]
    assert inst.lam == 0.0
    assert inst.max_iter == 200
    assert isinstance(inst.space, IntervalSpace)
    assert isinstance(inst.operator(), LinearOperator)
    assert inst.operators.kind == OperatorType.linear
    assert not inst.operators.parameter_dependent
    assert inst.problem.radius(0.5) == 1.0
    assert inst.problem.terminal_cost(inst.xi, np.array([2.0])) == 2.0
    assert inst.problem.resolvent_tol == 1e-10
    assert inst.multimap.is_constant
    # the source configuration is not altered
    assert inst.config == linear_instance_dict
    assert inst.config is not linear_instance_dict


def test_create_instance_grid_override(linear_instance_dict: dict):
    """Test the ``create_instance()`` grid override."""
    inst = create_instance(linear_instance_dict, grid=dict(steps=20))
    assert inst.grid.n_steps == 20
    assert inst.grid.horizon == 1.0
    inst = create_instance(linear_instance_dict, grid=dict(times=[0.0, 0.2, 1.0]))
    assert inst.grid.times.tolist() == [0.0, 0.2, 1.0]
    assert linear_instance_dict['grid'] == dict(horizon=1.0, steps=100)


def test_create_instance_defaults():
    """Test ``create_instance()`` defaults with a minimal instance."""
    config = dict(dimension=2, grid=dict(horizon=2.0, steps=4), operator=dict(kind='prox'))
    inst = create_instance(config)
    assert isinstance(inst.operator(), SubdifferentialOperator)
    assert inst.xi.tolist() == [0.0, 0.0]
    assert inst.lam == 0.0
    assert inst.multimap(0.0, np.ones(2)).distance(np.zeros(2)) == 0.0
    assert inst.problem.terminal_cost(inst.xi, np.ones(2)) == 0.0


def test_create_instance_plaplacian(plaplacian_instance_file: Path, data_dir: Path):
    """Test ``create_instance()`` reads p-Laplacian weights relative to the instance file."""
    config = param_io.read_config(plaplacian_instance_file)
    inst = create_instance(config, base_dir=data_dir)
    op = inst.operator()
    assert isinstance(op, WeightedPLaplacian)
    assert op.dim == 10
    assert op.p == 3.0
    assert op.weights().tolist() == [1, 1, 4, 4, 1, 1, 4, 4, 1, 1, 4]


def test_create_instance_family_weights():
    """Test ``create_instance()`` with p-Laplacian weights from a coefficient family member."""
    weights = dict(generator='two_phase', m=3, n=2, sampling='point', low=1.0, high=2.0)
    config = dict(
        dimension=3,
        grid=dict(horizon=1.0, steps=2),
        operator=dict(kind='plaplacian', weights=weights, lambda_scale=1.0),
    )
    inst = create_instance(config)
    assert inst.operators.parameter_dependent
    assert inst.operator(0.0).weights().tolist() == [1.0, 2.0, 1.0, 2.0]
    assert inst.operator(1.0).weights().tolist() == [2.0, 4.0, 2.0, 4.0]


def test_operator_family_cache():
    """Test ``OperatorFamily`` creates parameter dependent operators once per parameter."""
    config = dict(kind='linear', matrix=[[1.0, 0.0], [0.0, 2.0]], lambda_matrix=1.0)
    operators = OperatorFamily(config, 2)
    assert operators.parameter_dependent
    op = operators(0.5)
    assert op.matrix.tolist() == [[1.5, 0.0], [0.0, 2.5]]
    assert operators.get(0.5) is op
    assert operators.get(0.0) is not op

    operators = OperatorFamily(dict(kind='linear', matrix=1.0, c2=0.5), 1)
    assert operators.get(0.3) is operators.get(None)
    assert operators.get().c2 == 0.5


def test_create_instance_parameters(linear_instance_dict: dict):
    """Test ``create_instance()`` with a finite parameter space and parameter coefficients."""
    config = updated(linear_instance_dict, 'parameters', dict(values=[2.0, 3.0]))
    config = updated(config, 'lambda', None)
    config = updated(config, 'control.lambda_radius', -0.25)
    inst = create_instance(config)
    assert isinstance(inst.space, FiniteSpace)
    assert inst.lam == 2.0
    assert inst.problem.radius(0.0, 2.0) == pytest.approx(0.5)


@pytest.mark.parametrize(
    'path, value',
    [
        ('dimension', None),
        ('dimension', 0),
        ('grid.horizon', None),
        ('grid.steps', 0),
        ('operator.kind', 'unknown'),
        ('operator.kind', 'gradient'),
        ('operator.unknown', 1.0),
        ('multimap.unknown', 1.0),
        ('multimap.kind', 'cone'),
        ('parameters', dict(range=[0, 1])),
        ('parameters', dict(interval=[1.0, 0.0])),
        ('control.unknown', 1.0),
        ('cost.unknown', {}),
        ('cost.terminal', dict(unknown=1.0)),
        ('solver.unknown', 1.0),
        ('lambda', 2.0),
        ('xi', [0.0, 1.0]),
    ],
)
def test_create_instance_error(linear_instance_dict: dict, path: str, value):
    """Test ``create_instance()`` raises a ParamError with invalid configurations."""
    config = updated(linear_instance_dict, path, value)
    with pytest.raises(ParamError):
        create_instance(config)


@pytest.mark.parametrize(
    'operator',
    [
        dict(kind='plaplacian', p=3),
        dict(kind='plaplacian', weights=[1.0, 1.0]),
        dict(kind='plaplacian', weights=dict(file='unknown.csv')),
    ],
)
def test_create_instance_weights_error(operator: dict, data_dir: Path):
    """Test ``create_instance()`` raises a ParamError with missing or mismatched weights."""
    config = dict(dimension=10, grid=dict(horizon=1.0, steps=2), operator=operator)
    with pytest.raises(ParamError):
        create_instance(config, base_dir=data_dir)


@pytest.mark.parametrize('config', [dict(times=[0.0, 0.5, 2.0]), dict(horizon=2.0, steps=3)])
def test_create_grid(config: dict):
    """Test ``create_grid()`` with uniform and explicit grids."""
    grid = create_grid(config)
    assert grid.to_dict() == config


@pytest.mark.parametrize('config', [dict(steps=3), dict(times=[0.5, 1.0])])
def test_create_grid_error(config: dict):
    """Test ``create_grid()`` raises a ParamError with invalid grids."""
    with pytest.raises(ParamError):
        create_grid(config)


def test_create_family():
    """Test ``create_family()`` with a valid configuration."""
    family = create_family(dict(generator='two_phase', low=1, high=4, p=3, m=10, dimension=1))
    assert family.name == 'two_phase'
    assert family.p == 3.0
    assert family.m == 10
    assert family.sampling == Sampling.point
    assert family.bounds == (1.0, 4.0)


@pytest.mark.parametrize(
    'config',
    [
        dict(low=1.0),
        dict(generator='two_phase', dimension=2),
        dict(generator='two_phase', p=1.0),
        dict(generator='two_phase', sampling='random'),
    ],
)
def test_create_family_error(config: dict):
    """Test ``create_family()`` raises a ParamError with invalid configurations."""
    with pytest.raises(ParamError):
        create_family(config)
