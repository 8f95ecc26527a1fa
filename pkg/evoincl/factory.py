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

"""Factories for creating problem objects from problem instance configurations."""
from __future__ import annotations

import copy
import logging
from dataclasses import dataclass
from os import PathLike
from typing import Any, IO

import numpy as np
from fsspec.core import OpenFile

from evoincl import param_io, utils
from evoincl.control import (
    ControlCost,
    ControlProblem,
    FiniteSpace,
    IntervalSpace,
    ParameterSpace,
    StateCost,
    TerminalCost,
)
from evoincl.enums import OperatorType
from evoincl.errors import EvoinclError, ParamError
from evoincl.inclusion import AffineMultiMap, MultiMap, TimeGrid
from evoincl.operators import MonotoneOp, create_operator
from evoincl.pgconv import CoefficientFamily

logger = logging.getLogger(__name__)

_instance_schema = dict(dimension=int, grid=dict, operator=dict(kind=str))
"""Required problem instance keys."""

_operator_keys = {
    OperatorType.linear: ['matrix', 'lambda_matrix'],
    OperatorType.prox: ['breakpoints', 'slopes'],
    OperatorType.plaplacian: ['weights', 'p', 'bounds', 'lambda_scale'],
}
"""Kind specific operator keys."""

_constant_keys = ['a1', 'c1', 'a2', 'c2']
"""Optional declared operator constants."""

_family_schema = dict(generator=str)
"""Required coefficient family keys."""


def _validate(schema: dict, config: Any, name: str):
    """Validate ``config`` against ``schema``, converting errors to ParamError."""
    try:
        utils.validate_collection(schema, config)
    except (ValueError, TypeError, KeyError) as ex:
        raise ParamError(f"Invalid {name} configuration: {str(ex)}")


def _check_keys(config: dict, allowed: list[str], name: str):
    err_keys = set(config.keys()).difference(allowed)
    if len(err_keys) > 0:
        raise ParamError(f'Unsupported {name} key(s): {sorted(err_keys)}.')


def create_grid(config: dict) -> TimeGrid:
    """
    Create a time grid from a ``grid`` configuration: ``{"horizon": b, "steps": N}`` or
    ``{"times": [...]}``.
    """
    try:
        if 'times' in config:
            return TimeGrid(config['times'])
        return TimeGrid.uniform(float(config['horizon']), int(config['steps']))
    except KeyError as ex:
        raise ParamError(f"Grid configuration is missing {str(ex)}.")
    except EvoinclError as ex:
        raise ParamError(f'Invalid grid configuration: {str(ex)}')


def _read_weights(config: Any, base_dir: str | PathLike | OpenFile | None) -> np.ndarray:
    """Return p-Laplacian weights from an inline list, a file reference or a family member."""
    if isinstance(config, dict) and 'file' in config:
        file = config['file']
        if base_dir is not None:
            file = utils.join_ofile(base_dir, file, mode='rt')
        try:
            return param_io.read_weights(file)
        except FileNotFoundError as ex:
            raise ParamError(f'Weights file not found: {str(ex)}')
    elif isinstance(config, dict) and 'generator' in config:
        member = dict(config)
        n = int(member.pop('n', 1))
        return create_family(member).weights(n)
    return np.asarray(config, dtype=float)


class OperatorFamily:
    """
    Parameter dependent monotone operator factory.  Operators are created on demand and cached
    per parameter value.

    :param config:
        ``operator`` section of a problem instance.
    :param dim:
        State dimension.
    :param base_dir:
        Directory that relative weight file paths are resolved against.
    """

    def __init__(
        self, config: dict, dim: int, base_dir: str | PathLike | OpenFile | None = None
    ):
        _validate(dict(kind=str), config, 'operator')
        try:
            self._kind = OperatorType(config['kind'])
        except ValueError:
            raise ParamError(f"Unsupported operator kind: '{config['kind']}'.")
        if self._kind == OperatorType.gradient:
            raise ParamError("Operator kind 'gradient' can only be created in code.")
        _check_keys(config, ['kind', *_operator_keys[self._kind], *_constant_keys], 'operator')
        self._config = config
        self._dim = dim
        self._constants = {k: config[k] for k in _constant_keys if k in config}
        self._weights = None
        if self._kind == OperatorType.plaplacian:
            if 'weights' not in config:
                raise ParamError("'weights' is missing for the 'plaplacian' operator.")
            self._weights = _read_weights(config['weights'], base_dir)
            if len(self._weights) != dim + 1:
                raise ParamError(
                    f"'weights' should have dimension + 1 = {dim + 1} values, not "
                    f'{len(self._weights)}.'
                )
        self._cache = {}

    @property
    def kind(self) -> OperatorType:
        """Operator kind."""
        return self._kind

    @property
    def parameter_dependent(self) -> bool:
        """Whether the operator depends on the parameter."""
        return 'lambda_matrix' in self._config or 'lambda_scale' in self._config

    def _create(self, lam: Any) -> MonotoneOp:
        lam = 0.0 if lam is None else float(lam)
        config = self._config
        if self._kind == OperatorType.linear:
            matrix = np.asarray(config.get('matrix', 0.0), dtype=float)
            if matrix.ndim == 0:
                matrix = matrix * np.eye(self._dim)
            lambda_matrix = np.asarray(config.get('lambda_matrix', 0.0), dtype=float)
            if lambda_matrix.ndim == 0:
                lambda_matrix = lambda_matrix * np.eye(self._dim)
            return create_operator(
                self._kind, matrix + lam * lambda_matrix, **self._constants
            )
        elif self._kind == OperatorType.prox:
            return create_operator(
                self._kind,
                config.get('breakpoints', [0.0]),
                config.get('slopes', [-1.0, 1.0]),
                dim=self._dim,
                **self._constants,
            )
        scale = 1.0 + lam * float(config.get('lambda_scale', 0.0))
        bounds = config.get('bounds', None)
        bounds = None if bounds is None else (scale * bounds[0], scale * bounds[1])
        return create_operator(
            self._kind,
            scale * self._weights,
            p=float(config.get('p', 2.0)),
            bounds=bounds,
            **self._constants,
        )

    def get(self, lam: Any = None) -> MonotoneOp:
        """
        Return the operator at a parameter value.

        :param lam:
            Parameter value (``None`` for the parameter independent operator).
        """
        key = None if lam is None or not self.parameter_dependent else float(lam)
        if key not in self._cache:
            self._cache[key] = self._create(lam)
        return self._cache[key]

    __call__ = get


def create_multimap(config: dict | None, dim: int, space: ParameterSpace) -> MultiMap:
    """
    Create an affine multimap from a ``multimap`` configuration.  Defaults to ``F = {0}``.

    :param config:
        ``multimap`` section of a problem instance.
    :param dim:
        State dimension.
    :param space:
        Parameter space, whose largest magnitude bounds the parameter.
    """
    config = dict(config or dict(kind='point'))
    allowed = ['kind', 'slope', 'center', 'spread', 'lambda_center', 'lambda_spread']
    _check_keys(config, allowed + ['k', 'a3', 'c3'], 'multimap')
    if isinstance(space, IntervalSpace):
        lambda_bound = max(abs(space.lo), abs(space.hi))
    else:
        lambda_bound = max(abs(v) for v in space.values)
    try:
        return AffineMultiMap(dim, lambda_bound=lambda_bound, **config)
    except EvoinclError as ex:
        raise ParamError(f'Invalid multimap configuration: {str(ex)}')


def create_space(config: dict | None) -> ParameterSpace:
    """
    Create a parameter space from a ``parameters`` configuration: ``{"interval": [lo, hi]}`` or
    ``{"values": [...], "distances": [[...]]}``.  Defaults to ``[0, 1]``.
    """
    config = config or dict(interval=[0.0, 1.0])
    try:
        if 'interval' in config:
            return IntervalSpace(*config['interval'])
        elif 'values' in config:
            return FiniteSpace(config['values'], config.get('distances', None))
    except (EvoinclError, TypeError) as ex:
        raise ParamError(f'Invalid parameters configuration: {str(ex)}')
    raise ParamError("Parameters configuration should contain 'interval' or 'values'.")


def _linear_coefficient(value: Any, lambda_value: Any):
    value = np.asarray(value, dtype=float)
    lambda_value = np.asarray(lambda_value, dtype=float)
    if not np.any(lambda_value):
        return value
    return lambda t, lam: value + (0.0 if lam is None else float(lam)) * lambda_value


@dataclass
class Instance:
    """Problem objects created from a problem instance configuration."""

    config: dict
    grid: TimeGrid
    operators: OperatorFamily
    space: ParameterSpace
    multimap: MultiMap
    problem: ControlProblem
    xi: np.ndarray
    lam: Any
    max_iter: int

    @property
    def dim(self) -> int:
        """State dimension."""
        return self.problem.dim

    def operator(self, lam: Any = None) -> MonotoneOp:
        """Return the operator at ``lam`` (the instance parameter by default)."""
        return self.operators.get(self.lam if lam is None else lam)


def create_instance(
    config: dict, base_dir: str | PathLike | OpenFile | None = None, grid: dict | None = None
) -> Instance:
    """
    Create problem objects from a problem instance configuration.

    :param config:
        Problem instance dictionary.
    :param base_dir:
        Directory that relative file references are resolved against.
    :param grid:
        Optional grid configuration that overrides the instance grid.

    :return:
        Problem objects.
    """
    _validate(_instance_schema, config, 'problem instance')
    config = copy.deepcopy(config)
    if grid:
        config['grid'] = {**config['grid'], **grid}
        if 'times' in grid:
            config['grid'] = dict(times=grid['times'])
    dim = config['dimension']
    if dim < 1:
        raise ParamError(f"'dimension' should be positive, not {dim}.")

    time_grid = create_grid(config['grid'])
    operators = OperatorFamily(config['operator'], dim, base_dir=base_dir)
    space = create_space(config.get('parameters', None))
    multimap = create_multimap(config.get('multimap', None), dim, space)

    control = config.get('control', {})
    control_keys = [
        'multiplier', 'lambda_multiplier', 'multiplier_bound', 'radius', 'lambda_radius'
    ]
    _check_keys(control, control_keys, 'control')
    cost = config.get('cost', {})
    _check_keys(cost, ['state', 'control', 'terminal'], 'cost')
    solver = config.get('solver', {})
    _check_keys(solver, ['resolvent_tol', 'max_iter'], 'solver')

    try:
        problem = ControlProblem(
            operators.get if operators.parameter_dependent else operators.get(None),
            multimap,
            time_grid,
            space,
            multiplier=_linear_coefficient(
                control.get('multiplier', 1.0), control.get('lambda_multiplier', 0.0)
            ),
            multiplier_bound=control.get('multiplier_bound', None),
            radius=_linear_coefficient(
                control.get('radius', 1.0), control.get('lambda_radius', 0.0)
            ),
            state_cost=StateCost(**cost.get('state', {})),
            control_cost=ControlCost(**cost.get('control', {})),
            terminal_cost=TerminalCost(**cost.get('terminal', {})),
            resolvent_tol=float(solver.get('resolvent_tol', 1e-10)),
        )
        lam = config.get('lambda', None)
        if lam is None:
            lam = space.lo if isinstance(space, IntervalSpace) else space.values[0]
        space.validate(lam)
        xi = utils.as_vector(config.get('xi', np.zeros(dim)), dim, 'xi')
    except (EvoinclError, TypeError) as ex:
        raise ParamError(f'Invalid problem instance configuration: {str(ex)}')

    return Instance(
        config=config,
        grid=time_grid,
        operators=operators,
        space=space,
        multimap=multimap,
        problem=problem,
        xi=xi,
        lam=lam,
        max_iter=int(solver.get('max_iter', 200)),
    )


def create_family(config: dict) -> CoefficientFamily:
    """
    Create a coefficient family from a ``family`` configuration, e.g. ``{"generator":
    "two_phase", "low": 1, "high": 4, "p": 2, "m": 200, "sampling": "point"}``.
    """
    _validate(_family_schema, config, 'family')
    config = dict(config)
    if config.pop('dimension', 1) != 1:
        raise ParamError('Only 1D coefficient families are supported.')
    try:
        return CoefficientFamily(config.pop('generator'), **config)
    except (EvoinclError, TypeError, ValueError) as ex:
        raise ParamError(f'Invalid family configuration: {str(ex)}')
