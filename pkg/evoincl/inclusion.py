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

"""Implicit time stepping for evolution inclusions, solution set sampling, a priori bounds and
Filippov successive approximation.
"""
from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, Sequence, Union

import numpy as np
from scipy import integrate

from evoincl import utils
from evoincl.convex_sets import Ball, Box, ConvexBody, Point, hausdorff
from evoincl.enums import BodyKind, SelectionStrategy, Verdict
from evoincl.errors import (
    ConvergenceError,
    DimensionError,
    EvoinclWarning,
    InputError,
    NumericalError,
)
from evoincl.operators import HypothesisReport, MonotoneOp, _margin_tol
from evoincl.utils import TimeFunction, as_time_function, as_vector

logger = logging.getLogger(__name__)

Forcing = Union[np.ndarray, Callable[[float], np.ndarray], None]
"""Forcing as an array with one row per grid node, a function of time, or ``None`` for zero."""

Chooser = Callable[[int, ConvexBody, np.ndarray, np.ndarray], np.ndarray]
"""Selection rule ``chooser(node, value_set, previous_selection, previous_state) ->
selection``."""

_default_config = dict(tol=1e-10, max_iter=200, corrector_iter=20, filippov_iter=60)
"""Default solver configuration."""


class TimeGrid:
    """
    Time grid ``0 = t_0 < t_1 < ... < t_N = b``.

    :param times:
        Strictly increasing node times starting at zero.
    """

    def __init__(self, times: Sequence[float] | np.ndarray):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times.shape[0] < 2:
            raise InputError("Grid 'times' should be a 1D array of at least 2 nodes.")
        if times[0] != 0:
            raise InputError(f"Grid 'times' should start at 0, not {times[0]}.")
        if np.any(np.diff(times) <= 0) or not np.all(np.isfinite(times)):
            raise InputError("Grid 'times' should be finite and strictly increasing.")
        self._times = utils.readonly(times)
        self._steps = utils.readonly(np.diff(times))

    @classmethod
    def uniform(cls, horizon: float, steps: int) -> TimeGrid:
        """
        Create a uniform grid.

        :param horizon:
            Positive horizon ``b``.
        :param steps:
            Number of time steps ``N``.
        """
        if not horizon > 0:
            raise InputError(f"'horizon' should be positive, not {horizon}.")
        if int(steps) != steps or steps < 1:
            raise InputError(f"'steps' should be a positive integer, not {steps}.")
        times = np.linspace(0.0, horizon, int(steps) + 1)
        times[-1] = horizon
        return cls(times)

    @property
    def times(self) -> np.ndarray:
        """Node times."""
        return self._times

    @property
    def steps(self) -> np.ndarray:
        """Step sizes ``t_{k+1} - t_k``."""
        return self._steps

    @property
    def horizon(self) -> float:
        """Horizon ``b``."""
        return float(self._times[-1])

    @property
    def n_steps(self) -> int:
        """Number of steps ``N``."""
        return self._steps.shape[0]

    @property
    def uniform_steps(self) -> bool:
        """Whether the steps are equal to round-off."""
        return bool(np.allclose(self._steps, self._steps[0], rtol=1e-12, atol=0))

    def __len__(self) -> int:
        return self._times.shape[0]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TimeGrid) and np.array_equal(self._times, other._times)

    def __repr__(self) -> str:
        return f'TimeGrid(horizon={self.horizon}, n_steps={self.n_steps})'

    def to_dict(self) -> dict:
        """Return a JSON serialisable dictionary representation."""
        if self.uniform_steps:
            return dict(horizon=self.horizon, steps=self.n_steps)
        return dict(times=self._times.tolist())


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States on a time grid, with the forcing that produced them."""

    grid: TimeGrid
    """Time grid."""
    states: np.ndarray
    """States as an array with one row per grid node."""
    forcing: np.ndarray | None = None
    """Total forcing (selection plus control terms), one row per grid node."""

    def __post_init__(self):
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if states.shape[0] != len(self.grid):
            raise DimensionError(
                f'Trajectory has {states.shape[0]} states, expected {len(self.grid)}.'
            )
        object.__setattr__(self, 'states', states)
        if self.forcing is not None:
            forcing = np.atleast_2d(np.asarray(self.forcing, dtype=float))
            if forcing.shape != states.shape:
                raise DimensionError('Trajectory forcing and states shapes should match.')
            object.__setattr__(self, 'forcing', forcing)

    @property
    def dim(self) -> int:
        """State dimension."""
        return self.states.shape[1]

    @property
    def xi(self) -> np.ndarray:
        """Initial state."""
        return self.states[0]

    @property
    def final(self) -> np.ndarray:
        """Final state ``x(b)``."""
        return self.states[-1]

    @property
    def velocities(self) -> np.ndarray:
        """Nodal velocities ``(x_{k+1} - x_k) / dt_k``, one row per step."""
        return np.diff(self.states, axis=0) / self.grid.steps[:, np.newaxis]


class FilippovCertificate(NamedTuple):
    """Per node error budget of a Filippov construction and its verification record."""

    epsilon: float
    """Approximation parameter."""
    times: np.ndarray
    """Node times."""
    tau: np.ndarray
    """Integrated Lipschitz modulus ``tau(t_k)``."""
    defect: np.ndarray
    """Reference defect ``p(t_k)``."""
    bound: np.ndarray
    """Error bound ``B_k``."""
    deviation: np.ndarray
    """Observed deviation ``|x(t_k) - u(t_k)|``."""
    allowance: np.ndarray
    """Discretisation allowance added to ``B_k``."""
    passed: np.ndarray
    """Per node pass flags."""
    gaps: list[float]
    """L1 gaps between successive selections."""
    envelope: list[float]
    """Factorial envelope of the successive gaps."""

    @property
    def all_passed(self) -> bool:
        """Whether every node passed."""
        return bool(np.all(self.passed))


class FilippovResult(NamedTuple):
    """Filippov construction output."""

    trajectory: Trajectory
    selection: np.ndarray
    certificate: FilippovCertificate


@dataclass(frozen=True)
class ContractionReport:
    """Flow map nonexpansiveness check result."""

    gap: float
    """Sup norm gap between the two trajectories."""
    initial_gap: float
    """Initial state gap ``|xi1 - xi2|``."""
    bound: float
    """Accepted gap ``|xi1 - xi2| + 10 tol``."""
    passed: bool
    trajectories: tuple[Trajectory, Trajectory] = field(repr=False, default=None)


def radial_retract(x: np.ndarray, radius: float) -> np.ndarray:
    """
    Return the ``radius``-radial retraction of ``x``: ``x`` inside the ``radius`` ball, and its
    radial projection onto the ball otherwise.
    """
    if not radius > 0:
        raise InputError(f"'radius' should be positive, not {radius}.")
    x = as_vector(x)
    x_norm = np.linalg.norm(x)
    return x if x_norm <= radius else (radius / x_norm) * x


class MultiMap:
    """
    Set valued map ``F(t, x, lambda)`` with compact convex values.

    :param rule:
        Function ``rule(t, x, lam) -> ConvexBody``.
    :param dim:
        State dimension.
    :param k:
        Lipschitz modulus in ``x`` (a number or a function of time).
    :param a3:
        Growth offset (a number or a function of time), ``|F(t, x)| <= a3(t) + c3 |x|``.
    :param c3:
        Linear growth constant.
    :param beta:
        Parameter modulus ``beta(d)`` of the parameter distance ``d``.
    :param w:
        Parameter weight ``w(t, r)`` of the state norm ``r``, so that
        ``h(F(t, x, lam1), F(t, x, lam2)) <= beta(d(lam1, lam2)) w(t, |x|)``.
    """

    def __init__(
        self,
        rule: Callable[[float, np.ndarray, Any], ConvexBody],
        dim: int,
        k: float | TimeFunction = 0.0,
        a3: float | TimeFunction = 0.0,
        c3: float = 0.0,
        beta: Callable[[float], float] | None = None,
        w: Callable[[float, float], float] | None = None,
    ):
        if int(dim) != dim or dim < 1:
            raise InputError(f"'dim' should be a positive integer, not {dim}.")
        if not c3 >= 0:
            raise InputError(f"'c3' should be non-negative, not {c3}.")
        self._rule = rule
        self._dim = int(dim)
        self._k = as_time_function(k, 'k')
        self._a3 = as_time_function(a3, 'a3')
        self._c3 = float(c3)
        self._beta = beta
        self._w = w

    @property
    def dim(self) -> int:
        """State dimension."""
        return self._dim

    @property
    def k(self) -> TimeFunction:
        """Lipschitz modulus."""
        return self._k

    @property
    def a3(self) -> TimeFunction:
        """Growth offset."""
        return self._a3

    @property
    def c3(self) -> float:
        """Linear growth constant."""
        return self._c3

    @property
    def is_constant(self) -> bool:
        """Whether the Lipschitz modulus is identically zero."""
        return getattr(self._k, 'constant', None) == 0

    def __call__(self, t: float, x: np.ndarray, lam: Any = None) -> ConvexBody:
        """Return the value set ``F(t, x, lam)``."""
        body = self._rule(t, x, lam)
        if body.dim != self._dim:
            raise DimensionError(f'Multimap value has dimension {body.dim}, expected {self._dim}.')
        return body

    def truncated(self, radius: float) -> MultiMap:
        """Return ``F`` composed with the ``radius``-radial retraction of the state."""
        return MultiMap(
            lambda t, x, lam: self(t, radial_retract(x, radius), lam),
            self._dim,
            k=self._k,
            a3=lambda t: self._a3(t) + self._c3 * radius,
            c3=0.0,
            beta=self._beta,
            w=None if self._w is None else lambda t, r: self._w(t, min(r, radius)),
        )

    def validate(
        self,
        horizon: float = 1.0,
        lambdas: Sequence[Any] = (None,),
        distance: Callable[[Any, Any], float] | None = None,
        sample_budget: int = 1000,
        seed: int = 0,
    ) -> HypothesisReport:
        """
        Check the Lipschitz, growth and (when ``beta``, ``w`` and ``distance`` are available)
        parameter modulus hypotheses on random samples.

        :param horizon:
            Times are sampled from ``[0, horizon]``.
        :param lambdas:
            Parameter values to sample from.
        :param distance:
            Parameter space metric.
        :param sample_budget:
            Number of samples.
        :param seed:
            Random seed.

        :return:
            Hypothesis report with ``lipschitz``, ``growth`` and ``parameter`` margins.
        """
        if sample_budget < 1:
            raise InputError(f"'sample_budget' should be at least 1, not {sample_budget}.")
        rng = np.random.default_rng(seed)
        margins = dict(lipschitz=np.inf, growth=np.inf)
        check_param = (
            self._beta is not None and self._w is not None and distance and len(lambdas) > 1
        )
        if check_param:
            margins['parameter'] = np.inf

        for _ in range(sample_budget):
            t = rng.uniform(0, horizon)
            x, y = rng.standard_normal((2, self._dim)) * 10 ** rng.uniform(-2, 1)
            lam1, lam2 = (lambdas[i] for i in rng.integers(len(lambdas), size=2))
            fx = self(t, x, lam1)
            lipschitz = self._k(t) * np.linalg.norm(x - y) - hausdorff(fx, self(t, y, lam1))
            growth = self._a3(t) + self._c3 * np.linalg.norm(x) - fx.farthest(np.zeros(self._dim))
            margins['lipschitz'] = min(margins['lipschitz'], float(lipschitz))
            margins['growth'] = min(margins['growth'], float(growth))
            if check_param:
                bound = self._beta(distance(lam1, lam2)) * self._w(t, float(np.linalg.norm(x)))
                param = bound - hausdorff(fx, self(t, x, lam2))
                margins['parameter'] = min(margins['parameter'], float(param))

        failed = [k for k, v in margins.items() if v < -_margin_tol]
        verdict = Verdict.FAIL if failed else Verdict.PASS
        messages = [f"'{k}' margin {margins[k]:.3e} is negative." for k in failed]
        return HypothesisReport(
            verdict=verdict, margins=margins, samples=sample_budget, messages=messages
        )


class AffineMultiMap(MultiMap):
    """
    Multimap ``F(t, x, lambda) = slope * x + centre(lambda) + S(lambda)``, where ``S`` is a box,
    ball or point at the origin, ``centre(lambda) = center + lambda * lambda_center`` and the
    spread is ``spread + lambda * lambda_spread``.

    :param dim:
        State dimension.
    :param kind:
        Kind of the spread body (``box`` half widths, ``ball`` radius, or ``point``).
    :param slope:
        Scalar state coefficient.
    :param center:
        Centre offset.
    :param spread:
        Box half widths (scalar or vector) or ball radius.
    :param lambda_center:
        Parameter coefficient of the centre.
    :param lambda_spread:
        Parameter coefficient of the spread.
    :param lambda_bound:
        Largest parameter magnitude, used for the default growth offset.
    :param kwargs:
        Optional overrides of ``k``, ``a3`` and ``c3``, and the parameter modulus ``beta``, ``w``.
    """

    def __init__(
        self,
        dim: int,
        kind: str | BodyKind = BodyKind.box,
        slope: float = 0.0,
        center: float | Sequence[float] = 0.0,
        spread: float | Sequence[float] = 0.0,
        lambda_center: float | Sequence[float] = 0.0,
        lambda_spread: float | Sequence[float] = 0.0,
        lambda_bound: float = 1.0,
        **kwargs,
    ):
        try:
            self._kind = BodyKind(kind)
        except ValueError:
            raise InputError(f"Unknown multimap kind: '{kind}'.")
        spread_dim = 1 if self._kind == BodyKind.ball else dim
        self._slope = float(slope)
        self._center = np.broadcast_to(as_vector(center), (dim,)).copy()
        self._lambda_center = np.broadcast_to(as_vector(lambda_center), (dim,)).copy()
        self._spread = np.broadcast_to(as_vector(spread), (spread_dim,)).copy()
        self._lambda_spread = np.broadcast_to(as_vector(lambda_spread), (spread_dim,)).copy()

        spread_max = np.abs(self._spread) + abs(lambda_bound) * np.abs(self._lambda_spread)
        center_max = np.linalg.norm(self._center) + abs(lambda_bound) * np.linalg.norm(
            self._lambda_center
        )
        body_max = 0.0 if self._kind == BodyKind.point else float(np.linalg.norm(spread_max))
        lambda_coeff = np.linalg.norm(self._lambda_center) + (
            0.0 if self._kind == BodyKind.point else np.linalg.norm(self._lambda_spread)
        )
        kwargs.setdefault('k', abs(self._slope))
        kwargs.setdefault('a3', float(center_max + body_max))
        kwargs.setdefault('c3', abs(self._slope))
        kwargs.setdefault('beta', lambda d: lambda_coeff * d)
        kwargs.setdefault('w', lambda t, r: 1.0)
        super().__init__(self._rule_fn, dim, **kwargs)

    @property
    def kind(self) -> BodyKind:
        """Spread body kind."""
        return self._kind

    def _rule_fn(self, t: float, x: np.ndarray, lam: Any = None) -> ConvexBody:
        lam = 0.0 if lam is None else float(lam)
        center = self._slope * np.asarray(x, dtype=float) + self._center + lam * self._lambda_center
        spread = self._spread + lam * self._lambda_spread
        if self._kind == BodyKind.point:
            return Point(center)
        if np.any(spread < 0):
            raise InputError(f'Multimap spread is negative at lambda={lam}.')
        if self._kind == BodyKind.box:
            return Box(center - spread, center + spread)
        return Ball(center, float(spread[0]))


def _forcing_array(forcing: Forcing, grid: TimeGrid, dim: int, name: str = 'f') -> np.ndarray:
    """Return ``forcing`` as an array with one row per grid node."""
    if forcing is None:
        return np.zeros((len(grid), dim))
    if callable(forcing):
        forcing = [forcing(t) for t in grid.times]
    array = np.asarray(forcing, dtype=float)
    if array.ndim == 1 and dim == 1 and array.shape[0] == len(grid):
        array = array[:, np.newaxis]
    if array.shape != (len(grid), dim):
        raise DimensionError(f"'{name}' should have shape {(len(grid), dim)}, not {array.shape}.")
    return array


def step_implicit(
    A: MonotoneOp,
    t: float,
    dt: float,
    x: np.ndarray,
    f_next: np.ndarray,
    tol: float = _default_config['tol'],
    max_iter: int = _default_config['max_iter'],
) -> np.ndarray:
    """
    Return one implicit Euler step of ``-x' ∈ A(t, x) + f``, the resolvent
    ``(I + dt A(t + dt, .))^-1 (x - dt f_next)``.

    :param A:
        Monotone operator.
    :param t:
        Time at the start of the step.
    :param dt:
        Positive step size.
    :param x:
        State at time ``t``.
    :param f_next:
        Forcing at time ``t + dt``.
    :param tol:
        Resolvent tolerance.
    :param max_iter:
        Resolvent iteration cap.
    """
    if not dt > 0:
        raise InputError(f"'dt' should be positive, not {dt}.")
    return A.resolvent(t + dt, dt, x - dt * f_next, tol=tol, max_iter=max_iter)


def solve_forced(
    A: MonotoneOp,
    f: Forcing,
    xi: np.ndarray,
    grid: TimeGrid,
    tol: float = _default_config['tol'],
    max_iter: int = _default_config['max_iter'],
) -> Trajectory:
    """
    Solve ``-x' ∈ A(t, x) + f(t)``, ``x(0) = xi`` with the implicit Euler scheme.

    :param A:
        Monotone operator.
    :param f:
        Forcing as an array with one row per grid node (row ``k + 1`` drives step ``k``), a
        function of time, or ``None`` for zero forcing.
    :param xi:
        Initial state.
    :param grid:
        Time grid.
    :param tol:
        Resolvent tolerance.
    :param max_iter:
        Resolvent iteration cap.

    :return:
        Grid trajectory.  Its ``forcing`` is ``f`` as an array.
    """
    xi = as_vector(xi, A.dim, 'xi')
    f = _forcing_array(f, grid, A.dim)
    states = np.empty((len(grid), A.dim))
    states[0] = xi
    times, steps = grid.times, grid.steps
    for k in range(grid.n_steps):
        try:
            states[k + 1] = step_implicit(A, times[k], steps[k], states[k], f[k + 1], tol, max_iter)
        except NumericalError as ex:
            raise NumericalError(
                f'Implicit step failed at node {k + 1}: {str(ex)}', residual=ex.residual, node=k + 1
            ) from ex
    return Trajectory(grid, states, forcing=f)


def apriori_bound(A: MonotoneOp, F: MultiMap, xi: np.ndarray, horizon: float) -> float:
    """
    Return the Gronwall a priori bound ``M`` with ``|x(t)| <= M`` for every solution of
    ``-x' ∈ A(t, x) + F(t, x)``, ``x(0) = xi`` on ``[0, horizon]``.

    From ``1/2 |x(t)|^2 <= 1/2 c8^2 + c9 int_0^t |x|^2``, ``M = c8 exp(c9 horizon)`` with
    ``c8^2 = |xi|^2 + 2 ||a2||_1 + ||a3||_2^2`` and ``c9 = c3 + 1/2`` (or ``c8^2 = |xi|^2 + 2
    ||a2||_1`` and ``c9 = c3`` when ``a3`` vanishes).

    :param A:
        Monotone operator supplying ``a2``.
    :param F:
        Multimap supplying ``a3`` and ``c3``.
    :param xi:
        Initial state.
    :param horizon:
        Horizon ``b``.
    """
    xi = as_vector(xi, A.dim, 'xi')
    if not horizon > 0:
        raise InputError(f"'horizon' should be positive, not {horizon}.")
    for name, value in dict(a2=A.a2, a3=F.a3, c3=F.c3).items():
        if value is None:
            raise InputError(f"The '{name}' constant is required for the a priori bound.")
    a2_norm = utils.time_norm(A.a2, horizon, 1)
    a3_norm = utils.time_norm(F.a3, horizon, 2)
    c8_sq = float(xi @ xi) + 2 * a2_norm
    c9 = F.c3
    if a3_norm > 0:
        c8_sq += a3_norm**2
        c9 += 0.5
    return math.sqrt(c8_sq) * math.exp(c9 * horizon)


def _correct(
    A: MonotoneOp,
    F: MultiMap,
    lam: Any,
    t: float,
    dt: float,
    x: np.ndarray,
    select: Callable[[ConvexBody], np.ndarray],
    control: np.ndarray,
    tol: float,
    corrector_iter: int,
    node: int,
    max_iter: int = _default_config['max_iter'],
) -> tuple[np.ndarray, np.ndarray]:
    """Return the step state and selection, iterating the predictor state until the selection is
    taken from ``F`` at the step state.
    """
    x_hat = x
    for it in range(corrector_iter):
        f_sel = select(F(t + dt, x_hat, lam))
        x_next = step_implicit(A, t, dt, x, f_sel + control, tol, max_iter)
        if F.is_constant or np.linalg.norm(x_next - x_hat) <= tol:
            return x_next, f_sel
        x_hat = x_next
    warnings.warn(
        f'Selection corrector did not converge at node {node}, the selection is taken at a '
        f'predictor state {np.linalg.norm(x_next - x_hat):.3e} from the step state.',
        category=EvoinclWarning,
    )
    return x_next, f_sel


def integrate_selection(
    A: MonotoneOp,
    F: MultiMap,
    xi: np.ndarray,
    lam: Any,
    grid: TimeGrid,
    chooser: Chooser,
    control_forcing: Forcing = None,
    tol: float = _default_config['tol'],
    corrector_iter: int = _default_config['corrector_iter'],
    max_iter: int = _default_config['max_iter'],
) -> tuple[Trajectory, np.ndarray]:
    """
    Integrate ``-x' ∈ A(t, x) + F(t, x, lam) + c(t)``, choosing the selection at each step with
    ``chooser``.  The scheme is implicit in ``A``, and selections are taken from ``F`` at a
    predictor state that is corrected to the step state.

    :param A:
        Monotone operator.
    :param F:
        Multimap.
    :param xi:
        Initial state.
    :param lam:
        Parameter value.
    :param grid:
        Time grid.
    :param chooser:
        Selection rule ``chooser(node, value_set, previous_selection, previous_state) ->
        selection``. The previous selection is ``None`` at node 0.
    :param control_forcing:
        Additional single valued forcing ``c``.
    :param tol:
        Resolvent and corrector tolerance.
    :param corrector_iter:
        Corrector iteration cap.
    :param max_iter:
        Resolvent iteration cap.

    :return:
        Trajectory (with the total forcing) and the selection path.
    """
    xi = as_vector(xi, A.dim, 'xi')
    control = _forcing_array(control_forcing, grid, A.dim, 'control_forcing')
    states = np.empty((len(grid), A.dim))
    selection = np.empty((len(grid), A.dim))
    states[0] = xi
    selection[0] = chooser(0, F(0.0, xi, lam), None, xi)
    times, steps = grid.times, grid.steps

    for k in range(grid.n_steps):

        def select(body: ConvexBody) -> np.ndarray:
            value = chooser(k + 1, body, selection[k], states[k])
            if body.distance(value) > 1e-9 * (1 + np.linalg.norm(value)):
                raise NumericalError(f'Selection at node {k + 1} is not in its value set.')
            return value

        try:
            states[k + 1], selection[k + 1] = _correct(
                A, F, lam, times[k], steps[k], states[k], select, control[k + 1], tol,
                corrector_iter, k + 1, max_iter,
            )  # fmt: skip
        except NumericalError as ex:
            raise NumericalError(
                f'Implicit step failed at node {k + 1}: {str(ex)}', residual=ex.residual, node=k + 1
            ) from ex

    return Trajectory(grid, states, forcing=selection + control), selection


def _strategy_chooser(strategy: SelectionStrategy, dim: int, rng: np.random.Generator) -> Chooser:
    """Return the selection rule of a sampling strategy, drawing its random state from ``rng``."""
    if strategy == SelectionStrategy.minimal_norm:
        zero = np.zeros(dim)
        return lambda k, body, prev, x_prev: body.project(zero)

    direction = rng.standard_normal(dim)
    direction /= max(np.linalg.norm(direction), 1e-300)
    if strategy == SelectionStrategy.extreme:
        return lambda k, body, prev, x_prev: body.extreme_point(direction)

    if strategy == SelectionStrategy.random_extreme:
        bias = rng.uniform()

        def choose(
            k: int, body: ConvexBody, prev: np.ndarray | None, x_prev: np.ndarray
        ) -> np.ndarray:
            # one draw per node, reused by the corrector
            if k not in signs:
                signs[k] = 1.0 if rng.uniform() < bias else -1.0
            return body.extreme_point(signs[k] * direction)

        signs = {}
        return choose

    if strategy == SelectionStrategy.project_previous:
        return lambda k, body, prev, x_prev: (
            body.extreme_point(direction) if prev is None else body.project(prev)
        )

    raise InputError(f"Strategy '{strategy}' is not a solution set sampling strategy.")


def sample_solution_set(
    A: MonotoneOp,
    F: MultiMap,
    xi: np.ndarray,
    lam: Any,
    grid: TimeGrid,
    strategy: str | SelectionStrategy = SelectionStrategy.random_extreme,
    count: int = 100,
    seed: int = 0,
    tol: float = _default_config['tol'],
    max_iter: int = _default_config['max_iter'],
    workers: int | None = None,
    progress: bool | dict = False,
) -> list[tuple[Trajectory, np.ndarray]]:
    """
    Sample solutions of ``-x' ∈ A(t, x) + F(t, x, lam)``, ``x(0) = xi``.

    Each sample follows a selection strategy:

    * ``minimal_norm``: the least norm point of each value set.
    * ``extreme``: the extreme point of each value set in a random direction fixed per sample.
    * ``random_extreme``: at each step, the extreme point in ``+v`` or ``-v`` for a random
      direction ``v``, choosing ``+v`` with a random probability fixed per sample.
    * ``project_previous``: the projection of the previous selection onto the current value set.

    :param A:
        Monotone operator.
    :param F:
        Multimap.
    :param xi:
        Initial state.
    :param lam:
        Parameter value.
    :param grid:
        Time grid.
    :param strategy:
        Selection strategy.
    :param count:
        Number of samples.
    :param seed:
        Random seed.  Sample ``i`` uses the generator seeded with ``[seed, i]``.
    :param tol:
        Resolvent and corrector tolerance.
    :param max_iter:
        Resolvent iteration cap.
    :param workers:
        Number of worker threads.  Defaults to :func:`~evoincl.utils.get_workers`.
    :param progress:
        Whether to display a progress bar, or a dictionary of custom ``tqdm`` arguments.

    :return:
        List of ``(trajectory, selection path)`` pairs in sample order.
    """
    try:
        strategy = SelectionStrategy(strategy)
    except ValueError:
        raise InputError(f"Unknown selection strategy: '{strategy}'.")
    if count < 1:
        raise InputError(f"'count' should be at least 1, not {count}.")

    def sample(index: int) -> tuple[Trajectory, np.ndarray]:
        rng = np.random.default_rng([seed, index])
        chooser = _strategy_chooser(strategy, A.dim, rng)
        return integrate_selection(A, F, xi, lam, grid, chooser, tol=tol, max_iter=max_iter)

    workers = workers or utils.get_workers()
    with utils.progress_bar(progress, total=count, desc='Samples') as bar:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            samples = []
            for result in executor.map(sample, range(count)):
                samples.append(result)
                bar.update()
    return samples


def _right_sum(values: np.ndarray, grid: TimeGrid) -> float:
    """Return the right endpoint rule sum ``sum_{k >= 1} dt_k values_k``."""
    return float(np.sum(grid.steps * values[1:]))


def beta_series(
    eta: np.ndarray, tau: np.ndarray, grid: TimeGrid, epsilon: float, n: int
) -> np.ndarray:
    """
    Return the successive approximation diagnostic ``beta_n(t_k)``::

        beta_n(t) = 2 int_0^t eta(s) (tau(t) - tau(s))^(n-1) / (n-1)! ds
                    + 2 b (sum_{j=0}^{n} epsilon / 2^(j+1)) tau(t)^(n-1) / (n-1)!

    evaluated from its closed form with trapezoid quadrature on the grid.

    :param eta:
        Node values of ``eta``.
    :param tau:
        Node values of ``tau``.
    :param grid:
        Time grid.
    :param epsilon:
        Approximation parameter.
    :param n:
        Series index (``n >= 1``).
    """
    if n < 1:
        raise InputError(f"'n' should be at least 1, not {n}.")
    fact = math.factorial(n - 1)
    diff = np.clip(tau[:, np.newaxis] - tau[np.newaxis, :], 0, None)
    kernel = np.tril(eta[np.newaxis, :] * diff ** (n - 1) / fact)
    integral = np.array(
        [integrate.trapezoid(kernel[k, : k + 1], grid.times[: k + 1]) for k in range(len(grid))]
    )
    eps_sum = epsilon * sum(1 / 2 ** (j + 1) for j in range(n + 1))
    return 2 * integral + 2 * grid.horizon * eps_sum * tau ** (n - 1) / fact


def filippov_construct(
    A: MonotoneOp,
    F: MultiMap,
    reference: Trajectory,
    reference_forcing: Forcing,
    lam: Any = None,
    epsilon: float = 1e-6,
    max_iter: int = _default_config['filippov_iter'],
    control_forcing: Forcing = None,
    tol: float = _default_config['tol'],
) -> FilippovResult:
    """
    Construct a solution of ``-x' ∈ A(t, x) + F(t, x, lam) + c(t)`` near a reference trajectory
    by Filippov successive approximation, with an explicit error certificate.

    Starting from ``gamma_0 = project(h - c, F(t, u))``, the construction repeats
    ``x_n = solve_forced(A, gamma_(n-1) + c, xi)`` and ``gamma_n = project(gamma_(n-1), F(t,
    x_n))`` until ``||gamma_n - gamma_(n-1)||_1 <= epsilon b / 2^n``.  The certificate bounds the
    deviation from the reference by ``B(t) = b epsilon e^tau(t) + int_0^t p(s) e^(tau(t) -
    tau(s)) ds``, where ``p(t) = d(h(t) - c(t), F(t, u(t)))`` is the reference defect and ``tau``
    integrates the Lipschitz modulus of ``F``.

    :param A:
        Monotone operator.
    :param F:
        Multimap.
    :param reference:
        Reference trajectory ``u``, the solution of ``-u' ∈ A(t, u) + h(t)``.
    :param reference_forcing:
        Reference forcing ``h`` (an array with one row per grid node, or a function of time).
    :param lam:
        Parameter value.
    :param epsilon:
        Positive approximation parameter.
    :param max_iter:
        Iteration cap.
    :param control_forcing:
        Additional single valued forcing ``c`` (e.g. a control term).
    :param tol:
        Resolvent tolerance.

    :return:
        Constructed trajectory, its selection path and the certificate.
    """
    if not epsilon > 0:
        raise InputError(f"'epsilon' should be positive, not {epsilon}.")
    if max_iter < 1:
        raise InputError(f"'max_iter' should be at least 1, not {max_iter}.")
    grid = reference.grid
    xi = reference.xi
    h = _forcing_array(reference_forcing, grid, A.dim, 'reference_forcing')
    c = _forcing_array(control_forcing, grid, A.dim, 'control_forcing')
    times, b = grid.times, grid.horizon

    def project_all(values: np.ndarray, states: np.ndarray) -> np.ndarray:
        return np.array([F(t, x, lam).project(v) for t, x, v in zip(times, states, values)])

    defect = np.array(
        [F(t, u, lam).distance(v) for t, u, v in zip(times, reference.states, h - c)]
    )
    gamma = project_all(h - c, reference.states)
    gaps, converged, n = [], False, 0
    while n < max_iter:
        n += 1
        x = solve_forced(A, gamma + c, xi, grid, tol=tol)
        gamma_next = project_all(gamma, x.states)
        diffs = np.linalg.norm(gamma_next - gamma, axis=1)
        gaps.append(_right_sum(diffs, grid))
        gamma_prev, gamma = gamma, gamma_next
        logger.debug(f'Filippov iteration {n}: L1 gap {gaps[-1]:.3e}')
        if not converged and gaps[-1] <= epsilon * b / 2**n:
            converged = True
        # continue to the node wise solver tolerance so the selection is taken at the state
        if converged and (np.max(diffs) <= tol or (len(gaps) > 1 and gaps[-1] >= gaps[-2])):
            break

    if not converged:
        ratio = gaps[-1] / gaps[-2] if len(gaps) > 1 and gaps[-2] > 0 else None
        raise ConvergenceError(
            f'Filippov construction did not converge in {max_iter} iterations (last gap '
            f'{gaps[-1]:.3e}).',
            ratio=ratio,
            residual=gaps[-1],
        )

    # x was forced by gamma_prev, which is within the node wise gap of F(t, x)
    trajectory, selection = x, gamma_prev
    k_vals = np.array([F.k(t) for t in times])
    tau = integrate.cumulative_trapezoid(k_vals, times, initial=0)
    weighted = np.concatenate(([0.0], defect[1:] * grid.steps * np.exp(-tau[1:])))
    bound = b * epsilon * np.exp(tau) + np.exp(tau) * np.cumsum(weighted)

    # implicit scheme Gronwall factors prod_{i=j}^{k} (1 - dt_i k_i)^-1
    contraction = grid.steps * k_vals[1:]
    allowance = np.full(len(grid), grid.n_steps * tol)
    if np.any(contraction >= 1):
        warnings.warn(
            'The discretisation allowance is undefined for k(t) dt >= 1, the certificate uses '
            'the continuous bound only.',
            category=EvoinclWarning,
        )
    else:
        log_factor = np.concatenate(([0.0], np.cumsum(-np.log1p(-contraction))))
        disc_weighted = np.concatenate(
            ([0.0], defect[1:] * grid.steps * np.exp(-log_factor[:-1]))
        )
        disc_bound = b * epsilon * np.exp(log_factor) + np.exp(log_factor) * np.cumsum(
            disc_weighted
        )
        allowance += np.maximum(disc_bound - bound, 0.0)

    deviation = np.linalg.norm(trajectory.states - reference.states, axis=1)
    passed = deviation <= bound + allowance

    x0 = solve_forced(A, c, xi, grid, tol=tol)
    eta = np.array([A.a2(t) for t in times]) + A.c2 * np.linalg.norm(x0.states, axis=1)
    eta_norm = _right_sum(eta, grid)
    envelope = [
        tau[-1] ** i / math.factorial(i) * (eta_norm + 2 * b * epsilon)
        for i in range(1, len(gaps) + 1)
    ]
    certificate = FilippovCertificate(
        epsilon=float(epsilon),
        times=times.copy(),
        tau=tau,
        defect=defect,
        bound=bound,
        deviation=deviation,
        allowance=allowance,
        passed=passed,
        gaps=gaps,
        envelope=envelope,
    )
    logger.debug(
        f'Filippov construction: {len(gaps)} iterations, max deviation {deviation.max():.3e}, '
        f'passed: {certificate.all_passed}'
    )
    return FilippovResult(trajectory, selection, certificate)


def trajectory_norms(x: Trajectory, p: float = 2.0) -> tuple[float, float]:
    """
    Return the ``L^p(0, b)`` norm (trapezoid quadrature) and sup norm of a trajectory.

    :param x:
        Trajectory.
    :param p:
        Exponent (``p >= 1``).
    """
    if not p >= 1:
        raise InputError(f"'p' should be at least 1, not {p}.")
    norms = np.linalg.norm(x.states, axis=1)
    lp_norm = integrate.trapezoid(norms**p, x.grid.times) ** (1 / p)
    return float(lp_norm), float(norms.max())


def velocity_norm(x: Trajectory, p: float = 2.0) -> float:
    """Return the discrete ``L^p'(0, b)`` norm of the nodal velocities, ``p' = p / (p - 1)``."""
    if not p > 1:
        raise InputError(f"'p' should be greater than 1, not {p}.")
    q = p / (p - 1)
    norms = np.linalg.norm(x.velocities, axis=1)
    return float(np.sum(x.grid.steps * norms**q) ** (1 / q))


def contraction_check(
    A: MonotoneOp,
    xi1: np.ndarray,
    xi2: np.ndarray,
    f: Forcing,
    grid: TimeGrid,
    tol: float = _default_config['tol'],
) -> ContractionReport:
    """
    Check that the flow map of ``-x' ∈ A(t, x) + f`` is nonexpansive: the sup norm gap of the
    solutions from ``xi1`` and ``xi2`` is at most ``|xi1 - xi2| + 10 tol``.

    :param A:
        Monotone operator.
    :param xi1:
        First initial state.
    :param xi2:
        Second initial state.
    :param f:
        Shared forcing.
    :param grid:
        Time grid.
    :param tol:
        Resolvent tolerance.
    """
    x1 = solve_forced(A, f, xi1, grid, tol=tol)
    x2 = solve_forced(A, f, xi2, grid, tol=tol)
    gap = float(np.linalg.norm(x1.states - x2.states, axis=1).max())
    initial_gap = float(np.linalg.norm(x1.xi - x2.xi))
    bound = initial_gap + 10 * tol
    return ContractionReport(
        gap=gap, initial_gap=initial_gap, bound=bound, passed=gap <= bound, trajectories=(x1, x2)
    )
