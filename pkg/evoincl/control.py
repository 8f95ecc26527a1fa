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

"""Optimal control of evolution inclusions: admissible pairs, costs, the direct method, value
function and optimal pair sampling.
"""
from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence, Union

import numpy as np
from scipy import integrate

from evoincl import utils
from evoincl.convex_sets import Ball, Box, ConvexBody, Point, minkowski_distance
from evoincl.enums import Verdict
from evoincl.errors import InputError
from evoincl.inclusion import (
    MultiMap,
    TimeGrid,
    Trajectory,
    integrate_selection,
    step_implicit,
)
from evoincl.operators import HypothesisReport, MonotoneOp, _margin_tol
from evoincl.utils import as_vector

logger = logging.getLogger(__name__)

Coefficient = Union[float, Sequence[float], Callable[[float, Any], Any]]
"""A constant, or a function ``fn(t, lam)`` of time and parameter."""

_default_config = dict(budget=1000, starts=8, block_repeats=3, fd_step=1e-5)
"""Default direct method configuration."""


class ParameterSpace(ABC):
    """Base class for compact metric parameter spaces."""

    @abstractmethod
    def distance(self, lam1: Any, lam2: Any) -> float:
        """Return the distance between two parameters."""
        pass

    @abstractmethod
    def contains(self, lam: Any) -> bool:
        """Whether ``lam`` is in the space."""
        pass

    @abstractmethod
    def to_dict(self) -> dict:
        """Return a JSON serialisable dictionary representation."""
        pass

    def validate(self, lam: Any):
        """Raise an :class:`~evoincl.errors.InputError` if ``lam`` is not in the space."""
        if not self.contains(lam):
            raise InputError(f'Parameter {lam} is not in the parameter space {self.to_dict()}.')


class IntervalSpace(ParameterSpace):
    """
    Compact interval ``[lo, hi]`` with the absolute value metric.

    :param lo:
        Lower end.
    :param hi:
        Upper end.
    """

    def __init__(self, lo: float = 0.0, hi: float = 1.0):
        if not lo <= hi:
            raise InputError(f"Interval 'lo' should not exceed 'hi': [{lo}, {hi}].")
        self.lo, self.hi = float(lo), float(hi)

    def distance(self, lam1: float, lam2: float) -> float:
        return abs(float(lam1) - float(lam2))

    def contains(self, lam: Any) -> bool:
        return lam is not None and self.lo <= float(lam) <= self.hi

    def to_dict(self) -> dict:
        return dict(interval=[self.lo, self.hi])


class FiniteSpace(ParameterSpace):
    """
    Finite set of numeric parameters, with an optional distance table.

    :param values:
        Parameter values.
    :param distances:
        Symmetric distance table, with zero diagonal.  Defaults to absolute differences.
    """

    def __init__(self, values: Sequence[float], distances: Sequence[Sequence[float]] = None):
        self.values = [float(v) for v in values]
        if len(self.values) == 0:
            raise InputError("Parameter 'values' should not be empty.")
        if distances is not None:
            distances = np.asarray(distances, dtype=float)
            n = len(self.values)
            if distances.shape != (n, n):
                raise InputError(f"Parameter 'distances' should have shape {(n, n)}.")
            if not np.allclose(distances, distances.T) or np.any(np.diag(distances) != 0):
                raise InputError("Parameter 'distances' should be symmetric with zero diagonal.")
        self.distances = distances

    def _index(self, lam: Any) -> int:
        try:
            return self.values.index(float(lam))
        except (TypeError, ValueError):
            raise InputError(f'Parameter {lam} is not one of {self.values}.')

    def distance(self, lam1: float, lam2: float) -> float:
        if self.distances is None:
            return abs(float(lam1) - float(lam2))
        return float(self.distances[self._index(lam1), self._index(lam2)])

    def contains(self, lam: Any) -> bool:
        return lam is not None and float(lam) in self.values

    def to_dict(self) -> dict:
        space_dict = dict(values=self.values)
        if self.distances is not None:
            space_dict['distances'] = self.distances.tolist()
        return space_dict


@dataclass(frozen=True)
class StateCost:
    """Running state cost ``L(t, x, lam) = (weight + lam * lambda_weight) |x - target|^2``."""

    weight: float = 0.0
    target: float | Sequence[float] = 0.0
    lambda_weight: float = 0.0

    def __call__(self, t: float, x: np.ndarray, lam: Any = None) -> float:
        lam = 0.0 if lam is None else float(lam)
        weight = self.weight + lam * self.lambda_weight
        if weight == 0:
            return 0.0
        return weight * float(np.sum((x - np.asarray(self.target, dtype=float)) ** 2))


@dataclass(frozen=True)
class ControlCost:
    """Running control cost ``H(t, u, lam) = weight |u - target|^2`` (convex for
    ``weight >= 0``).
    """

    weight: float = 0.0
    target: float | Sequence[float] = 0.0

    def __call__(self, t: float, u: np.ndarray, lam: Any = None) -> float:
        if self.weight == 0:
            return 0.0
        return self.weight * float(np.sum((u - np.asarray(self.target, dtype=float)) ** 2))


@dataclass(frozen=True)
class TerminalCost:
    """
    Terminal cost ``psi(xi, x_b, lam) = <linear, x_b> + weight |x_b - target|^2 + xi_weight |x_b -
    xi|^2``.
    """

    linear: float | Sequence[float] = 0.0
    weight: float = 0.0
    target: float | Sequence[float] = 0.0
    xi_weight: float = 0.0

    def __call__(self, xi: np.ndarray, x_b: np.ndarray, lam: Any = None) -> float:
        value = float(np.sum(np.asarray(self.linear, dtype=float) * x_b))
        if self.weight != 0:
            value += self.weight * float(np.sum((x_b - np.asarray(self.target, dtype=float)) ** 2))
        if self.xi_weight != 0:
            value += self.xi_weight * float(np.sum((x_b - xi) ** 2))
        return value


@dataclass(frozen=True)
class AdmissibilityReport:
    """Per node residuals of a state-control pair."""

    inclusion_residual: np.ndarray
    """Distance of the discrete velocity to the inclusion's right hand side (initial state gap at
    node 0)."""
    constraint_residual: np.ndarray
    """Control constraint violation ``max(0, |u_k| - r(t_k))``."""
    tol: float
    """Residual tolerance."""

    @property
    def passed(self) -> bool:
        """Whether every residual is within tolerance."""
        return bool(
            np.all(self.inclusion_residual <= self.tol)
            and np.all(self.constraint_residual <= self.tol)
        )


@dataclass(frozen=True, eq=False)
class AdmissiblePair:
    """State-control pair on a time grid."""

    state: Trajectory
    """State trajectory."""
    control: np.ndarray
    """Control with one row per grid node."""
    selection: np.ndarray | None = None
    """Selection of ``F`` that drives the state."""
    report: AdmissibilityReport | None = None
    """Admissibility check result."""
    cost: float | None = None
    """Cost of the pair."""


@dataclass(frozen=True)
class OptimizationResult:
    """Direct method result."""

    pair: AdmissiblePair
    """Best pair."""
    value: float
    """Best cost, the value estimate."""
    converged: bool
    """Whether the best start converged within its budget."""
    evaluations: int
    """Total objective evaluations over all starts."""
    candidates: list[AdmissiblePair] = field(default_factory=list, repr=False)
    """Best pair of each start, in start order."""


@dataclass(frozen=True)
class OptimalSetSample:
    """Sample of near optimal pairs."""

    pairs: list[AdmissiblePair]
    """Retained pairs with their admissibility reports."""
    costs: list[float]
    """Costs of the retained pairs."""
    value: float
    """Best cost over all runs."""
    spread: float
    """Largest retained cost less the best cost."""


def _as_coefficient(value: Coefficient, name: str) -> Callable[[float, Any], Any]:
    """Return ``value`` as a function of time and parameter."""
    if callable(value):
        return value
    try:
        const = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"'{name}' should be a number, vector or function of (t, lambda).")
    return lambda t, lam: const


class ControlProblem:
    """
    Parametric optimal control problem: minimise ``J = int L(t, x, lam) + int H(t, u, lam) +
    psi(xi, x(b), lam)`` over pairs with ``-x' ∈ A_lam(t, x) + F(t, x, lam) + g(t, lam) u``,
    ``x(0) = xi`` and ``|u(t)| <= r(t, lam)``.

    :param operator:
        Monotone operator, or a function ``operator(lam) -> MonotoneOp``.
    :param multimap:
        Multimap ``F``.
    :param grid:
        Time grid.
    :param space:
        Parameter space.
    :param multiplier:
        Control multiplier ``g`` (scalar or per component), or a function of ``(t, lam)``.
    :param multiplier_bound:
        Declared bound ``M`` with ``|g| <= M``.  Defaults to no bound.
    :param radius:
        Control constraint radius ``r``, or a function of ``(t, lam)``.
    :param state_cost:
        Running state cost ``L(t, x, lam)``.
    :param control_cost:
        Running control cost ``H(t, u, lam)``.
    :param terminal_cost:
        Terminal cost ``psi(xi, x_b, lam)``.
    :param resolvent_tol:
        Resolvent tolerance.
    """

    def __init__(
        self,
        operator: MonotoneOp | Callable[[Any], MonotoneOp],
        multimap: MultiMap,
        grid: TimeGrid,
        space: ParameterSpace,
        multiplier: Coefficient = 1.0,
        multiplier_bound: float | None = None,
        radius: Coefficient = 1.0,
        state_cost: Callable[[float, np.ndarray, Any], float] = StateCost(),
        control_cost: Callable[[float, np.ndarray, Any], float] = ControlCost(),
        terminal_cost: Callable[[np.ndarray, np.ndarray, Any], float] = TerminalCost(),
        resolvent_tol: float = 1e-10,
    ):
        self._operator = operator
        self.multimap = multimap
        self.grid = grid
        self.space = space
        self._multiplier = _as_coefficient(multiplier, 'multiplier')
        self.multiplier_bound = multiplier_bound
        self._radius = _as_coefficient(radius, 'radius')
        self.state_cost = state_cost
        self.control_cost = control_cost
        self.terminal_cost = terminal_cost
        if not resolvent_tol > 0:
            raise InputError(f"'resolvent_tol' should be positive, not {resolvent_tol}.")
        self.resolvent_tol = float(resolvent_tol)

    @property
    def dim(self) -> int:
        """State and control dimension."""
        return self.multimap.dim

    def operator(self, lam: Any = None) -> MonotoneOp:
        """Return the operator ``A_lam``."""
        op = self._operator if isinstance(self._operator, MonotoneOp) else self._operator(lam)
        if op.dim != self.dim:
            raise InputError(f'Operator dimension {op.dim} differs from the multimap {self.dim}.')
        return op

    def multiplier(self, t: float, lam: Any = None) -> np.ndarray:
        """Return the control multiplier ``g(t, lam)`` as a vector."""
        return np.broadcast_to(np.asarray(self._multiplier(t, lam), dtype=float), (self.dim,))

    def radius(self, t: float, lam: Any = None) -> float:
        """Return the control constraint radius ``r(t, lam)``."""
        return float(self._radius(t, lam))

    def control_set(self, t: float, lam: Any = None) -> ConvexBody:
        """Return the control constraint set ``U(t, lam)``."""
        return Ball(np.zeros(self.dim), max(self.radius(t, lam), 0.0))

    def control_forcing(self, control: np.ndarray, lam: Any = None) -> np.ndarray:
        """Return the state forcing ``g(t_k, lam) u_k`` of a control."""
        return np.array([self.multiplier(t, lam) * u for t, u in zip(self.grid.times, control)])

    def project_control(self, control: np.ndarray, lam: Any = None) -> np.ndarray:
        """Project each control node onto ``U(t_k, lam)``."""
        control = self._validate_control(control)
        radii = np.array([max(self.radius(t, lam), 0.0) for t in self.grid.times])
        if self.dim == 1:
            return np.clip(control, -radii[:, np.newaxis], radii[:, np.newaxis])
        norms = np.linalg.norm(control, axis=1)
        with np.errstate(divide='ignore', invalid='ignore'):
            scales = np.where(norms > radii, radii / norms, 1.0)
        return control * scales[:, np.newaxis]

    def _validate_control(self, control: np.ndarray) -> np.ndarray:
        control = np.asarray(control, dtype=float)
        if control.ndim == 1 and self.dim == 1:
            control = control[:, np.newaxis]
        shape = (len(self.grid), self.dim)
        if control.shape != shape:
            raise InputError(f"'control' should have shape {shape}, not {control.shape}.")
        return control

    def check(
        self, lambdas: Sequence[Any] = (None,), sample_budget: int = 200, seed: int = 0
    ) -> HypothesisReport:
        """
        Check the radius, multiplier bound and control cost convexity hypotheses on random
        samples.

        :param lambdas:
            Parameter values to sample from.
        :param sample_budget:
            Number of samples.
        :param seed:
            Random seed.

        :return:
            Hypothesis report with ``radius``, ``multiplier`` and ``control_convexity`` margins.
        """
        rng = np.random.default_rng(seed)
        margins = dict(radius=np.inf, multiplier=np.inf, control_convexity=np.inf)
        horizon = self.grid.horizon
        for _ in range(sample_budget):
            t = rng.uniform(0, horizon)
            lam = lambdas[rng.integers(len(lambdas))]
            u, v = rng.standard_normal((2, self.dim)) * 10 ** rng.uniform(-2, 1)
            margins['radius'] = min(margins['radius'], self.radius(t, lam))
            if self.multiplier_bound is not None:
                g_norm = float(np.abs(self.multiplier(t, lam)).max())
                margins['multiplier'] = min(margins['multiplier'], self.multiplier_bound - g_norm)
            mid = self.control_cost(t, (u + v) / 2, lam)
            avg = (self.control_cost(t, u, lam) + self.control_cost(t, v, lam)) / 2
            # midpoint convexity to 1e-9
            margins['control_convexity'] = min(margins['control_convexity'], avg - mid + 1e-9)

        failed = [k for k, v in margins.items() if v < -_margin_tol]
        return HypothesisReport(
            verdict=Verdict.FAIL if failed else Verdict.PASS,
            margins=margins,
            samples=sample_budget,
            messages=[f"'{k}' margin {margins[k]:.3e} is negative." for k in failed],
        )


def _check_grid(prob: ControlProblem, pair: AdmissiblePair):
    if pair.state.grid != prob.grid:
        raise InputError("The pair's grid does not match the problem grid.")


def evaluate_cost(prob: ControlProblem, pair: AdmissiblePair, xi: np.ndarray, lam: Any) -> float:
    """
    Return the cost ``J`` of a pair: trapezoid quadrature of the running costs plus the terminal
    cost.

    :param prob:
        Control problem.
    :param pair:
        Pair on the problem grid.
    :param xi:
        Initial state.
    :param lam:
        Parameter value.
    """
    _check_grid(prob, pair)
    xi = as_vector(xi, prob.dim, 'xi')
    times = prob.grid.times
    control = prob._validate_control(pair.control)
    state_vals = [prob.state_cost(t, x, lam) for t, x in zip(times, pair.state.states)]
    control_vals = [prob.control_cost(t, u, lam) for t, u in zip(times, control)]
    running = integrate.trapezoid(np.add(state_vals, control_vals), times)
    return float(running + prob.terminal_cost(xi, pair.state.final, lam))


def check_admissible(
    prob: ControlProblem,
    pair: AdmissiblePair,
    xi: np.ndarray,
    lam: Any,
    tol: float | None = None,
) -> AdmissibilityReport:
    """
    Return per node residuals of a pair: the distance of ``(x_k - x_(k+1)) / dt - g u_(k+1)`` to
    ``A(t_(k+1), x_(k+1)) + F(t_(k+1), x_(k+1), lam)`` and the constraint violation ``max(0,
    |u_k| - r(t_k, lam))``.

    :param prob:
        Control problem.
    :param pair:
        Pair on the problem grid.
    :param xi:
        Initial state.
    :param lam:
        Parameter value.
    :param tol:
        Residual tolerance.  Defaults to 10 times the problem's resolvent tolerance.

    :return:
        Residual report.
    """
    _check_grid(prob, pair)
    xi = as_vector(xi, prob.dim, 'xi')
    tol = 10 * prob.resolvent_tol if tol is None else tol
    A = prob.operator(lam)
    times, steps = prob.grid.times, prob.grid.steps
    states = pair.state.states
    control = prob._validate_control(pair.control)

    inclusion = np.empty(len(times))
    inclusion[0] = np.linalg.norm(states[0] - xi)
    for k in range(prob.grid.n_steps):
        t = times[k + 1]
        velocity = (states[k] - states[k + 1]) / steps[k] - prob.multiplier(t, lam) * control[k + 1]
        inclusion[k + 1] = minkowski_distance(
            velocity, A.apply(t, states[k + 1]), prob.multimap(t, states[k + 1], lam)
        )
    constraint = np.array(
        [max(0.0, np.linalg.norm(u) - prob.radius(t, lam)) for t, u in zip(times, control)]
    )
    return AdmissibilityReport(
        inclusion_residual=inclusion, constraint_residual=constraint, tol=float(tol)
    )


def _greedy_candidates(body: ConvexBody, prev: np.ndarray | None) -> list[np.ndarray]:
    """Return candidate selections of a value set, in tie break order."""
    if isinstance(body, Point):
        return [body.x]
    cands = [] if prev is None else [body.project(prev)]
    if isinstance(body, Box):
        return cands + [body.center, body.lo, body.hi]
    offset = body.radius / np.sqrt(body.dim)
    return [body.center] + cands + [body.center + offset, body.center - offset]


def simulate(
    prob: ControlProblem, control: np.ndarray, xi: np.ndarray, lam: Any
) -> AdmissiblePair:
    """
    Return the pair driven by ``control``, with the selection of ``F`` chosen greedily: at each
    step the candidate (projection of the previous selection, centre, corners) minimising ``dt
    L(t, x_(k+1)) + psi(xi, x_(k+1))`` is taken, ties going to the first candidate.

    :param prob:
        Control problem.
    :param control:
        Control with one row per grid node.
    :param xi:
        Initial state.
    :param lam:
        Parameter value.

    :return:
        Pair with its selection and cost (the admissibility report is not computed).
    """
    xi = as_vector(xi, prob.dim, 'xi')
    control = prob._validate_control(control)
    A = prob.operator(lam)
    forcing = prob.control_forcing(control, lam)
    times, steps, tol = prob.grid.times, prob.grid.steps, prob.resolvent_tol

    def choose(k: int, body: ConvexBody, prev: np.ndarray | None, x_prev: np.ndarray):
        cands = _greedy_candidates(body, prev)
        if len(cands) == 1 or k == 0:
            return cands[0]
        best, best_cost = None, np.inf
        for cand in cands:
            x_next = step_implicit(A, times[k - 1], steps[k - 1], x_prev, cand + forcing[k], tol)
            cost = steps[k - 1] * prob.state_cost(times[k], x_next, lam) + prob.terminal_cost(
                xi, x_next, lam
            )
            if cost < best_cost:
                best, best_cost = cand, cost
        return best

    state, selection = integrate_selection(
        A, prob.multimap, xi, lam, prob.grid, choose, control_forcing=forcing, tol=tol
    )
    pair = AdmissiblePair(state=state, control=control, selection=selection)
    return AdmissiblePair(
        state=state, control=control, selection=selection, cost=evaluate_cost(prob, pair, xi, lam)
    )


class _BudgetExhausted(Exception):
    """Raised internally when a start has used its objective evaluation budget."""


class _DirectSearch:
    """
    Projected block coordinate descent over per node controls.

    Directions are block indicators of one control component over a hierarchy of time blocks:
    all nodes, then halves, quarters and so on down to single nodes.  Each direction takes a
    parabolic step from central finite differences when the curvature is positive, and a
    doubling / halving step otherwise.
    """

    def __init__(
        self,
        objective: Callable[[np.ndarray], AdmissiblePair],
        project: Callable[[np.ndarray], np.ndarray],
        budget: int,
        step_scale: float,
        fd_step: float = _default_config['fd_step'],
        block_repeats: int = _default_config['block_repeats'],
    ):
        self._objective = objective
        self._project = project
        self._budget = budget
        self._step_scale = step_scale
        self._fd_step = fd_step
        self._block_repeats = block_repeats
        self.evaluations = 0
        self.best: AdmissiblePair | None = None

    def evaluate(self, control: np.ndarray) -> AdmissiblePair:
        if self.evaluations >= self._budget:
            raise _BudgetExhausted()
        self.evaluations += 1
        pair = self._objective(control)
        if self.best is None or pair.cost < self.best.cost:
            self.best = pair
        return pair

    def _try(self, pair: AdmissiblePair, direction: np.ndarray, step: float) -> AdmissiblePair:
        control = self._project(pair.control + step * direction)
        if np.array_equal(control, pair.control):
            return pair
        return self.evaluate(control)

    def line(self, pair: AdmissiblePair, direction: np.ndarray) -> AdmissiblePair:
        """Return the best pair found along ``direction`` from ``pair``."""
        delta = self._fd_step * (1 + np.linalg.norm(pair.control))
        fwd = self._try(pair, direction, delta)
        bwd = self._try(pair, direction, -delta)
        if fwd is pair and bwd is pair:
            return pair

        j0, jp, jm = pair.cost, fwd.cost, bwd.cost
        if fwd is not pair and bwd is not pair:
            slope = (jp - jm) / (2 * delta)
            curv = (jp - 2 * j0 + jm) / delta**2
        else:
            slope = (jp - j0) / delta if fwd is not pair else (j0 - jm) / delta
            curv = 0.0
        best = min((pair, fwd, bwd), key=lambda p: p.cost)

        if curv > 0:
            step = -slope / curv
            for _ in range(10):
                trial = self._try(pair, direction, step)
                if trial.cost < best.cost:
                    return trial
                step /= 2
            return best

        if self._step_scale <= 0:
            return best
        signs = [-1.0] if slope > 0 else [1.0] if slope < 0 else [1.0, -1.0]
        for sign in signs:
            step, improved = sign * self._step_scale, None
            for _ in range(10):
                trial = self._try(pair, direction, step)
                if trial.cost < best.cost:
                    best, improved = trial, True
                    step *= 2
                elif improved:
                    break
                else:
                    step /= 2
            if improved:
                break
        return best

    def run(self, control: np.ndarray) -> tuple[AdmissiblePair, bool]:
        """Return the best pair from the start ``control``, and whether the search converged."""
        try:
            pair = self.evaluate(self._project(control))
            n_nodes, dim = pair.control.shape
            n_levels = int(np.ceil(np.log2(n_nodes))) + 1
            idle, level = 0, 0
            while idle < 2:
                improved = False
                for block in np.array_split(np.arange(n_nodes), min(2**level, n_nodes)):
                    for comp in range(dim):
                        direction = np.zeros((n_nodes, dim))
                        direction[block, comp] = 1.0
                        for _ in range(self._block_repeats):
                            trial = self.line(pair, direction)
                            if trial.cost >= pair.cost:
                                break
                            # round-off sized gains do not hold off convergence
                            if trial.cost < pair.cost - 1e-12 * (1 + abs(pair.cost)):
                                improved = True
                            pair = trial
                logger.debug(
                    f'Direct search level {level}: cost {pair.cost:.10g}, '
                    f'{self.evaluations} evaluations'
                )
                idle = 0 if improved else idle + 1
                level = (level + 1) % n_levels
            return self.best, True
        except _BudgetExhausted:
            return self.best, False


def _tie_key(pair: AdmissiblePair) -> tuple:
    return (pair.cost, tuple(pair.control.ravel()))


def _uniform_control(prob: ControlProblem, lam: Any, rng: np.random.Generator) -> np.ndarray:
    """Return a control drawn uniformly from ``U(t_k, lam)`` at each node."""
    n_nodes, dim = len(prob.grid), prob.dim
    dirs = rng.standard_normal((n_nodes, dim))
    dirs /= np.maximum(np.linalg.norm(dirs, axis=1, keepdims=True), 1e-300)
    radii = np.array([max(prob.radius(t, lam), 0.0) for t in prob.grid.times])
    scales = radii * rng.uniform(size=n_nodes) ** (1 / dim)
    return dirs * scales[:, np.newaxis]


def optimize(
    prob: ControlProblem,
    xi: np.ndarray,
    lam: Any,
    budget: int = _default_config['budget'],
    seed: int = 0,
    starts: int = _default_config['starts'],
    workers: int | None = None,
    progress: bool | dict = False,
) -> OptimizationResult:
    """
    Minimise the cost by the direct method over per node controls.

    Each start runs a projected block coordinate descent (see :class:`_DirectSearch`) whose
    objective is the cost of :func:`simulate`.  Start 0 is the zero control, and start ``s > 0``
    draws a control uniformly from the constraint set with the generator seeded by ``[seed, s]``.
    The best start wins, ties going to the lexicographically smallest control.

    :param prob:
        Control problem.
    :param xi:
        Initial state.
    :param lam:
        Parameter value.
    :param budget:
        Objective evaluations per start.
    :param seed:
        Random seed.
    :param starts:
        Number of starts.
    :param workers:
        Number of worker threads.  Defaults to :func:`~evoincl.utils.get_workers`.
    :param progress:
        Whether to display a progress bar, or a dictionary of custom ``tqdm`` arguments.

    :return:
        Optimisation result.  The best pair carries its admissibility report.
    """
    if budget < 1:
        raise InputError(f"'budget' should be at least 1, not {budget}.")
    if starts < 1:
        raise InputError(f"'starts' should be at least 1, not {starts}.")
    prob.space.validate(lam)
    xi = as_vector(xi, prob.dim, 'xi')
    step_scale = max(max(prob.radius(t, lam), 0.0) for t in prob.grid.times)

    def run_start(index: int) -> tuple[AdmissiblePair, bool, int]:
        if index == 0:
            control = np.zeros((len(prob.grid), prob.dim))
        else:
            control = _uniform_control(prob, lam, np.random.default_rng([seed, index]))
        search = _DirectSearch(
            lambda u: simulate(prob, u, xi, lam),
            lambda u: prob.project_control(u, lam),
            budget,
            step_scale,
        )
        pair, converged = search.run(control)
        return pair, converged, search.evaluations

    workers = workers or utils.get_workers()
    results = []
    with utils.progress_bar(progress, total=starts, desc='Starts') as bar:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            for result in executor.map(run_start, range(starts)):
                results.append(result)
                bar.update()

    best_index = min(range(starts), key=lambda i: _tie_key(results[i][0]))
    best, converged, _ = results[best_index]
    report = check_admissible(prob, best, xi, lam)
    pair = AdmissiblePair(
        state=best.state,
        control=best.control,
        selection=best.selection,
        report=report,
        cost=best.cost,
    )
    evaluations = sum(r[2] for r in results)
    logger.debug(
        f'Direct method: value {pair.cost:.10g}, converged: {converged}, '
        f'{evaluations} evaluations'
    )
    return OptimizationResult(
        pair=pair,
        value=pair.cost,
        converged=converged,
        evaluations=evaluations,
        candidates=[r[0] for r in results],
    )


def value(
    prob: ControlProblem,
    xi: np.ndarray,
    lam: Any,
    budget: int = _default_config['budget'],
    seed: int = 0,
    **kwargs,
) -> float:
    """Return the value estimate ``m(xi, lam)`` from :func:`optimize`."""
    return optimize(prob, xi, lam, budget=budget, seed=seed, **kwargs).value


def optimal_set_sample(
    prob: ControlProblem,
    xi: np.ndarray,
    lam: Any,
    budget: int = _default_config['budget'],
    count: int = 4,
    gap: float = 1e-3,
    seed: int = 0,
    **kwargs,
) -> OptimalSetSample:
    """
    Sample near optimal pairs from ``count`` independent multi-start optimisations, retaining the
    start results with cost at most ``m + gap``, where ``m`` is the best cost over all runs.  Each
    retained pair carries its admissibility report.

    :param prob:
        Control problem.
    :param xi:
        Initial state.
    :param lam:
        Parameter value.
    :param budget:
        Objective evaluations per start.
    :param count:
        Number of optimisation runs.
    :param gap:
        Positive retention gap.
    :param seed:
        Random seed.  Run ``i`` is seeded from ``[seed, i]``.
    :param kwargs:
        Additional arguments for :func:`optimize`.

    :return:
        Optimal set sample.
    """
    if not gap > 0:
        raise InputError(f"'gap' should be positive, not {gap}.")
    if count < 1:
        raise InputError(f"'count' should be at least 1, not {count}.")
    candidates = []
    for index in range(count):
        run_seed = int(np.random.SeedSequence([seed, index]).generate_state(1)[0])
        result = optimize(prob, xi, lam, budget=budget, seed=run_seed, **kwargs)
        candidates.extend(result.candidates)

    best = min(pair.cost for pair in candidates)
    pairs = [
        AdmissiblePair(
            state=pair.state,
            control=pair.control,
            selection=pair.selection,
            report=check_admissible(prob, pair, xi, lam),
            cost=pair.cost,
        )
        for pair in candidates
        if pair.cost <= best + gap
    ]
    costs = [pair.cost for pair in pairs]
    return OptimalSetSample(pairs=pairs, costs=costs, value=best, spread=max(costs) - best)
