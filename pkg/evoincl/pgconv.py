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

"""Oscillating coefficient families for the weighted p-Laplacian, homogenized limits and the
weak convergence experiment for their parabolic solution maps.
"""
from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from evoincl import utils
from evoincl.enums import Sampling, Verdict
from evoincl.errors import EvoinclWarning, InputError, NumericalError
from evoincl.inclusion import Forcing, TimeGrid, Trajectory, _forcing_array, solve_forced
from evoincl.operators import WeightedPLaplacian

logger = logging.getLogger(__name__)

_default_config = dict(
    quad_points=65536, cell_points=64, modes=5, windows=3, rtol_pg=5e-2, trend_tol=1e-12
)
"""Default quadrature sizes, test functional dictionary size and report tolerances."""


def _constant(z: np.ndarray, value: float = 1.0) -> np.ndarray:
    return np.full_like(z, value, dtype=float)


def _two_phase(
    z: np.ndarray, low: float = 1.0, high: float = 4.0, fraction: float = 0.5
) -> np.ndarray:
    return np.where(np.mod(z, 1.0) < fraction, low, high)


def _sinusoidal(z: np.ndarray, mean: float = 2.0, amplitude: float = 1.0) -> np.ndarray:
    return mean + amplitude * np.sin(2 * np.pi * z)


_generators = dict(constant=_constant, two_phase=_two_phase, sinusoidal=_sinusoidal)


def _generator_bounds(name: str, params: dict) -> tuple[float, float]:
    if name == 'constant':
        value = params.get('value', 1.0)
        return value, value
    elif name == 'two_phase':
        low, high = params.get('low', 1.0), params.get('high', 4.0)
        return min(low, high), max(low, high)
    mean, amplitude = params.get('mean', 2.0), abs(params.get('amplitude', 1.0))
    return mean - amplitude, mean + amplitude


class CoefficientFamily:
    """
    Family of oscillating half node coefficients ``a_n(z) = a(n z)`` for the weighted p-Laplacian
    on ``m`` interior nodes, where ``a`` is periodic with period 1.

    :param generator:
        Generator name (``constant``, ``two_phase`` or ``sinusoidal``), or a periodic function of
        ``z`` (an array).
    :param p:
        Exponent (``p >= 2``).
    :param m:
        Number of interior nodes.
    :param sampling:
        Half node sampling (:attr:`~evoincl.enums.Sampling.point`: the value at the half node, or
        :attr:`~evoincl.enums.Sampling.mean`: the conjugate density mean of each cell).
    :param bounds:
        Coefficient bounds ``(c_lo, c_hi)``.  Derived from the generator parameters for named
        generators, required for function generators.
    :param params:
        Named generator parameters (``value``; ``low``, ``high``, ``fraction``; ``mean``,
        ``amplitude``).
    """

    def __init__(
        self,
        generator: str | Callable[[np.ndarray], np.ndarray] = 'two_phase',
        p: float = 2.0,
        m: int = 200,
        sampling: str | Sampling = Sampling.point,
        bounds: tuple[float, float] | None = None,
        **params,
    ):
        if callable(generator):
            if bounds is None:
                raise InputError("'bounds' should be supplied with a function generator.")
            self._name = getattr(generator, '__name__', 'custom')
            self._fn = generator
        else:
            if generator not in _generators:
                raise InputError(
                    f"Unknown generator '{generator}', should be one of {list(_generators)}."
                )
            self._name = generator
            self._fn = lambda z: _generators[generator](z, **params)
            bounds = bounds or _generator_bounds(generator, params)
        if not p >= 2:
            raise InputError(f"'p' should be at least 2, not {p}.")
        if m < 1:
            raise InputError(f"'m' should be at least 1, not {m}.")
        if not 0 < bounds[0] <= bounds[1]:
            raise InputError(f"'bounds' should satisfy 0 < c_lo <= c_hi, not {bounds}.")
        self._params = params
        self._p = float(p)
        self._m = int(m)
        self._sampling = Sampling(sampling)
        self._bounds = (float(bounds[0]), float(bounds[1]))

    @property
    def name(self) -> str:
        """Generator name."""
        return self._name

    @property
    def p(self) -> float:
        """Exponent."""
        return self._p

    @property
    def m(self) -> int:
        """Number of interior nodes."""
        return self._m

    @property
    def dz(self) -> float:
        """Mesh width."""
        return 1.0 / (self._m + 1)

    @property
    def sampling(self) -> Sampling:
        """Half node sampling."""
        return self._sampling

    @property
    def bounds(self) -> tuple[float, float]:
        """Coefficient bounds."""
        return self._bounds

    def __repr__(self) -> str:
        return (
            f'CoefficientFamily({self._name!r}, p={self._p}, m={self._m}, '
            f'sampling={self._sampling.value!r})'
        )

    def a(self, z: np.ndarray) -> np.ndarray:
        """Return the generator values at ``z``."""
        z = np.asarray(z, dtype=float)
        values = np.asarray(self._fn(z), dtype=float)
        if values.shape != z.shape:
            raise InputError(f'Generator returned shape {values.shape} for input {z.shape}.')
        return values

    def _conjugate_exponent(self) -> float:
        return 1 / (self._p - 1)

    def weights(self, n: int) -> np.ndarray:
        """Return the ``m + 1`` half node coefficients of family member ``n``."""
        if n < 1:
            raise InputError(f"'n' should be at least 1, not {n}.")
        dz, cells = self.dz, self._m + 1
        if self._sampling == Sampling.point:
            weights = self.a(n * (np.arange(cells) + 0.5) * dz)
        else:
            # mean of a^(-1 / (p - 1)) over each cell, mapped back
            k = _default_config['cell_points']
            offsets = (np.arange(k) + 0.5) / k
            z = (np.arange(cells)[:, np.newaxis] + offsets) * dz
            q = self._conjugate_exponent()
            weights = np.mean(self.a(n * z) ** -q, axis=1) ** (-1 / q)
        return np.clip(weights, *self._bounds)

    def member(self, n: int) -> WeightedPLaplacian:
        """Return the weighted p-Laplacian of family member ``n``."""
        return WeightedPLaplacian(self.weights(n), p=self._p, bounds=self._bounds)

    def conjugate_mean(self, points: int = _default_config['quad_points']) -> float:
        """Return the period mean of ``a(z)^(-1 / (p - 1))`` by the midpoint rule."""
        z = (np.arange(points) + 0.5) / points
        return float(np.mean(self.a(z) ** -self._conjugate_exponent()))

    def to_dict(self) -> dict:
        """Return a JSON serialisable description of the family."""
        return dict(
            generator=self._name,
            p=self._p,
            m=self._m,
            sampling=self._sampling.value,
            bounds=list(self._bounds),
            **self._params,
        )


@dataclass(frozen=True)
class TestFunctional:
    """
    Time-space test functional ``<e, phi> = sum_k time[k] (space @ e(t_k))``.  ``space`` includes
    the mesh width and ``time`` the quadrature weights.
    """

    __test__ = False

    name: str
    space: np.ndarray
    time: np.ndarray

    def pair(self, trajectory: Trajectory) -> float:
        """Return the pairing with a trajectory."""
        return float(self.time @ (trajectory.states @ self.space))


def _window_weights(grid: TimeGrid, lo: float, hi: float) -> np.ndarray:
    """Return trapezoid weights over the grid nodes in ``[lo, hi]``."""
    times = grid.times
    slack = 1e-12 * max(grid.horizon, 1.0)
    idx = np.flatnonzero((times >= lo - slack) & (times <= hi + slack))
    weights = np.zeros(len(times))
    if len(idx) > 1:
        steps = np.diff(times[idx])
        weights[idx[:-1]] += steps / 2
        weights[idx[1:]] += steps / 2
    return weights


def sine_functionals(
    grid: TimeGrid,
    m: int,
    modes: int = _default_config['modes'],
    windows: int = _default_config['windows'],
) -> list[TestFunctional]:
    """
    Return the default test functional dictionary: the first ``modes`` discrete sine modes
    ``sin(k pi z)`` integrated over ``windows`` equal time windows.
    """
    if modes < 1 or windows < 1:
        raise InputError("'modes' and 'windows' should be at least 1.")
    dz = 1.0 / (m + 1)
    z = np.arange(1, m + 1) * dz
    edges = np.linspace(grid.times[0], grid.times[-1], windows + 1)
    functionals = []
    for k in range(1, modes + 1):
        space = dz * np.sin(k * np.pi * z)
        for w in range(windows):
            time = _window_weights(grid, edges[w], edges[w + 1])
            functionals.append(TestFunctional(f'mode{k}_window{w}', space, time))
    return functionals


def sine_load(m: int, mode: int = 1, amplitude: float = 1.0) -> np.ndarray:
    """Return the nodal load ``amplitude sin(mode pi z)`` on ``m`` interior nodes."""
    z = np.arange(1, m + 1) / (m + 1)
    return amplitude * np.sin(mode * np.pi * z)


def _member_forcing(h: Forcing, grid: TimeGrid, m: int) -> np.ndarray:
    """Return the solver forcing ``-h`` for ``y' + a(y) = h``."""
    if h is not None and not callable(h):
        h = np.asarray(h, dtype=float)
        if h.ndim == 1 and h.shape[0] == m:
            h = np.broadcast_to(h, (len(grid), m))
    return -_forcing_array(h, grid, m, 'h')


def _solve(op: WeightedPLaplacian, h: Forcing, xi: np.ndarray, grid: TimeGrid) -> Trajectory:
    xi = np.zeros(op.dim) if xi is None else xi
    return solve_forced(op, _member_forcing(h, grid, op.dim), xi, grid)


def solve_family_member(
    family: CoefficientFamily, n: int, h: Forcing, xi: np.ndarray | None, grid: TimeGrid
) -> Trajectory:
    """
    Solve ``y' + a_n(y) = h``, ``y(0) = xi`` for family member ``n``.

    The solver form is ``-y' ∈ a_n(y) + f`` with ``f = -h``.

    :param family:
        Coefficient family.
    :param n:
        Member index (``n >= 1``).
    :param h:
        Load as an array with one row per grid node, a single node vector applied at every time,
        a function of time, or ``None`` for zero.
    :param xi:
        Initial state (``None`` for zero).
    :param grid:
        Time grid.
    """
    return _solve(family.member(n), h, xi, grid)


def homogenized_limit(family: CoefficientFamily, p: float | None = None) -> WeightedPLaplacian:
    """
    Return the constant coefficient homogenized operator of a coefficient family.

    The coefficient satisfies ``a_hom^(-1 / (p - 1)) = mean(a^(-1 / (p - 1)))`` over one period,
    the harmonic mean at ``p = 2``.

    :param family:
        Coefficient family.
    :param p:
        Exponent.  Defaults to the family exponent.
    """
    p = family.p if p is None else p
    if not p >= 2:
        raise InputError(f"'p' should be at least 2, not {p}.")
    q = 1 / (p - 1)
    z = (np.arange(_default_config['quad_points']) + 0.5) / _default_config['quad_points']
    a_hom = float(np.mean(family.a(z) ** -q) ** (-1 / q))
    a_hom = float(np.clip(a_hom, *family.bounds))
    logger.debug(f'Homogenized coefficient: {a_hom:.12g}')
    return WeightedPLaplacian(np.full(family.m + 1, a_hom), p=p, bounds=family.bounds)


def trajectory_gradient_norm(op: WeightedPLaplacian, trajectory: Trajectory) -> float:
    """Return the discrete ``L^p(0, b; W^(1, p))`` seminorm (right endpoint rule in time)."""
    norms = np.array([op.gradient_norm(x) for x in trajectory.states[1:]])
    return float(np.sum(trajectory.grid.steps * norms**op.p) ** (1 / op.p))


def energy_bound(
    family: CoefficientFamily, h: Forcing, xi: np.ndarray | None, grid: TimeGrid
) -> float:
    """
    Return a bound on :func:`trajectory_gradient_norm` of every family member solution.

    The implicit scheme energy identity gives ``sum dt_k <a_n(y_k), y_k> <= |xi|^2 / 2 + H (|xi|
    + H)``, with ``H = sum dt_k |h_k|``, and ``<a_n(y), y> >= c_lo sum_j |D_j y|^p``.
    """
    f = _member_forcing(h, grid, family.m)
    xi_norm = 0.0 if xi is None else float(np.linalg.norm(xi))
    load = float(np.sum(grid.steps * np.linalg.norm(f[1:], axis=1)))
    energy = (0.5 * xi_norm**2 + load * (xi_norm + load)) / family.bounds[0]
    return float((family.dz * energy) ** (1 / family.p))


@dataclass(frozen=True)
class PGReport:
    """Weak convergence experiment report."""

    n_list: list[int]
    functional_ids: list[str]
    pairings: np.ndarray
    """Member pairings, one row per ``n`` (``NaN`` rows for failed members)."""
    limit_pairings: np.ndarray
    """Homogenized solution pairings."""
    gaps: np.ndarray
    """Absolute pairing gaps, one row per ``n``."""
    strong_gaps: np.ndarray
    """Gradient seminorm of the difference between member and homogenized solutions."""
    gradient_norms: np.ndarray
    """Member gradient seminorms."""
    energy_bound: float
    a_hom: float
    tol: float
    failed: list[bool] = field(default_factory=list)
    verdict: Verdict = Verdict.FAIL
    messages: list[str] = field(default_factory=list)

    @property
    def max_gaps(self) -> np.ndarray:
        """Largest pairing gap per ``n``."""
        return np.max(self.gaps, axis=1)

    @property
    def passed(self) -> bool:
        """Whether the verdict is ``PASS``."""
        return self.verdict == Verdict.PASS


def run_pg_experiment(
    family: CoefficientFamily,
    h: Forcing,
    xi: np.ndarray | None,
    grid: TimeGrid,
    n_list: Sequence[int] = (4, 8, 16, 32, 64, 128, 256),
    test_functionals: Sequence[TestFunctional] | None = None,
    tol_pg: float | None = None,
    workers: int | None = None,
    progress: bool | dict = False,
) -> PGReport:
    """
    Compare family member solutions with the homogenized solution through test functional
    pairings.

    The report passes when every member solved, the final largest gap is at most ``tol_pg``
    (default ``5e-2`` of the largest homogenized pairing), the final largest gap does not exceed
    the first, and member gradient seminorms stay below :func:`energy_bound`.  Strong gaps are
    reported only.

    :param family:
        Coefficient family.
    :param h:
        Load (see :func:`solve_family_member`).
    :param xi:
        Initial state (``None`` for zero).
    :param grid:
        Time grid.
    :param n_list:
        Increasing member indices.
    :param test_functionals:
        Test functionals.  Defaults to :func:`sine_functionals`.
    :param tol_pg:
        Final gap tolerance.
    :param workers:
        Number of worker threads.  Defaults to :func:`~evoincl.utils.get_workers`.
    :param progress:
        Whether to display a progress bar, or a dictionary of custom ``tqdm`` arguments.

    :return:
        Experiment report.
    """
    n_list = [int(n) for n in n_list]
    if len(n_list) == 0 or n_list[0] < 1 or np.any(np.diff(n_list) <= 0):
        raise InputError("'n_list' should be a nonempty increasing list of positive integers.")
    functionals = list(test_functionals or sine_functionals(grid, family.m))

    limit_op = homogenized_limit(family)
    limit = _solve(limit_op, h, xi, grid)
    limit_pairings = np.array([phi.pair(limit) for phi in functionals])

    def solve_member(n: int) -> Trajectory | None:
        try:
            return solve_family_member(family, n, h, xi, grid)
        except NumericalError as ex:
            warnings.warn(f'Family member n={n} failed: {str(ex)}', category=EvoinclWarning)
            return None

    workers = workers or utils.get_workers()
    trajectories = []
    with utils.progress_bar(progress, total=len(n_list), desc='Members') as bar:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            for trajectory in executor.map(solve_member, n_list):
                trajectories.append(trajectory)
                bar.update()

    shape = (len(n_list), len(functionals))
    pairings = np.full(shape, np.nan)
    strong_gaps = np.full(len(n_list), np.nan)
    gradient_norms = np.full(len(n_list), np.nan)
    for i, trajectory in enumerate(trajectories):
        if trajectory is None:
            continue
        pairings[i] = [phi.pair(trajectory) for phi in functionals]
        diff = Trajectory(grid, trajectory.states - limit.states)
        strong_gaps[i] = trajectory_gradient_norm(limit_op, diff)
        gradient_norms[i] = trajectory_gradient_norm(limit_op, trajectory)
    gaps = np.abs(pairings - limit_pairings)

    bound = energy_bound(family, h, xi, grid)
    if tol_pg is None:
        tol_pg = _default_config['rtol_pg'] * float(np.max(np.abs(limit_pairings)))
    failed = [trajectory is None for trajectory in trajectories]
    max_gaps = np.max(gaps, axis=1)

    messages = []
    if any(failed):
        messages.append(f'Members failed: {[n for n, f in zip(n_list, failed) if f]}.')
    else:
        if max_gaps[-1] > tol_pg:
            messages.append(f'Final pairing gap {max_gaps[-1]:.3e} exceeds {tol_pg:.3e}.')
        if max_gaps[-1] > max_gaps[0] + _default_config['trend_tol']:
            messages.append('Pairing gaps do not decrease over the member sequence.')
        if np.any(gradient_norms > bound * (1 + 1e-9)):
            messages.append('Member gradient norms exceed the energy bound.')
    verdict = Verdict.FAIL if messages else Verdict.PASS
    logger.info(
        f'PG experiment: {verdict}, final gap {max_gaps[-1]:.3e}, '
        f'a_hom {limit_op.weights()[0]:.6g}'
    )
    return PGReport(
        n_list=n_list,
        functional_ids=[phi.name for phi in functionals],
        pairings=pairings,
        limit_pairings=limit_pairings,
        gaps=gaps,
        strong_gaps=strong_gaps,
        gradient_norms=gradient_norms,
        energy_bound=bound,
        a_hom=float(limit_op.weights()[0]),
        tol=float(tol_pg),
        failed=failed,
        verdict=verdict,
        messages=messages,
    )


def fit_effective_coefficient(
    family: CoefficientFamily,
    n: int,
    h: Forcing,
    xi: np.ndarray | None,
    grid: TimeGrid,
    functional: TestFunctional | None = None,
    xtol: float = 1e-8,
) -> float:
    """
    Return the constant coefficient whose solution matches the pairing of family member ``n``.

    The coefficient is found with :func:`scipy.optimize.brentq` over the family bounds.

    :param family:
        Coefficient family.
    :param n:
        Member index.
    :param h:
        Load (see :func:`solve_family_member`).
    :param xi:
        Initial state (``None`` for zero).
    :param grid:
        Time grid.
    :param functional:
        Test functional.  Defaults to the first sine mode over the whole horizon.
    :param xtol:
        Root finding tolerance.
    """
    if functional is None:
        functional = sine_functionals(grid, family.m, modes=1, windows=1)[0]
    target = functional.pair(solve_family_member(family, n, h, xi, grid))

    def mismatch(c: float) -> float:
        op = WeightedPLaplacian(np.full(family.m + 1, c), p=family.p, bounds=family.bounds)
        return functional.pair(_solve(op, h, xi, grid)) - target

    lo, hi = family.bounds
    if lo == hi:
        return lo
    f_lo, f_hi = mismatch(lo), mismatch(hi)
    if f_lo * f_hi > 0:
        raise NumericalError(
            f'Member pairing is not bracketed by the bound coefficients ({f_lo:.3e}, {f_hi:.3e}).'
        )
    return float(optimize.brentq(mismatch, lo, hi, xtol=xtol))
