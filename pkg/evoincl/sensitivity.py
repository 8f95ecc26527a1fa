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

"""Sensitivity harness: value surfaces, continuity of the value function, upper semicontinuity of
the optimal pair multifunction and liminf constructions of admissible pairs.
"""
from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import integrate

from evoincl import utils
from evoincl.control import (
    AdmissiblePair,
    ControlProblem,
    check_admissible,
    evaluate_cost,
    optimal_set_sample,
    value,
)
from evoincl.enums import Verdict
from evoincl.errors import EvoinclError, EvoinclWarning, InputError
from evoincl.inclusion import FilippovCertificate, filippov_construct, solve_forced
from evoincl.utils import as_vector

logger = logging.getLogger(__name__)

Point = tuple[np.ndarray, Any]
"""An ``(xi, lambda)`` problem datum."""

_default_config = dict(value_rtol=5e-3, usc_tol=1e-1, liminf_epsilon=1e-9)
"""Default harness tolerances."""


@dataclass(frozen=True)
class ValueEntry:
    """Value estimate at one ``(xi, lambda)`` point."""

    xi: np.ndarray
    lam: Any
    value: float
    """Value estimate, ``NaN`` for failed points."""
    budget: int
    seed: int
    failed: bool = False
    message: str = ''


@dataclass(frozen=True)
class ValueSurface:
    """Value estimates over a grid of ``(xi, lambda)`` points, computed at a common budget and
    time grid.
    """

    entries: list[ValueEntry]
    budget: int
    grid: dict = field(default_factory=dict)
    """Time grid metadata."""

    @property
    def values(self) -> np.ndarray:
        """Value estimates in entry order."""
        return np.array([entry.value for entry in self.entries])


@dataclass(frozen=True)
class SequenceReport:
    """Harness report along a sequence converging to a target ``(xi, lambda)``."""

    kind: str
    """Report kind (``continuity`` or ``usc``)."""
    target: Point
    sequence: list[Point]
    distances: np.ndarray
    """Product metric distances of the sequence points to the target."""
    target_value: float
    values: np.ndarray
    """Value estimates along the sequence."""
    value_gaps: np.ndarray
    """``|m(xi_n, lam_n) - m(xi, lam)|``."""
    set_distances: np.ndarray | None = None
    """One sided distances ``e_n`` from the sequence optimal sets to the target optimal set."""
    reverse_distances: np.ndarray | None = None
    """One sided distances from the target optimal set to the sequence optimal sets (reported
    only)."""
    tol: float = 0.0
    """Final tolerance."""
    verdict: Verdict = Verdict.FAIL
    messages: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """Whether the verdict is ``PASS``."""
        return self.verdict == Verdict.PASS


@dataclass(frozen=True, eq=False)
class LiminfStep:
    """Constructed admissible pair at one sequence point."""

    xi: np.ndarray
    lam: Any
    pair: AdmissiblePair
    certificate: FilippovCertificate
    state_gap: float
    """Sup norm gap to the target state."""
    control_gap: float
    """L2 gap to the target control."""
    state_bound: float
    """Certificate bound plus the reference displacement."""
    control_bound: float
    """Control projection displacement."""

    @property
    def passed(self) -> bool:
        """Whether the pair is admissible and the gaps are within their bounds."""
        return (
            self.pair.report.passed
            and self.state_gap <= self.state_bound + 1e-12
            and self.control_gap <= self.control_bound + 1e-12
        )


def _sequence_distances(
    prob: ControlProblem, target: Point, sequence: Sequence[Point]
) -> np.ndarray:
    """Return product metric distances of the sequence to the target, checking they decrease."""
    if len(sequence) == 0:
        raise InputError("'sequence' should not be empty.")
    xi, lam = target
    xi = as_vector(xi, prob.dim, 'xi')
    prob.space.validate(lam)
    distances = []
    for xi_n, lam_n in sequence:
        prob.space.validate(lam_n)
        xi_n = as_vector(xi_n, prob.dim, 'xi')
        distances.append(float(np.linalg.norm(xi_n - xi)) + prob.space.distance(lam_n, lam))
    distances = np.array(distances)
    # strictly decreasing until the target is reached
    diffs = np.diff(distances)
    if np.any(diffs > 0) or np.any((diffs == 0) & (distances[:-1] > 0)):
        raise InputError('Sequence distances to the target should be strictly decreasing.')
    return distances


def pair_distance(prob: ControlProblem, pair1: AdmissiblePair, pair2: AdmissiblePair) -> float:
    """Return the sup norm state gap plus the L2 control gap of two pairs."""
    state_gap = float(np.linalg.norm(pair1.state.states - pair2.state.states, axis=1).max())
    return state_gap + _l2_gap(prob, pair1.control, pair2.control)


def _l2_gap(prob: ControlProblem, control1: np.ndarray, control2: np.ndarray) -> float:
    norms = np.sum((np.asarray(control1) - np.asarray(control2)) ** 2, axis=1)
    return float(np.sqrt(integrate.trapezoid(norms, prob.grid.times)))


def _projection_displacement(
    prob: ControlProblem, control: np.ndarray, lam: Any, lam_n: Any
) -> float:
    """
    Return the L2 norm of ``|r(t, lam_n) - r(t, lam)|`` over the nodes where projecting
    ``control`` onto ``U(t, lam_n)`` is active.
    """
    radii = np.array([max(prob.radius(t, lam), 0.0) for t in prob.grid.times])
    radii_n = np.array([max(prob.radius(t, lam_n), 0.0) for t in prob.grid.times])
    active = np.linalg.norm(control, axis=1) > radii_n
    shifts = np.where(active, np.abs(radii_n - radii), 0.0)
    return float(np.sqrt(integrate.trapezoid(shifts**2, prob.grid.times)))


def geometric_sequence(
    target: Point, xi_step: np.ndarray, lam_step: float = 0.0, count: int = 10, ratio: float = 0.5
) -> list[Point]:
    """
    Return the sequence ``(xi + ratio^n xi_step, lam + ratio^n lam_step)``, ``n = 1..count``.

    :param target:
        Target ``(xi, lambda)``.
    :param xi_step:
        Initial state offset.
    :param lam_step:
        Parameter offset.
    :param count:
        Sequence length.
    :param ratio:
        Geometric ratio in ``(0, 1)``.
    """
    if not 0 < ratio < 1:
        raise InputError(f"'ratio' should be in (0, 1), not {ratio}.")
    xi, lam = target
    xi = as_vector(xi)
    xi_step = np.broadcast_to(as_vector(xi_step), xi.shape)
    return [
        (xi + ratio**n * xi_step, None if lam is None else float(lam) + ratio**n * lam_step)
        for n in range(1, count + 1)
    ]


def sweep_value(
    prob: ControlProblem,
    xi_grid: Sequence[np.ndarray],
    lambda_grid: Sequence[Any],
    budget: int = 1000,
    seed: int = 0,
    workers: int | None = None,
    progress: bool | dict = False,
    **kwargs,
) -> ValueSurface:
    """
    Return value estimates at every ``(xi, lambda)`` grid point.

    Each point is seeded from ``seed`` and the point's own values, so surfaces do not depend on
    the order of the grids.  Points that fail are flagged with a ``NaN`` value and an
    :class:`~evoincl.errors.EvoinclWarning`.

    :param prob:
        Control problem.
    :param xi_grid:
        Initial states.
    :param lambda_grid:
        Parameter values.
    :param budget:
        Objective evaluations per start.
    :param seed:
        Base random seed.
    :param workers:
        Number of worker threads.  Defaults to :func:`~evoincl.utils.get_workers`.
    :param progress:
        Whether to display a progress bar, or a dictionary of custom ``tqdm`` arguments.
    :param kwargs:
        Additional arguments for :func:`~evoincl.control.optimize`.

    :return:
        Value surface with entries ordered by ``xi`` then ``lambda``.
    """
    points = [
        (as_vector(xi, prob.dim, 'xi'), lam) for xi in xi_grid for lam in lambda_grid
    ]
    if len(points) == 0:
        raise InputError("'xi_grid' and 'lambda_grid' should not be empty.")

    def sweep_point(point: Point) -> ValueEntry:
        xi, lam = point
        point_seed = utils.point_seed(seed, xi, np.nan if lam is None else lam)
        try:
            m_hat = value(prob, xi, lam, budget=budget, seed=point_seed, workers=1, **kwargs)
            return ValueEntry(xi=xi, lam=lam, value=m_hat, budget=budget, seed=point_seed)
        except EvoinclError as ex:
            warnings.warn(
                f'Value sweep failed at xi={xi.tolist()}, lambda={lam}: {str(ex)}',
                category=EvoinclWarning,
            )
            return ValueEntry(
                xi=xi,
                lam=lam,
                value=np.nan,
                budget=budget,
                seed=point_seed,
                failed=True,
                message=str(ex),
            )

    workers = workers or utils.get_workers()
    entries = []
    with utils.progress_bar(progress, total=len(points), desc='Sweep') as bar:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            for entry in executor.map(sweep_point, points):
                entries.append(entry)
                bar.update()
    return ValueSurface(entries=entries, budget=budget, grid=prob.grid.to_dict())


def noise_floor(
    prob: ControlProblem,
    xi: np.ndarray,
    lam: Any,
    budget: int = 1000,
    seeds: Sequence[int] = (0, 1, 2),
    **kwargs,
) -> float:
    """Return the spread of value estimates at one point over repeated seeds."""
    values = [value(prob, xi, lam, budget=budget, seed=s, **kwargs) for s in seeds]
    return float(np.max(values) - np.min(values))


def _trend_thirds(gaps: np.ndarray) -> bool:
    """Whether the largest gap of the last third of ``gaps`` does not exceed that of the first."""
    third = max(1, len(gaps) // 3)
    return bool(np.max(gaps[-third:]) <= np.max(gaps[:third]) + 1e-12)


def continuity_report(
    prob: ControlProblem,
    target: Point,
    sequence: Sequence[Point],
    budget: int = 1000,
    seed: int = 0,
    tol: float | None = None,
    **kwargs,
) -> SequenceReport:
    """
    Check continuity of the value function along a sequence converging to a target.

    Values are estimated with a common seed.  The report passes when the final value gap is at
    most ``tol`` (default ``5e-3 (1 + |m|)``), and the largest gap over the last third of the
    sequence does not exceed the largest gap over the first third.

    :param prob:
        Control problem.
    :param target:
        Target ``(xi, lambda)``.
    :param sequence:
        ``(xi_n, lambda_n)`` points with strictly decreasing distances to the target.
    :param budget:
        Objective evaluations per start.
    :param seed:
        Random seed shared by all points.
    :param tol:
        Final gap tolerance.
    :param kwargs:
        Additional arguments for :func:`~evoincl.control.optimize`.

    :return:
        Sequence report.
    """
    distances = _sequence_distances(prob, target, sequence)
    target_value = value(prob, target[0], target[1], budget=budget, seed=seed, **kwargs)
    values = np.array(
        [value(prob, xi, lam, budget=budget, seed=seed, **kwargs) for xi, lam in sequence]
    )
    gaps = np.abs(values - target_value)
    tol = _default_config['value_rtol'] * (1 + abs(target_value)) if tol is None else tol

    messages = []
    final_ok = gaps[-1] <= tol
    trend_ok = _trend_thirds(gaps)
    if not final_ok:
        messages.append(f'Final value gap {gaps[-1]:.3e} exceeds the tolerance {tol:.3e}.')
    if not trend_ok:
        messages.append('Value gaps over the last third exceed those over the first third.')
    verdict = Verdict.PASS if final_ok and trend_ok else Verdict.FAIL
    logger.info(f'Continuity report: {verdict}, final gap {gaps[-1]:.3e}')
    return SequenceReport(
        kind='continuity',
        target=target,
        sequence=list(sequence),
        distances=distances,
        target_value=target_value,
        values=values,
        value_gaps=gaps,
        tol=float(tol),
        verdict=verdict,
        messages=messages,
    )


def _one_sided(prob: ControlProblem, from_pairs, to_pairs) -> float:
    return max(min(pair_distance(prob, p, q) for q in to_pairs) for p in from_pairs)


def usc_report(
    prob: ControlProblem,
    target: Point,
    sequence: Sequence[Point],
    budget: int = 1000,
    count: int = 4,
    gap: float = 1e-3,
    seed: int = 0,
    tol: float = _default_config['usc_tol'],
    noise: float = 0.0,
    **kwargs,
) -> SequenceReport:
    """
    Check sequential upper semicontinuity of the optimal pair multifunction along a sequence.

    Optimal sets are sampled with :func:`~evoincl.control.optimal_set_sample`.  The one sided
    distance ``e_n`` is the largest distance (sup norm state gap plus L2 control gap) from a pair
    sampled at ``(xi_n, lambda_n)`` to the pairs sampled at the target.  The report passes when
    ``e_n`` is nonincreasing (to ``noise``) over the last half of the sequence and the final
    ``e_n`` is at most ``tol``.  The reverse distances are reported but not checked.

    :param prob:
        Control problem.
    :param target:
        Target ``(xi, lambda)``.
    :param sequence:
        ``(xi_n, lambda_n)`` points with strictly decreasing distances to the target.
    :param budget:
        Objective evaluations per start.
    :param count:
        Optimisation runs per optimal set sample.
    :param gap:
        Retention gap of the optimal set samples.
    :param seed:
        Random seed shared by all points.
    :param tol:
        Final distance tolerance.
    :param noise:
        Allowed increase between consecutive distances.
    :param kwargs:
        Additional arguments for :func:`~evoincl.control.optimize`.

    :return:
        Sequence report.
    """
    distances = _sequence_distances(prob, target, sequence)
    target_sample = optimal_set_sample(
        prob, target[0], target[1], budget=budget, count=count, gap=gap, seed=seed, **kwargs
    )
    values, set_dists, reverse = [], [], []
    for xi, lam in sequence:
        sample = optimal_set_sample(
            prob, xi, lam, budget=budget, count=count, gap=gap, seed=seed, **kwargs
        )
        values.append(sample.value)
        set_dists.append(_one_sided(prob, sample.pairs, target_sample.pairs))
        reverse.append(_one_sided(prob, target_sample.pairs, sample.pairs))
    values, set_dists = np.array(values), np.array(set_dists)

    messages = []
    half = set_dists[len(set_dists) // 2 :]
    trend_ok = bool(np.all(np.diff(half) <= noise))
    final_ok = set_dists[-1] <= tol
    if not trend_ok:
        messages.append('Optimal set distances increase over the last half of the sequence.')
    if not final_ok:
        messages.append(f'Final optimal set distance {set_dists[-1]:.3e} exceeds {tol:.3e}.')
    verdict = Verdict.PASS if trend_ok and final_ok else Verdict.FAIL
    logger.info(f'USC report: {verdict}, final distance {set_dists[-1]:.3e}')
    return SequenceReport(
        kind='usc',
        target=target,
        sequence=list(sequence),
        distances=distances,
        target_value=target_sample.value,
        values=values,
        value_gaps=np.abs(values - target_sample.value),
        set_distances=set_dists,
        reverse_distances=np.array(reverse),
        tol=float(tol),
        verdict=verdict,
        messages=messages,
    )


def q_liminf_construct(
    prob: ControlProblem,
    target_pair: AdmissiblePair,
    target: Point,
    sequence: Sequence[Point],
    epsilon: float = _default_config['liminf_epsilon'],
) -> list[LiminfStep]:
    """
    Construct admissible pairs at each sequence point that converge to a target pair.

    At ``(xi_n, lambda_n)`` the target control is projected onto ``U(t, lambda_n)``, and the
    Filippov construction runs around the reference ``solve_forced(A_(lambda_n), h, xi_n)``,
    where ``h`` is the target pair's total forcing.

    :param prob:
        Control problem.
    :param target_pair:
        Pair admissible at the target (with its selection).
    :param target:
        Target ``(xi, lambda)``.
    :param sequence:
        ``(xi_n, lambda_n)`` points.
    :param epsilon:
        Filippov approximation parameter.

    :return:
        Constructed pairs with their certificates, gaps and bounds.
    """
    xi, lam = target
    xi = as_vector(xi, prob.dim, 'xi')
    report = check_admissible(prob, target_pair, xi, lam)
    if not report.passed:
        raise InputError('The target pair is not admissible at the target.')
    if target_pair.selection is None:
        raise InputError('The target pair should carry its selection.')
    target_control = prob._validate_control(target_pair.control)
    forcing = target_pair.selection + prob.control_forcing(target_control, lam)

    steps = []
    for xi_n, lam_n in sequence:
        prob.space.validate(lam_n)
        xi_n = as_vector(xi_n, prob.dim, 'xi')
        A_n = prob.operator(lam_n)
        control = prob.project_control(target_control, lam_n)
        reference = solve_forced(A_n, forcing, xi_n, prob.grid, tol=prob.resolvent_tol)
        result = filippov_construct(
            A_n,
            prob.multimap,
            reference,
            forcing,
            lam=lam_n,
            epsilon=epsilon,
            control_forcing=prob.control_forcing(control, lam_n),
            tol=prob.resolvent_tol,
        )
        pair = AdmissiblePair(state=result.trajectory, control=control, selection=result.selection)
        pair = AdmissiblePair(
            state=pair.state,
            control=control,
            selection=pair.selection,
            report=check_admissible(prob, pair, xi_n, lam_n),
            cost=evaluate_cost(prob, pair, xi_n, lam_n),
        )
        cert = result.certificate
        ref_gap = np.linalg.norm(reference.states - target_pair.state.states, axis=1).max()
        step = LiminfStep(
            xi=xi_n,
            lam=lam_n,
            pair=pair,
            certificate=cert,
            state_gap=float(
                np.linalg.norm(pair.state.states - target_pair.state.states, axis=1).max()
            ),
            control_gap=_l2_gap(prob, control, target_control),
            state_bound=float(np.max(cert.bound + cert.allowance) + ref_gap),
            control_bound=_projection_displacement(prob, target_control, lam, lam_n),
        )
        logger.debug(
            f'Liminf step at lambda={lam_n}: state gap {step.state_gap:.3e} '
            f'(bound {step.state_bound:.3e}), control gap {step.control_gap:.3e}'
        )
        steps.append(step)
    return steps
