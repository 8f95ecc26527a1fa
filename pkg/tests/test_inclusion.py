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

import numpy as np
import pytest

from evoincl.convex_sets import Box, Point
from evoincl.enums import SelectionStrategy, Verdict
from evoincl.errors import (
    ConvergenceError,
    DimensionError,
    EvoinclWarning,
    InputError,
    NumericalError,
)
from evoincl.inclusion import (
    AffineMultiMap,
    MultiMap,
    TimeGrid,
    Trajectory,
    apriori_bound,
    beta_series,
    contraction_check,
    filippov_construct,
    integrate_selection,
    radial_retract,
    sample_solution_set,
    solve_forced,
    step_implicit,
    trajectory_norms,
    velocity_norm,
)
from evoincl.operators import (
    GradientOperator,
    LinearOperator,
    WeightedPLaplacian,
    abs_subdifferential,
)
from tests.conftest import random_body


def test_time_grid_uniform():
    """Test ``TimeGrid.uniform()`` attributes and serialisation."""
    grid = TimeGrid.uniform(2.0, 4)
    assert len(grid) == 5
    assert grid.n_steps == 4
    assert grid.horizon == 2.0
    assert grid.uniform_steps
    assert grid.steps == pytest.approx(np.full(4, 0.5))
    assert grid.to_dict() == dict(horizon=2.0, steps=4)
    assert grid == TimeGrid.uniform(2.0, 4)
    assert grid != TimeGrid.uniform(2.0, 5)


def test_time_grid_nonuniform():
    """Test a non-uniform ``TimeGrid`` serialises its times."""
    grid = TimeGrid([0.0, 0.1, 0.5, 1.0])
    assert not grid.uniform_steps
    assert grid.horizon == 1.0
    assert grid.to_dict() == dict(times=[0.0, 0.1, 0.5, 1.0])


@pytest.mark.parametrize(
    'times', [[0.0], [0.1, 0.5], [0.0, 0.5, 0.5], [0.0, 1.0, 0.5], [0.0, np.nan]]
)
def test_time_grid_error(times: list):
    """Test ``TimeGrid`` raises an error with invalid node times."""
    with pytest.raises(InputError):
        TimeGrid(times)


@pytest.mark.parametrize('horizon, steps', [(0.0, 10), (-1.0, 10), (1.0, 0), (1.0, 2.5)])
def test_time_grid_uniform_error(horizon: float, steps: int):
    """Test ``TimeGrid.uniform()`` raises an error with an invalid horizon or step count."""
    with pytest.raises(InputError):
        TimeGrid.uniform(horizon, steps)


def test_trajectory():
    """Test ``Trajectory`` properties and shape checks."""
    grid = TimeGrid.uniform(1.0, 4)
    states = np.linspace(0, 1, 5)[:, np.newaxis] * [1.0, 2.0]
    x = Trajectory(grid, states)
    assert x.dim == 2
    assert np.all(x.xi == [0.0, 0.0])
    assert np.all(x.final == [1.0, 2.0])
    assert x.velocities == pytest.approx(np.tile([1.0, 2.0], (4, 1)))

    with pytest.raises(DimensionError):
        Trajectory(grid, states[:-1])
    with pytest.raises(DimensionError):
        Trajectory(grid, states, forcing=np.zeros((5, 3)))


def test_radial_retract():
    """Test ``radial_retract()`` inside and outside the ball."""
    assert np.all(radial_retract([0.3, 0.4], 1.0) == [0.3, 0.4])
    assert radial_retract([3.0, 4.0], 1.0) == pytest.approx([0.6, 0.8])
    with pytest.raises(InputError):
        radial_retract([1.0], 0.0)


def test_affine_multimap():
    """Test ``AffineMultiMap`` values and default constants."""
    F = AffineMultiMap(2, 'box', slope=0.5, center=[1.0, 0.0], spread=[0.5, 1.0])
    value = F(0.0, np.array([2.0, 2.0]))
    assert isinstance(value, Box)
    assert value.lo == pytest.approx([1.5, 0.0])
    assert value.hi == pytest.approx([2.5, 2.0])
    assert F.k(0.3) == 0.5
    assert F.c3 == 0.5
    assert F.a3(0.0) == pytest.approx(1.0 + np.sqrt(1.25))
    assert not F.is_constant

    F = AffineMultiMap(1, 'point', center=1.0, lambda_center=2.0)
    assert F.is_constant
    assert isinstance(F(0.0, [5.0], 0.5), Point)
    assert F(0.0, [5.0], 0.5).center == pytest.approx([2.0])

    F = AffineMultiMap(2, 'ball', spread=0.5, lambda_spread=1.0)
    assert F(0.0, np.zeros(2), 0.5).radius == pytest.approx(1.0)


def test_affine_multimap_error():
    """Test ``AffineMultiMap`` errors."""
    with pytest.raises(InputError):
        AffineMultiMap(1, 'cone')
    F = AffineMultiMap(1, 'box', spread=0.5, lambda_spread=-1.0)
    with pytest.raises(InputError):
        F(0.0, [0.0], 1.0)


def test_multimap_error():
    """Test ``MultiMap`` argument and dimension errors."""
    rule = lambda t, x, lam: Point([0.0, 0.0])
    with pytest.raises(InputError):
        MultiMap(rule, 0)
    with pytest.raises(InputError):
        MultiMap(rule, 1, c3=-1.0)
    with pytest.raises(DimensionError):
        MultiMap(rule, 1)(0.0, [0.0])


def test_multimap_truncated():
    """Test ``MultiMap.truncated()`` retracts the state and bounds the growth."""
    F = AffineMultiMap(1, 'box', slope=0.5, spread=1.0)
    G = F.truncated(2.0)
    assert G(0.0, [10.0]).equals(F(0.0, [2.0]))
    assert G(0.0, [-1.0]).equals(F(0.0, [-1.0]))
    assert G.c3 == 0.0
    assert G.a3(0.0) == pytest.approx(F.a3(0.0) + 2 * F.c3)
    assert G.k(0.0) == F.k(0.0)


def test_multimap_validate():
    """Test ``MultiMap.validate()`` passes with declared constants and fails with a small
    Lipschitz modulus.
    """
    F = AffineMultiMap(2, 'box', slope=0.5, spread=1.0)
    report = F.validate(sample_budget=200)
    assert report.verdict == Verdict.PASS
    assert set(report.margins) == {'lipschitz', 'growth'}

    F = AffineMultiMap(2, 'box', slope=0.5, spread=1.0, k=0.1)
    report = F.validate(sample_budget=200)
    assert report.verdict == Verdict.FAIL
    assert 'lipschitz' in report.messages[0]

    with pytest.raises(InputError):
        F.validate(sample_budget=0)


def test_multimap_validate_parameter():
    """Test ``MultiMap.validate()`` checks the parameter modulus when a metric is supplied."""
    F = AffineMultiMap(1, 'box', spread=1.0, lambda_center=1.0, lambda_spread=0.5)
    distance = lambda lam1, lam2: abs(lam1 - lam2)
    report = F.validate(lambdas=[0.0, 0.5, 1.0], distance=distance, sample_budget=200)
    assert report.verdict == Verdict.PASS
    assert report.margins['parameter'] >= -1e-8

    F = AffineMultiMap(1, 'box', spread=1.0, lambda_center=1.0, beta=lambda d: 0.1 * d)
    report = F.validate(lambdas=[0.0, 1.0], distance=distance, sample_budget=200)
    assert report.verdict == Verdict.FAIL


def test_step_implicit():
    """Test ``step_implicit()`` applies the resolvent to the forced state."""
    x = step_implicit(LinearOperator(1.0), 0.0, 0.5, np.array([2.0]), np.array([1.0]))
    assert x == pytest.approx([1.0], abs=1e-15)

    with pytest.raises(InputError):
        step_implicit(LinearOperator(1.0), 0.0, 0.0, np.array([2.0]), np.array([1.0]))


@pytest.mark.parametrize('steps', [10, 100, 1000])
def test_solve_forced_linear(steps: int):
    """Test ``solve_forced()`` matches the implicit Euler recursion of ``-x' = x``."""
    grid = TimeGrid.uniform(1.0, steps)
    x = solve_forced(LinearOperator(1.0), None, [2.0], grid)
    expected = 2.0 * (1 + 1 / steps) ** -np.arange(steps + 1)
    assert x.states[:, 0] == pytest.approx(expected, rel=1e-12)
    assert np.all(x.forcing == 0)


@pytest.mark.parametrize('steps', [100, 1000, 10000])
def test_solve_forced_sliding_mode(steps: int):
    """Test ``solve_forced()`` with the l1 subdifferential reaches zero at ``t = 1/2`` and
    stays there.
    """
    grid = TimeGrid.uniform(1.0, steps)
    x = solve_forced(abs_subdifferential(), None, [0.5], grid)
    expected = np.clip(0.5 - grid.times, 0, None)
    assert np.abs(x.states[:, 0] - expected).max() <= 2 * grid.steps[0]


def test_solve_forced_function():
    """Test ``solve_forced()`` accepts the forcing as a function of time."""
    grid = TimeGrid.uniform(1.0, 20)
    A = LinearOperator(np.eye(2))
    fn = lambda t: np.array([np.sin(t), 1.0])
    x1 = solve_forced(A, fn, [0.0, 0.0], grid)
    x2 = solve_forced(A, np.array([fn(t) for t in grid.times]), [0.0, 0.0], grid)
    assert np.all(x1.states == x2.states)


def test_solve_forced_error():
    """Test ``solve_forced()`` errors."""
    grid = TimeGrid.uniform(1.0, 10)
    with pytest.raises(DimensionError):
        solve_forced(LinearOperator(1.0), np.zeros((10, 1)), [0.0], grid)
    with pytest.raises(DimensionError):
        solve_forced(LinearOperator(1.0), None, [0.0, 0.0], grid)

    cubic = GradientOperator(lambda t, x: x**3 + x, lambda t, x: np.diag(3 * x**2 + 1), 1, p=4.0)
    with pytest.raises(NumericalError) as ex:
        solve_forced(cubic, None, [100.0], TimeGrid.uniform(10.0, 10), max_iter=1)
    assert ex.value.node == 1


def test_apriori_bound():
    """Test ``apriori_bound()`` value, and that it bounds sampled solutions."""
    A = LinearOperator(1.0)
    F = AffineMultiMap(1, 'box', slope=0.5, spread=1.0)
    bound = apriori_bound(A, F, [0.5], 1.0)
    assert bound == pytest.approx(np.sqrt(0.25 + 1.0) * np.e)

    grid = TimeGrid.uniform(1.0, 50)
    samples = sample_solution_set(A, F, [0.5], None, grid, count=10, seed=3)
    for x, _ in samples:
        assert trajectory_norms(x)[1] <= bound

    F = AffineMultiMap(1, 'point')
    assert apriori_bound(A, F, [0.5], 1.0) == pytest.approx(0.5)
    with pytest.raises(InputError):
        apriori_bound(A, F, [0.5], 0.0)


def test_integrate_selection():
    """Test ``integrate_selection()`` selections lie in the value sets at the step states and
    satisfy the implicit scheme.
    """
    rng = np.random.default_rng(7)
    A = LinearOperator(np.diag([1.0, 2.0]))
    F = AffineMultiMap(2, 'box', slope=0.5, center=[0.2, -0.1], spread=[0.3, 0.6])
    grid = TimeGrid.uniform(1.0, 40)
    control = rng.uniform(-0.5, 0.5, (len(grid), 2))
    chooser = lambda k, body, prev, x_prev: body.extreme_point(np.array([1.0, -1.0]))
    x, selection = integrate_selection(
        A, F, [1.0, -1.0], None, grid, chooser, control_forcing=control
    )

    for t, state, value in zip(grid.times, x.states, selection):
        assert F(t, state).distance(value) <= 1e-8
    residual = -x.velocities - x.states[1:] @ A.matrix.T - selection[1:] - control[1:]
    assert np.abs(residual).max() <= 1e-8
    assert x.forcing == pytest.approx(selection + control)


def test_integrate_selection_error():
    """Test ``integrate_selection()`` raises an error for a selection outside its value set."""
    grid = TimeGrid.uniform(1.0, 5)
    F = AffineMultiMap(1, 'box', spread=1.0)
    chooser = lambda k, body, prev, x_prev: np.array([2.0])
    with pytest.raises(NumericalError):
        integrate_selection(LinearOperator(1.0), F, [0.0], None, grid, chooser)


@pytest.mark.parametrize(
    'strategy',
    [
        SelectionStrategy.minimal_norm,
        SelectionStrategy.extreme,
        SelectionStrategy.random_extreme,
        SelectionStrategy.project_previous,
    ],
)
def test_sample_solution_set(strategy: SelectionStrategy):
    """Test ``sample_solution_set()`` samples are solutions of the inclusion."""
    A = LinearOperator(1.0 * np.eye(2))
    F = AffineMultiMap(2, 'ball', slope=0.5, center=[0.5, 0.0], spread=1.0)
    grid = TimeGrid.uniform(1.0, 30)
    samples = sample_solution_set(A, F, [1.0, 0.0], None, grid, strategy=strategy, count=5)
    assert len(samples) == 5

    for x, selection in samples:
        for t, state, value in zip(grid.times[1:], x.states[1:], selection[1:]):
            assert F(t, state).distance(value) <= 1e-8
        residual = -x.velocities - x.states[1:] - selection[1:]
        assert np.abs(residual).max() <= 1e-8

    if strategy == SelectionStrategy.minimal_norm:
        assert all(np.all(s[0].states == samples[0][0].states) for s in samples)


def test_sample_solution_set_determinism():
    """Test ``sample_solution_set()`` results depend on the seed only."""
    A = LinearOperator(1.0)
    F = AffineMultiMap(1, 'box', slope=0.5, spread=1.0)
    grid = TimeGrid.uniform(1.0, 20)
    kwargs = dict(strategy='random_extreme', count=8, seed=5)
    samples1 = sample_solution_set(A, F, [0.0], None, grid, workers=1, **kwargs)
    samples2 = sample_solution_set(A, F, [0.0], None, grid, workers=4, **kwargs)
    for (x1, s1), (x2, s2) in zip(samples1, samples2):
        assert np.all(x1.states == x2.states)
        assert np.all(s1 == s2)

    samples3 = sample_solution_set(A, F, [0.0], None, grid, count=8, seed=6)
    assert any(np.any(x1.states != x3.states) for (x1, _), (x3, _) in zip(samples1, samples3))


@pytest.mark.parametrize('strategy, count', [('greedy', 2), ('unknown', 2), ('extreme', 0)])
def test_sample_solution_set_error(strategy: str, count: int):
    """Test ``sample_solution_set()`` raises an error with an invalid strategy or count."""
    grid = TimeGrid.uniform(1.0, 5)
    F = AffineMultiMap(1, 'box', spread=1.0)
    with pytest.raises(InputError):
        sample_solution_set(LinearOperator(1.0), F, [0.0], None, grid, strategy, count=count)


@pytest.mark.parametrize('n', [1, 2, 3])
def test_beta_series(n: int):
    """Test ``beta_series()`` against its closed form with ``eta = 1`` and ``tau = t``."""
    grid = TimeGrid.uniform(1.0, 1000)
    t = grid.times
    beta = beta_series(np.ones(len(grid)), t, grid, 0.0, n)
    expected = 2 * t**n / np.prod(np.arange(1, n + 1))
    assert beta == pytest.approx(expected, rel=1e-5, abs=1e-6)

    epsilon = 1e-3
    beta_eps = beta_series(np.ones(len(grid)), t, grid, epsilon, n)
    eps_sum = epsilon * sum(1 / 2 ** (j + 1) for j in range(n + 1))
    extra = 2 * eps_sum * t ** (n - 1) / np.prod(np.arange(1, n))
    assert beta_eps - beta == pytest.approx(extra, abs=1e-12)


def test_beta_series_error():
    """Test ``beta_series()`` raises an error for ``n < 1``."""
    grid = TimeGrid.uniform(1.0, 10)
    with pytest.raises(InputError):
        beta_series(np.ones(11), grid.times, grid, 0.0, 0)


def test_filippov_unit_defect(unit_defect_setup: tuple):
    """Test ``filippov_construct()`` on a unit defect instance with a known construction."""
    A, F, reference = unit_defect_setup
    result = filippov_construct(A, F, reference, None, epsilon=1e-6)
    cert = result.certificate
    times = reference.grid.times

    assert cert.defect == pytest.approx(np.ones(len(times)))
    assert cert.gaps == [0.0]
    assert result.selection[:, 0] == pytest.approx(np.ones(len(times)))
    assert result.trajectory.states[:, 0] == pytest.approx(-times, abs=1e-12)
    assert cert.deviation == pytest.approx(times, abs=1e-12)
    assert cert.tau == pytest.approx(times)
    assert np.all(cert.deviation <= cert.bound + cert.allowance)
    assert cert.all_passed


@pytest.mark.parametrize('steps', [50, 100, 200])
def test_filippov_random(steps: int):
    """Test ``filippov_construct()`` certificates on random forced instances."""
    rng = np.random.default_rng(steps)
    A = LinearOperator(1.0, a2=2.0)
    grid = TimeGrid.uniform(1.0, steps)
    for _ in range(10):
        F = AffineMultiMap(
            1, 'box', slope=0.5, center=rng.uniform(-0.2, 0.2), spread=rng.uniform(0.1, 0.3)
        )
        amp, phase = rng.uniform(0, 0.5), rng.uniform(0, 2 * np.pi)
        h = amp * np.sin(2 * np.pi * grid.times + phase)
        reference = solve_forced(A, h, [rng.uniform(-0.5, 0.5)], grid)
        result = filippov_construct(A, F, reference, h, epsilon=1e-6)
        cert = result.certificate

        assert cert.all_passed
        for gap, envelope in zip(cert.gaps, cert.envelope):
            assert gap <= envelope + 1e-15
        states, selection = result.trajectory.states, result.selection
        for t, state, value in zip(grid.times[1:], states[1:], selection[1:]):
            assert F(t, state).distance(value) <= 1e-8


def test_filippov_convergence_error():
    """Test ``filippov_construct()`` raises ``ConvergenceError`` when the cap is reached."""
    A = LinearOperator(1.0)
    F = AffineMultiMap(1, 'point', slope=0.5, center=0.5)
    grid = TimeGrid.uniform(1.0, 20)
    reference = solve_forced(A, None, [0.0], grid)
    with pytest.raises(ConvergenceError) as ex:
        filippov_construct(A, F, reference, None, epsilon=1e-9, max_iter=1)
    assert ex.value.residual > 0
    assert ex.value.ratio is None


def test_filippov_error(unit_defect_setup: tuple):
    """Test ``filippov_construct()`` argument errors."""
    A, F, reference = unit_defect_setup
    with pytest.raises(InputError):
        filippov_construct(A, F, reference, None, epsilon=0.0)
    with pytest.raises(InputError):
        filippov_construct(A, F, reference, None, max_iter=0)


def test_filippov_coarse_step_warning():
    """Test ``filippov_construct()`` warns when the discretisation allowance is undefined."""
    A = LinearOperator(1.0)
    F = AffineMultiMap(1, 'box', spread=1.0, k=1.5)
    grid = TimeGrid.uniform(1.0, 1)
    reference = solve_forced(A, None, [0.0], grid)
    with pytest.warns(EvoinclWarning, match='allowance'):
        result = filippov_construct(A, F, reference, None)
    assert result.certificate.all_passed


def test_trajectory_norms():
    """Test ``trajectory_norms()`` and ``velocity_norm()`` known values."""
    grid = TimeGrid.uniform(2.0, 10)
    x = Trajectory(grid, np.ones((11, 1)))
    assert trajectory_norms(x) == pytest.approx((np.sqrt(2.0), 1.0))
    assert trajectory_norms(x, p=1) == pytest.approx((2.0, 1.0))
    assert velocity_norm(x) == 0.0

    x = Trajectory(grid, grid.times[:, np.newaxis])
    assert velocity_norm(x, p=2) == pytest.approx(np.sqrt(2.0))
    assert velocity_norm(x, p=3) == pytest.approx(2.0 ** (2 / 3))

    with pytest.raises(InputError):
        trajectory_norms(x, p=0.5)
    with pytest.raises(InputError):
        velocity_norm(x, p=1.0)


def test_contraction_check():
    """Test ``contraction_check()`` passes on random linear, l1 and p-Laplacian instances."""
    rng = np.random.default_rng(11)
    grid = TimeGrid.uniform(1.0, 20)
    z = np.linspace(0, 1, 52)[1:-1]
    for i in range(100):
        kind = i % 4
        if kind == 0:
            dim = int(rng.integers(1, 5))
            B = rng.standard_normal((dim, dim))
            A = LinearOperator(B @ B.T + 0.1 * np.eye(dim))
        elif kind == 1:
            dim = 3
            A = abs_subdifferential(dim)
        else:
            dim = 50
            A = WeightedPLaplacian(rng.uniform(1, 4, dim + 1), p=2.0 if kind == 2 else 3.0)

        if dim == 50:
            xi1, xi2 = (rng.uniform(-1, 1) * np.sin(np.pi * (j + 1) * z) for j in range(2))
        else:
            xi1, xi2 = rng.uniform(-2, 2, (2, dim))
        f = rng.uniform(-1, 1, (len(grid), dim))
        report = contraction_check(A, xi1, xi2, f, grid)
        assert report.passed, f'case {i}: {report}'
        assert report.initial_gap == pytest.approx(np.linalg.norm(xi1 - xi2))


def test_random_multimap_selections():
    """Test sampled selections of random constant multimaps lie in their value sets."""
    rng = np.random.default_rng(2)
    grid = TimeGrid.uniform(1.0, 10)
    A = LinearOperator(np.eye(3))
    for kind in ['point', 'box', 'ball']:
        body = random_body(rng, 3, kind)
        F = MultiMap(lambda t, x, lam: body, 3)
        samples = sample_solution_set(A, F, np.zeros(3), None, grid, count=3, seed=1)
        for _, selection in samples:
            assert all(body.distance(value) <= 1e-12 for value in selection)
