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

"""Command line interface."""
from __future__ import annotations

import logging
import posixpath
import warnings
from dataclasses import dataclass, field, fields
from os import PathLike
from pathlib import Path
from typing import Any, Callable

import click
import fsspec
import numpy as np
from fsspec.core import OpenFile
from tqdm.contrib.logging import logging_redirect_tqdm
from tqdm.std import tqdm

from evoincl import control, factory, inclusion, operators, param_io, pgconv, sensitivity, utils
from evoincl.enums import SelectionStrategy, Verdict
from evoincl.errors import InputError, NumericalError, ParamError
from evoincl.factory import Instance
from evoincl.version import __version__

logger = logging.getLogger(__name__)

_run_keys = ['problem', 'seed', 'budget', 'grid', 'tolerances']
"""Run configuration keys common to all commands."""

_default_budget = control._default_config['budget']
"""Default objective evaluation budget."""

_exit_codes = dict(ok=0, invalid=1, numerical=2, harness=3)
"""Command exit codes."""


def _configure_logging(verbosity: int):
    """Configure python logging level."""

    def showwarning(message, category, filename, lineno, file=None, line=None):
        """Redirect evoincl warnings to the source module's logger, otherwise show warning as
        usual.
        """
        # adapted from https://discuss.python.org/t/some-easy-and-pythonic-way-to-bind-warnings-to-loggers/14009/2
        package_root = Path(__file__).parents[1]
        try:
            module_path = Path(filename).relative_to(package_root)
        except ValueError:
            module_path = None

        if file is not None or module_path is None:
            orig_show_warning(message, category, filename, lineno, file, line)
        else:
            module_name = module_path.with_suffix('').as_posix().replace('/', '.')
            logging.getLogger(module_name).warning(str(message))

    orig_show_warning = warnings.showwarning
    warnings.showwarning = showwarning

    # configure the package logger only, leaving dependency loggers on their defaults
    log_level = max(10, 20 - 10 * verbosity)
    pkg_logger = logging.getLogger(__package__)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter('%(levelname)s:%(name)s: %(message)s'))
    pkg_logger.addHandler(handler)
    pkg_logger.setLevel(log_level)


def _parent(ofile: OpenFile) -> OpenFile:
    """Return an OpenFile for the directory containing ``ofile``."""
    return OpenFile(ofile.fs, posixpath.dirname(ofile.path) or '.', mode='rt')


@dataclass
class RunConfig:
    """
    Resolved configuration of one command run.

    :param command:
        Command name.
    :param problem:
        Problem instance dictionary (``None`` for ``pgconv``).
    :param out_dir:
        Output directory.
    :param seed:
        Random seed.
    :param budget:
        Objective evaluation budget per optimisation start.
    :param grid:
        Grid override.
    :param tolerances:
        Tolerance overrides.
    :param options:
        Command specific options.
    :param base_dir:
        Directory that relative file references in the problem instance are resolved against.
    :param overwrite:
        Whether to overwrite existing outputs.
    :param source:
        Configuration file name.
    """

    command: str
    problem: dict | None
    out_dir: str | PathLike | OpenFile
    seed: int = 0
    budget: int = _default_budget
    grid: dict | None = None
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    base_dir: str | PathLike | OpenFile | None = None
    overwrite: bool = False
    source: str | None = None

    @classmethod
    def from_file(
        cls,
        file: str | PathLike | OpenFile,
        command: str,
        out_dir: str | PathLike | OpenFile,
        seed: int | None = None,
        budget: int | None = None,
        overwrite: bool = False,
    ) -> RunConfig:
        """
        Create a run configuration from a run configuration or bare problem instance file.

        The ``problem`` key holds an inline instance, or a path relative to the run configuration
        file.  Command line ``seed`` and ``budget`` values override the file values.
        """
        if not isinstance(file, OpenFile):
            file = fsspec.open(str(file), 'rt')
        config = param_io.read_config(file)
        base_dir = _parent(file)

        problem = config.get('problem', None)
        if isinstance(problem, str):
            problem_file = utils.join_ofile(base_dir, problem, mode='rt')
            try:
                problem = param_io.read_config(problem_file)
            except FileNotFoundError:
                raise ParamError(f"Problem instance file not found: '{problem}'.")
            base_dir = _parent(problem_file)
        elif problem is None and 'dimension' in config:
            problem, config = config, {}
        if problem is not None and not isinstance(problem, dict):
            raise ParamError("'problem' should be a file path or an inline problem instance.")

        tolerances = config.get('tolerances', {}) or {}
        if not isinstance(tolerances, dict):
            raise ParamError("'tolerances' should be a mapping.")
        return cls(
            command=command,
            problem=problem,
            out_dir=out_dir,
            seed=int(config.get('seed', 0) if seed is None else seed),
            budget=int(config.get('budget', _default_budget) if budget is None else budget),
            grid=config.get('grid', None),
            tolerances=tolerances,
            options={k: v for k, v in config.items() if k not in _run_keys},
            base_dir=base_dir,
            overwrite=overwrite,
            source=utils.get_filename(file),
        )

    def instance(self) -> Instance:
        """Return the problem objects of the run."""
        if self.problem is None:
            raise ParamError(f"The '{self.command}' command requires a 'problem'.")
        problem = dict(self.problem)
        if 'resolvent_tol' in self.tolerances:
            problem['solver'] = {
                **problem.get('solver', {}), 'resolvent_tol': self.tolerances['resolvent_tol']
            }
        return factory.create_instance(problem, base_dir=self.base_dir, grid=self.grid)

    def out_file(self, name: str) -> OpenFile:
        """Return an output OpenFile in the output directory."""
        return utils.join_ofile(self.out_dir, name, mode='wt', newline='')

    def metadata(self) -> dict:
        """Return the run description written to ``metadata.json``."""
        meta = {
            f.name: getattr(self, f.name)
            for f in fields(self)
            if f.name not in ['out_dir', 'base_dir']
        }
        meta['version'] = __version__
        return meta


def _check_outputs(run_config: RunConfig, names: list[str]):
    """Raise FileExistsError before any work if an output exists and overwriting is off."""
    if run_config.overwrite:
        return
    for name in names:
        ofile = run_config.out_file(name)
        if ofile.fs.exists(ofile.path):
            raise FileExistsError(f"File exists: '{ofile.path}'")


def _vector_list(values: Any, dim: int, name: str) -> list[np.ndarray]:
    if not isinstance(values, list) or len(values) == 0:
        raise ParamError(f"'{name}' should be a nonempty list.")
    return [utils.as_vector(v, dim, name) for v in values]


def _lambda_samples(inst: Instance, count: int = 5) -> list:
    space = inst.space
    if isinstance(space, control.IntervalSpace):
        return np.linspace(space.lo, space.hi, count).tolist()
    return list(space.values)


def _target_and_sequence(run_config: RunConfig, inst: Instance):
    """Return the sensitivity target and sequence from the run options."""
    opts = run_config.options
    target_opts = opts.get('target', {})
    target = (
        utils.as_vector(target_opts.get('xi', inst.xi), inst.dim, 'xi'),
        target_opts.get('lambda', inst.lam),
    )
    if 'sequence' in opts:
        sequence = [
            (utils.as_vector(point['xi'], inst.dim, 'xi'), point.get('lambda', target[1]))
            for point in opts['sequence']
        ]
    elif 'geometric' in opts:
        geo = dict(opts['geometric'])
        sequence = sensitivity.geometric_sequence(
            target,
            geo.pop('xi_step', 0.0),
            lam_step=geo.pop('lam_step', 0.0),
            count=geo.pop('count', 10),
            ratio=geo.pop('ratio', 0.5),
        )
    else:
        raise ParamError("'sequence' or 'geometric' is required.")
    return target, sequence


def _strategy(value: str) -> SelectionStrategy:
    try:
        return SelectionStrategy(value)
    except ValueError:
        raise ParamError(
            f"Unknown selection strategy '{value}', should be one of "
            f"{[s.value for s in SelectionStrategy]}."
        )


def _report_dict(report: operators.HypothesisReport) -> dict:
    return dict(
        verdict=report.verdict.value,
        margins=report.margins,
        samples=report.samples,
        messages=report.messages,
    )


def _solve(run_config: RunConfig) -> dict:
    inst = run_config.instance()
    strategy = _strategy(run_config.options.get('strategy', 'minimal_norm'))
    samples = inclusion.sample_solution_set(
        inst.operator(),
        inst.multimap,
        inst.xi,
        inst.lam,
        inst.grid,
        strategy=strategy,
        count=1,
        seed=run_config.seed,
        tol=inst.problem.resolvent_tol,
        max_iter=inst.max_iter,
    )
    trajectory = samples[0][0]
    param_io.write_trajectory(
        run_config.out_file('trajectory.csv'), trajectory, overwrite=run_config.overwrite
    )
    lp_norm, sup_norm = inclusion.trajectory_norms(trajectory)
    return dict(final=trajectory.final, sup_norm=sup_norm, l2_norm=lp_norm)


def _sample_set(run_config: RunConfig) -> dict:
    inst = run_config.instance()
    opts = run_config.options
    samples = inclusion.sample_solution_set(
        inst.operator(),
        inst.multimap,
        inst.xi,
        inst.lam,
        inst.grid,
        strategy=_strategy(opts.get('strategy', 'random_extreme')),
        count=int(opts.get('count', 100)),
        seed=run_config.seed,
        tol=inst.problem.resolvent_tol,
        max_iter=inst.max_iter,
        progress=True,
    )
    trajectories = [trajectory for trajectory, _ in samples]
    param_io.write_trajectories(
        run_config.out_file('samples.csv'), trajectories, overwrite=run_config.overwrite
    )
    finals = np.array([trajectory.final for trajectory in trajectories])
    return dict(count=len(trajectories), final_min=finals.min(axis=0), final_max=finals.max(axis=0))


def _filippov(run_config: RunConfig) -> dict:
    inst = run_config.instance()
    opts = run_config.options
    A = inst.operator()
    forcing = np.broadcast_to(
        utils.as_vector(opts.get('reference_forcing', 0.0)), (len(inst.grid), inst.dim)
    )
    tol = inst.problem.resolvent_tol
    reference = inclusion.solve_forced(
        A, forcing, inst.xi, inst.grid, tol=tol, max_iter=inst.max_iter
    )
    result = inclusion.filippov_construct(
        A,
        inst.multimap,
        reference,
        forcing,
        lam=inst.lam,
        epsilon=float(run_config.tolerances.get('epsilon', opts.get('epsilon', 1e-6))),
        max_iter=int(opts.get('max_iter', inclusion._default_config['filippov_iter'])),
        tol=tol,
    )
    param_io.write_trajectory(
        run_config.out_file('trajectory.csv'), result.trajectory, overwrite=run_config.overwrite
    )
    cert = result.certificate
    param_io.write_certificate(
        run_config.out_file('certificate.csv'), cert, overwrite=run_config.overwrite
    )
    return dict(
        verdict=Verdict.PASS if cert.all_passed else Verdict.FAIL,
        iterations=len(cert.gaps),
        max_deviation=float(cert.deviation.max()),
        max_bound=float(cert.bound.max()),
    )


def _optimize(run_config: RunConfig) -> dict:
    inst = run_config.instance()
    result = control.optimize(
        inst.problem,
        inst.xi,
        inst.lam,
        budget=run_config.budget,
        seed=run_config.seed,
        starts=int(run_config.options.get('starts', control._default_config['starts'])),
        progress=True,
    )
    param_io.write_pair(
        run_config.out_file('pair.csv'), result.pair, overwrite=run_config.overwrite
    )
    admissible = result.pair.report.passed
    return dict(
        verdict=Verdict.PASS if admissible else Verdict.FAIL,
        m_hat=result.value,
        converged=result.converged,
        evaluations=result.evaluations,
    )


def _sweep(run_config: RunConfig) -> dict:
    inst = run_config.instance()
    opts = run_config.options
    surface = sensitivity.sweep_value(
        inst.problem,
        _vector_list(opts.get('xi_grid', [inst.xi.tolist()]), inst.dim, 'xi_grid'),
        opts.get('lambda_grid', [inst.lam]),
        budget=run_config.budget,
        seed=run_config.seed,
        progress=True,
        starts=int(opts.get('starts', control._default_config['starts'])),
    )
    param_io.write_surface(
        run_config.out_file('surface.csv'), surface, overwrite=run_config.overwrite
    )
    failed = sum(entry.failed for entry in surface.entries)
    return dict(points=len(surface.entries), failed=failed)


def _continuity(run_config: RunConfig) -> dict:
    inst = run_config.instance()
    target, sequence = _target_and_sequence(run_config, inst)
    report = sensitivity.continuity_report(
        inst.problem,
        target,
        sequence,
        budget=run_config.budget,
        seed=run_config.seed,
        tol=run_config.tolerances.get('value', None),
        starts=int(run_config.options.get('starts', control._default_config['starts'])),
    )
    param_io.write_sequence_report(
        run_config.out_file('sequence.csv'), report, overwrite=run_config.overwrite
    )
    return dict(
        verdict=report.verdict, target_value=report.target_value, messages=report.messages
    )


def _usc(run_config: RunConfig) -> dict:
    inst = run_config.instance()
    opts = run_config.options
    target, sequence = _target_and_sequence(run_config, inst)
    report = sensitivity.usc_report(
        inst.problem,
        target,
        sequence,
        budget=run_config.budget,
        count=int(opts.get('count', 4)),
        gap=float(opts.get('gap', 1e-3)),
        seed=run_config.seed,
        tol=float(run_config.tolerances.get('usc', sensitivity._default_config['usc_tol'])),
        noise=float(run_config.tolerances.get('noise', 0.0)),
        starts=int(opts.get('starts', control._default_config['starts'])),
    )
    param_io.write_sequence_report(
        run_config.out_file('sequence.csv'), report, overwrite=run_config.overwrite
    )
    return dict(
        verdict=report.verdict,
        target_value=report.target_value,
        reverse_distances=report.reverse_distances,
        messages=report.messages,
    )


def _qliminf(run_config: RunConfig) -> dict:
    inst = run_config.instance()
    opts = run_config.options
    target, sequence = _target_and_sequence(run_config, inst)
    if 'control' in opts:
        control_path = np.broadcast_to(
            utils.as_vector(opts['control']), (len(inst.grid), inst.dim)
        )
        target_pair = control.simulate(inst.problem, control_path, *target)
        target_pair = control.AdmissiblePair(
            state=target_pair.state,
            control=target_pair.control,
            selection=target_pair.selection,
            report=control.check_admissible(inst.problem, target_pair, *target),
            cost=target_pair.cost,
        )
    else:
        target_pair = control.optimize(
            inst.problem,
            *target,
            budget=run_config.budget,
            seed=run_config.seed,
            starts=int(opts.get('starts', control._default_config['starts'])),
        ).pair
    steps = sensitivity.q_liminf_construct(
        inst.problem,
        target_pair,
        target,
        sequence,
        epsilon=float(
            run_config.tolerances.get('epsilon', sensitivity._default_config['liminf_epsilon'])
        ),
    )
    param_io.write_liminf_steps(
        run_config.out_file('liminf.csv'), steps, overwrite=run_config.overwrite
    )
    passed = all(step.passed for step in steps)
    return dict(verdict=Verdict.PASS if passed else Verdict.FAIL, steps=len(steps))


def _pgconv(run_config: RunConfig) -> dict:
    opts = run_config.options
    if 'family' not in opts:
        raise ParamError("'family' is required.")
    family = factory.create_family(opts['family'])
    grid = factory.create_grid(run_config.grid or dict(horizon=1.0, steps=400))
    load = opts.get('load', dict(mode=1, amplitude=1.0))
    if isinstance(load, dict):
        h = pgconv.sine_load(family.m, **load)
    else:
        h = utils.as_vector(load, family.m, 'load')
    xi = opts.get('xi', None)
    xi = None if xi is None else utils.as_vector(xi, family.m, 'xi')
    report = pgconv.run_pg_experiment(
        family,
        h,
        xi,
        grid,
        n_list=opts.get('n_list', (4, 8, 16, 32, 64, 128, 256)),
        test_functionals=pgconv.sine_functionals(
            grid,
            family.m,
            modes=int(opts.get('modes', pgconv._default_config['modes'])),
            windows=int(opts.get('windows', pgconv._default_config['windows'])),
        ),
        tol_pg=run_config.tolerances.get('pg', None),
        progress=True,
    )
    param_io.write_pg_report(run_config.out_file('pg.csv'), report, overwrite=run_config.overwrite)
    return dict(
        verdict=report.verdict,
        a_hom=report.a_hom,
        max_gaps=report.max_gaps,
        strong_gaps=report.strong_gaps,
        gradient_norms=report.gradient_norms,
        energy_bound=report.energy_bound,
        messages=report.messages,
    )


def _validate(run_config: RunConfig) -> dict:
    inst = run_config.instance()
    opts = run_config.options
    budget = int(opts.get('sample_budget', 1000))
    lambdas = _lambda_samples(inst)
    horizon = inst.grid.horizon

    reports = {}
    for lam in lambdas if inst.operators.parameter_dependent else [inst.lam]:
        key = 'operator' if not inst.operators.parameter_dependent else f'operator[{lam}]'
        reports[key] = operators.validate_hypotheses(
            inst.operator(lam), sample_budget=budget, horizon=horizon, seed=run_config.seed
        )
    reports['multimap'] = inst.multimap.validate(
        horizon=horizon,
        lambdas=lambdas,
        distance=inst.space.distance,
        sample_budget=budget,
        seed=run_config.seed,
    )
    reports['control'] = inst.problem.check(lambdas, seed=run_config.seed)

    op = inst.operator()
    beta = float(opts.get('beta', 1.0))
    smallness = None
    if op.c2 > 0 and inst.multimap.c3 > 0:
        smallness = operators.smallness_check(op.c2, inst.multimap.c3, beta, op.p)

    verdicts = [report.verdict for report in reports.values()]
    if Verdict.REJECT in verdicts:
        verdict = Verdict.REJECT
    elif Verdict.FAIL in verdicts or smallness is False:
        verdict = Verdict.FAIL
    else:
        verdict = Verdict.PASS
    return dict(
        verdict=verdict,
        reports={k: _report_dict(v) for k, v in reports.items()},
        smallness=smallness,
    )


_commands: dict[str, tuple[Callable[[RunConfig], dict], list[str]]] = {
    'solve': (_solve, ['trajectory.csv']),
    'sample-set': (_sample_set, ['samples.csv']),
    'filippov': (_filippov, ['trajectory.csv', 'certificate.csv']),
    'optimize': (_optimize, ['pair.csv']),
    'sweep': (_sweep, ['surface.csv']),
    'continuity': (_continuity, ['sequence.csv']),
    'usc': (_usc, ['sequence.csv']),
    'qliminf': (_qliminf, ['liminf.csv']),
    'pgconv': (_pgconv, ['pg.csv']),
    'validate': (_validate, []),
}
"""Command functions and their output file names (``metadata.json`` is written by all)."""


def run(run_config: RunConfig) -> int:
    """
    Run a command and write its outputs and ``metadata.json``.

    :param run_config:
        Run configuration.

    :return:
        Exit status: 0 on success, 1 on a validation error or ``REJECT`` verdict, 2 on a numerical
        failure and 3 on a ``FAIL`` verdict.
    """
    if run_config.command not in _commands:
        logger.error(f"Unknown command: '{run_config.command}'.")
        return _exit_codes['invalid']
    func, outputs = _commands[run_config.command]
    try:
        _check_outputs(run_config, [*outputs, 'metadata.json'])
        with utils.profiler():
            summary = func(run_config)
    except (ParamError, InputError, FileExistsError) as ex:
        logger.error(str(ex))
        return _exit_codes['invalid']
    except NumericalError as ex:
        logger.error(f'Numerical failure: {str(ex)}')
        return _exit_codes['numerical']

    verdict = summary.get('verdict', Verdict.PASS)
    metadata = dict(run=run_config.metadata(), summary=summary, outputs=outputs)
    param_io.write_metadata(
        run_config.out_file('metadata.json'), metadata, overwrite=run_config.overwrite
    )
    if verdict == Verdict.REJECT:
        logger.error(f"'{run_config.command}' verdict: {verdict.value}.")
        return _exit_codes['invalid']
    elif verdict == Verdict.FAIL:
        logger.error(f"'{run_config.command}' verdict: {verdict.value}.")
        return _exit_codes['harness']
    logger.info(f"'{run_config.command}' completed.")
    return _exit_codes['ok']


class _Command(click.Command):
    """click.Command subclass that exits with the validation error status on usage errors."""

    def make_context(self, *args, **kwargs) -> click.Context:
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as ex:
            ex.exit_code = _exit_codes['invalid']
            raise


class _Group(click.Group):
    """click.Group subclass that exits with the validation error status on usage errors."""

    command_class = _Command

    def make_context(self, *args, **kwargs) -> click.Context:
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as ex:
            ex.exit_code = _exit_codes['invalid']
            raise

    def resolve_command(self, ctx: click.Context, args: list[str]):
        try:
            return super().resolve_command(ctx, args)
        except click.UsageError as ex:
            ex.exit_code = _exit_codes['invalid']
            raise


def _config_file_cb(ctx: click.Context, param: click.Parameter, path_uri: str) -> OpenFile:
    """Click callback to convert a file path / URI to an OpenFile instance in text read mode."""
    try:
        ofile = fsspec.open(path_uri, 'rt')
    except Exception as ex:
        raise click.BadParameter(str(ex), param=param)
    if not ofile.fs.exists(ofile.path):
        raise click.BadParameter(f"'{path_uri}' does not exist.", param=param)
    return ofile


def _dir_cb(ctx: click.Context, param: click.Parameter, uri_path: str) -> OpenFile:
    """Click callback to convert a directory to an fsspec OpenFile, creating it if needed."""
    try:
        # some dirs (e.g. gcs buckets) don't work with a trailing slash on the path, so strip it
        ofile = fsspec.open(uri_path.rstrip('/') or '/')
        ofile.fs.mkdirs(ofile.path, exist_ok=True)
    except Exception as ex:
        raise click.BadParameter(f"Cannot create / access '{uri_path}'. {str(ex)}", param=param)
    return ofile


config_file_arg = click.argument(
    'config-file', metavar='CONFIG', type=click.Path(dir_okay=False), callback=_config_file_cb
)
out_dir_option = click.option(
    '-od',
    '--out-dir',
    type=click.Path(file_okay=False),
    default=str(Path.cwd()),
    show_default='current working',
    callback=_dir_cb,
    help='Directory in which to place output files.',
)
seed_option = click.option(
    '-s', '--seed', type=click.INT, default=None, help='Random seed.  Overrides the config seed.'
)
budget_option = click.option(
    '-b',
    '--budget',
    type=click.IntRange(min=1),
    default=None,
    help='Objective evaluations per optimisation start.  Overrides the config budget.',
)
overwrite_option = click.option(
    '-o',
    '--overwrite',
    is_flag=True,
    type=bool,
    default=False,
    show_default=True,
    help='Overwrite existing output(s).',
)


def _command(name: str, short_help: str) -> Callable:
    """Return a decorator that registers a run command with the common arguments and options."""

    def decorator(func: Callable) -> click.Command:
        @cli.command(name=name, short_help=short_help, help=func.__doc__)
        @config_file_arg
        @out_dir_option
        @seed_option
        @budget_option
        @overwrite_option
        @click.pass_context
        def command(ctx: click.Context, config_file: OpenFile, out_dir: OpenFile, **kwargs):
            try:
                run_config = RunConfig.from_file(config_file, name, out_dir, **kwargs)
            except ParamError as ex:
                logger.error(str(ex))
                ctx.exit(_exit_codes['invalid'])
            ctx.exit(run(run_config))

        return command

    return decorator


@click.group(cls=_Group)
@click.option('--verbose', '-v', count=True, help='Increase verbosity.')
@click.option('--quiet', '-q', count=True, help='Decrease verbosity.')
@click.version_option(version=__version__, message='%(version)s')
@click.pass_context
def cli(ctx: click.Context, verbose, quiet) -> None:
    """Parametric evolution inclusion toolkit."""
    verbosity = verbose - quiet
    _configure_logging(verbosity)

    # redirect logs through tqdm.write, so they do not interfere with progress bars
    ctx.with_resource(logging_redirect_tqdm([logging.getLogger(__package__)], tqdm_class=tqdm))


@_command('solve', 'Solve the inclusion with one selection strategy.')
def solve():
    """
    Solve the evolution inclusion of the CONFIG problem instance with a deterministic selection
    strategy ('strategy' option, default 'minimal_norm'), and write 'trajectory.csv'.
    """


@_command('sample-set', 'Sample the solution set.')
def sample_set():
    """
    Sample the solution set of the CONFIG problem instance ('count' and 'strategy' options),
    and write 'samples.csv'.
    """


@_command('filippov', 'Construct a solution near a reference with its error certificate.')
def filippov():
    """
    Run the Filippov construction around the solution forced by 'reference_forcing' (default
    zero), and write 'trajectory.csv' and 'certificate.csv'.  Exits with status 3 if a
    certificate node fails.
    """


@_command('optimize', 'Minimise the cost by the direct method.')
def optimize():
    """
    Minimise the cost of the CONFIG problem instance over admissible pairs, and write the best
    pair to 'pair.csv'.
    """


@_command('sweep', 'Estimate the value function over a grid.')
def sweep():
    """
    Estimate the value function over the 'xi_grid' x 'lambda_grid' points, and write
    'surface.csv'.
    """


@_command('continuity', 'Check value function continuity along a sequence.')
def continuity():
    """
    Check continuity of the value function along the 'sequence' (or 'geometric') sequence
    converging to 'target', and write 'sequence.csv'.  Exits with status 3 on a 'FAIL'
    verdict.
    """


@_command('usc', 'Check upper semicontinuity of the optimal pair multifunction.')
def usc():
    """
    Check sequential upper semicontinuity of the optimal pairs along the 'sequence' (or
    'geometric') sequence converging to 'target', and write 'sequence.csv'.  Exits with
    status 3 on a 'FAIL' verdict.
    """


@_command('qliminf', 'Construct admissible pairs converging to a target pair.')
def qliminf():
    """
    Construct admissible pairs along a sequence that converge to the optimal (or 'control'
    driven) target pair, and write 'liminf.csv'.  Exits with status 3 if a pair fails.
    """


@_command('pgconv', 'Run the oscillating coefficient weak convergence experiment.')
def pgconv_():
    """
    Compare oscillating coefficient 'family' member solutions with the homogenized solution
    through test functional pairings, and write 'pg.csv'.  Exits with status 3 on a
    'FAIL' verdict.
    """


@_command('validate', 'Check the hypotheses of a problem instance.')
def validate():
    """
    Check the operator, multimap and control hypotheses of the CONFIG problem instance on random
    samples, and the coercivity smallness condition.  Exits with status 1 on a 'REJECT' verdict
    and 3 on a 'FAIL' verdict.
    """


if __name__ == '__main__':
    cli()
