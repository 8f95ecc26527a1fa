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

import csv
import json
from pathlib import Path

import pytest
import yaml
from click.testing import CliRunner

from evoincl import control, param_io
from evoincl.cli import RunConfig, cli, run
from evoincl.version import __version__


def _write_config(tmp_path: Path, config: dict, name: str = 'config.yaml') -> Path:
    """Write a run configuration to ``tmp_path`` and return its path."""
    file = tmp_path.joinpath(name)
    file.write_text(yaml.dump(config))
    return file


def _read_rows(file: Path) -> list[dict]:
    with open(file, 'r', newline='') as f:
        return list(csv.DictReader(f))


@pytest.fixture
def out_dir(tmp_path: Path) -> Path:
    """Output directory."""
    out_dir = tmp_path.joinpath('out')
    out_dir.mkdir()
    return out_dir


@pytest.fixture(scope='session')
def plaplacian_inline(plaplacian_instance_file: Path, weights_file: Path) -> dict:
    """p-Laplacian problem instance with inline weights."""
    config = param_io.read_config(plaplacian_instance_file)
    config['operator']['weights'] = param_io.read_weights(weights_file).tolist()
    return config


def test_evi_help(runner: CliRunner):
    """Test ``evi --help`` lists the commands."""
    result = runner.invoke(cli, ['--help'])
    assert result.exit_code == 0, result.output
    for command in ['solve', 'filippov', 'optimize', 'sweep', 'pgconv', 'validate']:
        assert command in result.output


@pytest.mark.parametrize('command', ['solve', 'sample-set', 'usc', 'qliminf', 'validate'])
def test_command_help(command: str, runner: CliRunner):
    """Test ``evi <command> --help``."""
    result = runner.invoke(cli, [command, '--help'])
    assert result.exit_code == 0, result.output
    assert 'CONFIG' in result.output


def test_evi_version(runner: CliRunner):
    """Test ``evi --version``."""
    result = runner.invoke(cli, ['--version'])
    assert result.exit_code == 0, result.output
    assert __version__ in result.output


def test_evi_verbosity(linear_instance_file: Path, out_dir: Path, runner: CliRunner):
    """Test ``evi -v solve`` generates debug logs."""
    cli_str = f'-v solve {linear_instance_file} --out-dir {out_dir}'
    result = runner.invoke(cli, cli_str.split())
    assert result.exit_code == 0, result.output
    assert 'DEBUG:' in result.output


def test_usage_errors(linear_instance_file: Path, out_dir: Path, runner: CliRunner):
    """Test usage errors exit with the invalid input status."""
    result = runner.invoke(cli, ['unknown', str(linear_instance_file)])
    assert result.exit_code == 1, result.output
    result = runner.invoke(cli, ['solve', str(out_dir.joinpath('unknown.yaml'))])
    assert result.exit_code == 1, result.output
    result = runner.invoke(cli, f'optimize {linear_instance_file} --budget 0'.split())
    assert result.exit_code == 1, result.output


def test_solve(linear_instance_file: Path, out_dir: Path, runner: CliRunner):
    """Test ``evi solve`` writes the trajectory and metadata."""
    cli_str = f'solve {linear_instance_file} --out-dir {out_dir}'
    result = runner.invoke(cli, cli_str.split())
    assert result.exit_code == 0, result.output

    rows = _read_rows(out_dir.joinpath('trajectory.csv'))
    assert len(rows) == 101
    assert list(rows[0].keys()) == ['t', 'x_0', 'f_0']
    assert float(rows[0]['x_0']) == 0.5

    metadata = json.loads(out_dir.joinpath('metadata.json').read_text())
    assert metadata['run']['command'] == 'solve'
    assert metadata['run']['source'] == linear_instance_file.name
    assert metadata['run']['version'] == __version__
    assert metadata['outputs'] == ['trajectory.csv']
    assert metadata['summary']['final'] == pytest.approx([float(rows[-1]['x_0'])])


def test_solve_plaplacian(plaplacian_instance_file: Path, out_dir: Path, runner: CliRunner):
    """Test ``evi solve`` resolves a relative weights file against the instance file."""
    cli_str = f'solve {plaplacian_instance_file} --out-dir {out_dir}'
    result = runner.invoke(cli, cli_str.split())
    assert result.exit_code == 0, result.output
    rows = _read_rows(out_dir.joinpath('trajectory.csv'))
    assert len(rows) == 21
    assert 'x_9' in rows[0]


def test_solve_numerical_error(
    plaplacian_inline: dict, tmp_path: Path, out_dir: Path, runner: CliRunner
):
    """Test ``evi solve`` exits with the numerical failure status when the resolvent does not
    converge.
    """
    config = dict(plaplacian_inline, solver=dict(max_iter=1))
    config_file = _write_config(tmp_path, config)
    result = runner.invoke(cli, f'solve {config_file} --out-dir {out_dir}'.split())
    assert result.exit_code == 2, result.output
    assert 'Numerical failure' in result.output
    assert not out_dir.joinpath('metadata.json').exists()


def test_overwrite(linear_instance_file: Path, out_dir: Path, runner: CliRunner):
    """Test existing outputs are only replaced with ``--overwrite``."""
    cli_str = f'solve {linear_instance_file} --out-dir {out_dir}'
    result = runner.invoke(cli, cli_str.split())
    assert result.exit_code == 0, result.output

    result = runner.invoke(cli, cli_str.split())
    assert result.exit_code == 1, result.output
    assert 'exists' in result.output

    result = runner.invoke(cli, (cli_str + ' --overwrite').split())
    assert result.exit_code == 0, result.output


def test_sample_set(
    filippov_instance_file: Path, tmp_path: Path, out_dir: Path, runner: CliRunner
):
    """Test ``evi sample-set`` writes the requested number of samples."""
    config = dict(problem=str(filippov_instance_file), count=3, strategy='random_extreme')
    config_file = _write_config(tmp_path, config)
    result = runner.invoke(cli, f'sample-set {config_file} --out-dir {out_dir} -s 2'.split())
    assert result.exit_code == 0, result.output

    rows = _read_rows(out_dir.joinpath('samples.csv'))
    assert len(rows) == 3 * 101
    assert sorted(set(row['sample'] for row in rows)) == ['0', '1', '2']
    metadata = json.loads(out_dir.joinpath('metadata.json').read_text())
    assert metadata['run']['seed'] == 2
    assert metadata['summary']['count'] == 3


def test_filippov(filippov_instance_file: Path, out_dir: Path, runner: CliRunner):
    """Test ``evi filippov`` writes the trajectory and certificate."""
    result = runner.invoke(cli, f'filippov {filippov_instance_file} --out-dir {out_dir}'.split())
    assert result.exit_code == 0, result.output
    assert len(_read_rows(out_dir.joinpath('trajectory.csv'))) == 101
    rows = _read_rows(out_dir.joinpath('certificate.csv'))
    assert len(rows) == 101
    assert all(row['pass'] == 'true' for row in rows)


def test_filippov_numerical_error(tmp_path: Path, out_dir: Path, runner: CliRunner):
    """Test ``evi filippov`` exits with the numerical failure status when the iteration cap is
    reached.
    """
    problem = dict(
        dimension=1,
        grid=dict(horizon=1.0, steps=20),
        operator=dict(kind='linear', matrix=1.0),
        multimap=dict(kind='point', slope=0.5, center=0.5),
        xi=0.0,
    )
    config = dict(problem=problem, max_iter=1, tolerances=dict(epsilon=1e-9))
    config_file = _write_config(tmp_path, config)
    result = runner.invoke(cli, f'filippov {config_file} --out-dir {out_dir}'.split())
    assert result.exit_code == 2, result.output


def test_optimize(linear_instance_file: Path, out_dir: Path, runner: CliRunner):
    """Test ``evi optimize`` writes an admissible pair."""
    cli_str = f'optimize {linear_instance_file} --out-dir {out_dir} --budget 20'
    result = runner.invoke(cli, cli_str.split())
    assert result.exit_code == 0, result.output
    assert len(_read_rows(out_dir.joinpath('pair.csv'))) == 101
    metadata = json.loads(out_dir.joinpath('metadata.json').read_text())
    assert metadata['run']['budget'] == 20
    assert metadata['summary']['verdict'] == 'PASS'


def test_sweep_reproducible(sweep_config_file: Path, tmp_path: Path, runner: CliRunner):
    """Test ``evi sweep`` writes byte identical surfaces for the same seed."""
    surfaces = []
    for name in ['out1', 'out2']:
        out_dir = tmp_path.joinpath(name)
        result = runner.invoke(cli, f'sweep {sweep_config_file} --out-dir {out_dir}'.split())
        assert result.exit_code == 0, result.output
        surfaces.append(out_dir.joinpath('surface.csv').read_bytes())
    assert surfaces[0] == surfaces[1]
    assert len(surfaces[0].decode().splitlines()) == 1 + 2 * 2


def test_continuity(continuity_config_file: Path, out_dir: Path, runner: CliRunner):
    """Test ``evi continuity`` passes on a continuous value function."""
    cli_str = f'continuity {continuity_config_file} --out-dir {out_dir} --budget 50'
    result = runner.invoke(cli, cli_str.split())
    assert result.exit_code == 0, result.output
    assert len(_read_rows(out_dir.joinpath('sequence.csv'))) == 10


def test_continuity_fail(continuity_config_file: Path, tmp_path: Path, runner: CliRunner):
    """Test ``evi continuity`` exits with the harness failure status on a ``FAIL`` verdict."""
    config = param_io.read_config(continuity_config_file)
    config['problem'] = str(continuity_config_file.parent.joinpath(config['problem']))
    config['tolerances'] = dict(value=1e-12)
    config_file = _write_config(tmp_path, config)
    out_dir = tmp_path.joinpath('out')
    result = runner.invoke(cli, f'continuity {config_file} --out-dir {out_dir}'.split())
    assert result.exit_code == 3, result.output
    metadata = json.loads(out_dir.joinpath('metadata.json').read_text())
    assert metadata['summary']['verdict'] == 'FAIL'


def test_qliminf(qliminf_config_file: Path, out_dir: Path, runner: CliRunner):
    """Test ``evi qliminf`` constructs converging admissible pairs."""
    result = runner.invoke(cli, f'qliminf {qliminf_config_file} --out-dir {out_dir}'.split())
    assert result.exit_code == 0, result.output
    rows = _read_rows(out_dir.joinpath('liminf.csv'))
    assert len(rows) == 6


def test_qliminf_optimized_target(
    qliminf_config_file: Path,
    tmp_path: Path,
    out_dir: Path,
    runner: CliRunner,
    monkeypatch: pytest.MonkeyPatch,
):
    """Test ``evi qliminf`` optimizes the target pair with the configured number of starts when
    no target control is given.
    """
    config = yaml.safe_load(qliminf_config_file.read_text())
    config.pop('control')
    config['starts'] = 2
    config_file = _write_config(tmp_path, config)

    starts = []
    optimize = control.optimize

    def optimize_and_record(*args, **kwargs):
        starts.append(kwargs['starts'])
        return optimize(*args, **kwargs)

    monkeypatch.setattr(control, 'optimize', optimize_and_record)
    cli_str = f'qliminf {config_file} --out-dir {out_dir} --budget 10'
    result = runner.invoke(cli, cli_str.split())
    assert result.exit_code in (0, 3), result.output
    assert starts == [2]
    assert len(_read_rows(out_dir.joinpath('liminf.csv'))) == 6


def test_pgconv(pgconv_config_file: Path, out_dir: Path, runner: CliRunner):
    """Test ``evi pgconv`` runs the oscillating coefficient experiment."""
    result = runner.invoke(cli, f'pgconv {pgconv_config_file} --out-dir {out_dir}'.split())
    assert result.exit_code == 0, result.output
    assert out_dir.joinpath('pg.csv').exists()
    metadata = json.loads(out_dir.joinpath('metadata.json').read_text())
    assert metadata['summary']['a_hom'] == pytest.approx(1.6)


def test_problem_required(pgconv_config_file: Path, out_dir: Path, runner: CliRunner):
    """Test a command that requires a problem exits with the invalid input status without one."""
    result = runner.invoke(cli, f'solve {pgconv_config_file} --out-dir {out_dir}'.split())
    assert result.exit_code == 1, result.output
    assert 'requires a' in result.output


def test_validate_reject(reject_instance_file: Path, out_dir: Path, runner: CliRunner):
    """Test ``evi validate`` exits with the invalid input status on a ``REJECT`` verdict."""
    result = runner.invoke(cli, f'validate {reject_instance_file} --out-dir {out_dir}'.split())
    assert result.exit_code == 1, result.output
    metadata = json.loads(out_dir.joinpath('metadata.json').read_text())
    assert metadata['summary']['verdict'] == 'REJECT'
    assert metadata['summary']['reports']['operator']['verdict'] == 'REJECT'


def test_validate_fail(tmp_path: Path, out_dir: Path, runner: CliRunner):
    """Test ``evi validate`` exits with the harness failure status when a declared growth
    constant is violated.
    """
    problem = dict(
        dimension=1,
        grid=dict(horizon=1.0, steps=10),
        operator=dict(kind='linear', matrix=1.0, c1=0.1),
    )
    config_file = _write_config(tmp_path, problem)
    result = runner.invoke(cli, f'validate {config_file} --out-dir {out_dir}'.split())
    assert result.exit_code == 3, result.output
    metadata = json.loads(out_dir.joinpath('metadata.json').read_text())
    reports = metadata['summary']['reports']
    assert reports['operator']['verdict'] == 'FAIL'
    assert reports['multimap']['verdict'] == 'PASS'


def test_validate_pass(linear_instance_file: Path, out_dir: Path, runner: CliRunner):
    """Test ``evi validate`` passes a valid problem instance."""
    result = runner.invoke(cli, f'validate {linear_instance_file} --out-dir {out_dir}'.split())
    assert result.exit_code == 0, result.output


def test_run_config_from_file(sweep_config_file: Path, out_dir: Path):
    """Test ``RunConfig.from_file()`` resolves the problem file and command line overrides."""
    run_config = RunConfig.from_file(sweep_config_file, 'sweep', out_dir, seed=5)
    assert run_config.seed == 5
    assert run_config.budget == 50
    assert run_config.grid == dict(steps=20)
    assert run_config.problem['dimension'] == 1
    assert run_config.options == dict(
        starts=2, xi_grid=[[0.0], [0.5]], lambda_grid=[0.0, 1.0]
    )
    assert run_config.source == sweep_config_file.name
    assert run_config.instance().grid.n_steps == 20


def test_run_unknown_command(linear_instance_file: Path, out_dir: Path):
    """Test ``run()`` returns the invalid input status for an unknown command."""
    run_config = RunConfig.from_file(linear_instance_file, 'unknown', out_dir)
    assert run(run_config) == 1
