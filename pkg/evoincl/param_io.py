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

"""Configuration file reading and result file writing."""
from __future__ import annotations

import csv
import json
import logging
from os import PathLike
from pathlib import Path
from typing import Any, IO, Iterable, Sequence

import numpy as np
import yaml
from fsspec.core import OpenFile

from evoincl import utils
from evoincl.control import AdmissiblePair
from evoincl.errors import ParamError
from evoincl.inclusion import FilippovCertificate, Trajectory
from evoincl.pgconv import PGReport
from evoincl.sensitivity import LiminfStep, SequenceReport, ValueSurface

logger = logging.getLogger(__name__)

# TODO: define a custom file type for str | PathLike | OpenFile | IO[str] once sphinx can link
#  external type defs in type hints


def _suffix(file: str | PathLike | OpenFile | IO[str]) -> str:
    return Path(utils.get_filename(file)).suffix.lower()


def read_config(file: str | PathLike | OpenFile | IO[str]) -> dict[str, Any]:
    """
    Read a problem instance or run configuration file.

    JSON files are read with :mod:`json`, other files with YAML (a superset of JSON).

    :param file:
        File to read.  Can be a path or URI string, an :class:`~fsspec.core.OpenFile` object or a
        file object, opened in text mode (``'rt'``).
    """
    filename = utils.get_filename(file)
    with utils.Open(file, 'rt') as f:
        try:
            if _suffix(file) == '.json':
                config = json.load(f)
            else:
                config = yaml.safe_load(f)
        except (json.JSONDecodeError, yaml.YAMLError) as ex:
            raise ParamError(f"Could not parse '{filename}': {str(ex)}")
    if not isinstance(config, dict):
        raise ParamError(f"'{filename}' should contain a mapping, not {type(config).__name__}.")
    return config


def read_weights(file: str | PathLike | OpenFile | IO[str]) -> np.ndarray:
    """
    Read p-Laplacian half node weights from a JSON list, or a text / CSV file with one value per
    row.

    :param file:
        File to read.  Can be a path or URI string, an :class:`~fsspec.core.OpenFile` object or a
        file object, opened in text mode (``'rt'``).
    """
    filename = utils.get_filename(file)
    with utils.Open(file, 'rt') as f:
        try:
            if _suffix(file) == '.json':
                values = json.load(f)
            else:
                values = [float(row[0]) for row in csv.reader(f) if len(row) > 0]
            weights = np.asarray(values, dtype=float)
        except (json.JSONDecodeError, ValueError, TypeError) as ex:
            raise ParamError(f"Could not read weights from '{filename}': {str(ex)}")
    if weights.ndim != 1:
        raise ParamError(f"'{filename}' should contain a flat list of weights.")
    return weights


def _format(value: Any) -> str:
    """Format a CSV cell, floats with 17 significant digits."""
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return utils.format_float(value)
    return str(value)


def _write_csv(
    file: str | PathLike | OpenFile | IO[str],
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    overwrite: bool = False,
) -> None:
    with utils.Open(file, 'wt', overwrite=overwrite, newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format(value) for value in row])


def _columns(prefix: str, dim: int) -> list[str]:
    return [f'{prefix}_{i}' for i in range(dim)]


def write_trajectory(
    file: str | PathLike | OpenFile | IO[str],
    trajectory: Trajectory,
    forcing: bool = True,
    overwrite: bool = False,
) -> None:
    """
    Write a trajectory to a CSV file with columns ``t, x_0..x_(n-1)[, f_0..f_(n-1)]``.

    :param file:
        File to write.  Can be a path or URI string, an :class:`~fsspec.core.OpenFile` object or
        a file object, opened in text mode (``'wt'``).
    :param trajectory:
        Trajectory to write.
    :param forcing:
        Whether to include the trajectory forcing (when it has one).
    :param overwrite:
        Whether to overwrite the file if it exists.
    """
    forcing = forcing and trajectory.forcing is not None
    header = ['t', *_columns('x', trajectory.dim)]
    header += _columns('f', trajectory.dim) if forcing else []
    rows = [
        [t, *x, *(trajectory.forcing[k] if forcing else [])]
        for k, (t, x) in enumerate(zip(trajectory.grid.times, trajectory.states))
    ]
    _write_csv(file, header, rows, overwrite=overwrite)


def write_trajectories(
    file: str | PathLike | OpenFile | IO[str],
    trajectories: Sequence[Trajectory],
    overwrite: bool = False,
) -> None:
    """Write a trajectory sample to a CSV file with columns ``sample, t, x_0..x_(n-1)``."""
    if len(trajectories) == 0:
        raise ValueError("'trajectories' should not be empty.")
    header = ['sample', 't', *_columns('x', trajectories[0].dim)]
    rows = [
        [i, t, *x]
        for i, trajectory in enumerate(trajectories)
        for t, x in zip(trajectory.grid.times, trajectory.states)
    ]
    _write_csv(file, header, rows, overwrite=overwrite)


def write_certificate(
    file: str | PathLike | OpenFile | IO[str],
    certificate: FilippovCertificate,
    overwrite: bool = False,
) -> None:
    """
    Write a Filippov certificate to a CSV file with columns ``t, tau, defect, bound, deviation,
    pass, allowance``.
    """
    rows = zip(
        certificate.times,
        certificate.tau,
        certificate.defect,
        certificate.bound,
        certificate.deviation,
        certificate.passed,
        certificate.allowance,
    )
    header = ['t', 'tau', 'defect', 'bound', 'deviation', 'pass', 'allowance']
    _write_csv(file, header, rows, overwrite=overwrite)


def write_pair(
    file: str | PathLike | OpenFile | IO[str], pair: AdmissiblePair, overwrite: bool = False
) -> None:
    """
    Write an admissible pair to a CSV file with columns ``t, x_0.., u_0..[, gamma_0..]``, where
    ``gamma`` is the selection path.
    """
    states, control, selection = pair.state.states, pair.control, pair.selection
    header = ['t', *_columns('x', states.shape[1]), *_columns('u', control.shape[1])]
    header += [] if selection is None else _columns('gamma', selection.shape[1])
    rows = [
        [t, *states[k], *control[k], *([] if selection is None else selection[k])]
        for k, t in enumerate(pair.state.grid.times)
    ]
    _write_csv(file, header, rows, overwrite=overwrite)


def write_surface(
    file: str | PathLike | OpenFile | IO[str], surface: ValueSurface, overwrite: bool = False
) -> None:
    """
    Write a value surface to a CSV file with columns ``xi_0.., lambda, m_hat, budget, seed``.
    Failed points have an ``nan`` value.
    """
    dim = len(surface.entries[0].xi) if surface.entries else 0
    header = [*_columns('xi', dim), 'lambda', 'm_hat', 'budget', 'seed']
    rows = [
        [*entry.xi, entry.lam, entry.value, entry.budget, entry.seed] for entry in surface.entries
    ]
    _write_csv(file, header, rows, overwrite=overwrite)


def write_sequence_report(
    file: str | PathLike | OpenFile | IO[str], report: SequenceReport, overwrite: bool = False
) -> None:
    """
    Write a sequence report to a CSV file with columns ``n, dist, value_gap, e_n, pass``.  ``pass``
    flags the per point tolerance check and ``e_n`` is empty for continuity reports.
    """
    set_dists = report.set_distances
    checked = report.value_gaps if set_dists is None else set_dists
    rows = [
        [
            n + 1,
            report.distances[n],
            report.value_gaps[n],
            None if set_dists is None else set_dists[n],
            bool(checked[n] <= report.tol),
        ]
        for n in range(len(report.distances))
    ]
    _write_csv(file, ['n', 'dist', 'value_gap', 'e_n', 'pass'], rows, overwrite=overwrite)


def write_liminf_steps(
    file: str | PathLike | OpenFile | IO[str],
    steps: Sequence[LiminfStep],
    overwrite: bool = False,
) -> None:
    """
    Write liminf construction steps to a CSV file with columns ``n, lambda, state_gap,
    state_bound, control_gap, control_bound, admissible, pass``.
    """
    rows = [
        [
            n + 1,
            step.lam,
            step.state_gap,
            step.state_bound,
            step.control_gap,
            step.control_bound,
            step.pair.report.passed,
            step.passed,
        ]
        for n, step in enumerate(steps)
    ]
    header = [
        'n', 'lambda', 'state_gap', 'state_bound', 'control_gap', 'control_bound', 'admissible',
        'pass',
    ]  # fmt: skip
    _write_csv(file, header, rows, overwrite=overwrite)


def write_pg_report(
    file: str | PathLike | OpenFile | IO[str], report: PGReport, overwrite: bool = False
) -> None:
    """Write a weak convergence report to a CSV file with columns ``n, functional_id, pairing,
    limit_pairing, gap``.
    """
    rows = [
        [n, fid, report.pairings[i, j], report.limit_pairings[j], report.gaps[i, j]]
        for i, n in enumerate(report.n_list)
        for j, fid in enumerate(report.functional_ids)
    ]
    header = ['n', 'functional_id', 'pairing', 'limit_pairing', 'gap']
    _write_csv(file, header, rows, overwrite=overwrite)


def _json_default(obj: Any) -> Any:
    """Convert numpy values for :func:`json.dump`."""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f'Object of type {type(obj).__name__} is not JSON serializable.')


def write_metadata(
    file: str | PathLike | OpenFile | IO[str], metadata: dict[str, Any], overwrite: bool = False
) -> None:
    """
    Write run metadata to a JSON file (sorted keys, 4 space indent).

    :param file:
        File to write.  Can be a path or URI string, an :class:`~fsspec.core.OpenFile` object or
        a file object, opened in text mode (``'wt'``).
    :param metadata:
        Metadata dictionary.
    :param overwrite:
        Whether to overwrite the file if it exists.
    """
    with utils.Open(file, 'wt', overwrite=overwrite) as f:
        json.dump(metadata, f, indent=4, sort_keys=True, default=_json_default)
