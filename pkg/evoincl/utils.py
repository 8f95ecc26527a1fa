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

"""Utility functions for internal use."""
from __future__ import annotations

import cProfile
import logging
import os
import posixpath
import pstats
import tracemalloc
import uuid
from contextlib import contextmanager, ExitStack
from io import IOBase
from os import PathLike
from pathlib import Path
from typing import Any, Callable, IO, Iterable

import fsspec
import numpy as np
from fsspec.core import OpenFile
from fsspec.implementations.local import LocalFileSystem
from scipy import integrate
from tqdm.std import tqdm

from evoincl.errors import DimensionError, InputError

logger = logging.getLogger(__name__)

TimeFunction = Callable[[float], float]
"""Scalar function of time."""

_default_tqdm_kwargs = dict(
    bar_format='{l_bar}{bar}|{n_fmt}/{total_fmt} [{elapsed}<{remaining}]',
    dynamic_ncols=True,
    leave=True,
)
"""Default progress bar keyword arguments."""

workers_env_var = 'EVOINCL_WORKERS'
"""Environment variable holding the worker thread count."""


@contextmanager
def profiler():
    """Context manager for profiling in DEBUG log level."""
    if logger.getEffectiveLevel() <= logging.DEBUG:
        proc_profile = cProfile.Profile()
        tracemalloc.start()
        proc_profile.enable()

        yield

        proc_profile.disable()
        # tottime is the time spent in a function alone, cumtime includes its callees
        proc_stats = pstats.Stats(proc_profile).sort_stats('cumtime')
        logger.debug(f'Processing times:')
        proc_stats.print_stats(20)
        current, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        logger.debug(
            f"Memory usage: current: {current / 10 ** 6:.1f} MB, peak: {peak / 10 ** 6:.1f} MB"
        )
    else:
        yield


def get_workers() -> int:
    """Return the worker thread count from the environment, or the CPU count if it is not set."""
    value = os.environ.get(workers_env_var, None)
    if value is None or value.strip() == '':
        return os.cpu_count() or 1
    try:
        workers = int(value)
    except ValueError:
        raise InputError(f"'{workers_env_var}' should be an integer, not '{value}'.")
    if workers < 1:
        raise InputError(f"'{workers_env_var}' should be at least 1.")
    return workers


def progress_bar(progress: bool | dict, **kwargs) -> tqdm:
    """
    Return a ``tqdm`` progress bar.

    :param progress:
        Whether to display a bar (``True`` / ``False``), or a dictionary of custom ``tqdm``
        keyword arguments.
    :param kwargs:
        Keyword arguments (e.g. ``total``, ``desc``) that override the defaults.
    """
    if progress is True:
        return tqdm(**{**_default_tqdm_kwargs, **kwargs})
    elif progress is False or progress is None:
        return tqdm(disable=True, leave=False, **kwargs)
    return tqdm(**{**progress, **kwargs})


def as_vector(x: Any, dim: int | None = None, name: str = 'x') -> np.ndarray:
    """Return ``x`` as a 1D float array, checking its length against ``dim`` if given."""
    vec = np.atleast_1d(np.asarray(x, dtype=float))
    if vec.ndim != 1:
        raise DimensionError(f"'{name}' should be a 1D vector.")
    if dim is not None and vec.shape[0] != dim:
        raise DimensionError(f"'{name}' has dimension {vec.shape[0]}, expected {dim}.")
    return vec


def readonly(array: np.ndarray) -> np.ndarray:
    """Return a read-only float copy of ``array``."""
    array = np.array(array, dtype=float)
    array.flags.writeable = False
    return array


def as_time_function(value: float | TimeFunction, name: str = 'value') -> TimeFunction:
    """Return ``value`` as a function of time.  Constants are wrapped in a constant function."""
    if callable(value):
        return value
    try:
        const = float(value)
    except (TypeError, ValueError):
        raise InputError(f"'{name}' should be a number or a function of time.")
    fn = lambda t: const
    # keep the constant so norms can be evaluated exactly
    fn.constant = const
    return fn


def time_norm(fn: TimeFunction, horizon: float, p: float = 1.0) -> float:
    """Return the L^p(0, horizon) norm of the time function ``fn``."""
    const = getattr(fn, 'constant', None)
    if const is not None:
        return abs(const) * horizon ** (1 / p)
    value, _ = integrate.quad(lambda t: abs(fn(t)) ** p, 0.0, horizon, limit=200)
    return value ** (1 / p)


def point_seed(seed: int, *values: float | Iterable[float]) -> int:
    """
    Return a seed derived from a base ``seed`` and the bit patterns of ``values``.  The result
    depends only on the values, not on the order in which points are visited.
    """
    flat = np.concatenate([np.atleast_1d(np.asarray(v, dtype=float)) for v in values] or [[]])
    words = flat.view(np.uint64).tolist() if flat.size else []
    return int(np.random.SeedSequence([int(seed), *words]).generate_state(1, dtype=np.uint64)[0])


def format_float(value: float) -> str:
    """Format ``value`` with 17 significant digits."""
    return f'{float(value):.17g}'


def validate_collection(template: Iterable, coll: Iterable):
    """
    Validate a nested dict / list of values (``coll``) against a nested dict / list of types, tuples
    of types, and values (``template``).

    All items in a ``coll`` list are validated against the first item in the corresponding
    ``template`` list.
    """
    # adapted from https://stackoverflow.com/questions/45812387/how-to-validate-structure-or-schema-of-dictionary-in-python
    if isinstance(template, dict) and isinstance(coll, dict):
        for k in template:
            if k in coll:
                validate_collection(template[k], coll[k])
            else:
                raise KeyError(f"No key: '{k}'.")
    elif isinstance(template, list) and isinstance(coll, list) and len(template) and len(coll):
        for item in coll:
            validate_collection(template[0], item)
    elif isinstance(template, type):
        if not isinstance(coll, template):
            raise TypeError(f"'{coll}' is not an instance of {template}.")
    elif isinstance(template, tuple) and all([isinstance(item, type) for item in template]):
        if not isinstance(coll, template):
            raise TypeError(f"'{coll}' is not an instance of any of {template}.")
    elif isinstance(template, object) and template is not None:
        if not coll == template:
            raise ValueError(f"'{coll}' does not equal '{template}'.")


def get_filename(file: str | PathLike | OpenFile | IO) -> str:
    """Return a filename for the given ``file`` object.  If ``file`` is an
    :class:`~fsspec.core.OpenFile` instance or file object, it should have a ``filename``
    attribute i.e. have been created by :class:`Open`.
    """
    if isinstance(file, OpenFile):
        filename = getattr(file, 'filename', Path(file.path).name)
    elif isinstance(file, IOBase):
        filename = getattr(file, 'filename', Path(getattr(file, 'name', '<file object>')).name)
    else:
        filename = Path(os.fspath(file)).name
    return filename


def join_ofile(base: str | PathLike | OpenFile, rel: str, mode: str = None, **kwargs) -> OpenFile:
    """Return an fsspec OpenFile whose path is a join of the ``base`` path with the ``rel`` path."""
    if not isinstance(base, OpenFile):
        base = fsspec.open(os.fspath(base), mode or 'rt')

    joined_path = posixpath.join(base.path, rel)
    return OpenFile(base.fs, joined_path, mode=mode or base.mode, **kwargs)


class Open:
    """
    Context manager for local or remote file IO.

    Local files opened for writing are written to a temporary sibling file that replaces the
    target when the context exits without an exception.

    :param file:
        A path, URI, :class:`~fsspec.core.OpenFile` instance, or file object.  If it is a file
        object, it is returned unaltered on entering the context, not closed on exiting the
        context, and ``mode`` and ``kwargs`` are ignored.  If is an OpenFile instance, it should
        be opened in ``mode`` (``kwargs`` are ignored).
    :param mode:
        Mode in which the file is opened.
    :param overwrite:
        Whether to overwrite an existing file in ``'w*'`` mode.  Ignored in ``'r*'`` mode.
    :param kwargs:
        Keyword arguments to pass to :func:`fsspec.open`.
    """

    def __init__(
        self,
        file: str | PathLike | IO | OpenFile,
        mode='rt',
        overwrite: bool = False,
        **kwargs,
    ):
        self._exit_stack = ExitStack()
        self._tmp_path = None
        self._dst_path = None
        if isinstance(file, IOBase):
            if file.closed:
                raise IOError('File object is closed.')
            if getattr(file, 'mode', mode) != mode:
                # note: fsspec text mode file objects do not have a mode property
                raise IOError(f"File object mode should match the mode argument: '{mode}'.")
            self._file_obj = file

        elif isinstance(file, (OpenFile, str, PathLike)):
            if isinstance(file, OpenFile):
                if mode != file.mode:
                    raise IOError(
                        f"OpenFile object mode: '{file.mode}', should match the mode argument:"
                        f" '{mode}'."
                    )
                ofile = file
            else:
                ofile = fsspec.open(os.fspath(file), mode, **kwargs)

            if not overwrite and 'w' in mode and ofile.fs.exists(ofile.path):
                raise FileExistsError(f"File exists: '{ofile.path}'")

            if 'w' in mode and isinstance(ofile.fs, LocalFileSystem):
                self._dst_path = ofile.path
                self._tmp_path = f'{ofile.path}.{uuid.uuid4().hex}.tmp'
                ofile = OpenFile(
                    ofile.fs,
                    self._tmp_path,
                    mode=mode,
                    encoding=getattr(ofile, 'encoding', None),
                    newline=getattr(ofile, 'newline', None),
                )

            self._file_obj = self._exit_stack.enter_context(ofile)
            self._file_obj.filename = get_filename(file)

        else:
            raise TypeError(f"Unsupported 'file' type: {type(file)}")

    def __enter__(self) -> IO:
        return self._file_obj

    def __exit__(self, exc_type, exc_val, exc_tb):
        self._exit_stack.__exit__(exc_type, exc_val, exc_tb)
        if self._tmp_path is not None:
            if exc_type is None:
                os.replace(self._tmp_path, self._dst_path)
            elif os.path.exists(self._tmp_path):
                os.remove(self._tmp_path)
            self._tmp_path = None

    def close(self):
        self.__exit__(None, None, None)
