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

from contextlib import contextmanager
from io import TextIOWrapper
from pathlib import Path

import fsspec
import numpy as np
import pytest

from evoincl import utils
from evoincl.errors import DimensionError, InputError


@pytest.mark.parametrize('file', ['linear_instance_file', 'weights_file'])
def test_get_filename(file: str, request: pytest.FixtureRequest):
    """Test get_filename() returns with different ``file`` objects."""
    file = request.getfixturevalue(file)
    exp_val = Path(file).name
    assert utils.get_filename(file) == exp_val
    assert utils.get_filename(str(file)) == exp_val
    ofile = fsspec.open(str(file), 'rt')
    assert utils.get_filename(ofile) == exp_val
    with utils.Open(file, 'rt') as f:
        assert utils.get_filename(f) == exp_val


@pytest.mark.parametrize('file', ['linear_instance_file', 'weights_file'])
def test_join_ofile(file: str, request: pytest.FixtureRequest):
    """Test join_ofile() returns valid OpenFile instances for existing paths, with different base
    path types, and with and without trailing slashes on the base path.
    """
    file = request.getfixturevalue(file)
    ofile = fsspec.open(str(file))
    parts = str(file).replace('\\', '/').split('/')

    for path_type in [str, fsspec.open, Path]:
        for pidx in [1, 2]:
            _base_path = '/'.join(parts[:-pidx])
            rel_path = '/'.join(parts[-pidx:])

            for base_path in map(path_type, [_base_path, _base_path + '/']):
                join_ofile = utils.join_ofile(base_path, rel_path)
                assert isinstance(join_ofile, fsspec.core.OpenFile)
                assert join_ofile.path == ofile.path
                assert join_ofile.fs.exists(join_ofile.path)


def test_open_read(linear_instance_file: Path):
    """Test Open in ``'rt'`` mode with path / URI, fsspec OpenFile and file objects."""
    file = linear_instance_file

    def _test_open_read(_file, test_closed: bool = True, **kwargs):
        """Test Open for the given ``_file`` object."""
        with utils.Open(_file, 'rt', **kwargs) as _f:
            assert isinstance(_f, TextIOWrapper)
            assert not _f.closed
            assert _f.filename == file.name
            assert '"dimension"' in _f.read()
        if test_closed:
            assert _f.closed

    kwargs = dict(newline=None, encoding='utf8')
    _test_open_read(file, **kwargs)
    _test_open_read(str(file))
    _test_open_read(fsspec.open(str(file), 'rt'))
    with utils.Open(file, 'rt', **kwargs) as f:
        _test_open_read(f, test_closed=False, **kwargs)
    assert f.closed


def test_open_write(tmp_path: Path):
    """Test Open in ``'w'`` mode with path / URI, fsspec OpenFile and file objects."""
    file = tmp_path.joinpath('test_open_write.txt')

    @contextmanager
    def _test_temp_file(filename: Path):
        """Test ``filename`` exists on exit, then delete."""
        try:
            yield filename
        finally:
            assert filename.exists()
            assert filename.read_text()
            filename.unlink()

    def _test_open_write(_file, test_closed: bool = True, **kwargs):
        """Test Open for the given ``_file`` object."""
        with utils.Open(_file, 'wt', **kwargs) as _f:
            assert isinstance(_f, TextIOWrapper)
            assert not _f.closed
            assert _f.filename == Path(file).name
            _f.write('test')
        if test_closed:
            assert _f.closed

    kwargs = dict(newline=None, encoding='utf8')
    with _test_temp_file(file):
        _test_open_write(file, **kwargs)
    with _test_temp_file(file):
        _test_open_write(fsspec.open(str(file), 'wt'), **kwargs)
    with _test_temp_file(file):
        with utils.Open(file, 'wt', **kwargs) as f:
            _test_open_write(f, test_closed=False, **kwargs)
        assert f.closed
    # no temporary files remain
    assert list(tmp_path.iterdir()) == []


def test_open_write_error(tmp_path: Path):
    """Test Open does not create the target file when the context exits with an exception."""
    file = tmp_path.joinpath('test_open_write_error.txt')
    with pytest.raises(ValueError):
        with utils.Open(file, 'wt') as f:
            f.write('partial')
            raise ValueError('write failed')
    assert list(tmp_path.iterdir()) == []


def test_open_overwrite(tmp_path: Path):
    """Test the Open ``overwrite`` argument."""
    file = tmp_path.joinpath('test_open_overwrite.txt')
    file.touch()

    def _test_open_overwrite(_file, overwrite: bool):
        with utils.Open(_file, 'wt', overwrite=overwrite) as _f:
            _f.write('test')

    # test overwriting an existing file with overwrite=True
    _test_open_overwrite(file, overwrite=True)
    assert file.read_text() == 'test'
    _test_open_overwrite(fsspec.open(str(file), 'wt'), overwrite=True)

    # test writing to an existing file with overwrite=False raises FileExistsError
    with pytest.raises(FileExistsError) as ex:
        _test_open_overwrite(file, overwrite=False)
    assert file.name in str(ex.value)
    with pytest.raises(FileExistsError) as ex:
        _test_open_overwrite(fsspec.open(str(file), 'wt'), overwrite=False)
    assert file.name in str(ex.value)


def test_open_not_found_error(tmp_path: Path):
    """Test Open raises a FileNotFoundError error with non-existing file paths."""
    file = str(tmp_path.joinpath('unknown', 'unknown.txt'))
    with pytest.raises(FileNotFoundError):
        with utils.Open(file, 'rt'):
            pass
    ofile = fsspec.open(file, 'rt')
    with pytest.raises(FileNotFoundError):
        with utils.Open(ofile, 'rt'):
            pass


def test_open_error(linear_instance_file: Path):
    """Test Open raises errors with mismatched modes, closed file objects and unsupported types."""
    with pytest.raises(IOError):
        utils.Open(fsspec.open(str(linear_instance_file), 'rt'), 'rb')
    with utils.Open(linear_instance_file, 'rt') as f:
        pass
    with pytest.raises(IOError):
        utils.Open(f, 'rt')
    with pytest.raises(TypeError):
        utils.Open(1, 'rt')


def test_as_vector():
    """Test ``as_vector()`` conversion and dimension checks."""
    assert utils.as_vector(1).tolist() == [1.0]
    assert utils.as_vector([1, 2], 2).dtype == float
    with pytest.raises(DimensionError):
        utils.as_vector([[1.0]])
    with pytest.raises(DimensionError) as ex:
        utils.as_vector([1.0, 2.0], 3, 'xi')
    assert 'xi' in str(ex.value)


def test_readonly():
    """Test ``readonly()`` returns a read-only copy."""
    src = np.arange(3)
    array = utils.readonly(src)
    assert array.dtype == float
    with pytest.raises(ValueError):
        array[0] = 1.0
    src[0] = 5
    assert array[0] == 0.0


def test_as_time_function():
    """Test ``as_time_function()`` with constants and functions."""
    fn = utils.as_time_function(2.0)
    assert fn(0.3) == 2.0
    assert fn.constant == 2.0
    sin = utils.as_time_function(np.sin)
    assert sin is np.sin
    with pytest.raises(InputError):
        utils.as_time_function('two', 'a2')


@pytest.mark.parametrize(
    'fn, p, expected',
    [
        (utils.as_time_function(-2.0), 1, 4.0),
        (utils.as_time_function(2.0), 2, 2.0 * np.sqrt(2.0)),
        (lambda t: t, 1, 2.0),
        (lambda t: t, 2, np.sqrt(8 / 3)),
    ],
)
def test_time_norm(fn, p: float, expected: float):
    """Test ``time_norm()`` known values on ``[0, 2]``."""
    assert utils.time_norm(fn, 2.0, p) == pytest.approx(expected, rel=1e-10)


def test_point_seed():
    """Test ``point_seed()`` depends on the seed and point values only."""
    seed = utils.point_seed(1, np.array([0.5, 1.0]), 0.25)
    assert seed == utils.point_seed(1, [0.5, 1.0], np.float64(0.25))
    assert seed != utils.point_seed(2, [0.5, 1.0], 0.25)
    assert seed != utils.point_seed(1, [0.5, 1.0], 0.5)
    assert seed != utils.point_seed(1, [1.0, 0.5], 0.25)
    assert utils.point_seed(1, [0.0], np.nan) == utils.point_seed(1, [0.0], np.nan)
    assert 0 <= seed < 2**64


@pytest.mark.parametrize('value', [0.1, 1 / 3, -2.5e-300, 1e20, np.pi])
def test_format_float(value: float):
    """Test ``format_float()`` keeps 17 significant digits."""
    assert float(utils.format_float(value)) == value


def test_get_workers(monkeypatch: pytest.MonkeyPatch):
    """Test ``get_workers()`` reads the environment variable."""
    monkeypatch.setenv(utils.workers_env_var, '3')
    assert utils.get_workers() == 3
    monkeypatch.setenv(utils.workers_env_var, '')
    assert utils.get_workers() >= 1
    monkeypatch.delenv(utils.workers_env_var)
    assert utils.get_workers() >= 1
    for value in ['three', '0']:
        monkeypatch.setenv(utils.workers_env_var, value)
        with pytest.raises(InputError):
            utils.get_workers()


def test_progress_bar(capsys: pytest.CaptureFixture):
    """Test ``progress_bar()`` with disabled, default and custom bars."""
    with utils.progress_bar(False, total=2) as bar:
        bar.update(2)
    assert capsys.readouterr().err == ''

    with utils.progress_bar(True, total=2, desc='Test') as bar:
        bar.update(2)
    assert 'Test' in capsys.readouterr().err

    with utils.progress_bar(dict(desc='Custom', leave=True), total=2) as bar:
        bar.update(2)
    assert 'Custom' in capsys.readouterr().err


def test_validate_collection():
    """Test ``validate_collection()`` with valid and invalid collections."""
    template = dict(dimension=int, grid=dict, operator=dict(kind=str), xi=[(int, float)])
    coll = dict(dimension=1, grid={}, operator=dict(kind='linear'), xi=[0, 0.5])
    utils.validate_collection(template, coll)
    with pytest.raises(KeyError):
        utils.validate_collection(template, dict(dimension=1, grid={}))
    with pytest.raises(TypeError):
        utils.validate_collection(template, dict(dimension=1.0, grid={}, operator={}, xi=[]))
    with pytest.raises(ValueError):
        utils.validate_collection(dict(kind='linear'), dict(kind='prox'))
