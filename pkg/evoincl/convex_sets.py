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

"""Nonempty compact convex sets in finite dimensions: distances, projections, support functions
and the Hausdorff metric.
"""
from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from evoincl.enums import BodyKind
from evoincl.errors import CapacityError, DimensionError, InputError
from evoincl.utils import as_vector, readonly

logger = logging.getLogger(__name__)

_default_config = dict(vertex_cap=12, sphere_samples=2000, sphere_seed=0, polish_iter=50)
"""Default Hausdorff metric configuration."""


class ConvexBody(ABC):
    """Base class for nonempty, closed, bounded convex sets."""

    kind: BodyKind = None

    @property
    @abstractmethod
    def dim(self) -> int:
        """Dimension of the ambient space."""
        pass

    @abstractmethod
    def distances(self, points: np.ndarray) -> np.ndarray:
        """Return the distance from each row of a 2D ``points`` array to the body."""
        pass

    @abstractmethod
    def projections(self, points: np.ndarray) -> np.ndarray:
        """Return the nearest point of the body to each row of a 2D ``points`` array."""
        pass

    @abstractmethod
    def supports(self, directions: np.ndarray) -> np.ndarray:
        """Return the support function at each row of a 2D ``directions`` array."""
        pass

    @abstractmethod
    def farthest(self, y: np.ndarray) -> float:
        """Return the largest distance from ``y`` to a point of the body."""
        pass

    @abstractmethod
    def extreme_point(self, v: np.ndarray) -> np.ndarray:
        """Return a point of the body maximising ``<v, c>``."""
        pass

    @abstractmethod
    def vertices(self) -> np.ndarray:
        """Return the extreme points of the body as rows of a 2D array."""
        pass

    @abstractmethod
    def to_dict(self) -> dict:
        """Return a JSON serialisable dictionary representation."""
        pass

    @property
    @abstractmethod
    def center(self) -> np.ndarray:
        """Centre of the body."""
        pass

    def distance(self, y: np.ndarray) -> float:
        """Return the Euclidean distance from the vector ``y`` to the body."""
        return float(self.distances(as_vector(y, self.dim, 'y')[np.newaxis])[0])

    def project(self, y: np.ndarray) -> np.ndarray:
        """Return the nearest point of the body to the vector ``y``."""
        return self.projections(as_vector(y, self.dim, 'y')[np.newaxis])[0]

    def support(self, v: np.ndarray) -> float:
        """Return the support function ``sup <v, c>`` over points ``c`` of the body."""
        return float(self.supports(as_vector(v, self.dim, 'v')[np.newaxis])[0])

    def equals(self, other: ConvexBody, tol: float = 1e-12) -> bool:
        """Whether ``other`` has the same kind and representation up to ``tol``."""
        if other.kind != self.kind or other.dim != self.dim:
            return False
        d1, d2 = self.to_dict(), other.to_dict()
        return all(
            np.allclose(np.asarray(d1[k], dtype=float), np.asarray(d2[k], dtype=float), atol=tol)
            for k in d1
            if k != 'kind'
        )

    def __repr__(self) -> str:
        items = ', '.join(f'{k}={v}' for k, v in self.to_dict().items() if k != 'kind')
        return f'{type(self).__name__}({items})'


class Point(ConvexBody):
    """
    Singleton set ``{x}``.

    :param x:
        Point coordinates.
    """

    kind = BodyKind.point

    def __init__(self, x: Sequence[float]):
        self._x = readonly(as_vector(x, name='x'))

    @property
    def dim(self) -> int:
        return self._x.shape[0]

    @property
    def x(self) -> np.ndarray:
        """Point coordinates."""
        return self._x

    @property
    def center(self) -> np.ndarray:
        return self._x

    def distances(self, points: np.ndarray) -> np.ndarray:
        return np.linalg.norm(points - self._x, axis=-1)

    def projections(self, points: np.ndarray) -> np.ndarray:
        return np.broadcast_to(self._x, points.shape).copy()

    def supports(self, directions: np.ndarray) -> np.ndarray:
        return directions @ self._x

    def farthest(self, y: np.ndarray) -> float:
        return float(np.linalg.norm(y - self._x))

    def extreme_point(self, v: np.ndarray) -> np.ndarray:
        return self._x.copy()

    def vertices(self) -> np.ndarray:
        return self._x[np.newaxis].copy()

    def to_dict(self) -> dict:
        return dict(kind=self.kind.value, x=self._x.tolist())


class Box(ConvexBody):
    """
    Axis-aligned box ``{c : lo <= c <= hi}``.

    :param lo:
        Lower corner.
    :param hi:
        Upper corner.  Should satisfy ``lo[i] <= hi[i]`` for every coordinate.
    """

    kind = BodyKind.box

    def __init__(self, lo: Sequence[float], hi: Sequence[float]):
        lo = as_vector(lo, name='lo')
        hi = as_vector(hi, lo.shape[0], name='hi')
        if np.any(lo > hi) or np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise InputError("Box 'lo' should be less than or equal to 'hi' in every coordinate.")
        self._lo = readonly(lo)
        self._hi = readonly(hi)

    @property
    def dim(self) -> int:
        return self._lo.shape[0]

    @property
    def lo(self) -> np.ndarray:
        """Lower corner."""
        return self._lo

    @property
    def hi(self) -> np.ndarray:
        """Upper corner."""
        return self._hi

    @property
    def center(self) -> np.ndarray:
        return (self._lo + self._hi) / 2

    def distances(self, points: np.ndarray) -> np.ndarray:
        return np.linalg.norm(points - np.clip(points, self._lo, self._hi), axis=-1)

    def projections(self, points: np.ndarray) -> np.ndarray:
        return np.clip(points, self._lo, self._hi)

    def supports(self, directions: np.ndarray) -> np.ndarray:
        return np.sum(np.maximum(directions * self._lo, directions * self._hi), axis=-1)

    def farthest(self, y: np.ndarray) -> float:
        return float(np.linalg.norm(np.maximum(np.abs(y - self._lo), np.abs(y - self._hi))))

    def extreme_point(self, v: np.ndarray) -> np.ndarray:
        return np.where(v > 0, self._hi, np.where(v < 0, self._lo, self.center))

    def vertices(self) -> np.ndarray:
        bits = (np.arange(2**self.dim)[:, np.newaxis] >> np.arange(self.dim)) & 1
        return self._lo + bits * (self._hi - self._lo)

    def to_dict(self) -> dict:
        return dict(kind=self.kind.value, lo=self._lo.tolist(), hi=self._hi.tolist())


class Ball(ConvexBody):
    """
    Closed Euclidean ball ``{c : ||c - center|| <= radius}``.

    :param center:
        Ball centre.
    :param radius:
        Non-negative radius.
    """

    kind = BodyKind.ball

    def __init__(self, center: Sequence[float], radius: float):
        radius = float(radius)
        if not radius >= 0:
            raise InputError(f"Ball 'radius' should be non-negative, not {radius}.")
        self._center = readonly(as_vector(center, name='center'))
        self._radius = radius

    @property
    def dim(self) -> int:
        return self._center.shape[0]

    @property
    def center(self) -> np.ndarray:
        return self._center

    @property
    def radius(self) -> float:
        """Ball radius."""
        return self._radius

    def distances(self, points: np.ndarray) -> np.ndarray:
        return np.maximum(np.linalg.norm(points - self._center, axis=-1) - self._radius, 0.0)

    def projections(self, points: np.ndarray) -> np.ndarray:
        offsets = points - self._center
        norms = np.linalg.norm(offsets, axis=-1, keepdims=True)
        with np.errstate(divide='ignore', invalid='ignore'):
            scales = np.where(norms > self._radius, self._radius / norms, 1.0)
        return self._center + offsets * scales

    def supports(self, directions: np.ndarray) -> np.ndarray:
        return directions @ self._center + self._radius * np.linalg.norm(directions, axis=-1)

    def farthest(self, y: np.ndarray) -> float:
        return float(np.linalg.norm(y - self._center) + self._radius)

    def extreme_point(self, v: np.ndarray) -> np.ndarray:
        v_norm = np.linalg.norm(v)
        return self._center + (self._radius / v_norm) * v if v_norm > 0 else self._center.copy()

    def vertices(self) -> np.ndarray:
        if self._radius == 0:
            return self._center[np.newaxis].copy()
        raise InputError('A ball with positive radius has infinitely many extreme points.')

    def to_dict(self) -> dict:
        return dict(kind=self.kind.value, center=self._center.tolist(), radius=self._radius)


@dataclass(frozen=True)
class SetSequenceLimits:
    """Discrete Kuratowski lower and upper limits of a sequence of point clouds."""

    lower: list[np.ndarray] = field(default_factory=list)
    """Points within tolerance of every set in the sequence tail."""
    upper: list[np.ndarray] = field(default_factory=list)
    """Points within tolerance of sets throughout the sequence tail (a cofinal subset)."""


def create_body(kind: str | BodyKind, **kwargs) -> ConvexBody:
    """
    Create a convex body.

    :param kind:
        Body kind.
    :param kwargs:
        Keyword arguments of the corresponding body class (``x`` for points; ``lo``, ``hi`` for
        boxes; ``center``, ``radius`` for balls).
    """
    try:
        kind = BodyKind(kind)
    except ValueError:
        raise InputError(f"Unknown body kind: '{kind}'.")
    cls = {BodyKind.point: Point, BodyKind.box: Box, BodyKind.ball: Ball}[kind]
    try:
        return cls(**kwargs)
    except TypeError as ex:
        raise InputError(f"Invalid '{kind}' parameters: {str(ex)}")


def body_from_dict(body_dict: dict) -> ConvexBody:
    """Create a convex body from its ``{"kind": ..., ...}`` dictionary representation."""
    body_dict = dict(body_dict)
    if 'kind' not in body_dict:
        raise InputError("Body dictionary has no 'kind' key.")
    return create_body(body_dict.pop('kind'), **body_dict)


def _check_dims(*dims: int):
    if len(set(dims)) > 1:
        raise DimensionError(f'Dimensions do not match: {dims}.')


def distance(y: np.ndarray, body: ConvexBody) -> float:
    """
    Return the Euclidean distance from ``y`` to ``body``.

    :param y:
        Vector of the body's dimension.
    :param body:
        Convex body.

    :return:
        ``inf ||y - v||`` over points ``v`` of the body; zero iff ``y`` is in the body.
    """
    return body.distance(as_vector(y, body.dim, 'y'))


def project(y: np.ndarray, body: ConvexBody) -> np.ndarray:
    """Return the unique nearest point of ``body`` to ``y``."""
    return body.project(as_vector(y, body.dim, 'y'))


def support(v: np.ndarray, body: ConvexBody) -> float:
    """Return the support function of ``body`` in direction ``v``."""
    return body.support(as_vector(v, body.dim, 'v'))


def norm(body: ConvexBody) -> float:
    """Return ``sup ||c||`` over points ``c`` of ``body``."""
    return body.farthest(np.zeros(body.dim))


def scale(h: float, body: ConvexBody) -> ConvexBody:
    """Return the body ``h * body`` for ``h >= 0``."""
    h = float(h)
    if h < 0:
        raise InputError(f"Scale factor should be non-negative, not {h}.")
    if isinstance(body, Point):
        return Point(h * body.x)
    elif isinstance(body, Box):
        return Box(h * body.lo, h * body.hi)
    return Ball(h * body.center, h * body.radius)


def translate(body: ConvexBody, offset: np.ndarray) -> ConvexBody:
    """Return ``body`` translated by ``offset``."""
    offset = as_vector(offset, body.dim, 'offset')
    if isinstance(body, Point):
        return Point(body.x + offset)
    elif isinstance(body, Box):
        return Box(body.lo + offset, body.hi + offset)
    return Ball(body.center + offset, body.radius)


def minkowski_sum(body1: ConvexBody, body2: ConvexBody) -> ConvexBody:
    """
    Return the Minkowski sum of two bodies when it is representable (point with any body, box
    with box, ball with ball).  Box with ball sums are not boxes or balls, use
    :func:`minkowski_distance` for those.
    """
    _check_dims(body1.dim, body2.dim)
    if isinstance(body1, Point):
        return translate(body2, body1.x)
    if isinstance(body2, Point):
        return translate(body1, body2.x)
    if isinstance(body1, Box) and isinstance(body2, Box):
        return Box(body1.lo + body2.lo, body1.hi + body2.hi)
    if isinstance(body1, Ball) and isinstance(body2, Ball):
        return Ball(body1.center + body2.center, body1.radius + body2.radius)
    raise InputError('The Minkowski sum of a box and a ball is not a supported body kind.')


def minkowski_distance(y: np.ndarray, body1: ConvexBody, body2: ConvexBody) -> float:
    """Return the distance from ``y`` to the Minkowski sum ``body1 + body2``."""
    _check_dims(body1.dim, body2.dim)
    y = as_vector(y, body1.dim, 'y')
    if isinstance(body1, Ball) and not isinstance(body2, Ball):
        body1, body2 = body2, body1
    if isinstance(body2, Ball) and not isinstance(body1, Ball):
        # dist(y, B + ball(c, r)) = max(dist(y - c, B) - r, 0)
        return max(body1.distance(y - body2.center) - body2.radius, 0.0)
    return minkowski_sum(body1, body2).distance(y)


def sphere_directions(count: int, dim: int, seed: int = 0) -> np.ndarray:
    """Return ``count`` pseudo-random unit vectors of dimension ``dim`` as rows."""
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((count, dim))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return dirs / norms


def _ball_box_excess(ball: Ball, box: Box, samples: int, seed: int, polish_iter: int) -> float:
    """Return ``sup dist(w, box)`` over ``w`` in ``ball``, by sampling the ball's sphere and
    polishing the best samples with an ascent iteration.
    """
    center, radius = ball.center, ball.radius
    if radius == 0:
        return box.distance(center)

    dim = ball.dim
    cand_dirs = [sphere_directions(samples, dim, seed), np.eye(dim), -np.eye(dim)]
    for offset in (center - box.project(center), center - box.center):
        offset_norm = np.linalg.norm(offset)
        if offset_norm > 0:
            cand_dirs.append((offset / offset_norm)[np.newaxis])
    points = center + radius * np.vstack(cand_dirs)
    dists = box.distances(points)
    best = float(dists.max())

    # dist(., box) is convex, so w -> centre + radius * grad / |grad| never decreases it
    for idx in np.argsort(dists)[::-1][:8]:
        w = points[idx]
        for _ in range(polish_iter):
            grad = w - box.project(w)
            grad_norm = np.linalg.norm(grad)
            if grad_norm == 0:
                break
            w_next = center + radius * grad / grad_norm
            converged = np.linalg.norm(w_next - w) <= 1e-15 * (1 + radius)
            w = w_next
            if converged:
                break
        best = max(best, box.distance(w))
    return best


def excess(
    body1: ConvexBody,
    body2: ConvexBody,
    vertex_cap: int = _default_config['vertex_cap'],
    sphere_samples: int = _default_config['sphere_samples'],
    sphere_seed: int = _default_config['sphere_seed'],
    polish_iter: int = _default_config['polish_iter'],
) -> float:
    """
    Return the one-sided Hausdorff excess ``sup dist(c, body2)`` over points ``c`` of ``body1``.

    Exact for every pair except ball over box, which maximises over a sphere sampling plus
    closed-form candidates.  See :func:`hausdorff` for parameter descriptions.
    """
    _check_dims(body1.dim, body2.dim)
    if isinstance(body1, Point):
        return body2.distance(body1.x)
    if isinstance(body2, Point):
        return body1.farthest(body2.x)
    if isinstance(body1, Box):
        if body1.dim > vertex_cap:
            raise CapacityError(
                f'Box dimension {body1.dim} exceeds the vertex enumeration cap of {vertex_cap}.  '
                f'Use hormander_estimate() instead.'
            )
        return float(body2.distances(body1.vertices()).max())
    if isinstance(body2, Ball):
        return max(
            float(np.linalg.norm(body1.center - body2.center)) + body1.radius - body2.radius, 0.0
        )
    return _ball_box_excess(body1, body2, sphere_samples, sphere_seed, polish_iter)


def hausdorff(
    body1: ConvexBody,
    body2: ConvexBody,
    vertex_cap: int = _default_config['vertex_cap'],
    sphere_samples: int = _default_config['sphere_samples'],
    sphere_seed: int = _default_config['sphere_seed'],
    polish_iter: int = _default_config['polish_iter'],
) -> float:
    """
    Return the Hausdorff distance between two convex bodies.

    Ball pairs use the closed form ``||c1 - c2|| + |r1 - r2|``.  Boxes are handled by maximising
    the (convex) distance to the other body over their vertices.  The ball side of a box / ball
    pair maximises over a sphere sampling and closed-form candidates, polished by an ascent
    iteration (exact on boxes, accurate to ~1e-3 on balls).

    :param body1:
        First body.
    :param body2:
        Second body.
    :param vertex_cap:
        Largest box dimension for which vertices are enumerated.
    :param sphere_samples:
        Number of sphere directions sampled for box / ball pairs.
    :param sphere_seed:
        Seed of the sphere sampling.
    :param polish_iter:
        Maximum ascent iterations per polished sample.

    :return:
        Hausdorff distance.
    """
    _check_dims(body1.dim, body2.dim)
    if isinstance(body1, Ball) and isinstance(body2, Ball):
        return float(np.linalg.norm(body1.center - body2.center)) + abs(
            body1.radius - body2.radius
        )
    kwargs = dict(
        vertex_cap=vertex_cap,
        sphere_samples=sphere_samples,
        sphere_seed=sphere_seed,
        polish_iter=polish_iter,
    )
    return max(excess(body1, body2, **kwargs), excess(body2, body1, **kwargs))


def hormander_estimate(
    body1: ConvexBody, body2: ConvexBody, directions: Sequence[Sequence[float]] | np.ndarray
) -> float:
    """
    Return the Hörmander lower estimate of the Hausdorff distance, ``max |support(v, body1) -
    support(v, body2)|`` over the given unit ``directions``.

    :param body1:
        First body.
    :param body2:
        Second body.
    :param directions:
        Unit vectors as rows of a 2D array.

    :return:
        Lower bound on :func:`hausdorff`, exact in the limit of dense directions.
    """
    _check_dims(body1.dim, body2.dim)
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    if directions.size == 0:
        raise InputError("'directions' should not be empty.")
    if directions.shape[1] != body1.dim:
        raise DimensionError(
            f"'directions' have dimension {directions.shape[1]}, expected {body1.dim}."
        )
    if np.any(np.abs(np.linalg.norm(directions, axis=1) - 1) > 1e-12):
        raise InputError("'directions' should be unit vectors.")
    return float(np.max(np.abs(body1.supports(directions) - body2.supports(directions))))


def _as_clouds(sets) -> list[np.ndarray] | np.ndarray:
    """Return ``sets`` as a 3D array when rectangular, otherwise as a list of 2D arrays."""
    if isinstance(sets, np.ndarray):
        if sets.ndim == 2:
            return sets[:, np.newaxis, :] if sets.shape[1] else sets[:, :, np.newaxis]
        if sets.ndim != 3:
            raise InputError("'sets' array should be 3D with shape (count, points, dim).")
        return sets.astype(float, copy=False)
    clouds = []
    for cloud in sets:
        cloud = np.asarray(cloud, dtype=float)
        cloud = cloud.reshape(-1, 1) if cloud.ndim <= 1 else cloud
        if cloud.size == 0:
            raise InputError('Point clouds should be nonempty.')
        clouds.append(cloud)
    return clouds


def _cloud_distances(point: np.ndarray, clouds: list[np.ndarray] | np.ndarray) -> np.ndarray:
    """Return the distance from ``point`` to each cloud."""
    if isinstance(clouds, np.ndarray):
        return np.min(np.linalg.norm(clouds - point, axis=2), axis=1)
    return np.array([np.min(np.linalg.norm(cloud - point, axis=1)) for cloud in clouds])


def kuratowski_limits(
    sets: Sequence[Sequence[Sequence[float]]] | np.ndarray,
    tol: float,
    tail_fraction: float = 0.5,
    blocks: int = 4,
) -> SetSequenceLimits:
    """
    Return discrete Kuratowski lower and upper limits of a finite sequence of point clouds.

    The sequence tail is its last ``tail_fraction`` part.  Candidate limit points are tail
    points thinned to a ``tol`` net (points of the last cloud first).  A candidate is in the
    lower limit if it is within ``tol`` of every tail cloud, and in the upper limit if it is
    within ``tol`` of some cloud in each of ``blocks`` consecutive blocks of the tail (a cofinal
    subset).  Short tails use fewer blocks, so that each block holds at least two clouds.

    :param sets:
        Sequence of point clouds, each a 2D array of points (or a 1D array of scalars), or a 3D
        array of shape (count, points, dim).
    :param tol:
        Positive distance tolerance.
    :param tail_fraction:
        Fraction of the sequence treated as its tail.
    :param blocks:
        Largest number of tail blocks that an upper limit point should meet.

    :return:
        Lower and upper limits.
    """
    if tol <= 0:
        raise InputError(f"'tol' should be positive, not {tol}.")
    if not 0 < tail_fraction <= 1:
        raise InputError(f"'tail_fraction' should be in (0, 1], not {tail_fraction}.")
    clouds = _as_clouds(sets)
    count = len(clouds)
    if count == 0:
        raise InputError("'sets' should be a nonempty sequence.")
    if len({cloud.shape[1] for cloud in clouds}) > 1:
        raise DimensionError('Point clouds should share a dimension.')

    start = min(int(np.floor(count * (1 - tail_fraction))), count - 1)
    tail = clouds[start:]
    if isinstance(tail, np.ndarray):
        points = tail[::-1].reshape(-1, tail.shape[2])
    else:
        points = np.vstack(tail[::-1])

    candidates = []
    remaining = np.ones(points.shape[0], dtype=bool)
    while np.any(remaining):
        point = points[np.argmax(remaining)]
        candidates.append(point.copy())
        remaining &= np.linalg.norm(points - point, axis=1) > tol

    block_idx = np.array_split(np.arange(len(tail)), max(1, min(blocks, len(tail) // 2)))
    lower, upper = [], []
    for point in candidates:
        hits = _cloud_distances(point, tail) <= tol
        if np.all(hits):
            lower.append(point)
        if all(np.any(hits[idx]) for idx in block_idx):
            upper.append(point)
    logger.debug(f'Kuratowski limits: {len(candidates)} candidates, tail of {len(tail)} sets.')
    return SetSequenceLimits(lower=lower, upper=upper)
