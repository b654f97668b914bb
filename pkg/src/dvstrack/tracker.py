"""Single-object tracker over spike-count frames.

Every bin: score all integer translations of the current box within the
search radius, move to the best one, then refresh the classifier with
windows near the new box (positives) and in an annulus around it
(negatives).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, NamedTuple

import numpy as np

from . import classifier
from .classifier import ClassifierParams
from .events import SpikeCountFrame
from .features import SparseMeasurementMatrix, build_integral, project_many, sample_matrix


class TrackerInitError(ValueError):
    pass


@dataclass(frozen=True)
class TrackerConfig:
    search_radius: int = 20
    positive_radius: int = 4
    neg_inner: int = 8
    neg_outer: int = 30
    negative_count: int = 50
    n_features: int = 50
    lam: float = classifier.DEFAULT_LAMBDA
    sigma_floor: float = classifier.DEFAULT_SIGMA_FLOOR
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.positive_radius < self.neg_inner <= self.neg_outer:
            raise ValueError("need 0 < positive_radius < neg_inner <= neg_outer")
        if self.search_radius < 1:
            raise ValueError("search_radius must be >= 1")
        if self.negative_count < 1 or self.n_features < 1:
            raise ValueError("negative_count and n_features must be >= 1")


class BoundingBox(NamedTuple):
    x: int
    y: int
    w: int
    h: int

    @property
    def center(self) -> tuple[float, float]:
        return self.x + (self.w - 1) / 2, self.y + (self.h - 1) / 2

    def fits(self, geometry) -> bool:
        W, H = geometry
        return self.w >= 2 and self.h >= 2 and self.x >= 0 and self.y >= 0 \
            and self.x + self.w <= W and self.y + self.h <= H


class TrajectoryRecord(NamedTuple):
    bin_index: int
    t_start: int
    bbox: BoundingBox
    score: float
    events_in_bin: int


@lru_cache(maxsize=None)
def _lattice(r2_lo: int, r2_hi: int, inclusive_hi: bool) -> np.ndarray:
    """Integer shifts ``(dx, dy)`` with ``r2_lo < d^2 < r2_hi`` (``<=`` if
    ``inclusive_hi``), in row-major order of ``(dy, dx)``."""
    r = int(np.ceil(np.sqrt(r2_hi)))
    dy, dx = np.mgrid[-r:r + 1, -r:r + 1]
    d2 = dx * dx + dy * dy
    keep = (d2 > r2_lo) & ((d2 <= r2_hi) if inclusive_hi else (d2 < r2_hi))
    out = np.column_stack([dx[keep], dy[keep]])
    out.setflags(write=False)
    return out


def disk_shifts(radius: int) -> np.ndarray:
    """Shifts strictly inside a disk, including the zero shift."""
    return _lattice(-1, radius * radius, False)


def annulus_shifts(inner: int, outer: int) -> np.ndarray:
    return _lattice(inner * inner, outer * outer, True)


def _in_frame(bbox: BoundingBox, shifts: np.ndarray, geometry) -> np.ndarray:
    W, H = geometry
    x = bbox.x + shifts[:, 0]
    y = bbox.y + shifts[:, 1]
    ok = (x >= 0) & (y >= 0) & (x + bbox.w <= W) & (y + bbox.h <= H)
    return np.column_stack([x[ok], y[ok]])


def candidate_windows(bbox: BoundingBox, radius: int, geometry) -> np.ndarray:
    return _in_frame(bbox, disk_shifts(radius), geometry)


def positive_windows(bbox: BoundingBox, config: TrackerConfig, geometry) -> np.ndarray:
    return _in_frame(bbox, disk_shifts(config.positive_radius), geometry)


def negative_windows(bbox: BoundingBox, config: TrackerConfig, geometry, rng) -> np.ndarray:
    pool = _in_frame(bbox, annulus_shifts(config.neg_inner, config.neg_outer), geometry)
    if len(pool) <= config.negative_count:
        return pool
    pick = np.sort(rng.choice(len(pool), size=config.negative_count, replace=False))
    return pool[pick]


@dataclass(eq=False)
class TrackerState:
    bbox: BoundingBox
    matrix: SparseMeasurementMatrix
    params: ClassifierParams
    config: TrackerConfig
    geometry: tuple[int, int]
    bin_count: int = 0
    rng: np.random.Generator = field(repr=False, default=None)


def _training_sets(state: TrackerState, ii):
    pos = positive_windows(state.bbox, state.config, state.geometry)
    neg = negative_windows(state.bbox, state.config, state.geometry, state.rng)
    if len(neg) == 0:
        raise TrackerInitError(f"no negative window fits around {tuple(state.bbox)}")
    return project_many(state.matrix, pos, ii), project_many(state.matrix, neg, ii)


def init_tracker(frame0: SpikeCountFrame, bbox0, config: TrackerConfig = TrackerConfig()) -> TrackerState:
    """Build the measurement matrix and fit the classifier on the first bin."""
    bbox0 = BoundingBox(*(int(v) for v in bbox0))
    if not bbox0.fits(frame0.geometry):
        raise TrackerInitError(f"box {tuple(bbox0)} does not fit the {frame0.geometry} frame")
    # separate streams so the matrix does not depend on sampling history
    matrix_seed, sample_seed = np.random.SeedSequence(config.seed).generate_state(2)
    matrix = sample_matrix(config.n_features, (bbox0.w, bbox0.h), int(matrix_seed))
    state = TrackerState(bbox0, matrix, None, config, frame0.geometry, 1,
                         np.random.default_rng(int(sample_seed)))
    ii = build_integral(frame0)
    pos, neg = _training_sets(state, ii)
    state.params = classifier.init_params(pos, neg, config.lam, config.sigma_floor)
    return state


def track_step(state: TrackerState, frame: SpikeCountFrame) -> tuple[TrackerState, TrajectoryRecord]:
    """Locate the object in ``frame`` and refresh the classifier.

    ``state`` is advanced in place and also returned. Ties between equal
    scores go to the smallest ``(dy, dx)`` shift.
    """
    if frame.geometry != state.geometry:
        raise ValueError(f"frame geometry {frame.geometry} != tracker geometry {state.geometry}")
    ii = build_integral(frame)
    cands = candidate_windows(state.bbox, state.config.search_radius, state.geometry)
    h = classifier.score(state.params, project_many(state.matrix, cands, ii))
    best = int(np.argmax(h))
    x, y = cands[best]
    state.bbox = BoundingBox(int(x), int(y), state.bbox.w, state.bbox.h)
    pos, neg = _training_sets(state, ii)
    state.params = classifier.update(state.params, pos, neg)
    state.bin_count += 1
    rec = TrajectoryRecord(frame.bin_index, frame.t_start, state.bbox, float(h[best]), frame.total)
    return state, rec


def track(frames: Iterable[SpikeCountFrame], bbox0, config: TrackerConfig = TrackerConfig()) -> list[TrajectoryRecord]:
    """Run the tracker over a frame sequence; one record per frame."""
    it = iter(frames)
    try:
        first = next(it)
    except StopIteration:
        raise ValueError("track needs at least one frame") from None
    state = init_tracker(first, bbox0, config)
    ii = build_integral(first)
    h0 = classifier.score(state.params, project_many(state.matrix, [state.bbox[:2]], ii))[0]
    records = [TrajectoryRecord(first.bin_index, first.t_start, state.bbox, float(h0), first.total)]
    for frame in it:
        _, rec = track_step(state, frame)
        records.append(rec)
    return records
