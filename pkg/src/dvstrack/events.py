"""Event, event-stream and spike-count-frame value types.

Streams are stored column-wise (one numpy array per field) so that a
few hundred thousand events can be binned and serialized without a
Python loop. Arrays handed to a stream are copied and frozen.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

DEFAULT_GEOMETRY = (128, 128)


class Polarity(enum.IntEnum):
    ON = 1
    OFF = -1


@dataclass(frozen=True)
class Event:
    """One address-event: pixel column, pixel row, timestamp (us), polarity."""

    x: int
    y: int
    t: int
    p: Polarity

    def __post_init__(self):
        # Polarity(...) raises ValueError for anything but +1/-1
        object.__setattr__(self, "p", Polarity(int(self.p)))
        for name in ("x", "y", "t"):
            object.__setattr__(self, name, int(getattr(self, name)))


def _frozen(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True).reshape(-1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EventStream:
    """Time-ordered AER events for a sensor of size ``geometry = (W, H)``.

    ``t_end`` is the exclusive end of the recording in microseconds when
    it is known (the simulator sets it; plain event files do not carry
    it). Construction does not validate; use :func:`validate_stream`.
    """

    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    p: np.ndarray
    geometry: tuple[int, int] = DEFAULT_GEOMETRY
    t_end: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x, np.int64))
        object.__setattr__(self, "y", _frozen(self.y, np.int64))
        object.__setattr__(self, "t", _frozen(self.t, np.int64))
        object.__setattr__(self, "p", _frozen(self.p, np.int8))
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise ValueError("event columns must have equal length")
        object.__setattr__(self, "geometry", (int(self.geometry[0]), int(self.geometry[1])))

    @classmethod
    def empty(cls, geometry=DEFAULT_GEOMETRY, t_end=None) -> "EventStream":
        return cls([], [], [], [], geometry, t_end)

    @classmethod
    def from_events(cls, events: Sequence[Event], geometry=DEFAULT_GEOMETRY, t_end=None):
        if not events:
            return cls.empty(geometry, t_end)
        x = [e.x for e in events]
        y = [e.y for e in events]
        t = [e.t for e in events]
        p = [int(e.p) for e in events]
        return cls(x, y, t, p, geometry, t_end)

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[Event]:
        for x, y, t, p in zip(self.x.tolist(), self.y.tolist(), self.t.tolist(), self.p.tolist()):
            yield Event(x, y, t, p)

    def __getitem__(self, i: int) -> Event:
        return Event(self.x[i], self.y[i], self.t[i], self.p[i])

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and self.t_end == other.t_end
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.p, other.p)
        )

    __hash__ = None

    def shifted(self, dt: int) -> "EventStream":
        t_end = None if self.t_end is None else self.t_end + dt
        return EventStream(self.x, self.y, self.t + dt, self.p, self.geometry, t_end)


@dataclass(frozen=True)
class Violation:
    index: int
    kind: str

    def __str__(self) -> str:
        return f"{self.kind} at index {self.index}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def messages(self) -> list[str]:
        return [str(v) for v in self.violations]


def validate_stream(stream: EventStream) -> ValidationReport:
    """Report every out-of-range coordinate, bad polarity, negative or
    decreasing timestamp, ordered by event index."""
    W, H = stream.geometry
    checks = [
        ("x out of range", (stream.x < 0) | (stream.x >= W)),
        ("y out of range", (stream.y < 0) | (stream.y >= H)),
        ("invalid polarity", (stream.p != 1) & (stream.p != -1)),
        ("negative timestamp", stream.t < 0),
    ]
    inv = np.zeros(len(stream), dtype=bool)
    if len(stream) > 1:
        inv[1:] = np.diff(stream.t) < 0
    checks.append(("timestamp inversion", inv))
    if stream.t_end is not None:
        checks.append(("timestamp beyond t_end", stream.t >= stream.t_end))

    found = []
    for order, (kind, mask) in enumerate(checks):
        for i in np.flatnonzero(mask).tolist():
            found.append((i, order, Violation(i, kind)))
    found.sort(key=lambda r: r[:2])
    return ValidationReport(tuple(v for _, _, v in found))


@dataclass(frozen=True, eq=False)
class SpikeCountFrame:
    """Per-pixel spike counts over one time bin.

    ``counts`` has shape ``(H, W)`` (row = y, column = x).
    """

    counts: np.ndarray
    bin_index: int = 0
    t_start: int = 0
    geometry: tuple[int, int] = field(init=False)

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64, copy=True)
        if c.ndim != 2:
            raise ValueError("counts must be a 2-D grid")
        if (c < 0).any():
            raise ValueError("counts must be non-negative")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "geometry", (c.shape[1], c.shape[0]))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpikeCountFrame):
            return NotImplemented
        return (
            self.bin_index == other.bin_index
            and self.t_start == other.t_start
            and np.array_equal(self.counts, other.counts)
        )

    __hash__ = None
