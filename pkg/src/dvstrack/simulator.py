"""Behavioral DVS simulator.

Scenes are rendered lazily into intensity grids and converted to events
with a per-pixel log-intensity threshold-crossing model: a pixel fires
each time ``ln I`` moves a full threshold ``theta`` away from its stored
reference level, and the reference then moves by exactly that step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .events import DEFAULT_GEOMETRY, EventStream

# Guard against floor(4 - 1e-16) == 3 when a log excursion is an exact
# multiple of theta.
_CROSSING_EPS = 1e-9


class InvalidSceneError(ValueError):
    pass


class IntensitySequence:
    """Time-ordered intensity grids of shape ``(H, W)``, sampled every
    ``sample_period`` microseconds starting at t = 0.

    Samples may be backed by an array or produced on demand by
    ``frame_fn(k)``, which keeps long scenes out of memory.
    """

    def __init__(self, geometry, sample_period: int, n_samples: int,
                 frame_fn: Callable[[int], np.ndarray]):
        if n_samples < 2:
            raise InvalidSceneError("an intensity sequence needs at least 2 samples")
        if sample_period < 1:
            raise InvalidSceneError("sample_period must be >= 1 us")
        self.geometry = (int(geometry[0]), int(geometry[1]))
        self.sample_period = int(sample_period)
        self.n_samples = int(n_samples)
        self._frame_fn = frame_fn

    @classmethod
    def from_array(cls, samples, sample_period: int) -> "IntensitySequence":
        arr = np.asarray(samples, dtype=np.float64)
        if arr.ndim != 3:
            raise InvalidSceneError("samples must have shape (n, H, W)")
        if (arr < 0).any() or not np.isfinite(arr).all():
            raise InvalidSceneError("intensities must be finite and non-negative")
        return cls((arr.shape[2], arr.shape[1]), sample_period, arr.shape[0], lambda k: arr[k])

    @property
    def duration(self) -> int:
        return (self.n_samples - 1) * self.sample_period

    def __len__(self) -> int:
        return self.n_samples

    def __getitem__(self, k: int) -> np.ndarray:
        if not -self.n_samples <= k < self.n_samples:
            raise IndexError(k)
        return self._frame_fn(k % self.n_samples)

    def __iter__(self) -> Iterator[np.ndarray]:
        for k in range(self.n_samples):
            yield self._frame_fn(k)


@dataclass(frozen=True)
class SensorParams:
    theta: float = 0.1
    intensity_floor: float = 1e-6
    noise_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if not self.intensity_floor > 0:
            raise ValueError("intensity_floor must be positive")
        if not self.noise_rate >= 0:
            raise ValueError("noise_rate must be non-negative")


def reflect(p0: float, v: float, t_s, lo: float, hi: float):
    """Position of a point moving at constant speed ``v`` from ``p0`` that
    bounces elastically between ``lo`` and ``hi``."""
    span = hi - lo
    if span <= 0:
        return np.full_like(np.asarray(t_s, dtype=float), lo)
    u = np.mod(p0 - lo + v * np.asarray(t_s, dtype=float), 2 * span)
    return lo + np.where(u <= span, u, 2 * span - u)


@dataclass(frozen=True)
class BallScene:
    """A bright disk moving at constant speed over a uniform background.

    With ``bounce`` the disk reflects off walls inset ``margin`` pixels
    from the frame border, so it stays fully visible for any duration;
    otherwise it follows a straight line.
    """

    start: tuple[float, float] = (64.0, 64.0)
    velocity: tuple[float, float] = (0.0, 0.0)
    radius: float = 6.0
    foreground: float = 2.0
    background: float = 1.0
    duration: int = 1_000_000
    render_period: int = 1000
    geometry: tuple[int, int] = DEFAULT_GEOMETRY
    bounce: bool = True
    margin: float = 0.0

    def validate(self):
        W, H = self.geometry
        if not self.radius > 0:
            raise InvalidSceneError("radius must be positive")
        if self.render_period < 1 or self.duration < self.render_period:
            raise InvalidSceneError("need duration >= render_period >= 1 us")
        if not all(math.isfinite(v) for v in self.velocity):
            raise InvalidSceneError("velocity must be finite")
        if min(self.foreground, self.background) < 0:
            raise InvalidSceneError("intensities must be non-negative")
        x0, y0 = self.start
        if not (0 <= x0 <= W - 1 and 0 <= y0 <= H - 1):
            raise InvalidSceneError(f"ball starts outside the {W}x{H} frame at {self.start}")
        if self.margin < 0:
            raise InvalidSceneError("margin must be non-negative")
        inset = 2 * (self.radius + self.margin)
        if self.bounce and (inset > W - 1 or inset > H - 1):
            raise InvalidSceneError("ball and margin too large to bounce inside the frame")

    def center(self, t_us):
        """Ground-truth ball center (x, y) at time ``t_us``."""
        t_s = np.asarray(t_us, dtype=float) * 1e-6
        W, H = self.geometry
        (x0, y0), (vx, vy) = self.start, self.velocity
        if not self.bounce:
            return x0 + vx * t_s, y0 + vy * t_s
        lo = self.radius + self.margin
        # a start outside the walls is clamped onto the reflected path
        return (reflect(min(max(x0, lo), W - 1 - lo), vx, t_s, lo, W - 1 - lo),
                reflect(min(max(y0, lo), H - 1 - lo), vy, t_s, lo, H - 1 - lo))


@dataclass(frozen=True)
class TexturePanScene:
    """A static bitmap seen by a translating sensor.

    The bitmap is drawn with its top-left corner at ``origin + shift(t)``
    where ``shift`` grows as ``velocity * t``; with ``pan_limit`` set each
    shift component bounces within ``[-pan_limit, pan_limit]``. Points
    outside the bitmap take the ``background`` intensity.
    """

    bitmap: np.ndarray = field(repr=False, default=None)
    velocity: tuple[float, float] = (0.0, 0.0)
    origin: tuple[float, float] = (0.0, 0.0)
    background: float = 1.0
    duration: int = 1_000_000
    render_period: int = 1000
    geometry: tuple[int, int] = DEFAULT_GEOMETRY
    pan_limit: float | None = None

    def validate(self):
        if self.bitmap is None or np.ndim(self.bitmap) != 2:
            raise InvalidSceneError("texture_pan needs a 2-D bitmap")
        if (np.asarray(self.bitmap) < 0).any():
            raise InvalidSceneError("intensities must be non-negative")
        if self.render_period < 1 or self.duration < self.render_period:
            raise InvalidSceneError("need duration >= render_period >= 1 us")
        if not all(math.isfinite(v) for v in self.velocity):
            raise InvalidSceneError("velocity must be finite")

    def shift(self, t_us):
        t_s = np.asarray(t_us, dtype=float) * 1e-6
        vx, vy = self.velocity
        if self.pan_limit is None:
            return vx * t_s, vy * t_s
        L = self.pan_limit
        return reflect(0.0, vx, t_s, -L, L), reflect(0.0, vy, t_s, -L, L)


def _render_ball(spec: BallScene, t_us: int, ss: int = 4) -> np.ndarray:
    W, H = spec.geometry
    frame = np.full((H, W), float(spec.background))
    cx, cy = (float(c) for c in spec.center(t_us))
    r = spec.radius
    x_lo, x_hi = max(int(math.floor(cx - r - 1)), 0), min(int(math.ceil(cx + r + 1)), W - 1)
    y_lo, y_hi = max(int(math.floor(cy - r - 1)), 0), min(int(math.ceil(cy + r + 1)), H - 1)
    if x_lo > x_hi or y_lo > y_hi:
        return frame
    # pixel (i, j) has its center at integer coordinates (i, j)
    sub = (np.arange(ss) + 0.5) / ss - 0.5
    xs = (np.arange(x_lo, x_hi + 1)[:, None] + sub[None, :]).ravel()
    ys = (np.arange(y_lo, y_hi + 1)[:, None] + sub[None, :]).ravel()
    inside = ((xs[None, :] - cx) ** 2 + (ys[:, None] - cy) ** 2) <= r * r
    cover = inside.reshape(y_hi - y_lo + 1, ss, x_hi - x_lo + 1, ss).mean(axis=(1, 3))
    frame[y_lo:y_hi + 1, x_lo:x_hi + 1] += cover * (spec.foreground - spec.background)
    return frame


def _render_pan(spec: TexturePanScene, padded: np.ndarray, t_us: int) -> np.ndarray:
    W, H = spec.geometry
    sx, sy = (float(s) for s in spec.shift(t_us))
    # bitmap coordinates of every frame pixel, +1 for the background border
    u = np.arange(W) - spec.origin[0] - sx + 1.0
    v = np.arange(H) - spec.origin[1] - sy + 1.0
    ph, pw = padded.shape
    u = np.clip(u, 0.0, pw - 1.0)
    v = np.clip(v, 0.0, ph - 1.0)
    u0 = np.minimum(np.floor(u).astype(np.int64), pw - 2)
    v0 = np.minimum(np.floor(v).astype(np.int64), ph - 2)
    fu = (u - u0)[None, :]
    fv = (v - v0)[:, None]
    a = padded[v0[:, None], u0[None, :]]
    b = padded[v0[:, None], u0[None, :] + 1]
    c = padded[v0[:, None] + 1, u0[None, :]]
    d = padded[v0[:, None] + 1, u0[None, :] + 1]
    top = a * (1.0 - fu) + b * fu
    bot = c * (1.0 - fu) + d * fu
    return top * (1.0 - fv) + bot * fv


def render_scene(spec) -> IntensitySequence:
    """Render a :class:`BallScene` or :class:`TexturePanScene` lazily,
    one grid per ``render_period`` tick covering ``[0, duration]``."""
    spec.validate()
    n = spec.duration // spec.render_period + 1
    period = spec.render_period
    if isinstance(spec, BallScene):
        fn = lambda k: _render_ball(spec, k * period)
    elif isinstance(spec, TexturePanScene):
        bmp = np.asarray(spec.bitmap, dtype=np.float64)
        padded = np.pad(bmp, 1, constant_values=float(spec.background))
        fn = lambda k: _render_pan(spec, padded, k * period)
    else:
        raise InvalidSceneError(f"unknown scene type {type(spec).__name__}")
    return IntensitySequence(spec.geometry, period, n, fn)


def generate_events(scene: IntensitySequence, params: SensorParams = SensorParams()) -> EventStream:
    """Convert an intensity sequence into a time-sorted event stream.

    Between consecutive samples the log intensity of each pixel is taken
    to vary linearly; every threshold crossing becomes one event whose
    timestamp is interpolated inside the interval ``[t_prev, t_next)``.
    The returned stream has ``t_end = scene.duration``.
    """
    W, H = scene.geometry
    theta = params.theta
    dt = scene.sample_period

    prev = np.log(np.maximum(scene[0], params.intensity_floor)).ravel()
    ref0 = prev.copy()
    net = np.zeros(W * H, dtype=np.int64)  # reference = ref0 + net * theta

    chunks_idx, chunks_t, chunks_p = [], [], []
    for k in range(1, scene.n_samples):
        cur = np.log(np.maximum(scene[k], params.intensity_floor)).ravel()
        changed = np.flatnonzero(cur != prev)
        if changed.size:
            ref = ref0[changed] + net[changed] * theta
            diff = cur[changed] - ref
            n_ev = np.floor(np.abs(diff) / theta + _CROSSING_EPS).astype(np.int64)
            fire = n_ev > 0
            if fire.any():
                pix = changed[fire]
                n_ev = n_ev[fire]
                sgn = np.sign(diff[fire]).astype(np.int64)
                l_prev = prev[pix]
                slope = cur[pix] - l_prev
                rep_pix = np.repeat(pix, n_ev)
                j = np.arange(n_ev.sum()) - np.repeat(np.cumsum(n_ev) - n_ev, n_ev) + 1
                level = np.repeat(ref[fire], n_ev) + j * theta * np.repeat(sgn, n_ev)
                frac = (level - np.repeat(l_prev, n_ev)) / np.repeat(slope, n_ev)
                frac = np.clip(frac, 0.0, 1.0)
                t0 = (k - 1) * dt
                ts = t0 + np.minimum(np.ceil(frac * dt - 1e-6).astype(np.int64) - 1, dt - 1)
                ts = np.maximum(ts, t0)
                order = np.argsort(ts, kind="stable")
                chunks_idx.append(rep_pix[order])
                chunks_t.append(ts[order])
                chunks_p.append(np.repeat(sgn, n_ev)[order])
                net[pix] += sgn * n_ev
        prev = cur

    duration = scene.duration
    if params.noise_rate > 0:
        rng = np.random.default_rng(params.seed)
        counts = rng.poisson(params.noise_rate * duration * 1e-6, size=W * H)
        total = int(counts.sum())
        chunks_idx.append(np.repeat(np.arange(W * H), counts))
        chunks_t.append(rng.integers(0, max(duration, 1), size=total))
        chunks_p.append(rng.choice(np.array([-1, 1]), size=total))

    if not chunks_t:
        return EventStream.empty(scene.geometry, t_end=duration)
    idx = np.concatenate(chunks_idx)
    ts = np.concatenate(chunks_t)
    pol = np.concatenate(chunks_p)
    if params.noise_rate > 0:
        order = np.argsort(ts, kind="stable")
        idx, ts, pol = idx[order], ts[order], pol[order]
    return EventStream(idx % W, idx // W, ts, pol, scene.geometry, t_end=duration)


def event_rate_estimate(scene, params: SensorParams = SensorParams(), bin_length: int = 10_000) -> float:
    """Mean noiseless events per ``bin_length`` bin for a scene spec or
    an already rendered :class:`IntensitySequence`."""
    if not isinstance(scene, IntensitySequence):
        scene = render_scene(scene)
    quiet = SensorParams(params.theta, params.intensity_floor, 0.0, params.seed)
    n_events = len(generate_events(scene, quiet))
    return n_events / (scene.duration / bin_length)


def _stroke(canvas: np.ndarray, x0, y0, x1, y1, width: float, value: float):
    H, W = canvas.shape
    yy, xx = np.mgrid[0:H, 0:W]
    dx, dy = x1 - x0, y1 - y0
    L2 = dx * dx + dy * dy
    t = np.clip(((xx - x0) * dx + (yy - y0) * dy) / L2, 0.0, 1.0) if L2 else 0.0
    d2 = (xx - x0 - t * dx) ** 2 + (yy - y0 - t * dy) ** 2
    canvas[d2 <= (width / 2) ** 2] = value


# Polyline skeletons on a unit box (x right, y down) for a few glyphs.
_GLYPHS: dict[str, Sequence[Sequence[tuple[float, float]]]] = {
    "3": [[(0.1, 0.1), (0.9, 0.1), (0.5, 0.45), (0.9, 0.7), (0.75, 0.92), (0.1, 0.9)]],
    "5": [[(0.9, 0.08), (0.15, 0.08), (0.12, 0.45), (0.75, 0.45), (0.9, 0.7), (0.7, 0.92), (0.1, 0.9)]],
}


def digit_bitmap(digit: str = "3", size=(24, 32), stroke: float = 4.0,
                 ink: float = 0.2, card: float = 1.0) -> np.ndarray:
    """Dark glyph on a light card, shape ``(h, w)``."""
    w, h = size
    canvas = np.full((h, w), float(card))
    for line in _GLYPHS[digit]:
        pts = [(px * (w - 1), py * (h - 1)) for px, py in line]
        for (xa, ya), (xb, yb) in zip(pts, pts[1:]):
            _stroke(canvas, xa, ya, xb, yb, stroke, ink)
    return canvas


def cluttered_texture(geometry=DEFAULT_GEOMETRY, digit: str = "3", digit_at=(52, 48),
                      digit_size=(24, 32), n_clutter: int = 12, background: float = 1.0,
                      seed: int = 0) -> np.ndarray:
    """A scene bitmap with a digit card and random rectangular clutter
    kept clear of the card."""
    W, H = geometry
    rng = np.random.default_rng(seed)
    canvas = np.full((H, W), float(background))
    dx, dy = digit_at
    dw, dh = digit_size
    placed = 0
    for _ in range(50 * max(n_clutter, 1)):
        if placed >= n_clutter:
            break
        w, h = rng.integers(4, 14, size=2)
        x, y = rng.integers(0, W - w), rng.integers(0, H - h)
        if x < dx + dw + 4 and x + w > dx - 4 and y < dy + dh + 4 and y + h > dy - 4:
            continue
        canvas[y:y + h, x:x + w] = rng.choice([0.25, 0.45, 2.5, 4.0])
        placed += 1
    canvas[dy:dy + dh, dx:dx + dw] = digit_bitmap(digit, digit_size, card=3.0, ink=0.3)
    return canvas
