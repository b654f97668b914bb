"""Compressed rectangle features.

A ``w x h`` window is described by the responses of every box filter of
size ``rx x ry`` (``1 <= rx <= w``, ``1 <= ry <= h``) anchored at every
window position ``(px, py)``, boxes clipped to the window. That is
``m = (w h)^2`` raw features. A very sparse random matrix with entries in
``{+sqrt(s), 0, -sqrt(s)}`` (``s = m / 4``) compresses them to ``n``
numbers, and each compressed feature is a signed sum of a handful of box
sums, read off an integral image in O(1) each.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .events import SpikeCountFrame


class PlacementError(ValueError):
    pass


class IntegralImage:
    """Summed-area table with a zero first row and column.

    ``table[j, i]`` is the sum of counts over rows ``< j`` and columns ``< i``.
    """

    def __init__(self, table: np.ndarray):
        self.table = table
        self.table.setflags(write=False)

    @property
    def frame_size(self) -> tuple[int, int]:
        h1, w1 = self.table.shape
        return w1 - 1, h1 - 1

    def rect_sum(self, x: int, y: int, w: int, h: int) -> float:
        T = self.table
        return T[y + h, x + w] - T[y, x + w] - T[y + h, x] + T[y, x]


def build_integral(frame) -> IntegralImage:
    counts = frame.counts if isinstance(frame, SpikeCountFrame) else np.asarray(frame)
    H, W = counts.shape
    table = np.zeros((H + 1, W + 1), dtype=np.float64)
    np.cumsum(np.cumsum(counts, axis=0), axis=1, out=table[1:, 1:])
    return IntegralImage(table)


@dataclass(frozen=True)
class FeatureIndexMap:
    """Bijection between flat feature indices ``[0, (wh)^2)`` and
    ``(rx, ry, px, py)``.

    Scales are ordered row-major by ``(ry, rx)`` and, within a scale,
    positions row-major by ``(py, px)``.
    """

    w: int
    h: int

    @property
    def size(self) -> int:
        return (self.w * self.h) ** 2

    def decode(self, flat):
        wh = self.w * self.h
        scale, pos = np.divmod(flat, wh)
        ry, rx = np.divmod(scale, self.w)
        py, px = np.divmod(pos, self.w)
        return rx + 1, ry + 1, px, py

    def encode(self, rx, ry, px, py):
        wh = self.w * self.h
        return ((ry - 1) * self.w + (rx - 1)) * wh + py * self.w + px

    def clipped(self, rx, ry, px, py):
        """Box ``(x, y, width, height)`` actually summed, inside the window."""
        return px, py, np.minimum(rx, self.w - px), np.minimum(ry, self.h - py)


@dataclass(frozen=True, eq=False)
class SparseMeasurementMatrix:
    """``n x (wh)^2`` measurement matrix stored row-wise as
    ``(rx, ry, px, py, sign)`` tuples; each entry weighs ``sign * sqrt(s)``."""

    n: int
    w: int
    h: int
    seed: int
    rows: tuple[tuple[tuple[int, int, int, int, int], ...], ...]

    @property
    def m(self) -> int:
        return (self.w * self.h) ** 2

    @property
    def s(self) -> float:
        return self.m / 4

    @property
    def magnitude(self) -> float:
        return math.sqrt(self.s)

    @property
    def index_map(self) -> FeatureIndexMap:
        return FeatureIndexMap(self.w, self.h)

    def __eq__(self, other):
        if not isinstance(other, SparseMeasurementMatrix):
            return NotImplemented
        return (self.n, self.w, self.h, self.seed, self.rows) == (
            other.n, other.w, other.h, other.seed, other.rows)

    def __hash__(self):
        return hash((self.n, self.w, self.h, self.seed, self.rows))

    def to_dense(self) -> np.ndarray:
        M = np.zeros((self.n, self.m))
        imap = self.index_map
        for i, row in enumerate(self.rows):
            for rx, ry, px, py, sign in row:
                M[i, imap.encode(rx, ry, px, py)] = sign * self.magnitude
        return M

    def to_text(self) -> str:
        lines = [f"n={self.n} w={self.w} h={self.h} seed={self.seed}"]
        for i, row in enumerate(self.rows):
            ents = " ".join(f"({rx},{ry},{px},{py},{sign:+d})" for rx, ry, px, py, sign in row)
            lines.append(f"{i}: {ents}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SparseMeasurementMatrix":
        head, *body = text.strip().splitlines()
        kv = dict(tok.split("=") for tok in head.split())
        rows = []
        for line in body:
            _, ents = line.split(":", 1)
            row = tuple(tuple(int(v) for v in m.split(","))
                        for m in re.findall(r"\(([^)]*)\)", ents))
            rows.append(row)
        return cls(int(kv["n"]), int(kv["w"]), int(kv["h"]), int(kv["seed"]), tuple(rows))

    @cached_property
    def corner_kernel(self) -> np.ndarray:
        """Integer weights on the ``(h+1) x (w+1)`` lattice of integral-image
        corners under the window, shape ``((h+1)(w+1), n)``.

        Every clipped box contributes +-1 at its four corners, so a row of
        the matrix times the box-filter bank equals ``magnitude`` times this
        kernel applied to the integral-image patch.
        """
        K = np.zeros(((self.h + 1) * (self.w + 1), self.n))
        stride = self.w + 1
        imap = self.index_map
        for i, row in enumerate(self.rows):
            for rx, ry, px, py, sign in row:
                x, y, bw, bh = imap.clipped(rx, ry, px, py)
                K[(y + bh) * stride + x + bw, i] += sign
                K[y * stride + x + bw, i] -= sign
                K[(y + bh) * stride + x, i] -= sign
                K[y * stride + x, i] += sign
        K.setflags(write=False)
        return K

    def patch_offsets(self, table_width: int) -> np.ndarray:
        """Flat offsets of the corner lattice inside a table of the given
        width (frame width + 1), row-major like :attr:`corner_kernel`."""
        dy, dx = np.mgrid[0:self.h + 1, 0:self.w + 1]
        return (dy * table_width + dx).ravel()


def sample_matrix(n: int = 50, window=(16, 16), seed: int = 0) -> SparseMeasurementMatrix:
    """Draw a very sparse measurement matrix.

    Each row gets ``K ~ Binomial(m, 1/s)`` nonzero entries (the count of
    i.i.d. nonzeros), redrawn while ``K == 0``, at distinct uniformly
    chosen feature indices with random signs.
    """
    w, h = window
    if w * h < 2:
        raise ValueError("window must contain at least 2 pixels")
    if n < 1:
        raise ValueError("n must be >= 1")
    imap = FeatureIndexMap(w, h)
    m = imap.size
    p = 4.0 / m  # 1/s with s = m/4
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n):
        k = 0
        while k == 0:
            k = int(rng.binomial(m, p))
        flat = np.sort(rng.choice(m, size=k, replace=False))
        signs = rng.integers(0, 2, size=k) * 2 - 1
        rx, ry, px, py = imap.decode(flat)
        rows.append(tuple(zip(rx.tolist(), ry.tolist(), px.tolist(), py.tolist(), signs.tolist())))
    return SparseMeasurementMatrix(n, w, h, seed, tuple(rows))


def project_many(matrix: SparseMeasurementMatrix, origins, ii: IntegralImage) -> np.ndarray:
    """Compressed features for many windows at once.

    ``origins`` is a ``(k, 2)`` array of window top-left corners ``(x, y)``;
    returns a ``(k, n)`` array.
    """
    origins = np.asarray(origins, dtype=np.int64).reshape(-1, 2)
    W, H = ii.frame_size
    x0, y0 = origins[:, 0], origins[:, 1]
    bad = (x0 < 0) | (y0 < 0) | (x0 + matrix.w > W) | (y0 + matrix.h > H)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise PlacementError(
            f"window {matrix.w}x{matrix.h} at ({x0[i]}, {y0[i]}) is outside the {W}x{H} frame")
    base = y0 * (W + 1) + x0
    patches = ii.table.ravel()[base[:, None] + matrix.patch_offsets(W + 1)[None, :]]
    # integer-valued operands keep the product exact; one rounding at the end
    return (patches @ matrix.corner_kernel) * matrix.magnitude


def project(matrix: SparseMeasurementMatrix, window_origin, ii: IntegralImage) -> np.ndarray:
    return project_many(matrix, [window_origin], ii)[0]
