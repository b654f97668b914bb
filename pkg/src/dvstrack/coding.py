"""Spike-count coding: fold an event stream into per-bin count frames."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .events import EventStream, SpikeCountFrame


class PolarityMode(str, enum.Enum):
    BOTH = "both_summed"
    POSITIVE = "positive_only"
    NEGATIVE = "negative_only"


@dataclass(frozen=True)
class BinningConfig:
    bin_length: int = 10_000
    polarity_mode: PolarityMode = PolarityMode.BOTH

    def __post_init__(self):
        if int(self.bin_length) < 1:
            raise ValueError("bin_length must be >= 1 us")
        object.__setattr__(self, "polarity_mode", PolarityMode(self.polarity_mode))


def n_complete_bins(stream: EventStream, bin_length: int) -> int:
    """Number of bins to emit.

    With a known ``t_end`` only bins ending at or before it count. For
    files (no recorded end) the stream is taken to run through the bin
    holding its last event.
    """
    if stream.t_end is not None:
        return max(int(stream.t_end) // bin_length, 0)
    if len(stream) == 0:
        return 0
    return int(stream.t[-1]) // bin_length + 1


def iter_bins(stream: EventStream, cfg: BinningConfig = BinningConfig()) -> Iterator[SpikeCountFrame]:
    """Yield count frames one bin at a time (bin k covers
    ``[k * T, (k + 1) * T)``)."""
    T = int(cfg.bin_length)
    W, H = stream.geometry
    n_bins = n_complete_bins(stream, T)
    keep = np.ones(len(stream), dtype=bool)
    if cfg.polarity_mode is PolarityMode.POSITIVE:
        keep = stream.p > 0
    elif cfg.polarity_mode is PolarityMode.NEGATIVE:
        keep = stream.p < 0
    b = stream.t // T
    keep &= (b >= 0) & (b < n_bins)
    b, pix = b[keep], (stream.y * W + stream.x)[keep]
    order = np.argsort(b, kind="stable")
    b, pix = b[order], pix[order]
    edges = np.searchsorted(b, np.arange(n_bins + 1))
    for k in range(n_bins):
        counts = np.bincount(pix[edges[k]:edges[k + 1]], minlength=W * H).reshape(H, W)
        yield SpikeCountFrame(counts, bin_index=k, t_start=k * T)


def bin_events(stream: EventStream, cfg: BinningConfig = BinningConfig()) -> list[SpikeCountFrame]:
    return list(iter_bins(stream, cfg))


class FrameStats(NamedTuple):
    total: int
    active: int
    max_count: int


def frame_stats(frame: SpikeCountFrame) -> FrameStats:
    c = frame.counts
    return FrameStats(int(c.sum()), int(np.count_nonzero(c)), int(c.max()) if c.size else 0)


def frame_to_gray(frame: SpikeCountFrame) -> np.ndarray:
    """8-bit grayscale rendering, counts scaled linearly to the frame max."""
    c = frame.counts
    peak = c.max() if c.size else 0
    if peak == 0:
        return np.zeros(c.shape, dtype=np.uint8)
    return np.round(c * (255.0 / peak)).astype(np.uint8)
