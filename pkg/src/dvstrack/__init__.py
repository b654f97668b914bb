"""Neuromorphic-vision single-object tracking.

DVS event streams (simulated or read from jAER recordings) are folded
into spike-count frames, and an object is followed through those frames
with compressed rectangle features and an online Gaussian naive Bayes
classifier.
"""
from .classifier import ClassifierParams, batch_estimate, init_params, score, update
from .coding import BinningConfig, PolarityMode, bin_events, frame_stats, iter_bins
from .eventio import FormatError, read_aedat, read_events_text, write_aedat, write_events_text
from .events import Event, EventStream, Polarity, SpikeCountFrame, validate_stream
from .features import (
    FeatureIndexMap,
    IntegralImage,
    SparseMeasurementMatrix,
    build_integral,
    project,
    project_many,
    sample_matrix,
)
from .simulator import (
    BallScene,
    IntensitySequence,
    SensorParams,
    TexturePanScene,
    event_rate_estimate,
    generate_events,
    render_scene,
)
from .tracker import BoundingBox, TrackerConfig, TrajectoryRecord, init_tracker, track, track_step

__version__ = "0.1.0"
