import dataclasses
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Sequence

import numpy as np
from loguru import logger

from input_output.traces import CanTrace
from utils.helpers import describe_skipped


class TraceTooShortError(ValueError):
    pass


class Label(str, Enum):
    """Window label and detector decision; the owner is the positive class"""

    OWNER = 'owner'
    THIEF = 'thief'


@dataclass(frozen=True)
class WindowTensor:
    values: np.ndarray  # (window_length_s x feature count)
    source_trace_id: str
    start_offset_s: int
    label: Optional[Label] = None
    features: tuple = ()

    @property
    def shape(self) -> tuple:
        return self.values.shape


class SlidingWindows(NamedTuple):
    windows: list
    skipped: list  # start offsets of windows overlapping a null


@dataclass(frozen=True)
class NormStats:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        low = np.asarray(self.min, dtype=np.float64)
        high = np.asarray(self.max, dtype=np.float64)
        if low.shape != high.shape or low.ndim != 1:
            raise ValueError(f'min/max arity mismatch: {low.shape} vs {high.shape}')
        if np.any(low > high):
            raise ValueError('NormStats requires min <= max for every feature')
        object.__setattr__(self, 'min', low)
        object.__setattr__(self, 'max', high)

    @property
    def arity(self) -> int:
        return self.min.shape[0]


def window_count(duration_s: int, window_length_s: int, stride_s: int) -> int:
    return (duration_s - window_length_s) // stride_s + 1


def extract_windows(
    trace: CanTrace, features: Sequence[str], window_length_s: int, stride_s: int, label: Optional[Label] = None
) -> SlidingWindows:
    """Cuts fixed-length windows at offsets 0, stride, 2*stride, ...; windows touching a null are skipped"""
    if trace.duration_s < window_length_s:
        raise TraceTooShortError(
            f'trace too short: {trace.trace_id} has {trace.duration_s} s, a window needs {window_length_s} s'
        )
    features = tuple(features)
    data = trace.select(features)
    # running count of null-bearing rows, so each window check is O(1)
    null_rows = np.concatenate([[0], np.cumsum(np.isnan(data).any(axis=1))])

    windows, skipped = [], []
    for offset in range(0, trace.duration_s - window_length_s + 1, stride_s):
        if null_rows[offset + window_length_s] - null_rows[offset]:
            skipped.append(offset)
            continue
        windows.append(
            WindowTensor(
                values=data[offset : offset + window_length_s].copy(),
                source_trace_id=trace.trace_id,
                start_offset_s=offset,
                label=label,
                features=features,
            )
        )

    if skipped:
        logger.warning(
            f'{trace.trace_id}: skipped {len(skipped)} window(s) with missing values at offsets '
            f'{describe_skipped(skipped, stride_s)}'
        )
    return SlidingWindows(windows=windows, skipped=skipped)


def slide_windows(trace: CanTrace, pipeline, label: Optional[Label] = None) -> SlidingWindows:
    """Unnormalized windows over the pipeline's kept features"""
    return extract_windows(
        trace, pipeline.kept_features, pipeline.config.window_length_s, pipeline.config.window_stride_s, label=label
    )


def fit_normalizer(training_windows: Sequence[WindowTensor]) -> NormStats:
    """Per-feature min/max over every entry of every training window"""
    if not training_windows:
        raise ValueError('fit_normalizer needs at least one window')
    stacked = np.concatenate([window.values for window in training_windows], axis=0)
    return NormStats(min=stacked.min(axis=0), max=stacked.max(axis=0))


def normalize(window: WindowTensor, stats: NormStats) -> WindowTensor:
    """Min-max scaling with training statistics; constant features map to 0.0, unseen values saturate"""
    if window.values.shape[1] != stats.arity:
        raise ValueError(f'Window has {window.values.shape[1]} features, normalizer expects {stats.arity}')
    span = stats.max - stats.min
    constant = span == 0
    scaled = (window.values - stats.min) / np.where(constant, 1.0, span)
    scaled = np.where(constant, 0.0, scaled)
    return dataclasses.replace(window, values=np.clip(scaled, 0.0, 1.0))
