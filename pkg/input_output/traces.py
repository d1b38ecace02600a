import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

SAMPLE_RATE_HZ = 1


class TraceParseError(ValueError):
    pass


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class CanTrace:
    """One trip of per-second CAN telemetry. Missing cells are stored as NaN."""

    trace_id: str
    feature_names: tuple
    samples: np.ndarray
    driver_label: Optional[str] = None
    sample_rate_hz: int = SAMPLE_RATE_HZ

    def __post_init__(self):
        names = tuple(self.feature_names)
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 2:
            raise SchemaError(f'Trace {self.trace_id}: samples must be a matrix, got {samples.ndim} dimensions')
        if samples.shape[0] < 1:
            raise SchemaError(f'Trace {self.trace_id}: duration must be at least one second')
        if samples.shape[1] != len(names):
            raise SchemaError(f'Trace {self.trace_id}: {samples.shape[1]} columns for {len(names)} feature names')
        if any(not name for name in names):
            raise SchemaError(f'Trace {self.trace_id}: empty feature name')
        duplicates = sorted({name for name in names if names.count(name) > 1})
        if duplicates:
            raise SchemaError(f'Trace {self.trace_id}: duplicate feature names {duplicates}')
        if np.isinf(samples).any():
            raise SchemaError(f'Trace {self.trace_id}: infinite values are not valid telemetry')
        if self.sample_rate_hz != SAMPLE_RATE_HZ:
            raise SchemaError(f'Only {SAMPLE_RATE_HZ} Hz traces are supported, got {self.sample_rate_hz}')
        samples.setflags(write=False)
        object.__setattr__(self, 'feature_names', names)
        object.__setattr__(self, 'samples', samples)

    @property
    def duration_s(self) -> int:
        return self.samples.shape[0]

    @property
    def feature_count(self) -> int:
        return len(self.feature_names)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.samples[:, self.feature_names.index(name)]
        except ValueError:
            raise SchemaError(f'Trace {self.trace_id} has no feature {name!r}') from None

    def select(self, features: Sequence[str]) -> np.ndarray:
        """Returns the (duration x len(features)) sub-matrix in the requested column order"""
        missing = [name for name in features if name not in self.feature_names]
        if missing:
            raise SchemaError(f'Trace {self.trace_id} is missing features {missing}')
        return self.samples[:, [self.feature_names.index(name) for name in features]]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.samples, columns=list(self.feature_names))


@dataclass(frozen=True)
class TraceSet:
    traces: tuple
    feature_names: tuple = field(default=())

    def __post_init__(self):
        traces = tuple(self.traces)
        if not traces:
            raise ValueError('A trace set needs at least one trace')
        names = traces[0].feature_names
        for trace in traces[1:]:
            if trace.feature_names != names:
                raise SchemaError(f'Trace {trace.trace_id}: {describe_mismatch(names, trace.feature_names)}')
        object.__setattr__(self, 'traces', traces)
        object.__setattr__(self, 'feature_names', names)

    def __len__(self):
        return len(self.traces)

    def __iter__(self) -> Iterator[CanTrace]:
        return iter(self.traces)

    def __getitem__(self, index):
        return self.traces[index]

    def by_driver(self) -> dict:
        """Groups traces by driver label in order of first appearance; unlabeled traces form one group"""
        groups = {}
        for trace in self.traces:
            groups.setdefault(trace.driver_label, []).append(trace)
        return groups

    def stacked(self, features: Sequence[str]) -> np.ndarray:
        """Concatenates the selected columns of every trace along the time axis"""
        return np.concatenate([trace.select(features) for trace in self.traces], axis=0)


def describe_mismatch(expected: Sequence[str], found: Sequence[str]) -> str:
    only_expected = [name for name in expected if name not in found]
    only_found = [name for name in found if name not in expected]
    if only_expected or only_found:
        return f'feature names differ, missing {only_expected}, unexpected {only_found}'
    moved = [name for position, name in enumerate(found) if expected[position] != name]
    return f'feature order differs at {moved}'


def parse_header(cells: Sequence[str], line_no: int = 1) -> tuple:
    names = tuple(cell.strip() for cell in cells)
    if not names or any(not name for name in names):
        raise TraceParseError(f'line {line_no}: header contains an empty feature name')
    if len(set(names)) != len(names):
        raise TraceParseError(f'line {line_no}: header contains duplicate feature names')
    return names


def parse_row(cells: Sequence[str], feature_names: Sequence[str], line_no: int) -> list:
    """Converts one CSV row to floats, empty cells become NaN"""
    if not cells and len(feature_names) == 1:  # csv yields no cells for a blank single-column row
        cells = ['']
    if len(cells) != len(feature_names):
        raise TraceParseError(f'line {line_no}: expected {len(feature_names)} values, found {len(cells)}')
    values = []
    for name, cell in zip(feature_names, cells):
        cell = cell.strip()
        if not cell:
            values.append(math.nan)
            continue
        try:
            value = float(cell)
        except ValueError:
            raise TraceParseError(f'line {line_no}: non-numeric value {cell!r} for feature {name!r}') from None
        if not math.isfinite(value):
            raise TraceParseError(f'line {line_no}: non-finite value {cell!r} for feature {name!r}')
        values.append(value)
    return values


def parse_trace(csv_text: str, trace_id: str, driver_label: Optional[str] = None) -> CanTrace:
    """Parses trace CSV text: header of feature names, one row per second, empty cell = missing"""
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = next(reader)
    except StopIteration:
        raise TraceParseError(f'Trace {trace_id}: empty file') from None
    feature_names = parse_header(header)

    rows = [parse_row(cells, feature_names, reader.line_num) for cells in reader]
    if not rows:
        raise TraceParseError(f'Trace {trace_id}: header only, no data rows')

    return CanTrace(trace_id=trace_id, feature_names=feature_names, samples=np.array(rows), driver_label=driver_label)


def serialize_trace(trace: CanTrace) -> str:
    return trace.to_frame().to_csv(index=False, na_rep='', lineterminator='\n')


def read_trace(path, driver_label: Optional[str] = None) -> CanTrace:
    path = Path(path)
    trace = parse_trace(path.read_text(encoding='utf-8'), trace_id=path.stem, driver_label=driver_label)
    logger.info(f'Read trace {trace.trace_id}: {trace.duration_s} s, {trace.feature_count} features')
    return trace


def write_trace(trace: CanTrace, path) -> None:
    Path(path).write_text(serialize_trace(trace), encoding='utf-8')


def merge_traces(traces: Sequence[CanTrace]) -> TraceSet:
    """Builds a TraceSet, input order preserved; feature names must match exactly, including order"""
    if not traces:
        raise ValueError('merge_traces needs at least one trace')
    return TraceSet(traces=tuple(traces))


def trace_stats(trace: CanTrace) -> pd.DataFrame:
    """Per-feature count, null_count, mean, std (population), min, max; NaN marks undefined statistics"""
    frame = trace.to_frame()
    stats = pd.DataFrame(
        {
            'count': frame.count(),
            'null_count': frame.isna().sum(),
            'mean': frame.mean(),
            'std': frame.std(ddof=0),
            'min': frame.min(),
            'max': frame.max(),
        }
    )
    stats.index.name = 'feature'
    return stats
