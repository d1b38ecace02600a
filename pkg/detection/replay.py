import csv
import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

import numpy as np
from loguru import logger

from detection.detector import DetectionConfig, WindowVerdict, score_window, verdict
from input_output.traces import TraceParseError, parse_header, parse_row
from preprocessing.windows import WindowTensor
from rgan.checkpoint import Checkpoint


class StreamSchemaError(ValueError):
    pass


class StreamError(ValueError):
    pass


@dataclass(frozen=True)
class SkipEvent:
    """The window ending at this row overlaps a missing value in a kept feature"""

    start_offset_s: int

    def to_dict(self) -> dict:
        return {'offset_s': self.start_offset_s, 'skipped': True}


def _column_positions(kept: Sequence[str], feature_names: Sequence[str]) -> list:
    missing = [name for name in kept if name not in feature_names]
    if missing:
        raise StreamSchemaError(f'Stream lacks kept feature(s) {missing}')
    return [list(feature_names).index(name) for name in kept]


def _cell_value(value) -> float:
    """None and blank strings are missing values, as empty cells are in trace CSV"""
    if value is None or (isinstance(value, str) and not value.strip()):
        return np.nan
    return float(value)


def replay_stream(
    ckpt: Checkpoint,
    config: DetectionConfig,
    rows: Iterable[Union[Mapping, Sequence]],
    feature_names: Optional[Sequence[str]] = None,
    trace_id: str = 'stream',
) -> Iterator[Union[WindowVerdict, SkipEvent]]:
    """
    Real-time detection over per-second rows.

    Rows are mappings keyed by feature name, or sequences aligned with feature_names. Nothing is emitted until
    a full window has arrived; from then on every row (at the pipeline stride) yields one WindowVerdict for the
    latest window, or a SkipEvent when that window overlaps a null. A row that does not fit the schema raises
    StreamError and ends the stream.
    """
    kept = ckpt.pipeline.kept_features
    length = ckpt.pipeline.config.window_length_s
    stride = ckpt.pipeline.config.window_stride_s
    positions = None if feature_names is None else _column_positions(kept, feature_names)
    buffer = deque(maxlen=length)

    for index, row in enumerate(rows):
        try:
            if isinstance(row, Mapping):
                values = [_cell_value(row[name]) for name in kept]
            else:
                if positions is None:
                    raise StreamSchemaError('Sequence rows need the stream feature names')
                if len(row) != len(feature_names):
                    raise StreamSchemaError(f'expected {len(feature_names)} values, found {len(row)}')
                values = [_cell_value(row[position]) for position in positions]
        except (KeyError, TypeError, ValueError) as error:
            raise StreamError(f'Row {index}: {error}') from error

        buffer.append(values)
        if len(buffer) < length:
            continue
        offset = index - length + 1
        if offset % stride:
            continue
        window = np.array(buffer, dtype=np.float64)
        if np.isnan(window).any():
            yield SkipEvent(start_offset_s=offset)
            continue
        raw = WindowTensor(values=window, source_trace_id=trace_id, start_offset_s=offset, features=kept)
        yield verdict(raw, score_window(ckpt, raw), config)


def replay_csv(
    ckpt: Checkpoint, config: DetectionConfig, lines: Iterable[str], trace_id: str = 'stream'
) -> Iterator[Union[WindowVerdict, SkipEvent]]:
    """Replays trace CSV text consumed line by line; the header may carry more features than the pipeline keeps"""
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise StreamError('Replay input is empty') from None
    try:
        feature_names = parse_header(header)
    except TraceParseError as error:
        raise StreamError(str(error)) from error
    logger.info(f'Replaying {trace_id} over {len(feature_names)} stream features')

    def rows():
        for cells in reader:
            try:
                yield parse_row(cells, feature_names, reader.line_num)
            except TraceParseError as error:
                raise StreamError(str(error)) from error

    yield from replay_stream(ckpt, config, rows(), feature_names=feature_names, trace_id=trace_id)


def event_to_json(event: Union[WindowVerdict, SkipEvent]) -> str:
    return json.dumps(event.to_dict())
