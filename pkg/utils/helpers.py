from itertools import groupby
from typing import Sequence


def skipped_runs(offsets: Sequence[int], stride_s: int = 1) -> list:
    """Groups skipped window offsets into (first, last) runs of windows one stride apart"""
    ordered = sorted(set(offsets))
    runs = []
    for _, run in groupby(enumerate(ordered), key=lambda item: item[1] - item[0] * stride_s):
        run = [offset for _, offset in run]
        runs.append((run[0], run[-1]))
    return runs


def describe_skipped(offsets: Sequence[int], stride_s: int = 1) -> str:
    """Skipped offsets for the log, e.g. [1, 2, 3, 7] -> '1-3, 7'"""
    parts = []
    for first, last in skipped_runs(offsets, stride_s):
        if last - first > stride_s:
            parts.append(f'{first}-{last}')
        else:
            parts.extend(str(offset) for offset in sorted({first, last}))
    return ', '.join(parts)
