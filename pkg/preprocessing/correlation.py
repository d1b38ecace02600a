from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd
from loguru import logger

from input_output.traces import TraceSet


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class PruneResult:
    kept: tuple
    dropped: tuple  # (dropped feature, kept partner) in scan order


def correlation_matrix(trace_set: TraceSet, features: Sequence[str]) -> pd.DataFrame:
    """
    Pearson correlation over the concatenated traces, pairwise-complete on non-null rows.

    Zero-variance features (or pairs without two overlapping rows) get correlation 0.0 with every
    other feature so that pruning stays total. The diagonal is exactly 1.0.
    """
    features = list(features)
    frame = pd.DataFrame(trace_set.stacked(features), columns=features)
    counts = frame.count()
    for name in features:
        if counts[name] < 2:
            raise InsufficientDataError(f'Feature {name!r} has {counts[name]} usable values, at least 2 needed')

    matrix = frame.corr(method='pearson', min_periods=2).fillna(0.0).clip(-1.0, 1.0)
    values = matrix.to_numpy(copy=True)
    np.fill_diagonal(values, 1.0)

    return pd.DataFrame(values, index=features, columns=features)


def prune_correlated(matrix: pd.DataFrame, features: Sequence[str], threshold: float) -> PruneResult:
    """Greedy scan in feature order; of each pair with |corr| > threshold the later feature is dropped"""
    features = list(features)
    values = matrix.loc[features, features].to_numpy()
    kept = [True] * len(features)
    dropped = []

    for i in range(len(features)):
        if not kept[i]:
            continue
        for j in range(i + 1, len(features)):
            if kept[j] and abs(values[i, j]) > threshold:  # upper triangle only
                kept[j] = False
                dropped.append((features[j], features[i]))

    for name, partner in dropped:
        logger.info(f'Dropping {name}: |corr| with {partner} above {threshold}')

    return PruneResult(kept=tuple(name for name, keep in zip(features, kept) if keep), dropped=tuple(dropped))
