import dataclasses
import math
from typing import Optional, Sequence

import numpy as np
from loguru import logger

from detection.detector import DetectionConfig, score_windows, verdict
from preprocessing.windows import Label, WindowTensor
from report.metrics import MetricsReport, confusion, metrics
from rgan.checkpoint import Checkpoint


class InsufficientPoolError(ValueError):
    pass


def owner_share(size: int, owner_ratio: float) -> int:
    """round(size * owner_ratio) with halves rounded up"""
    return math.floor(size * owner_ratio + 0.5)


def largest_test_size(owner_available: int, thief_available: int, owner_ratio: float) -> int:
    for size in range(owner_available + thief_available, 0, -1):
        owners = owner_share(size, owner_ratio)
        if owners <= owner_available and size - owners <= thief_available:
            return size
    return 0


def compose_test_set(
    owner_pool: Sequence[WindowTensor],
    thief_pool: Sequence[WindowTensor],
    owner_ratio: float = 0.8,
    size: Optional[int] = None,
    seed: int = 0,
) -> list:
    """
    Samples owner and thief windows without replacement at the requested ratio and shuffles them together.

    Without a size the largest set the pools allow at that ratio is drawn. Returned windows carry their label.
    """
    if not 0 < owner_ratio < 1:
        raise ValueError(f'owner_ratio must be in (0, 1), got {owner_ratio}')
    if size is None:
        size = largest_test_size(len(owner_pool), len(thief_pool), owner_ratio)
    if size < 1:
        raise InsufficientPoolError(
            f'Cannot compose a test set from {len(owner_pool)} owner and {len(thief_pool)} thief windows'
        )
    owners = owner_share(size, owner_ratio)
    thieves = size - owners
    if owners > len(owner_pool) or thieves > len(thief_pool):
        raise InsufficientPoolError(
            f'Test set of {size} needs {owners} owner and {thieves} thief windows, '
            f'available {len(owner_pool)} owner and {len(thief_pool)} thief'
        )

    rng = np.random.default_rng(seed)
    owner_picks = rng.choice(len(owner_pool), size=owners, replace=False)
    thief_picks = rng.choice(len(thief_pool), size=thieves, replace=False)
    test_set = [dataclasses.replace(owner_pool[i], label=Label.OWNER) for i in owner_picks]
    test_set += [dataclasses.replace(thief_pool[i], label=Label.THIEF) for i in thief_picks]
    order = rng.permutation(size)
    logger.info(f'Test set: {owners} owner + {thieves} thief windows (ratio {owner_ratio})')
    return [test_set[i] for i in order]


def evaluate(ckpt: Checkpoint, config: DetectionConfig, test_set: Sequence[WindowTensor]) -> MetricsReport:
    """Scores and classifies every labeled raw window, then counts against the labels"""
    unlabeled = [window for window in test_set if window.label is None]
    if unlabeled:
        raise ValueError(f'{len(unlabeled)} test window(s) carry no owner/thief label')
    scores = score_windows(ckpt, test_set)
    verdicts = [verdict(window, float(score), config) for window, score in zip(test_set, scores)]
    report = metrics(confusion(verdicts, [window.label for window in test_set]))
    logger.info(
        f'Evaluation at threshold {config.threshold:.4f}: accuracy={report.accuracy:.3f} '
        f'precision={report.precision:.3f} recall={report.recall:.3f} f1={report.f1:.3f}'
    )
    return report
