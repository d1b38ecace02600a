from dataclasses import dataclass
from typing import Sequence

import pandas as pd

from preprocessing.windows import Label

TABLE_COLUMNS = ['Driver', 'Training set', 'Accuracy', 'Precision', 'Recall', 'F1 Score']


class EmptyConfusionError(ValueError):
    pass


class LengthMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with the owner as the positive class: fp is a thief accepted as the owner"""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        for name in ('tp', 'fp', 'fn', 'tn'):
            if getattr(self, name) < 0:
                raise ValueError(f'{name} must be non-negative, got {getattr(self, name)}')

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return {'tp': self.tp, 'fp': self.fp, 'fn': self.fn, 'tn': self.tn}


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: ConfusionMatrix
    owner_count: int
    thief_count: int

    def to_dict(self) -> dict:
        return {
            'accuracy': self.accuracy,
            'precision': self.precision,
            'recall': self.recall,
            'f1': self.f1,
            'confusion': self.confusion.to_dict(),
            'composition': {'owner': self.owner_count, 'thief': self.thief_count},
        }

    def to_frame(self, driver: str = '', training_seconds=None) -> pd.DataFrame:
        """One table row in the Driver / Training set / Accuracy / Precision / Recall / F1 Score layout"""
        training = '' if training_seconds is None else f'{int(training_seconds)} s'
        return pd.DataFrame(
            [[driver, training, self.accuracy, self.precision, self.recall, self.f1]], columns=TABLE_COLUMNS
        )


def confusion(decisions: Sequence, labels: Sequence) -> ConfusionMatrix:
    """decisions are WindowVerdicts or bare Labels, labels the ground truth of the same windows"""
    if len(decisions) != len(labels):
        raise LengthMismatchError(f'{len(decisions)} verdicts but {len(labels)} labels')
    counts = {'tp': 0, 'fp': 0, 'fn': 0, 'tn': 0}
    for decision, label in zip(decisions, labels):
        decided_owner = Label(getattr(decision, 'decision', decision)) == Label.OWNER
        is_owner = Label(label) == Label.OWNER
        if is_owner:
            counts['tp' if decided_owner else 'fn'] += 1
        else:
            counts['fp' if decided_owner else 'tn'] += 1
    return ConfusionMatrix(**counts)


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator else 0.0


def metrics(matrix: ConfusionMatrix) -> MetricsReport:
    """
    Accuracy, precision, recall and F1 (harmonic mean) with the owner as the positive class.

    Precision, recall and F1 are 0.0 where their denominators vanish.
    """
    if matrix.total < 1:
        raise EmptyConfusionError('Cannot compute metrics on an empty confusion matrix')
    precision = _ratio(matrix.tp, matrix.tp + matrix.fp)
    recall = _ratio(matrix.tp, matrix.tp + matrix.fn)
    return MetricsReport(
        accuracy=(matrix.tp + matrix.tn) / matrix.total,
        precision=precision,
        recall=recall,
        f1=_ratio(2 * precision * recall, precision + recall),
        confusion=matrix,
        owner_count=matrix.tp + matrix.fn,
        thief_count=matrix.fp + matrix.tn,
    )


def render_table(rows: Sequence[pd.DataFrame], average: bool = False) -> str:
    """Aligned text table with three decimals, optionally closed by an Average row over the metric columns"""
    table = pd.concat(list(rows), ignore_index=True)
    if average and len(table):
        means = table[TABLE_COLUMNS[2:]].mean()
        table.loc[len(table)] = ['Average', ''] + means.tolist()
    return table.to_string(index=False, float_format=lambda value: f'{value:.3f}')
