import json
from dataclasses import dataclass
from typing import Optional, Sequence

import pandas as pd
from loguru import logger

from input_output.traces import CanTrace, SchemaError, TraceSet, merge_traces
from preprocessing.correlation import correlation_matrix, prune_correlated
from preprocessing.feature_catalog import feature_category
from preprocessing.feature_config import FeatureConfig
from preprocessing.filter_rules import apply_filter_rules
from preprocessing.windows import (
    Label,
    NormStats,
    SlidingWindows,
    WindowTensor,
    extract_windows,
    fit_normalizer,
    normalize,
    slide_windows,
)
from utils.timing import timing_decorator

PIPELINE_VERSION = 1

REASON_CORRELATED = 'corr-pair'
REASON_CATALOG = 'catalog'


class NoWindowsError(ValueError):
    pass


@dataclass(frozen=True)
class DroppedFeature:
    name: str
    reason: str
    partner: Optional[str] = None  # kept feature of a correlated pair, not persisted


@dataclass(frozen=True)
class FeaturePipeline:
    kept_features: tuple
    norm_stats: NormStats
    config: FeatureConfig
    dropped: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, 'kept_features', tuple(self.kept_features))
        object.__setattr__(self, 'dropped', tuple(self.dropped))
        if self.norm_stats.arity != len(self.kept_features):
            raise ValueError(
                f'Normalizer arity {self.norm_stats.arity} does not match {len(self.kept_features)} kept features'
            )
        names = [item.name for item in self.dropped]
        if len(set(names)) != len(names):
            raise ValueError('Every dropped feature must carry exactly one reason')

    @property
    def feature_count(self) -> int:
        return len(self.kept_features)

    def windows(self, trace: CanTrace, label: Optional[Label] = None) -> SlidingWindows:
        return slide_windows(trace, self, label=label)

    def normalize(self, window: WindowTensor) -> WindowTensor:
        return normalize(window, self.norm_stats)

    def normalized_windows(self, traces: Sequence[CanTrace], label: Optional[Label] = None) -> list:
        return [self.normalize(window) for trace in traces for window in self.windows(trace, label=label).windows]

    def drop_report(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                (item.name, feature_category(item.name) or '', item.reason, item.partner or '')
                for item in self.dropped
            ],
            columns=['feature', 'category', 'reason', 'partner'],
        )

    def to_dict(self) -> dict:
        return {
            'version': PIPELINE_VERSION,
            'kept_features': list(self.kept_features),
            'dropped': [{'name': item.name, 'reason': item.reason} for item in self.dropped],
            'norm': {'min': self.norm_stats.min.tolist(), 'max': self.norm_stats.max.tolist()},
            'config': self.config.to_dict(),
        }

    @classmethod
    def from_dict(cls, document: dict) -> 'FeaturePipeline':
        if document.get('version') != PIPELINE_VERSION:
            raise ValueError(f'Unsupported feature pipeline version {document.get("version")!r}')
        return cls(
            kept_features=tuple(document['kept_features']),
            norm_stats=NormStats(min=document['norm']['min'], max=document['norm']['max']),
            config=FeatureConfig(**document['config']),
            dropped=tuple(DroppedFeature(item['name'], item['reason']) for item in document['dropped']),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> 'FeaturePipeline':
        return cls.from_dict(json.loads(text))


def rules_corpus(train_set: TraceSet, multi_driver_set: Optional[TraceSet]) -> TraceSet:
    """Multi-driver traces plus any training trace not already part of them"""
    if multi_driver_set is None:
        return train_set
    known = {trace.trace_id for trace in multi_driver_set}
    return merge_traces(list(multi_driver_set) + [trace for trace in train_set if trace.trace_id not in known])


@timing_decorator
def fit_pipeline(
    train_set: TraceSet,
    multi_driver_set: Optional[TraceSet] = None,
    config: FeatureConfig = FeatureConfig(),
    fixed_features: Optional[Sequence[str]] = None,
) -> FeaturePipeline:
    """
    Fits the three feature engineering stages on owner training traces.

    Filter rules run first (over the multi-driver corpus when given, Rule 2 skipped otherwise), then
    correlation pruning over the owner traces, then windowing and min-max statistics on the training windows.
    A fixed feature list bypasses both exclusion stages.
    """
    if not len(train_set):
        raise ValueError('fit_pipeline needs at least one training trace')
    source = train_set.feature_names

    if fixed_features is not None:
        missing = [name for name in fixed_features if name not in source]
        if missing:
            raise SchemaError(f'Fixed feature list names features absent from the traces: {missing}')
        kept = tuple(name for name in source if name in fixed_features)
        dropped = [DroppedFeature(name, REASON_CATALOG) for name in source if name not in kept]
    else:
        report = apply_filter_rules(
            rules_corpus(train_set, multi_driver_set),
            source,
            indifference_tolerance=config.indifference_tolerance,
            evaluate_rule2=multi_driver_set is not None,
        )
        pruned = prune_correlated(
            correlation_matrix(train_set, report.kept), report.kept, config.correlation_threshold
        )
        kept = pruned.kept
        reasons = {name: DroppedFeature(name, rule) for name, rule in report.dropped.items()}
        reasons.update({name: DroppedFeature(name, REASON_CORRELATED, partner) for name, partner in pruned.dropped})
        dropped = [reasons[name] for name in source if name in reasons]

    if not kept:
        raise ValueError('Feature engineering removed every feature')

    training_windows = [
        window
        for trace in train_set
        for window in extract_windows(trace, kept, config.window_length_s, config.window_stride_s).windows
    ]
    if not training_windows:
        raise NoWindowsError('Every training window overlaps missing values')

    pipeline = FeaturePipeline(
        kept_features=kept, norm_stats=fit_normalizer(training_windows), config=config, dropped=tuple(dropped)
    )
    logger.info(
        f'Feature pipeline: kept {len(kept)} of {len(source)} features, {len(training_windows)} training windows'
    )
    return pipeline
