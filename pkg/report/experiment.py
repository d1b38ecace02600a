from dataclasses import dataclass
from typing import Optional, Sequence

import pandas as pd
from loguru import logger
from omegaconf import DictConfig, OmegaConf

from detection.detector import DetectionConfig, calibrated, score_windows
from input_output.traces import CanTrace, merge_traces
from preprocessing.feature_config import FeatureConfig
from preprocessing.pipeline import fit_pipeline
from preprocessing.windows import Label
from report.evaluation import compose_test_set, evaluate
from report.metrics import MetricsReport, render_table
from rgan.checkpoint import Checkpoint
from rgan.train import train
from rgan.train_config import TrainConfig
from simulation.profiles import DriverProfile
from simulation.simulator import synth_trace


@dataclass(frozen=True)
class ExperimentConfig:
    owner_train_s: int = 1986
    owner_validation_s: int = 600
    owner_test_s: int = 600
    thief_s: int = 600
    owner_ratio: float = 0.8
    size: Optional[int] = None  # None: largest test set the pools allow
    calibration_fnr: Optional[float] = 0.25
    seed: int = 0

    def __post_init__(self):
        for name in ('owner_train_s', 'owner_validation_s', 'owner_test_s', 'thief_s'):
            if getattr(self, name) < 1:
                raise ValueError(f'{name} must be positive, got {getattr(self, name)}')

    @classmethod
    def from_config(cls, section: DictConfig) -> 'ExperimentConfig':
        values = OmegaConf.to_container(section, resolve=True)
        return cls(**values)


@dataclass(frozen=True)
class ProtocolResult:
    driver: str
    training_seconds: int
    checkpoint: Checkpoint
    detection: DetectionConfig
    report: MetricsReport

    def to_frame(self) -> pd.DataFrame:
        return self.report.to_frame(self.driver, self.training_seconds)


def run_protocol(
    owner_train: Sequence[CanTrace],
    owner_test: Sequence[CanTrace],
    thief_traces: Sequence[CanTrace],
    feature_config: FeatureConfig,
    train_config: TrainConfig,
    detection_config: DetectionConfig,
    owner_validation: Sequence[CanTrace] = (),
    owner_ratio: float = 0.8,
    size: Optional[int] = None,
    seed: int = 0,
    driver: str = 'owner',
) -> ProtocolResult:
    """
    Fit features on the owner, train on owner windows only, optionally calibrate on owner validation windows,
    then evaluate on an owner/thief test set. Rule 2 is evaluated over the owner and thief drivers together.
    """
    train_set = merge_traces(owner_train)
    multi_driver_set = merge_traces(list(owner_train) + list(thief_traces)) if thief_traces else None
    pipeline = fit_pipeline(train_set, multi_driver_set=multi_driver_set, config=feature_config)
    ckpt = train(pipeline.normalized_windows(owner_train, label=Label.OWNER), train_config, pipeline)

    detection = detection_config
    if detection.calibration_fnr is not None:
        if not owner_validation:
            raise ValueError('Threshold calibration needs owner validation traces')
        raw = [window for trace in owner_validation for window in pipeline.windows(trace).windows]
        detection = calibrated(detection, score_windows(ckpt, raw), detection.calibration_fnr)

    owner_pool = [window for trace in owner_test for window in pipeline.windows(trace).windows]
    thief_pool = [window for trace in thief_traces for window in pipeline.windows(trace).windows]
    test_set = compose_test_set(owner_pool, thief_pool, owner_ratio=owner_ratio, size=size, seed=seed)
    report = evaluate(ckpt, detection, test_set)
    training_seconds = sum(trace.duration_s for trace in owner_train)
    return ProtocolResult(driver, training_seconds, ckpt, detection, report)


def run_owner_rotation(
    profiles: Sequence[DriverProfile],
    config: ExperimentConfig,
    feature_config: FeatureConfig,
    train_config: TrainConfig,
    detection_config: DetectionConfig,
) -> list:
    """Each profile in turn is the owner, every other profile a thief; one ProtocolResult per owner"""
    if len(profiles) < 2:
        raise ValueError('The rotation needs at least two driver profiles')
    if config.calibration_fnr is not None:
        detection_config = DetectionConfig(detection_config.threshold, calibration_fnr=config.calibration_fnr)

    results = []
    for position, owner in enumerate(profiles):
        base = config.seed + 100 * position
        logger.info(f'Owner rotation {position + 1}/{len(profiles)}: owner {owner.name}')
        thieves = [
            synth_trace(profile, config.thief_s, base + 10 + index)
            for index, profile in enumerate(profiles)
            if profile.name != owner.name
        ]
        results.append(
            run_protocol(
                owner_train=[synth_trace(owner, config.owner_train_s, base + 1)],
                owner_test=[synth_trace(owner, config.owner_test_s, base + 3)],
                thief_traces=thieves,
                feature_config=feature_config,
                train_config=train_config,
                detection_config=detection_config,
                owner_validation=[synth_trace(owner, config.owner_validation_s, base + 2)],
                owner_ratio=config.owner_ratio,
                size=config.size,
                seed=config.seed,
                driver=owner.name,
            )
        )
    return results


def rotation_table(results: Sequence[ProtocolResult]) -> str:
    return render_table([result.to_frame() for result in results], average=True)
