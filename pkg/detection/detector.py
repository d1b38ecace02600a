import dataclasses
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from loguru import logger
from omegaconf import DictConfig, OmegaConf

from input_output.traces import SchemaError, describe_mismatch
from preprocessing.windows import Label, WindowTensor
from rgan.checkpoint import Checkpoint
from rgan.networks import discriminate


@dataclass(frozen=True)
class DetectionConfig:
    threshold: float = 0.5  # owner iff score >= threshold
    calibration_fnr: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ValueError(f'threshold must be in (0, 1), got {self.threshold}')
        if self.calibration_fnr is not None and not 0 < self.calibration_fnr < 1:
            raise ValueError(f'calibration_fnr must be in (0, 1), got {self.calibration_fnr}')

    @classmethod
    def from_config(cls, section: DictConfig) -> 'DetectionConfig':
        values = OmegaConf.to_container(section, resolve=True)
        fnr = values.get('calibration_fnr')
        return cls(threshold=float(values['threshold']), calibration_fnr=None if fnr is None else float(fnr))


@dataclass(frozen=True)
class WindowVerdict:
    start_offset_s: int
    score: float
    decision: Label
    source_trace_id: str = ''

    def to_dict(self) -> dict:
        return {'offset_s': self.start_offset_s, 'score': self.score, 'decision': self.decision.value}


def score_window(ckpt: Checkpoint, raw_window: WindowTensor) -> float:
    """Normalizes an unnormalized window with the checkpoint's pipeline, then scores it"""
    kept = ckpt.pipeline.kept_features
    if raw_window.features and tuple(raw_window.features) != kept:
        raise SchemaError(f'Window features do not match the pipeline: {describe_mismatch(kept, raw_window.features)}')
    if raw_window.values.ndim != 2 or raw_window.values.shape[1] != len(kept):
        raise SchemaError(f'Window has shape {raw_window.values.shape}, pipeline keeps {len(kept)} features')
    return discriminate(ckpt.discriminator, ckpt.pipeline.normalize(raw_window).values)


def score_windows(ckpt: Checkpoint, raw_windows: Sequence[WindowTensor]) -> np.ndarray:
    """One score per window, each computed on its own so the result never depends on batch composition"""
    return np.array([score_window(ckpt, window) for window in raw_windows], dtype=np.float64)


def classify_window(score: float, config: DetectionConfig) -> Label:
    return Label.OWNER if score >= config.threshold else Label.THIEF


def verdict(window: WindowTensor, score: float, config: DetectionConfig) -> WindowVerdict:
    return WindowVerdict(
        start_offset_s=window.start_offset_s,
        score=score,
        decision=classify_window(score, config),
        source_trace_id=window.source_trace_id,
    )


def calibrate_threshold(owner_validation_scores: Sequence[float], target_fnr: float) -> float:
    """
    Nearest-rank quantile of owner validation scores.

    The threshold is the score at 1-based rank ceil(target_fnr * n) of the ascending scores; classifying the
    same scores with it (boundary inclusive) rejects at most target_fnr of them.
    """
    if not 0 < target_fnr < 1:
        raise ValueError(f'target_fnr must be in (0, 1), got {target_fnr}')
    scores = np.sort(np.asarray(owner_validation_scores, dtype=np.float64))
    if scores.size == 0:
        raise ValueError('Threshold calibration needs at least one owner score')
    rank = max(1, math.ceil(target_fnr * scores.size - 1e-9))  # 0.7 * 10 must give rank 7, not 8
    return float(scores[rank - 1])


def calibrated(config: DetectionConfig, owner_validation_scores: Sequence[float], target_fnr: float) -> DetectionConfig:
    """DetectionConfig with the calibrated threshold, pulled inside (0, 1) if the scores saturate"""
    threshold = calibrate_threshold(owner_validation_scores, target_fnr)
    bounded = float(np.clip(threshold, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0)))
    if bounded != threshold:
        logger.warning(f'Calibrated threshold {threshold} lies on the score boundary, using {bounded}')
    logger.info(
        f'Calibrated threshold {bounded:.6f} at target FNR {target_fnr} over {len(owner_validation_scores)} scores'
    )
    return dataclasses.replace(config, threshold=bounded, calibration_fnr=target_fnr)
