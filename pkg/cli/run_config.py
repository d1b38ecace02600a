from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from hydra import compose, initialize_config_dir
from omegaconf import DictConfig, OmegaConf

from detection.detector import DetectionConfig
from preprocessing.feature_config import FeatureConfig
from report.experiment import ExperimentConfig
from rgan.train_config import TrainConfig

CONFIG_DIR = Path(__file__).resolve().parent.parent  # config.yaml sits at the repository root
CONFIG_NAME = 'config'


def load_config(config_path=None, overrides: Sequence[str] = ()) -> DictConfig:
    """
    Packaged defaults, then the optional user file (YAML or JSON), then dotlist overrides such as
    'train.epochs=5'. Keys unknown to the defaults are rejected.
    """
    with initialize_config_dir(version_base=None, config_dir=str(CONFIG_DIR)):
        config = compose(config_name=CONFIG_NAME)
    if config_path is not None:
        config = OmegaConf.merge(config, OmegaConf.load(config_path))
    if overrides:
        config = OmegaConf.merge(config, OmegaConf.from_dotlist(list(overrides)))
    return config


@dataclass(frozen=True)
class RunConfig:
    seed: int
    features: FeatureConfig
    train: TrainConfig
    detection: DetectionConfig
    experiment: ExperimentConfig
    owner_ratio: float
    eval_size: Optional[int]
    eval_seed: int
    synth_duration_s: int
    synth_seed: int
    log_level: str

    @classmethod
    def from_config(cls, config: DictConfig) -> 'RunConfig':
        return cls(
            seed=int(config.seed),
            features=FeatureConfig.from_config(config.features),
            train=TrainConfig.from_config(config.train),
            detection=DetectionConfig.from_config(config.detection),
            experiment=ExperimentConfig.from_config(config.experiment),
            owner_ratio=float(config.eval.owner_ratio),
            eval_size=None if config.eval.size is None else int(config.eval.size),
            eval_seed=int(config.eval.seed),
            synth_duration_s=int(config.synth.duration_s),
            synth_seed=int(config.synth.seed),
            log_level=str(config.logging.level),
        )


def effective_config(config: DictConfig) -> str:
    return OmegaConf.to_yaml(config, resolve=True)
