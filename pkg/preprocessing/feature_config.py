from dataclasses import asdict, dataclass

from omegaconf import DictConfig, OmegaConf


@dataclass(frozen=True)
class FeatureConfig:
    correlation_threshold: float = 0.95  # pairs with |corr| strictly above are pruned
    indifference_tolerance: float = 1e-6
    window_length_s: int = 33
    window_stride_s: int = 1

    def __post_init__(self):
        if not 0 < self.correlation_threshold <= 1:
            raise ValueError(f'correlation_threshold must be in (0, 1], got {self.correlation_threshold}')
        if self.indifference_tolerance < 0:
            raise ValueError(f'indifference_tolerance must be non-negative, got {self.indifference_tolerance}')
        if self.window_length_s < 2:
            raise ValueError(f'window_length_s must be at least 2, got {self.window_length_s}')
        if self.window_stride_s < 1:
            raise ValueError(f'window_stride_s must be at least 1, got {self.window_stride_s}')

    @classmethod
    def from_config(cls, section: DictConfig) -> 'FeatureConfig':
        values = OmegaConf.to_container(section, resolve=True)
        return cls(
            correlation_threshold=float(values['correlation_threshold']),
            indifference_tolerance=float(values['indifference_tolerance']),
            window_length_s=int(values['window_length_s']),
            window_stride_s=int(values['window_stride_s']),
        )

    def to_dict(self) -> dict:
        return asdict(self)
