from dataclasses import asdict, dataclass

from omegaconf import DictConfig, OmegaConf


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 40
    batch_size: int = 32
    noise_dim: int = 8
    hidden_dim: int = 32
    num_layers: int = 1
    lr_discriminator: float = 0.5  # plain SGD
    lr_generator: float = 1e-4  # Adam
    gen_steps_per_disc_step: int = 3  # the generator needs more updates than the discriminator
    seed: int = 0

    def __post_init__(self):
        for name in ('epochs', 'batch_size', 'noise_dim', 'hidden_dim', 'num_layers', 'gen_steps_per_disc_step'):
            if getattr(self, name) < 1:
                raise ValueError(f'{name} must be a positive integer, got {getattr(self, name)}')
        for name in ('lr_discriminator', 'lr_generator'):
            if getattr(self, name) <= 0:
                raise ValueError(f'{name} must be positive, got {getattr(self, name)}')
        if not 0 <= self.seed < 2**64:
            raise ValueError(f'seed must be an unsigned 64-bit integer, got {self.seed}')

    @classmethod
    def from_config(cls, section: DictConfig) -> 'TrainConfig':
        values = OmegaConf.to_container(section, resolve=True)
        return cls(
            epochs=int(values['epochs']),
            batch_size=int(values['batch_size']),
            noise_dim=int(values['noise_dim']),
            hidden_dim=int(values['hidden_dim']),
            num_layers=int(values.get('num_layers', 1)),
            lr_discriminator=float(values['lr_discriminator']),
            lr_generator=float(values['lr_generator']),
            gen_steps_per_disc_step=int(values['gen_steps_per_disc_step']),
            seed=int(values['seed']),
        )

    def to_dict(self) -> dict:
        return asdict(self)
