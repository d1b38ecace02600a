import json
from dataclasses import asdict, dataclass

import numpy as np

from ndcore.dense import DenseParams
from ndcore.lstm import LstmParams
from preprocessing.pipeline import FeaturePipeline
from rgan.networks import Discriminator, Generator
from rgan.train_config import TrainConfig

CHECKPOINT_VERSION = 1
GATE_ORDER_TAG = 'i,f,g,o'


class UnsupportedVersionError(ValueError):
    pass


class CheckpointParseError(ValueError):
    pass


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    d_loss: float
    g_loss: float
    real_score: float  # mean discriminator score on real windows
    fake_score: float  # mean discriminator score on generated windows


@dataclass(frozen=True)
class Checkpoint:
    format_version: int
    pipeline: FeaturePipeline
    generator: Generator
    discriminator: Discriminator
    train_config: TrainConfig
    training_log: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, 'training_log', tuple(self.training_log))
        features = self.pipeline.feature_count
        if self.discriminator.feature_count != features or self.generator.feature_count != features:
            raise ValueError(
                f'Pipeline keeps {features} features, discriminator takes {self.discriminator.feature_count}, '
                f'generator emits {self.generator.feature_count}'
            )

    @property
    def epochs_completed(self) -> int:
        return len(self.training_log)

    def to_dict(self) -> dict:
        return {
            'format_version': self.format_version,
            'pipeline': self.pipeline.to_dict(),
            'generator': _network_to_dict(self.generator),
            'discriminator': _network_to_dict(self.discriminator),
            'train_config': self.train_config.to_dict(),
            'training_log': [asdict(entry) for entry in self.training_log],
        }

    @classmethod
    def from_dict(cls, document: dict) -> 'Checkpoint':
        version = document.get('format_version')
        if version != CHECKPOINT_VERSION:
            raise UnsupportedVersionError(
                f'Checkpoint format version {version!r} is not supported (expected {CHECKPOINT_VERSION})'
            )
        layers, proj = _network_from_dict(document['generator'])
        generator = Generator(lstm_layers=layers, proj=proj)
        layers, proj = _network_from_dict(document['discriminator'])
        discriminator = Discriminator(lstm_layers=layers, proj=proj)
        return cls(
            format_version=version,
            pipeline=FeaturePipeline.from_dict(document['pipeline']),
            generator=generator,
            discriminator=discriminator,
            train_config=TrainConfig(**document['train_config']),
            training_log=tuple(EpochLog(**entry) for entry in document['training_log']),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _network_to_dict(network) -> dict:
    """Dimensions plus flat row-major weight arrays; LSTM row blocks follow gate order i, f, g, o"""
    return {
        'num_layers': network.num_layers,
        'lstm': [
            {
                'input_dim': layer.input_dim,
                'hidden_dim': layer.hidden_dim,
                'gate_order': GATE_ORDER_TAG,
                'W': layer.W.ravel().tolist(),
                'U': layer.U.ravel().tolist(),
                'b': layer.b.tolist(),
            }
            for layer in network.lstm_layers
        ],
        'proj': {
            'in_dim': network.proj.in_dim,
            'out_dim': network.proj.out_dim,
            'W': network.proj.W.ravel().tolist(),
            'b': network.proj.b.tolist(),
        },
    }


def _network_from_dict(document: dict) -> tuple:
    layers = []
    for layer in document['lstm']:
        if layer['gate_order'] != GATE_ORDER_TAG:
            raise CheckpointParseError(f'Unknown LSTM gate order {layer["gate_order"]!r}')
        input_dim, hidden_dim = int(layer['input_dim']), int(layer['hidden_dim'])
        layers.append(
            LstmParams(
                W=np.array(layer['W'], dtype=np.float64).reshape(4 * hidden_dim, input_dim),
                U=np.array(layer['U'], dtype=np.float64).reshape(4 * hidden_dim, hidden_dim),
                b=np.array(layer['b'], dtype=np.float64),
            )
        )
    if len(layers) != document['num_layers']:
        raise CheckpointParseError(f'Expected {document["num_layers"]} LSTM layers, found {len(layers)}')
    proj = document['proj']
    dense = DenseParams(
        W=np.array(proj['W'], dtype=np.float64).reshape(int(proj['out_dim']), int(proj['in_dim'])),
        b=np.array(proj['b'], dtype=np.float64),
    )
    return tuple(layers), dense
