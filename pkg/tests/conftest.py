import sys

import numpy as np
import pytest
from loguru import logger

from input_output.traces import CanTrace, merge_traces
from ndcore.lstm import LstmParams
from preprocessing.feature_config import FeatureConfig
from preprocessing.pipeline import fit_pipeline
from rgan.checkpoint import CHECKPOINT_VERSION, Checkpoint
from rgan.networks import Discriminator, Generator
from rgan.train_config import TrainConfig
from simulation.profiles import default_profiles
from simulation.simulator import synth_trace


@pytest.fixture(autouse=True)
def reset_logger():
    yield
    logger.remove()
    logger.add(sys.__stderr__, level='WARNING')


@pytest.fixture
def make_trace():
    def factory(columns: dict, trace_id: str = 'trip', driver_label=None) -> CanTrace:
        names = tuple(columns)
        samples = np.column_stack([np.asarray(values, dtype=np.float64) for values in columns.values()])
        return CanTrace(trace_id=trace_id, feature_names=names, samples=samples, driver_label=driver_label)

    return factory


@pytest.fixture(scope='session')
def profiles():
    return {profile.name: profile for profile in default_profiles()}


@pytest.fixture(scope='session')
def owner_trace(profiles):
    return synth_trace(profiles['A'], 600, seed=1)


@pytest.fixture(scope='session')
def thief_trace(profiles):
    return synth_trace(profiles['B'], 200, seed=2)


@pytest.fixture(scope='session')
def pipeline(owner_trace):
    return fit_pipeline(merge_traces([owner_trace]), config=FeatureConfig())


@pytest.fixture
def tiny_train_config():
    return TrainConfig(epochs=2, batch_size=16, noise_dim=2, hidden_dim=4, seed=3)


def _random_networks(feature_count: int, seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    gen = Generator.init(2, 4, feature_count, rng)
    disc = Discriminator.init(feature_count, 4, rng)
    disc = disc.with_tensors({name: rng.uniform(-1, 1, value.shape) for name, value in disc.tensors().items()})
    return gen, disc


@pytest.fixture(scope='session')
def random_checkpoint(pipeline):
    """Untrained checkpoint with random discriminator weights; scores are arbitrary but not constant"""
    gen, disc = _random_networks(pipeline.feature_count, seed=0)
    return Checkpoint(
        format_version=CHECKPOINT_VERSION,
        pipeline=pipeline,
        generator=gen,
        discriminator=disc,
        train_config=TrainConfig(noise_dim=2, hidden_dim=4),
    )


@pytest.fixture(scope='session')
def zero_checkpoint(pipeline):
    rng = np.random.default_rng(0)
    return Checkpoint(
        format_version=CHECKPOINT_VERSION,
        pipeline=pipeline,
        generator=Generator.init(2, 4, pipeline.feature_count, rng, zero=True),
        discriminator=Discriminator.init(pipeline.feature_count, 4, rng, zero=True),
        train_config=TrainConfig(noise_dim=2, hidden_dim=4),
    )


@pytest.fixture
def lstm_params():
    def factory(input_dim: int, hidden_dim: int, seed: int) -> LstmParams:
        rng = np.random.default_rng(seed)
        return LstmParams(
            W=rng.uniform(-1, 1, (4 * hidden_dim, input_dim)),
            U=rng.uniform(-1, 1, (4 * hidden_dim, hidden_dim)),
            b=rng.uniform(-1, 1, 4 * hidden_dim),
        )

    return factory
