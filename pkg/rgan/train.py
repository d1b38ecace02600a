from typing import Optional, Sequence

import numpy as np
from loguru import logger
from tqdm import tqdm

from ndcore.losses import bce_loss
from ndcore.optimizers import AdamState, adam_step, sgd_step
from preprocessing.pipeline import FeaturePipeline
from preprocessing.windows import Label, WindowTensor
from rgan.checkpoint import CHECKPOINT_VERSION, Checkpoint, EpochLog
from rgan.networks import Discriminator, Generator, generate
from rgan.train_config import TrainConfig
from utils.timing import timing_decorator


class NormalizationError(ValueError):
    pass


class OneClassViolationError(ValueError):
    pass


def sample_noise(batch: int, length: int, noise_dim: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. standard Gaussian noise shaped (batch x length x noise_dim)"""
    if min(batch, length, noise_dim) < 1:
        raise ValueError(f'Noise dimensions must be positive, got {(batch, length, noise_dim)}')
    return rng.standard_normal((batch, length, noise_dim))


def stack_owner_windows(owner_windows: Sequence[WindowTensor]) -> np.ndarray:
    """Validates the one-class training input and stacks it to (N x T x F)"""
    if not owner_windows:
        raise ValueError('Training needs at least one owner window')
    thief = [window for window in owner_windows if window.label == Label.THIEF]
    if thief:
        raise OneClassViolationError(f'{len(thief)} window(s) labeled thief; training admits owner windows only')
    shapes = {window.values.shape for window in owner_windows}
    if len(shapes) != 1:
        raise ValueError(f'Owner windows must share one shape, found {sorted(shapes)}')
    data = np.stack([window.values for window in owner_windows]).astype(np.float64)
    if not np.isfinite(data).all() or data.min() < 0.0 or data.max() > 1.0:
        raise NormalizationError('Owner windows must be normalized to [0, 1] before training')
    return data


def discriminator_step(disc: Discriminator, real: np.ndarray, fake: np.ndarray, lr: float) -> tuple:
    """One SGD step on BCE with real windows labeled 1 and generated windows labeled 0"""
    batch = real.shape[0]
    real_scores, real_cache = disc.forward(real)
    fake_scores, fake_cache = disc.forward(fake)
    real_loss, real_grad = bce_loss(real_scores, 1.0)
    fake_loss, fake_grad = bce_loss(fake_scores, 0.0)
    loss = 0.5 * (real_loss.mean() + fake_loss.mean())

    real_param_grads, _ = disc.backward(real_cache, 0.5 * real_grad / batch)
    fake_param_grads, _ = disc.backward(fake_cache, 0.5 * fake_grad / fake.shape[0])
    grads = {name: real_param_grads[name] + fake_param_grads[name] for name in real_param_grads}
    disc = disc.with_tensors(sgd_step(disc.tensors(), grads, lr))
    return disc, float(loss), float(real_scores.mean()), float(fake_scores.mean())


def generator_step(gen: Generator, disc: Discriminator, noise: np.ndarray, adam_state: AdamState, lr: float) -> tuple:
    """One Adam step on the non-saturating loss -log D(G(z)); the discriminator is left unchanged"""
    fake, gen_cache = gen.forward(noise)
    scores, disc_cache = disc.forward(fake)
    loss, grad = bce_loss(scores, 1.0)
    _, grad_fake = disc.backward(disc_cache, grad / noise.shape[0])
    params, adam_state = adam_step(gen.tensors(), gen.backward(gen_cache, grad_fake), adam_state, lr)
    return gen.with_tensors(params), adam_state, float(loss.mean())


@timing_decorator
def train(
    owner_windows: Sequence[WindowTensor],
    config: TrainConfig,
    pipeline: FeaturePipeline,
    generator: Optional[Generator] = None,
    discriminator: Optional[Discriminator] = None,
) -> Checkpoint:
    """
    Adversarial training on normalized owner windows only.

    Each batch runs one discriminator SGD step followed by gen_steps_per_disc_step generator Adam steps
    with fresh noise. Window order is reshuffled every epoch with the seeded generator, so identical
    inputs and seed give an identical checkpoint.
    """
    data = stack_owner_windows(owner_windows)
    count, steps, features = data.shape
    if features != pipeline.feature_count:
        raise ValueError(f'Windows carry {features} features, pipeline keeps {pipeline.feature_count}')

    rng = np.random.default_rng(config.seed)
    gen = generator
    if gen is None:
        gen = Generator.init(config.noise_dim, config.hidden_dim, features, rng, num_layers=config.num_layers)
    disc = discriminator
    if disc is None:
        disc = Discriminator.init(features, config.hidden_dim, rng, num_layers=config.num_layers)
    if gen.feature_count != features or disc.feature_count != features:
        raise ValueError('Generator output and discriminator input must match the window feature count')
    adam_state = AdamState.zeros_like(gen.tensors())

    logger.info(f'Training RGAN on {count} owner windows ({steps} s x {features} features), {config.epochs} epochs')
    training_log = []
    for epoch in tqdm(range(config.epochs), desc='Training RGAN', unit='epoch', leave=False):
        order = rng.permutation(count)
        d_losses, g_losses, real_means, fake_means = [], [], [], []
        for start in range(0, count, config.batch_size):
            real = data[order[start : start + config.batch_size]]
            batch = real.shape[0]
            fake = generate(gen, sample_noise(batch, steps, gen.noise_dim, rng))
            disc, d_loss, real_mean, fake_mean = discriminator_step(disc, real, fake, config.lr_discriminator)
            d_losses.append(d_loss)
            real_means.append(real_mean)
            fake_means.append(fake_mean)
            for _ in range(config.gen_steps_per_disc_step):
                noise = sample_noise(batch, steps, gen.noise_dim, rng)
                gen, adam_state, g_loss = generator_step(gen, disc, noise, adam_state, config.lr_generator)
                g_losses.append(g_loss)

        entry = EpochLog(
            epoch=epoch + 1,
            d_loss=float(np.mean(d_losses)),
            g_loss=float(np.mean(g_losses)),
            real_score=float(np.mean(real_means)),
            fake_score=float(np.mean(fake_means)),
        )
        training_log.append(entry)
        logger.info(
            f'epoch {entry.epoch}/{config.epochs} d_loss={entry.d_loss:.4f} g_loss={entry.g_loss:.4f} '
            f'real={entry.real_score:.4f} fake={entry.fake_score:.4f}'
        )
        if not (np.isfinite(entry.d_loss) and np.isfinite(entry.g_loss)):
            raise FloatingPointError(f'Training diverged at epoch {entry.epoch}')

    return Checkpoint(
        format_version=CHECKPOINT_VERSION,
        pipeline=pipeline,
        generator=gen,
        discriminator=disc,
        train_config=config,
        training_log=tuple(training_log),
    )
