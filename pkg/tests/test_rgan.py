import dataclasses
import json

import numpy as np
import pytest

from input_output.checkpoint_io import load_checkpoint, save_checkpoint
from input_output.traces import merge_traces
from ndcore.grad_check import finite_diff_grad, max_relative_error
from ndcore.losses import bce_loss
from preprocessing.pipeline import fit_pipeline
from preprocessing.windows import Label
from rgan.checkpoint import CHECKPOINT_VERSION, CheckpointParseError, UnsupportedVersionError
from rgan.networks import Discriminator, Generator, discriminate, generate, per_step_scores
from rgan.train import NormalizationError, OneClassViolationError, discriminator_step, sample_noise, train
from rgan.train_config import TrainConfig
from simulation.simulator import synth_trace


def test_sample_noise_shape_and_determinism():
    noise = sample_noise(2, 33, 8, np.random.default_rng(5))
    assert noise.shape == (2, 33, 8)
    np.testing.assert_array_equal(noise, sample_noise(2, 33, 8, np.random.default_rng(5)))
    with pytest.raises(ValueError):
        sample_noise(0, 33, 8, np.random.default_rng(5))


def test_sample_noise_is_standard_gaussian():
    noise = sample_noise(10, 100, 10, np.random.default_rng(6))
    assert abs(noise.mean()) < 0.05
    assert abs(noise.var() - 1.0) < 0.1


def test_zero_generator_outputs_one_half():
    gen = Generator.init(3, 4, 5, np.random.default_rng(0), zero=True)
    fake = generate(gen, sample_noise(2, 33, 3, np.random.default_rng(1)))
    assert fake.shape == (2, 33, 5)
    assert (fake == 0.5).all()


def test_random_generator_outputs_inside_unit_interval():
    gen = Generator.init(3, 4, 5, np.random.default_rng(0), num_layers=2)
    fake = generate(gen, sample_noise(4, 33, 3, np.random.default_rng(1)))
    assert ((fake > 0.0) & (fake < 1.0)).all()
    np.testing.assert_array_equal(fake, generate(gen, sample_noise(4, 33, 3, np.random.default_rng(1))))


def test_zero_discriminator_scores_one_half():
    disc = Discriminator.init(5, 4, np.random.default_rng(0), zero=True)
    assert discriminate(disc, np.random.default_rng(1).random((33, 5))) == 0.5


def test_discriminator_score_is_mean_of_step_scores():
    disc = Discriminator.init(5, 4, np.random.default_rng(0))
    window = np.random.default_rng(1).random((33, 5))
    steps = per_step_scores(disc, window)
    assert steps.shape == (33,)
    assert ((steps > 0) & (steps < 1)).all()
    assert discriminate(disc, window) == pytest.approx(steps.mean(), abs=1e-15)


def test_discriminator_scores_do_not_depend_on_batch():
    disc = Discriminator.init(5, 4, np.random.default_rng(0))
    windows = np.random.default_rng(1).random((6, 33, 5))
    scores, _ = disc.forward(windows)
    reversed_scores, _ = disc.forward(windows[::-1])
    np.testing.assert_allclose(scores, reversed_scores[::-1], rtol=0, atol=1e-12)


def test_discriminate_rejects_wrong_shape():
    disc = Discriminator.init(5, 4, np.random.default_rng(0))
    with pytest.raises(ValueError):
        discriminate(disc, np.zeros((33, 4)))
    with pytest.raises(ValueError):
        discriminate(disc, np.zeros((2, 33, 5)))


def _randomized(network, rng):
    return network.with_tensors({name: rng.uniform(-1, 1, value.shape) for name, value in network.tensors().items()})


@pytest.mark.parametrize('seed', range(20))
def test_discriminator_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    features, hidden, steps = rng.integers(1, 5), rng.integers(1, 5), rng.integers(1, 6)
    disc = _randomized(Discriminator.init(features, hidden, rng, num_layers=1 + seed % 2), rng)
    real = rng.random((3, steps, features))
    fake = rng.random((3, steps, features))

    def loss_fn(tensors):
        network = disc.with_tensors(tensors)
        real_loss, _ = bce_loss(network.forward(real)[0], 1.0)
        fake_loss, _ = bce_loss(network.forward(fake)[0], 0.0)
        return float(0.5 * (real_loss.mean() + fake_loss.mean()))

    real_scores, real_cache = disc.forward(real)
    fake_scores, fake_cache = disc.forward(fake)
    real_grads, _ = disc.backward(real_cache, 0.5 * bce_loss(real_scores, 1.0)[1] / 3)
    fake_grads, _ = disc.backward(fake_cache, 0.5 * bce_loss(fake_scores, 0.0)[1] / 3)
    analytic = {name: real_grads[name] + fake_grads[name] for name in real_grads}
    assert max_relative_error(analytic, finite_diff_grad(loss_fn, disc.tensors())) < 1e-4


@pytest.mark.parametrize('seed', range(5))
def test_generator_gradients_flow_through_discriminator(seed):
    rng = np.random.default_rng(50 + seed)
    gen = _randomized(Generator.init(2, 3, 3, rng), rng)
    disc = _randomized(Discriminator.init(3, 3, rng), rng)
    noise = rng.normal(size=(2, 4, 2))

    def loss_fn(tensors):
        scores, _ = disc.forward(generate(gen.with_tensors(tensors), noise))
        return float(bce_loss(scores, 1.0)[0].mean())

    fake, gen_cache = gen.forward(noise)
    scores, disc_cache = disc.forward(fake)
    _, grad_fake = disc.backward(disc_cache, bce_loss(scores, 1.0)[1] / 2)
    analytic = gen.backward(gen_cache, grad_fake)
    assert max_relative_error(analytic, finite_diff_grad(loss_fn, gen.tensors())) < 1e-4


def test_discriminator_step_leaves_input_network_unchanged():
    rng = np.random.default_rng(0)
    disc = Discriminator.init(3, 4, rng)
    before = {name: value.copy() for name, value in disc.tensors().items()}
    updated, loss, real_mean, fake_mean = discriminator_step(disc, rng.random((4, 5, 3)), rng.random((4, 5, 3)), 0.05)
    for name, value in disc.tensors().items():
        np.testing.assert_array_equal(value, before[name])
    assert not np.array_equal(updated.tensors()['proj.W'], before['proj.W'])
    assert np.isfinite(loss) and 0 < real_mean < 1 and 0 < fake_mean < 1


def test_train_one_epoch_with_zero_networks(pipeline, owner_trace):
    windows = pipeline.normalized_windows([owner_trace])[:40]
    config = TrainConfig(epochs=1, batch_size=16, noise_dim=2, hidden_dim=4, seed=0)
    rng = np.random.default_rng(0)
    ckpt = train(
        windows,
        config,
        pipeline,
        generator=Generator.init(2, 4, pipeline.feature_count, rng, zero=True),
        discriminator=Discriminator.init(pipeline.feature_count, 4, rng, zero=True),
    )
    assert len(ckpt.training_log) == 1
    entry = ckpt.training_log[0]
    assert entry.epoch == 1
    assert np.isfinite([entry.d_loss, entry.g_loss, entry.real_score, entry.fake_score]).all()


def test_train_is_deterministic(pipeline, owner_trace, tiny_train_config):
    windows = pipeline.normalized_windows([owner_trace], label=Label.OWNER)[:64]
    first = train(windows, tiny_train_config, pipeline)
    second = train(windows, tiny_train_config, pipeline)
    assert first.to_json() == second.to_json()
    assert len(first.training_log) == tiny_train_config.epochs


def test_default_learning_rates_let_the_discriminator_separate(pipeline, owner_trace):
    defaults = TrainConfig()
    config = dataclasses.replace(defaults, epochs=6, noise_dim=4, hidden_dim=8)
    ckpt = train(pipeline.normalized_windows([owner_trace], label=Label.OWNER), config, pipeline)
    assert (config.lr_discriminator, config.lr_generator) == (defaults.lr_discriminator, defaults.lr_generator)

    final = ckpt.training_log[-1]
    assert final.real_score > 0.5
    assert final.real_score > final.fake_score + 0.02


def test_train_admits_owner_windows_only(pipeline, owner_trace, tiny_train_config):
    windows = pipeline.normalized_windows([owner_trace])[:10]
    thief = [dataclasses.replace(window, label=Label.THIEF) for window in windows]
    with pytest.raises(OneClassViolationError):
        train(thief, tiny_train_config, pipeline)
    with pytest.raises(ValueError):
        train([], tiny_train_config, pipeline)


def test_train_rejects_unnormalized_windows(pipeline, owner_trace, tiny_train_config):
    raw = pipeline.windows(owner_trace).windows[:10]
    with pytest.raises(NormalizationError):
        train(raw, tiny_train_config, pipeline)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(gen_steps_per_disc_step=0)
    with pytest.raises(ValueError):
        TrainConfig(lr_generator=0.0)


def test_checkpoint_round_trip(tmp_path, pipeline, owner_trace, tiny_train_config):
    ckpt = train(pipeline.normalized_windows([owner_trace])[:32], tiny_train_config, pipeline)
    path = tmp_path / 'model.json'
    save_checkpoint(ckpt, path)
    loaded = load_checkpoint(path)
    assert loaded.to_json() == ckpt.to_json()
    for name, value in ckpt.discriminator.tensors().items():
        np.testing.assert_array_equal(loaded.discriminator.tensors()[name], value)
    assert loaded.training_log == ckpt.training_log
    assert loaded.train_config == ckpt.train_config
    assert not [item for item in tmp_path.iterdir() if item.name.endswith('.tmp')]


def test_checkpoint_documents_gate_order(random_checkpoint):
    document = random_checkpoint.to_dict()
    assert document['format_version'] == CHECKPOINT_VERSION
    assert document['discriminator']['lstm'][0]['gate_order'] == 'i,f,g,o'
    hidden = random_checkpoint.discriminator.hidden_dim
    assert len(document['discriminator']['lstm'][0]['U']) == 4 * hidden * hidden


def test_load_checkpoint_rejects_unknown_version(tmp_path, random_checkpoint):
    document = random_checkpoint.to_dict()
    document['format_version'] = 999
    path = tmp_path / 'future.json'
    path.write_text(json.dumps(document))
    with pytest.raises(UnsupportedVersionError):
        load_checkpoint(path)


def test_load_checkpoint_rejects_truncated_file(tmp_path, random_checkpoint):
    text = random_checkpoint.to_json()
    path = tmp_path / 'truncated.json'
    path.write_text(text[: len(text) // 2])
    with pytest.raises(CheckpointParseError):
        load_checkpoint(path)


def test_checkpoint_requires_matching_feature_counts(random_checkpoint):
    other = Discriminator.init(random_checkpoint.pipeline.feature_count + 1, 4, np.random.default_rng(0))
    with pytest.raises(ValueError):
        dataclasses.replace(random_checkpoint, discriminator=other)


@pytest.mark.slow
def test_trained_discriminator_prefers_owner_windows(profiles):
    train_trace = synth_trace(profiles['A'], 1986, seed=11)
    held_out = synth_trace(profiles['A'], 600, seed=12)
    pipeline = fit_pipeline(merge_traces([train_trace]))
    ckpt = train(pipeline.normalized_windows([train_trace], label=Label.OWNER), TrainConfig(seed=0), pipeline)

    final = ckpt.training_log[-1]
    assert final.real_score > final.fake_score
    assert final.real_score > 0.5

    held_out_windows = pipeline.normalized_windows([held_out])
    owner_scores = [discriminate(ckpt.discriminator, window.values) for window in held_out_windows]
    rng = np.random.default_rng(13)
    noise_scores = [discriminate(ckpt.discriminator, rng.random((33, pipeline.feature_count))) for _ in range(200)]
    assert np.mean(owner_scores) > np.mean(noise_scores) + 0.1
