from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ndcore.dense import DenseParams, dense_backward, dense_forward
from ndcore.lstm import LstmParams, lstm_backward, lstm_forward
from ndcore.shapes import ShapeError


def _stack_forward(layers: tuple, x: np.ndarray) -> tuple:
    caches = []
    for layer in layers:
        x, cache = lstm_forward(layer, x)
        caches.append(cache)
    return x, caches


def _stack_backward(layers: tuple, caches: list, grad_h: np.ndarray) -> tuple:
    """Returns per-layer LstmGrads (input order) and the gradient w.r.t. the stack input"""
    grads = [None] * len(layers)
    for k in reversed(range(len(layers))):
        grads[k] = lstm_backward(caches[k], grad_h)
        grad_h = grads[k].x
    return grads, grad_h


def _flatten(layers: tuple, proj: DenseParams) -> dict:
    tensors = {}
    for k, layer in enumerate(layers):
        for name, value in layer.tensors().items():
            tensors[f'lstm{k}.{name}'] = value
    for name, value in proj.tensors().items():
        tensors[f'proj.{name}'] = value
    return tensors


def _unflatten(tensors: dict, num_layers: int) -> tuple:
    layers = tuple(
        LstmParams(W=tensors[f'lstm{k}.W'], U=tensors[f'lstm{k}.U'], b=tensors[f'lstm{k}.b'])
        for k in range(num_layers)
    )
    return layers, DenseParams(W=tensors['proj.W'], b=tensors['proj.b'])


def _layer_grads(lstm_grads: list, proj_dW: np.ndarray, proj_db: np.ndarray) -> dict:
    grads = {}
    for k, layer_grads in enumerate(lstm_grads):
        for name, value in layer_grads.tensors().items():
            grads[f'lstm{k}.{name}'] = value
    grads['proj.W'] = proj_dW
    grads['proj.b'] = proj_db
    return grads


@dataclass(frozen=True)
class Generator:
    """Maps (B x T x noise_dim) Gaussian noise to (B x T x feature_count) windows in (0, 1)"""

    lstm_layers: tuple
    proj: DenseParams

    def __post_init__(self):
        object.__setattr__(self, 'lstm_layers', tuple(self.lstm_layers))
        _check_stack(self.lstm_layers, self.proj)

    @property
    def noise_dim(self) -> int:
        return self.lstm_layers[0].input_dim

    @property
    def hidden_dim(self) -> int:
        return self.lstm_layers[-1].hidden_dim

    @property
    def feature_count(self) -> int:
        return self.proj.out_dim

    @property
    def num_layers(self) -> int:
        return len(self.lstm_layers)

    @classmethod
    def init(
        cls,
        noise_dim: int,
        hidden_dim: int,
        feature_count: int,
        rng: np.random.Generator,
        num_layers: int = 1,
        zero: bool = False,
    ) -> 'Generator':
        layers = tuple(
            LstmParams.init(noise_dim if k == 0 else hidden_dim, hidden_dim, rng, zero=zero) for k in range(num_layers)
        )
        return cls(lstm_layers=layers, proj=DenseParams.init(hidden_dim, feature_count, rng, zero=zero))

    def tensors(self) -> dict:
        return _flatten(self.lstm_layers, self.proj)

    def with_tensors(self, tensors: dict) -> 'Generator':
        layers, proj = _unflatten(tensors, self.num_layers)
        return Generator(lstm_layers=layers, proj=proj)

    def forward(self, noise: np.ndarray) -> tuple:
        noise = np.asarray(noise, dtype=np.float64)
        if noise.ndim != 3 or noise.shape[2] != self.noise_dim:
            raise ShapeError(f'Generator expects (B x T x {self.noise_dim}) noise, got {noise.shape}')
        hidden, caches = _stack_forward(self.lstm_layers, noise)
        fake = expit(dense_forward(self.proj, hidden))
        return fake, (caches, hidden, fake)

    def backward(self, cache: tuple, grad_fake: np.ndarray) -> dict:
        caches, hidden, fake = cache
        grad_logits = grad_fake * fake * (1.0 - fake)
        proj_dW, proj_db, grad_hidden = dense_backward(self.proj, hidden, grad_logits)
        lstm_grads, _ = _stack_backward(self.lstm_layers, caches, grad_hidden)
        return _layer_grads(lstm_grads, proj_dW, proj_db)


@dataclass(frozen=True)
class Discriminator:
    """Scores a window as the mean over time steps of per-step real-probabilities"""

    lstm_layers: tuple
    proj: DenseParams

    def __post_init__(self):
        object.__setattr__(self, 'lstm_layers', tuple(self.lstm_layers))
        _check_stack(self.lstm_layers, self.proj)
        if self.proj.out_dim != 1:
            raise ShapeError(f'Discriminator projection must have one output, got {self.proj.out_dim}')

    @property
    def feature_count(self) -> int:
        return self.lstm_layers[0].input_dim

    @property
    def hidden_dim(self) -> int:
        return self.lstm_layers[-1].hidden_dim

    @property
    def num_layers(self) -> int:
        return len(self.lstm_layers)

    @classmethod
    def init(
        cls, feature_count: int, hidden_dim: int, rng: np.random.Generator, num_layers: int = 1, zero: bool = False
    ) -> 'Discriminator':
        layers = tuple(
            LstmParams.init(feature_count if k == 0 else hidden_dim, hidden_dim, rng, zero=zero)
            for k in range(num_layers)
        )
        return cls(lstm_layers=layers, proj=DenseParams.init(hidden_dim, 1, rng, zero=zero))

    def tensors(self) -> dict:
        return _flatten(self.lstm_layers, self.proj)

    def with_tensors(self, tensors: dict) -> 'Discriminator':
        layers, proj = _unflatten(tensors, self.num_layers)
        return Discriminator(lstm_layers=layers, proj=proj)

    def forward(self, windows: np.ndarray) -> tuple:
        """(B x T x F) windows -> (B,) sequence scores and a cache for backward"""
        windows = np.asarray(windows, dtype=np.float64)
        if windows.ndim != 3 or windows.shape[2] != self.feature_count:
            raise ShapeError(f'Discriminator expects (B x T x {self.feature_count}) windows, got {windows.shape}')
        hidden, caches = _stack_forward(self.lstm_layers, windows)
        step_scores = expit(dense_forward(self.proj, hidden))[..., 0]
        return step_scores.mean(axis=1), (caches, hidden, step_scores)

    def backward(self, cache: tuple, grad_scores: np.ndarray) -> tuple:
        """Returns (parameter gradients, gradient w.r.t. the input windows)"""
        caches, hidden, step_scores = cache
        steps = step_scores.shape[1]
        grad_steps = np.asarray(grad_scores, dtype=np.float64)[:, np.newaxis] / steps
        grad_logits = (grad_steps * step_scores * (1.0 - step_scores))[..., np.newaxis]
        proj_dW, proj_db, grad_hidden = dense_backward(self.proj, hidden, grad_logits)
        lstm_grads, grad_windows = _stack_backward(self.lstm_layers, caches, grad_hidden)
        return _layer_grads(lstm_grads, proj_dW, proj_db), grad_windows


def _check_stack(layers: tuple, proj: DenseParams) -> None:
    if not layers:
        raise ShapeError('A network needs at least one LSTM layer')
    for lower, upper in zip(layers, layers[1:]):
        if upper.input_dim != lower.hidden_dim:
            raise ShapeError(f'Stacked LSTM layer expects {upper.input_dim} inputs, got {lower.hidden_dim}')
    if proj.in_dim != layers[-1].hidden_dim:
        raise ShapeError(f'Projection expects {proj.in_dim} inputs, LSTM gives {layers[-1].hidden_dim}')


def generate(gen: Generator, noise: np.ndarray) -> np.ndarray:
    """Fake windows (B x T x feature_count), every entry in (0, 1)"""
    return gen.forward(noise)[0]


def per_step_scores(disc: Discriminator, window: np.ndarray) -> np.ndarray:
    return disc.forward(np.asarray(window, dtype=np.float64)[np.newaxis])[1][2][0]


def discriminate(disc: Discriminator, window: np.ndarray) -> float:
    """Score of a single (T x F) window: mean of the per-step sigmoid outputs"""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2:
        raise ShapeError(f'discriminate expects one (T x F) window, got shape {window.shape}')
    return float(disc.forward(window[np.newaxis])[0][0])
