from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from ndcore.shapes import ShapeError, expect_shape

GATE_ORDER = ('input', 'forget', 'cell', 'output')  # row blocks i, f, g, o of W, U and b
FORGET_BIAS = 1.0


@dataclass(frozen=True)
class LstmParams:
    W: np.ndarray  # (4H x input_dim)
    U: np.ndarray  # (4H x H)
    b: np.ndarray  # (4H,)

    def __post_init__(self):
        W = np.asarray(self.W, dtype=np.float64)
        U = np.asarray(self.U, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] % 4:
            raise ShapeError(f'LSTM input weights must be (4H x D), got {W.shape}')
        hidden_dim = W.shape[0] // 4
        expect_shape('LSTM recurrent weights', U, (4 * hidden_dim, hidden_dim))
        expect_shape('LSTM bias', b, (4 * hidden_dim,))
        if not (np.isfinite(W).all() and np.isfinite(U).all() and np.isfinite(b).all()):
            raise ValueError('LSTM parameters must be finite')
        object.__setattr__(self, 'W', W)
        object.__setattr__(self, 'U', U)
        object.__setattr__(self, 'b', b)

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.U.shape[1]

    @classmethod
    def init(cls, input_dim: int, hidden_dim: int, rng: np.random.Generator, zero: bool = False) -> 'LstmParams':
        """Uniform in +-1/sqrt(hidden_dim) with forget-gate bias 1.0, or all zeros"""
        if zero:
            return cls(
                W=np.zeros((4 * hidden_dim, input_dim)),
                U=np.zeros((4 * hidden_dim, hidden_dim)),
                b=np.zeros(4 * hidden_dim),
            )
        bound = 1.0 / np.sqrt(hidden_dim)
        W = rng.uniform(-bound, bound, size=(4 * hidden_dim, input_dim))
        U = rng.uniform(-bound, bound, size=(4 * hidden_dim, hidden_dim))
        b = np.zeros(4 * hidden_dim)
        b[hidden_dim : 2 * hidden_dim] = FORGET_BIAS
        return cls(W=W, U=U, b=b)

    def gate(self, name: str) -> tuple:
        """(W_g, U_g, b_g) views of one gate"""
        k = GATE_ORDER.index(name)
        rows = slice(k * self.hidden_dim, (k + 1) * self.hidden_dim)
        return self.W[rows], self.U[rows], self.b[rows]

    def tensors(self) -> dict:
        return {'W': self.W, 'U': self.U, 'b': self.b}


@dataclass
class LstmCache:
    params: LstmParams
    x: np.ndarray  # (B, T, D)
    h0: np.ndarray  # (B, H)
    c0: np.ndarray
    i: np.ndarray  # gate activations, each (B, T, H)
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    c: np.ndarray
    tanh_c: np.ndarray
    h: np.ndarray
    unbatched: bool


@dataclass
class LstmGrads:
    W: np.ndarray
    U: np.ndarray
    b: np.ndarray
    x: np.ndarray
    h0: np.ndarray
    c0: np.ndarray

    def tensors(self) -> dict:
        return {'W': self.W, 'U': self.U, 'b': self.b}


def _initial_state(state: Optional[np.ndarray], batch: int, hidden_dim: int, name: str) -> np.ndarray:
    if state is None:
        return np.zeros((batch, hidden_dim))
    state = np.asarray(state, dtype=np.float64)
    if state.ndim == 1:
        state = np.broadcast_to(state, (batch, hidden_dim)).copy()
    expect_shape(name, state, (batch, hidden_dim))
    return state


def lstm_forward(
    params: LstmParams, sequence: np.ndarray, h0: Optional[np.ndarray] = None, c0: Optional[np.ndarray] = None
) -> tuple:
    """
    Runs the standard LSTM recurrence over a (T x D) sequence or a (B x T x D) batch.

    Returns:
    - hidden states shaped (T x H) or (B x T x H)
    - LstmCache holding every intermediate needed by lstm_backward
    """
    x = np.asarray(sequence, dtype=np.float64)
    unbatched = x.ndim == 2
    if unbatched:
        x = x[np.newaxis]
    if x.ndim != 3 or x.shape[1] < 1:
        raise ShapeError(f'LSTM input must be (T x D) or (B x T x D) with T >= 1, got {np.shape(sequence)}')
    if x.shape[2] != params.input_dim:
        raise ShapeError(f'LSTM expects input dim {params.input_dim}, got {x.shape[2]}')

    batch, steps, _ = x.shape
    hidden = params.hidden_dim
    h_prev = _initial_state(h0, batch, hidden, 'h0')
    c_prev = _initial_state(c0, batch, hidden, 'c0')
    cache = LstmCache(
        params=params,
        x=x,
        h0=h_prev,
        c0=c_prev,
        i=np.empty((batch, steps, hidden)),
        f=np.empty((batch, steps, hidden)),
        g=np.empty((batch, steps, hidden)),
        o=np.empty((batch, steps, hidden)),
        c=np.empty((batch, steps, hidden)),
        tanh_c=np.empty((batch, steps, hidden)),
        h=np.empty((batch, steps, hidden)),
        unbatched=unbatched,
    )

    x_proj = x @ params.W.T + params.b
    for t in range(steps):
        z = x_proj[:, t] + h_prev @ params.U.T
        i = expit(z[:, :hidden])
        f = expit(z[:, hidden : 2 * hidden])
        g = np.tanh(z[:, 2 * hidden : 3 * hidden])
        o = expit(z[:, 3 * hidden :])
        c_prev = f * c_prev + i * g
        tanh_c = np.tanh(c_prev)
        h_prev = o * tanh_c
        cache.i[:, t], cache.f[:, t], cache.g[:, t], cache.o[:, t] = i, f, g, o
        cache.c[:, t], cache.tanh_c[:, t], cache.h[:, t] = c_prev, tanh_c, h_prev

    hidden_seq = cache.h[0] if unbatched else cache.h
    return hidden_seq.copy(), cache


def lstm_backward(cache: LstmCache, grad_h_sequence: np.ndarray) -> LstmGrads:
    """Backpropagation through time for per-step hidden-state gradients shaped like the forward output"""
    params = cache.params
    grad_h = np.asarray(grad_h_sequence, dtype=np.float64)
    if cache.unbatched:
        grad_h = grad_h[np.newaxis]
    expect_shape('LSTM upstream gradient', grad_h, cache.h.shape)

    batch, steps, hidden = cache.h.shape
    dz_all = np.empty((batch, steps, 4 * hidden))
    dU = np.zeros_like(params.U)
    dh_next = np.zeros((batch, hidden))
    dc_next = np.zeros((batch, hidden))

    for t in reversed(range(steps)):
        i, f, g, o = cache.i[:, t], cache.f[:, t], cache.g[:, t], cache.o[:, t]
        tanh_c = cache.tanh_c[:, t]
        c_prev = cache.c[:, t - 1] if t > 0 else cache.c0
        h_prev = cache.h[:, t - 1] if t > 0 else cache.h0

        dh = grad_h[:, t] + dh_next
        dc = dh * o * (1.0 - tanh_c**2) + dc_next
        dz = dz_all[:, t]
        dz[:, :hidden] = dc * g * i * (1.0 - i)
        dz[:, hidden : 2 * hidden] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * hidden : 3 * hidden] = dc * i * (1.0 - g**2)
        dz[:, 3 * hidden :] = dh * tanh_c * o * (1.0 - o)

        dU += dz.T @ h_prev
        dh_next = dz @ params.U
        dc_next = dc * f

    flat_dz = dz_all.reshape(-1, 4 * hidden)
    dW = flat_dz.T @ cache.x.reshape(-1, params.input_dim)
    db = flat_dz.sum(axis=0)
    dx = dz_all @ params.W

    if cache.unbatched:
        return LstmGrads(W=dW, U=dU, b=db, x=dx[0], h0=dh_next[0], c0=dc_next[0])
    return LstmGrads(W=dW, U=dU, b=db, x=dx, h0=dh_next, c0=dc_next)
