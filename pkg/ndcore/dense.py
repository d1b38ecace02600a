from dataclasses import dataclass

import numpy as np

from ndcore.shapes import ShapeError, expect_shape


@dataclass(frozen=True)
class DenseParams:
    W: np.ndarray  # (out x in)
    b: np.ndarray  # (out,)

    def __post_init__(self):
        W = np.asarray(self.W, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        if W.ndim != 2:
            raise ShapeError(f'Dense weights must be a matrix, got shape {W.shape}')
        expect_shape('dense bias', b, (W.shape[0],))
        if not (np.isfinite(W).all() and np.isfinite(b).all()):
            raise ValueError('Dense parameters must be finite')
        object.__setattr__(self, 'W', W)
        object.__setattr__(self, 'b', b)

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]

    @classmethod
    def init(cls, in_dim: int, out_dim: int, rng: np.random.Generator, zero: bool = False) -> 'DenseParams':
        if zero:
            return cls(W=np.zeros((out_dim, in_dim)), b=np.zeros(out_dim))
        bound = 1.0 / np.sqrt(in_dim)
        return cls(W=rng.uniform(-bound, bound, size=(out_dim, in_dim)), b=np.zeros(out_dim))

    def tensors(self) -> dict:
        return {'W': self.W, 'b': self.b}


def dense_forward(params: DenseParams, x: np.ndarray) -> np.ndarray:
    """Affine map over the last axis, any leading batch/time axes are kept"""
    if x.shape[-1] != params.in_dim:
        raise ShapeError(f'Dense layer expects {params.in_dim} inputs, got {x.shape[-1]}')
    return x @ params.W.T + params.b


def dense_backward(params: DenseParams, x: np.ndarray, grad_out: np.ndarray) -> tuple:
    """Returns (dW, db, dx) for upstream gradient grad_out shaped like the forward output"""
    expected = x.shape[:-1] + (params.out_dim,)
    if grad_out.shape != expected:
        raise ShapeError(f'Dense upstream gradient has shape {grad_out.shape}, expected {expected}')
    flat_grad = grad_out.reshape(-1, params.out_dim)
    flat_x = x.reshape(-1, params.in_dim)
    return flat_grad.T @ flat_x, flat_grad.sum(axis=0), grad_out @ params.W
