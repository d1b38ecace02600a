from dataclasses import dataclass, field

import numpy as np

from ndcore.shapes import check_same_structure


def sgd_step(params: dict, grads: dict, lr: float) -> dict:
    """Plain gradient descent, theta <- theta - lr * g"""
    if lr <= 0:
        raise ValueError(f'Learning rate must be positive, got {lr}')
    check_same_structure(params, grads)
    return {name: value - lr * np.asarray(grads[name]) for name, value in params.items()}


@dataclass(frozen=True)
class AdamState:
    step_count: int = 0
    m: dict = field(default_factory=dict)  # first moments
    v: dict = field(default_factory=dict)  # second moments
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: dict, **hyper) -> 'AdamState':
        return cls(
            m={name: np.zeros_like(value, dtype=np.float64) for name, value in params.items()},
            v={name: np.zeros_like(value, dtype=np.float64) for name, value in params.items()},
            **hyper,
        )


def adam_step(params: dict, grads: dict, state: AdamState, lr: float) -> tuple:
    """Bias-corrected Adam update. Returns (updated params, updated state)"""
    if lr <= 0:
        raise ValueError(f'Learning rate must be positive, got {lr}')
    check_same_structure(params, grads)
    check_same_structure(params, state.m)
    check_same_structure(params, state.v)

    step = state.step_count + 1
    correction1 = 1.0 - state.beta1**step
    correction2 = 1.0 - state.beta2**step
    updated, m, v = {}, {}, {}
    for name, value in params.items():
        g = np.asarray(grads[name])
        m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * g**2
        m_hat = m[name] / correction1
        v_hat = v[name] / correction2
        updated[name] = value - lr * m_hat / (np.sqrt(v_hat) + state.eps)

    new_state = AdamState(step_count=step, m=m, v=v, beta1=state.beta1, beta2=state.beta2, eps=state.eps)
    return updated, new_state
