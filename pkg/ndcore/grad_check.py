from typing import Callable

import numpy as np


def finite_diff_grad(loss_fn: Callable[[dict], float], params: dict, h: float = 1e-5) -> dict:
    """Central differences (L(theta + h) - L(theta - h)) / 2h for every coordinate of every tensor"""
    working = {name: np.array(value, dtype=np.float64) for name, value in params.items()}
    grads = {}
    for name, tensor in working.items():
        grad = np.zeros_like(tensor)
        for index in np.ndindex(tensor.shape):
            original = tensor[index]
            tensor[index] = original + h
            loss_plus = loss_fn(working)
            tensor[index] = original - h
            loss_minus = loss_fn(working)
            tensor[index] = original
            grad[index] = (loss_plus - loss_minus) / (2.0 * h)
        grads[name] = grad
    return grads


def max_relative_error(analytic: dict, numeric: dict, floor: float = 1e-8) -> float:
    """Largest elementwise |a - n| / max(|a|, |n|, floor) over all tensors"""
    worst = 0.0
    for name, value in analytic.items():
        a = np.asarray(value, dtype=np.float64)
        n = np.asarray(numeric[name], dtype=np.float64)
        denominator = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        if a.size:
            worst = max(worst, float(np.max(np.abs(a - n) / denominator)))
    return worst
