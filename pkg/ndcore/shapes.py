import numpy as np


class ShapeError(ValueError):
    pass


def expect_shape(name: str, array: np.ndarray, shape: tuple) -> None:
    if array.shape != shape:
        raise ShapeError(f'{name}: expected shape {shape}, got {array.shape}')


def check_same_structure(params: dict, grads: dict) -> None:
    """Parameter and gradient dicts must carry the same names with identical shapes"""
    if params.keys() != grads.keys():
        raise ShapeError(f'Gradient names {sorted(grads)} do not match parameter names {sorted(params)}')
    for name, value in params.items():
        expect_shape(name, np.asarray(grads[name]), np.shape(value))
