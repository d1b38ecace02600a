import numpy as np

BCE_CLAMP = 1e-7


def bce_loss(pred, target) -> tuple:
    """
    Binary cross-entropy and its derivative with respect to pred, elementwise.

    Predictions are clamped to [BCE_CLAMP, 1 - BCE_CLAMP]; where the clamp is active the loss is flat and
    the returned derivative is 0.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.broadcast_to(np.asarray(target, dtype=np.float64), pred.shape)
    clamped = np.clip(pred, BCE_CLAMP, 1.0 - BCE_CLAMP)
    loss = -(target * np.log(clamped) + (1.0 - target) * np.log(1.0 - clamped))
    grad = (clamped - target) / (clamped * (1.0 - clamped))
    grad = np.where(clamped == pred, grad, 0.0)
    if loss.ndim == 0:
        return float(loss), float(grad)
    return loss, grad
