"""Adaptive-moment (Adam) parameter updates."""

import numpy as np


def adam_step(params, grads, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update, in place on each ``Param``.

    ``grads[i]`` may be None, which is treated as a zero gradient.
    """
    for p, g in zip(params, grads):
        if g is None:
            g = np.zeros_like(p.value)
        p.step += 1
        p.m *= beta1
        p.m += (1 - beta1) * g
        p.v *= beta2
        p.v += (1 - beta2) * g * g
        m_hat = p.m / (1 - beta1**p.step)
        v_hat = p.v / (1 - beta2**p.step)
        p.value -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.value.dtype)
