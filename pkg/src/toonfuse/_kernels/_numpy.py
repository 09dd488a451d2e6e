"""Pure-numpy convolution kernels: the fallback backend.

All kernels take float64 CHW feature maps and OIHW weights.  The 3x3
convolutions use zero padding of one pixel; stride-2 output size is ceil(H/2).
"""

from __future__ import annotations

import numpy as np

NAME = "python"


def conv3x3(x: np.ndarray, w: np.ndarray, stride: int = 1) -> np.ndarray:
    """Correlate x (Ci,H,W) with w (Co,Ci,3,3), zero-padded by 1."""
    ci, h, wd = x.shape
    co = w.shape[0]
    xp = np.zeros((ci, h + 2, wd + 2), dtype=np.float64)
    xp[:, 1 : h + 1, 1 : wd + 1] = x
    if stride == 1:
        ho, wo = h, wd
    else:
        ho, wo = (h + 1) // 2, (wd + 1) // 2
    y = np.zeros((co, ho, wo), dtype=np.float64)
    for ky in range(3):
        for kx in range(3):
            patch = xp[:, ky : ky + stride * ho : stride, kx : kx + stride * wo : stride]
            y += np.tensordot(w[:, :, ky, kx], patch, axes=1)
    return y


def conv3x3_grad_input(gy: np.ndarray, w: np.ndarray, h: int, wd: int) -> np.ndarray:
    """Gradient of conv3x3 (stride 1) w.r.t. its input."""
    ci = w.shape[1]
    gp = np.zeros((ci, h + 2, wd + 2), dtype=np.float64)
    for ky in range(3):
        for kx in range(3):
            gp[:, ky : ky + h, kx : kx + wd] += np.tensordot(w[:, :, ky, kx], gy, axes=([0], [0]))
    return gp[:, 1 : h + 1, 1 : wd + 1]


def conv3x3_grad_weight(gy: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Gradient of conv3x3 (stride 1) w.r.t. its weight."""
    ci, h, wd = x.shape
    co = gy.shape[0]
    xp = np.zeros((ci, h + 2, wd + 2), dtype=np.float64)
    xp[:, 1 : h + 1, 1 : wd + 1] = x
    gw = np.empty((co, ci, 3, 3), dtype=np.float64)
    gyf = gy.reshape(co, -1)
    for ky in range(3):
        for kx in range(3):
            patch = xp[:, ky : ky + h, kx : kx + wd].reshape(ci, -1)
            gw[:, :, ky, kx] = gyf @ patch.T
    return gw
