"""Analytic latent gradients against central finite differences."""

import numpy as np
import pytest

import toonfuse as tf
from toonfuse.errors import DimensionError
from toonfuse.synthesis import loss_and_gradient

from oracles import fd_gradient

# (max_resolution, D, channel_base, channel_max, seed); all within the toy
# envelope: <= 16 pixels, <= 6 layers, <= 16-wide latents.
GRAD_CONFIGS = [
    (8, 8, 4, 8, 0),
    (8, 8, 4, 8, 1),
    (8, 16, 2, 4, 2),
    (16, 8, 2, 4, 3),
    (16, 16, 4, 8, 4),
    (8, 4, 2, 4, 5),
    (16, 4, 2, 4, 6),
    (8, 12, 4, 8, 7),
    (16, 12, 2, 4, 8),
    (8, 16, 4, 8, 9),
    (16, 16, 2, 4, 10),
]


def _instance(res, d, cb, cm, seed):
    cfg = tf.GeneratorConfig(max_resolution=res, D=d, channel_base=cb, channel_max=cm, seed=seed)
    gen = tf.init_generator(cfg)
    rng = np.random.default_rng(1000 + seed)
    w = tf.LatentWPlus(rng.standard_normal((cfg.L, cfg.D)))
    target = tf.ImageBuffer(rng.uniform(0.0, 1.0, (res, res, 3)))
    return gen, w, target


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-300)
    return float(np.abs(analytic - numeric).max() / scale)


@pytest.mark.parametrize("res,d,cb,cm,seed", GRAD_CONFIGS)
def test_gradient_matches_central_differences(res, d, cb, cm, seed):
    gen, w, target = _instance(res, d, cb, cm, seed)
    analytic = tf.latent_gradient(gen, w, target)

    def loss_of(rows):
        return tf.reconstruction_loss(gen, tf.LatentWPlus(rows), target)

    numeric = fd_gradient(loss_of, w.rows)
    assert max_relative_error(analytic, numeric) < 1e-3


def test_zero_gradient_at_exact_reconstruction(gen16, rng):
    w = tf.LatentWPlus(rng.standard_normal((gen16.L, gen16.D)))
    target = tf.synthesize(gen16, w)
    grad = tf.latent_gradient(gen16, w, target)
    assert np.all(grad == 0.0)


def test_gradient_is_linear_in_residual(gen16, rng):
    """Doubling the pixel residual doubles the gradient bit for bit (the
    backward pass is linear in the output error, and scaling by a power of
    two commutes with float rounding)."""
    w = tf.LatentWPlus(rng.standard_normal((gen16.L, gen16.D)))
    img = tf.synthesize(gen16, w).values
    r = 2.0**-10
    assert img.min() > 2.0 * r  # keeps both targets inside [0, 1]
    t1 = tf.ImageBuffer(img - r)
    t2 = tf.ImageBuffer(img - 2.0 * r)
    # power-of-two offsets subtract exactly, so the second residual is
    # bitwise double the first
    assert np.array_equal(img - t2.values, 2.0 * (img - t1.values))
    g1 = tf.latent_gradient(gen16, w, t1)
    g2 = tf.latent_gradient(gen16, w, t2)
    assert np.array_equal(g2, 2.0 * g1)


def test_loss_and_gradient_agree_with_reconstruction_loss(gen16, rng):
    w = tf.LatentWPlus(rng.standard_normal((gen16.L, gen16.D)))
    target = tf.ImageBuffer(rng.uniform(0, 1, (16, 16, 3)))
    _, loss = loss_and_gradient(gen16, w, target)
    assert loss == tf.reconstruction_loss(gen16, w, target)


def test_single_channel_demodulation_washes_out_styles(rng):
    """With one channel everywhere, demodulation cancels the style scale
    almost exactly, so latent gradients shrink to the epsilon floor.  The
    analytic gradient still matches a Richardson-extrapolated directional
    derivative (per-coordinate differences would drown in round-off here)."""
    cfg = tf.GeneratorConfig(max_resolution=16, D=8, channel_base=1, channel_max=1, seed=3)
    gen = tf.init_generator(cfg)
    w = tf.LatentWPlus(rng.standard_normal((cfg.L, cfg.D)))
    target = tf.ImageBuffer(rng.uniform(0, 1, (16, 16, 3)))
    analytic = tf.latent_gradient(gen, w, target)
    assert np.abs(analytic).max() < 1e-4  # orders below a multi-channel config

    v = rng.standard_normal(w.rows.shape)
    v /= np.linalg.norm(v)

    def loss_at(t):
        return tf.reconstruction_loss(gen, tf.LatentWPlus(w.rows + t * v), target)

    h = 1e-3
    d1 = (loss_at(h) - loss_at(-h)) / (2 * h)
    d2 = (loss_at(h / 2) - loss_at(-h / 2)) / h
    richardson = (4 * d2 - d1) / 3
    directional = float((analytic * v).sum())
    assert directional == pytest.approx(richardson, rel=1e-3, abs=1e-14)


def test_gradient_shape_and_target_checks(gen16, rng):
    w = tf.LatentWPlus(rng.standard_normal((gen16.L, gen16.D)))
    with pytest.raises(DimensionError):
        tf.latent_gradient(gen16, w, tf.ImageBuffer(np.zeros((8, 8, 3))))
    with pytest.raises(DimensionError):
        tf.latent_gradient(
            gen16, tf.LatentWPlus(np.zeros((2, gen16.D))), tf.ImageBuffer(np.zeros((16, 16, 3)))
        )
