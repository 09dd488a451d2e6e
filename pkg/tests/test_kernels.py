"""Kernel backends: contract agreement between the compiled and numpy twins,
and both against the straight-loop oracle."""

import numpy as np
import pytest

from toonfuse import _kernels
from toonfuse._kernels import available_backends, get_backend

from oracles import conv3x3_oracle

HAS_CYTHON = "cython" in available_backends()

needs_cython = pytest.mark.skipif(not HAS_CYTHON, reason="compiled kernels not built")


@pytest.mark.parametrize("stride", [1, 2])
def test_active_backend_matches_oracle(rng, stride):
    x = rng.standard_normal((3, 10, 10))
    w = rng.standard_normal((5, 3, 3, 3))
    got = _kernels.conv3x3(x, w, stride)
    want = conv3x3_oracle(x, w, stride)
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-14)


@needs_cython
@pytest.mark.parametrize("stride", [1, 2])
@pytest.mark.parametrize("shape", [(1, 4, 4), (3, 9, 9), (8, 16, 16)])
def test_backends_agree_on_forward(rng, stride, shape):
    cy = get_backend("cython")
    py = get_backend("python")
    x = rng.standard_normal(shape)
    w = rng.standard_normal((6, shape[0], 3, 3))
    np.testing.assert_allclose(
        cy.conv3x3(x, w, stride), py.conv3x3(x, w, stride), rtol=1e-12, atol=1e-14
    )


@needs_cython
def test_backends_agree_on_gradients(rng):
    cy = get_backend("cython")
    py = get_backend("python")
    x = rng.standard_normal((4, 12, 12))
    w = rng.standard_normal((7, 4, 3, 3))
    gy = rng.standard_normal((7, 12, 12))
    np.testing.assert_allclose(
        cy.conv3x3_grad_input(gy, w, 12, 12),
        py.conv3x3_grad_input(gy, w, 12, 12),
        rtol=1e-12,
        atol=1e-14,
    )
    np.testing.assert_allclose(
        cy.conv3x3_grad_weight(gy, x), py.conv3x3_grad_weight(gy, x), rtol=1e-12, atol=1e-14
    )


def test_grad_input_is_conv_adjoint(rng):
    """<conv(x), gy> == <x, grad_input(gy)> for random tensors."""
    x = rng.standard_normal((3, 8, 8))
    w = rng.standard_normal((5, 3, 3, 3))
    gy = rng.standard_normal((5, 8, 8))
    lhs = float((_kernels.conv3x3(x, w) * gy).sum())
    rhs = float((x * _kernels.conv3x3_grad_input(gy, w, 8, 8)).sum())
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_grad_weight_is_weight_adjoint(rng):
    """<conv(x; w), gy> == <w, grad_weight(gy, x)>."""
    x = rng.standard_normal((3, 8, 8))
    w = rng.standard_normal((5, 3, 3, 3))
    gy = rng.standard_normal((5, 8, 8))
    lhs = float((_kernels.conv3x3(x, w) * gy).sum())
    rhs = float((w * _kernels.conv3x3_grad_weight(gy, x)).sum())
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_stride2_output_shape(rng):
    x = rng.standard_normal((2, 9, 9))
    w = rng.standard_normal((4, 2, 3, 3))
    assert _kernels.conv3x3(x, w, 2).shape == (4, 5, 5)


def test_backend_selection_env(monkeypatch):
    assert _kernels.BACKEND in ("cython", "python")
    with pytest.raises(ValueError):
        get_backend("fortran")
