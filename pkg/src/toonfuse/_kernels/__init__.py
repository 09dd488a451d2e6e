"""Kernel backend selection.

The compiled Cython kernels are preferred when the extension was built;
otherwise the pure-numpy twins are used.  Force a choice with
``TOONFUSE_BACKEND=python`` or ``TOONFUSE_BACKEND=cython`` (the latter raises
if the extension is missing).  Both backends implement the same contracts and
agree to float64 rounding; ``benchmarks/bench_backends.py`` compares them.
"""

from __future__ import annotations

import os

from . import _numpy

_choice = os.environ.get("TOONFUSE_BACKEND", "auto").lower()

if _choice == "python":
    _impl = _numpy
elif _choice == "cython":
    from . import _conv_cy as _impl  # type: ignore[no-redef]
else:
    try:
        from . import _conv_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _numpy

BACKEND = _impl.NAME

conv3x3 = _impl.conv3x3
conv3x3_grad_input = _impl.conv3x3_grad_input
conv3x3_grad_weight = _impl.conv3x3_grad_weight


def available_backends() -> list[str]:
    names = ["python"]
    try:
        from . import _conv_cy  # noqa: F401

        names.append("cython")
    except ImportError:
        pass
    return names


def get_backend(name: str):
    """Return the kernel module for an explicit backend name."""
    if name == "python":
        return _numpy
    if name == "cython":
        from . import _conv_cy

        return _conv_cy
    raise ValueError(f"unknown kernel backend {name!r}")
