"""Latent spaces and the pure algebra on them: per-layer control weights,
latent fusion, interpolation, and the adaptive target-age rescale.

All values are immutable after construction and every operation is a pure
function, so everything here is safe to call concurrently.  Latent arithmetic
is done in float64; the 32-bit quantization happens only in file formats.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TypeVar

import numpy as np

from .errors import DimensionError, NumericError, ValidationError

DEFAULT_D = 512
DEFAULT_L = 18
DEFAULT_COARSE_M = 7  # layer cutoff used when L == 18
DEFAULT_C = 0.5
DEFAULT_S = 1.0


class Convention(str, Enum):
    """Meaning of a control-weight entry cw_i during fusion.

    ``extrinsic`` (default): cw_i weights the style/extrinsic side, so cw = 0
    collapses the dual path onto the plain re-aging path.  ``age``: cw_i
    weights the age side instead; the two are related by cw -> 1 - cw.
    """

    EXTRINSIC = "extrinsic"
    AGE = "age"


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    if out is arr:
        out = out.copy()
    out.setflags(write=False)
    return out


def _check_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what} contains non-finite entries")


@dataclass(frozen=True)
class LatentZ:
    """A single pre-mapping latent row of width D."""

    values: np.ndarray

    def __post_init__(self):
        v = _freeze(np.atleast_1d(self.values))
        if v.ndim != 1:
            raise DimensionError(f"LatentZ expects a vector, got shape {v.shape}")
        _check_finite(v, "LatentZ.values")
        object.__setattr__(self, "values", v)

    @property
    def D(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class _RowMatrix:
    """Shared plumbing for L x D latent matrices."""

    rows: np.ndarray

    def __post_init__(self):
        r = _freeze(np.atleast_2d(self.rows))
        if r.ndim != 2:
            raise DimensionError(f"{type(self).__name__} expects an L x D matrix, got shape {r.shape}")
        _check_finite(r, f"{type(self).__name__}.rows")
        object.__setattr__(self, "rows", r)

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return np.array_equal(self.rows, other.rows)

    @property
    def L(self) -> int:
        return self.rows.shape[0]

    @property
    def D(self) -> int:
        return self.rows.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.rows[i]


class LatentZPlus(_RowMatrix):
    """Extended pre-mapping latent: one Z row per synthesis layer."""


class LatentWPlus(_RowMatrix):
    """Extended style latent: one W row per synthesis layer.

    Supports ``a + b`` so residual codes can be added onto reconstruction
    codes without unwrapping.
    """

    def __add__(self, other: "LatentWPlus") -> "LatentWPlus":
        if not isinstance(other, LatentWPlus):
            return NotImplemented
        if self.rows.shape != other.rows.shape:
            raise DimensionError(
                f"cannot add latents of shapes {self.rows.shape} and {other.rows.shape}"
            )
        return LatentWPlus(self.rows + other.rows)


@dataclass(frozen=True)
class AgeValue:
    """Target age in years, restricted to [0, 100]."""

    age: float

    def __post_init__(self):
        a = float(self.age)
        if not np.isfinite(a) or a < 0.0 or a > 100.0:
            raise ValidationError(f"age must lie in [0, 100], got {self.age!r}")
        object.__setattr__(self, "age", a)


def as_age(value: "AgeValue | float | int") -> AgeValue:
    return value if isinstance(value, AgeValue) else AgeValue(float(value))


@dataclass(frozen=True, eq=False)
class ControlWeights:
    """Per-layer blend vector: entries 1..m equal c, entries m+1..L equal s."""

    values: np.ndarray
    m: int
    c: float
    s: float
    convention: Convention = Convention.EXTRINSIC

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return (
            np.array_equal(self.values, other.values)
            and (self.m, self.c, self.s, self.convention)
            == (other.m, other.c, other.s, other.convention)
        )

    def __post_init__(self):
        v = _freeze(np.atleast_1d(self.values))
        if v.ndim != 1:
            raise DimensionError(f"ControlWeights expects a vector, got shape {v.shape}")
        if np.any(v < 0.0) or np.any(v > 1.0):
            raise ValidationError("values: every control weight must lie in [0, 1]")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "convention", Convention(self.convention))

    @property
    def L(self) -> int:
        return self.values.shape[0]

    def extrinsic_side(self) -> np.ndarray:
        """Per-layer weight applied to the extrinsic/style side."""
        if self.convention is Convention.EXTRINSIC:
            return self.values
        return 1.0 - self.values


def make_control_weights(
    m: int,
    c: float = DEFAULT_C,
    s: float = DEFAULT_S,
    L: int = DEFAULT_L,
    convention: Convention | str = Convention.EXTRINSIC,
) -> ControlWeights:
    """Build the segmented control-weight vector: m copies of c then L-m of s."""
    if int(L) != L or L < 1:
        raise ValidationError(f"L: layer count must be a positive integer, got {L!r}")
    L = int(L)
    if int(m) != m or m < 0 or m > L:
        raise ValidationError(f"m: layer cutoff must be an integer in [0, {L}], got {m!r}")
    m = int(m)
    if not (np.isfinite(c) and 0.0 <= c <= 1.0):
        raise ValidationError(f"c: coarse weight must lie in [0, 1], got {c!r}")
    if not (np.isfinite(s) and 0.0 <= s <= 1.0):
        raise ValidationError(f"s: fine weight must lie in [0, 1], got {s!r}")
    values = np.empty(L, dtype=np.float64)
    values[:m] = c
    values[m:] = s
    return ControlWeights(values=values, m=m, c=float(c), s=float(s), convention=Convention(convention))


def default_m(L: int, coarse_layers: int | None = None) -> int:
    """Default layer cutoff: 7 at the full 18-layer width, otherwise the
    number of coarse layers of the paired generator."""
    if L == DEFAULT_L:
        return DEFAULT_COARSE_M
    if coarse_layers is not None:
        return min(coarse_layers, L)
    return L


_M = TypeVar("_M", bound=_RowMatrix)


def fuse_latents(w_age: LatentWPlus, w_ex: "LatentWPlus | _RowMatrix", cw: ControlWeights) -> LatentWPlus:
    """Per-layer convex blend of the age latent with the extrinsic codes.

    Under ``extrinsic`` convention layer i yields
    ``(1 - cw_i) * w_age_i + cw_i * w_ex_i``; under ``age`` it is
    ``cw_i * w_age_i + (1 - cw_i) * w_ex_i``.
    """
    if w_age.rows.shape != w_ex.rows.shape:
        raise DimensionError(
            f"latent shapes differ: {w_age.rows.shape} vs {w_ex.rows.shape}"
        )
    if cw.L != w_age.L:
        raise DimensionError(f"control weights have length {cw.L}, latents have {w_age.L} rows")
    w = cw.values[:, None]
    if cw.convention is Convention.EXTRINSIC:
        fused = (1.0 - w) * w_age.rows + w * w_ex.rows
    else:
        fused = w * w_age.rows + (1.0 - w) * w_ex.rows
    return LatentWPlus(fused)


def lerp_latents(a: _M, b: _M, t: float) -> _M:
    """Elementwise (1 - t) * a + t * b; exact at both endpoints."""
    if type(a) is not type(b):
        raise ValidationError(
            f"cannot interpolate {type(a).__name__} with {type(b).__name__}"
        )
    if a.rows.shape != b.rows.shape:
        raise DimensionError(f"latent shapes differ: {a.rows.shape} vs {b.rows.shape}")
    if not (np.isfinite(t) and 0.0 <= t <= 1.0):
        raise ValidationError(f"t: interpolation parameter must lie in [0, 1], got {t!r}")
    if t == 0.0:
        return a
    if t == 1.0:
        return b
    return type(a)((1.0 - t) * a.rows + t * b.rows)


def adaptive_target_age(a_target: "AgeValue | float", cw: ControlWeights) -> AgeValue:
    """Rescale the target age by the inverse mean of the first m control
    weights, then clamp back into [0, 100]."""
    raw = adaptive_target_age_raw(a_target, cw)
    return AgeValue(min(100.0, max(0.0, raw)))


def adaptive_target_age_raw(a_target: "AgeValue | float", cw: ControlWeights) -> float:
    """Unclamped value of the adaptive age rescale, for reporting."""
    a = as_age(a_target)
    if cw.m < 1:
        raise NumericError("adaptive age control undefined for m = 0")
    mean = float(np.mean(cw.values[: cw.m]))
    if mean <= 0.0:
        raise NumericError("adaptive age control undefined: coarse control weights average to zero")
    return a.age / mean
