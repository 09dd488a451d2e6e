"""Toy style-based generator: mapping networks, modulated-convolution
synthesis, the extrinsic style path, and analytic latent gradients.

Architecture, all in float64:

* ``f_in``: 3-layer MLP Z -> W (two hidden layers, leaky 0.2).
* ``f_ex``: same shape, weights shared across rows, mapping each Z+ row into
  style space.
* synthesis: learned constant at the base resolution; per layer a modulated +
  demodulated 3x3 convolution (input-channel styles ``1 + A_i @ w_i``), bias,
  leaky 0.2; nearest-neighbor 2x upsample between resolutions; per-resolution
  1x1 toRGB projections accumulated as a skip path; smooth sigmoid squashing
  onto [0, 1] at the output boundary.
* dual path: coarse layers (resolution <= coarse_max_resolution) add a second
  modulated 3x3 residual convolution styled by the extrinsic row and scaled by
  the per-layer extrinsic-side weight; fine layers blend the two style rows
  with the control weights instead.

There are no per-pixel noise inputs: every forward pass is a pure function of
(parameters, latents), which the determinism tests rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import DimensionError, NumericError, ValidationError
from .latent import (
    ControlWeights,
    LatentWPlus,
    LatentZ,
    LatentZPlus,
    _RowMatrix,
    fuse_latents,
)
from .rng import CounterRng

DEMOD_EPS = 1e-8
LRELU_SLOPE = 0.2
RGB_CHANNELS = 3
CHANNEL_REF_RESOLUTION = 1024  # resolution at which channel_base applies


class ExtrinsicCodes(_RowMatrix):
    """Per-layer style rows produced by the extrinsic transform (L x D)."""


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    """H x W x 3 image, row-major, values in [0, 1]."""

    values: np.ndarray

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v is self.values:
            v = v.copy()
        if v.ndim != 3 or v.shape[2] != RGB_CHANNELS:
            raise DimensionError(f"ImageBuffer expects H x W x 3, got shape {v.shape}")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise DimensionError("ImageBuffer dimensions must be positive")
        if not np.all(np.isfinite(v)):
            raise ValidationError("ImageBuffer values must be finite")
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValidationError("ImageBuffer values must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GeneratorConfig:
    """Static shape of a generator; everything else is derived from it."""

    max_resolution: int = 64
    base_resolution: int = 4
    channel_base: int = 16
    channel_max: int = 32
    D: int = 512
    seed: int = 0
    coarse_max_resolution: int = 32

    def __post_init__(self):
        if not _is_pow2(self.max_resolution) or self.max_resolution < 8:
            raise ValidationError(
                f"max_resolution must be a power of two >= 8, got {self.max_resolution}"
            )
        if not _is_pow2(self.base_resolution) or self.base_resolution < 4:
            raise ValidationError(
                f"base_resolution must be a power of two >= 4, got {self.base_resolution}"
            )
        if self.base_resolution >= self.max_resolution:
            raise ValidationError("base_resolution must be smaller than max_resolution")
        if self.channel_max < self.channel_base:
            raise ValidationError(
                f"channel_max ({self.channel_max}) must be >= channel_base ({self.channel_base})"
            )
        if self.channel_base < 1 or self.D < 1:
            raise ValidationError("channel_base and D must be positive")
        if not _is_pow2(self.coarse_max_resolution):
            raise ValidationError("coarse_max_resolution must be a power of two")
        if self.seed < 0 or self.seed > 0xFFFFFFFFFFFFFFFF:
            raise ValidationError("seed must fit in 64 unsigned bits")

    @classmethod
    def toy(cls, seed: int = 0, **overrides) -> "GeneratorConfig":
        """Desk-scale preset: 64x64 output with 64-wide latents."""
        return cls(max_resolution=64, D=64, seed=seed, **overrides)

    def resolutions(self) -> list[int]:
        out = []
        r = self.base_resolution
        while r <= self.max_resolution:
            out.append(r)
            r *= 2
        return out

    @property
    def L(self) -> int:
        return 2 * len(self.resolutions())

    def layer_resolution(self, i: int) -> int:
        """Feature-map resolution of 0-based layer i."""
        return self.base_resolution * 2 ** (i // 2)

    def channels(self, res: int) -> int:
        return max(1, min(self.channel_max, self.channel_base * CHANNEL_REF_RESOLUTION // res))

    def layer_channels(self) -> list[tuple[int, int]]:
        """(in, out) channel counts per layer; input channels change only on
        the first layer of each new resolution."""
        pairs = []
        for i in range(self.L):
            res = self.layer_resolution(i)
            if i >= 2 and i % 2 == 0:
                cin = self.channels(res // 2)
            else:
                cin = self.channels(res if i % 2 == 1 else self.base_resolution)
            pairs.append((cin, self.channels(res)))
        return pairs

    def coarse_mask(self) -> np.ndarray:
        return np.array(
            [self.layer_resolution(i) <= self.coarse_max_resolution for i in range(self.L)]
        )

    @property
    def num_coarse(self) -> int:
        return int(self.coarse_mask().sum())


@dataclass(frozen=True, eq=False)
class Generator:
    """Frozen parameter set; immutable after init/load, safe to share."""

    config: GeneratorConfig
    params: dict[str, np.ndarray] = field(repr=False)

    @property
    def L(self) -> int:
        return self.config.L

    @property
    def D(self) -> int:
        return self.config.D


def _f32_snap(arr: np.ndarray) -> np.ndarray:
    """Round through float32 so in-memory parameters match the checkpoint
    encoding bit for bit."""
    out = arr.astype(np.float32).astype(np.float64)
    out.setflags(write=False)
    return out


def _draw(rng: CounterRng, name: str, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    scale = 1.0 / np.sqrt(max(1, fan_in))
    return _f32_snap(rng.derive(name).normal_array(shape, scale))


def generator_param_shapes(config: GeneratorConfig) -> dict[str, tuple[int, ...]]:
    """Canonical name -> shape table for every generator tensor."""
    D = config.D
    shapes: dict[str, tuple[int, ...]] = {}
    for net in ("map", "fex"):
        for k in range(3):
            shapes[f"{net}/w{k}"] = (D, D)
            shapes[f"{net}/b{k}"] = (D,)
    c0 = config.channels(config.base_resolution)
    shapes["const"] = (c0, config.base_resolution, config.base_resolution)
    coarse = config.coarse_mask()
    for i, (cin, cout) in enumerate(config.layer_channels()):
        shapes[f"conv{i}/weight"] = (cout, cin, 3, 3)
        shapes[f"conv{i}/bias"] = (cout,)
        shapes[f"conv{i}/affine"] = (cin, D)
        if coarse[i]:
            shapes[f"rconv{i}/weight"] = (cout, cin, 3, 3)
            shapes[f"rconv{i}/affine"] = (cin, D)
    for ridx, res in enumerate(config.resolutions()):
        shapes[f"torgb{ridx}/weight"] = (RGB_CHANNELS, config.channels(res))
        shapes[f"torgb{ridx}/bias"] = (RGB_CHANNELS,)
    return shapes


def _fan_in(name: str, shape: tuple[int, ...]) -> int:
    if name == "const":
        return 1
    if name.endswith("/bias") or name.endswith(("/b0", "/b1", "/b2")):
        return max(1, int(np.prod(shape)))  # keep biases small but nonzero
    if len(shape) == 4:
        return shape[1] * shape[2] * shape[3]
    if len(shape) == 2:
        return shape[1]
    return max(1, int(np.prod(shape)))


def init_generator(config: GeneratorConfig) -> Generator:
    """Draw every parameter from a per-tensor counter stream keyed by name;
    identical configs give bit-identical parameters."""
    rng = CounterRng(config.seed)
    params = {
        name: _draw(rng, name, shape, _fan_in(name, shape))
        for name, shape in generator_param_shapes(config).items()
    }
    return Generator(config=config, params=params)


# --------------------------------------------------------------------------
# primitive forward/backward pieces
# --------------------------------------------------------------------------


def _lrelu(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0.0, x, LRELU_SLOPE * x)


def _lrelu_mask(pre: np.ndarray) -> np.ndarray:
    return np.where(pre > 0.0, 1.0, LRELU_SLOPE)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _up2(x: np.ndarray) -> np.ndarray:
    """Nearest-neighbor 2x upsample of a CHW map."""
    return np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)


def _up2_backward(g: np.ndarray) -> np.ndarray:
    """Adjoint of _up2: sum each 2x2 block."""
    c, h, w = g.shape
    return g.reshape(c, h // 2, 2, w // 2, 2).sum(axis=(2, 4))


def _mlp3(params: dict[str, np.ndarray], prefix: str, x: np.ndarray) -> np.ndarray:
    """Row-wise 3-layer MLP; x is (D,) or (N, D)."""
    h = x @ params[f"{prefix}/w0"].T + params[f"{prefix}/b0"]
    h = _lrelu(h)
    h = h @ params[f"{prefix}/w1"].T + params[f"{prefix}/b1"]
    h = _lrelu(h)
    return h @ params[f"{prefix}/w2"].T + params[f"{prefix}/b2"]


def _modulated_weight(w: np.ndarray, affine: np.ndarray, wrow: np.ndarray):
    """Style-modulated, demodulated conv weight plus backward context.
    Overflow in the norm saturates to inf and demodulates to zero, so
    extreme styles wash out instead of poisoning the forward pass."""
    s = 1.0 + affine @ wrow
    wm = w * s[None, :, None, None]
    with np.errstate(over="ignore"):
        d = 1.0 / np.sqrt(np.sum(wm * wm, axis=(1, 2, 3)) + DEMOD_EPS)
    wd = wm * d[:, None, None, None]
    return wd, (s, wm, d)


def _modulated_weight_backward(g_wd, ctx, w_base, affine):
    """Gradient of the modulation/demodulation w.r.t. the style row."""
    s, wm, d = ctx
    g_d = np.sum(g_wd * wm, axis=(1, 2, 3))
    g_wm = g_wd * d[:, None, None, None] - (g_d * d**3)[:, None, None, None] * wm
    g_s = np.einsum("oikl,oikl->i", g_wm, w_base)
    return affine.T @ g_s


# --------------------------------------------------------------------------
# synthesis forward / backward
# --------------------------------------------------------------------------


def _check_styles(gen: Generator, rows: np.ndarray, what: str) -> None:
    if rows.shape != (gen.L, gen.D):
        raise DimensionError(
            f"{what} has shape {rows.shape}, generator expects ({gen.L}, {gen.D})"
        )


def _synthesis_forward(
    gen: Generator,
    styles: np.ndarray,
    ex_styles: np.ndarray | None = None,
    ex_scale: np.ndarray | None = None,
    record: bool = False,
):
    """Shared forward engine.

    styles: (L, D) per-layer main style rows.  When ex_styles is given, coarse
    layers additionally apply the residual convolution styled by the matching
    extrinsic row and scaled by ex_scale[i]; a zero scale skips the residual
    entirely so the degenerate blend is bit-identical to the plain path.
    """
    cfg = gen.config
    p = gen.params
    coarse = cfg.coarse_mask()
    if record and ex_styles is not None:
        raise ValidationError("gradient recording supports the single-path forward only")
    tape = {"layers": []} if record else None

    x = p["const"]
    rgb = None
    i = 0
    for ridx, res in enumerate(cfg.resolutions()):
        if ridx > 0:
            x = _up2(x)
        for _ in range(2):
            wd, ctx = _modulated_weight(p[f"conv{i}/weight"], p[f"conv{i}/affine"], styles[i])
            y = K.conv3x3(x, wd) + p[f"conv{i}/bias"][:, None, None]
            if ex_styles is not None and coarse[i] and ex_scale[i] != 0.0:
                rwd, _ = _modulated_weight(
                    p[f"rconv{i}/weight"], p[f"rconv{i}/affine"], ex_styles[i]
                )
                y = y + ex_scale[i] * K.conv3x3(x, rwd)
            if not np.all(np.isfinite(y)):
                raise NumericError(f"non-finite activations at synthesis layer {i + 1}")
            if record:
                tape["layers"].append({"x_in": x, "pre": y, "ctx": ctx, "wd": wd})
            x = _lrelu(y)
            i += 1
        t = np.tensordot(p[f"torgb{ridx}/weight"], x, axes=1) + p[f"torgb{ridx}/bias"][
            :, None, None
        ]
        rgb = t if rgb is None else _up2(rgb) + t
    img = _sigmoid(rgb)
    return img, tape


def _to_buffer(img_chw: np.ndarray) -> ImageBuffer:
    return ImageBuffer(np.transpose(img_chw, (1, 2, 0)))


def synthesize(gen: Generator, w_plus: LatentWPlus) -> ImageBuffer:
    """Render the plain path: constant input styled per layer by w_plus."""
    _check_styles(gen, w_plus.rows, "w_plus")
    img, _ = _synthesis_forward(gen, w_plus.rows)
    return _to_buffer(img)


def dual_layer_styles(
    gen: Generator, w_in: LatentWPlus, ex: ExtrinsicCodes, cw: ControlWeights
) -> np.ndarray:
    """Per-layer main style rows of the dual path: intrinsic rows at coarse
    layers, blended rows at fine layers.  Exposed for style-tap inspection."""
    _check_styles(gen, w_in.rows, "w_in")
    _check_styles(gen, ex.rows, "extrinsic codes")
    if cw.L != gen.L:
        raise DimensionError(f"control weights have length {cw.L}, generator has {gen.L} layers")
    fused = fuse_latents(w_in, ex, cw).rows
    coarse = gen.config.coarse_mask()
    styles = np.where(coarse[:, None], w_in.rows, fused)
    return styles


def synthesize_dual(
    gen: Generator, w_in: LatentWPlus, ex: ExtrinsicCodes, cw: ControlWeights
) -> ImageBuffer:
    """Render the dual path: coarse residual injection plus fine-layer
    style blending, both governed by the extrinsic-side weights."""
    styles = dual_layer_styles(gen, w_in, ex, cw)
    img, _ = _synthesis_forward(gen, styles, ex_styles=ex.rows, ex_scale=cw.extrinsic_side())
    return _to_buffer(img)


def map_z_to_w(gen: Generator, z: LatentZ) -> np.ndarray:
    """Mapping network forward: one Z row to one W row."""
    if z.D != gen.D:
        raise DimensionError(f"z has width {z.D}, generator expects {gen.D}")
    return _mlp3(gen.params, "map", z.values)


def extrinsic_transform(gen: Generator, z_ex: LatentZPlus) -> ExtrinsicCodes:
    """Row-shared MLP carrying Z+ rows into per-layer style space."""
    if z_ex.rows.shape != (gen.L, gen.D):
        raise DimensionError(
            f"z_ex has shape {z_ex.rows.shape}, generator expects ({gen.L}, {gen.D})"
        )
    return ExtrinsicCodes(_mlp3(gen.params, "fex", z_ex.rows))


def reconstruction_loss(gen: Generator, w_plus: LatentWPlus, target: ImageBuffer) -> float:
    """Mean squared pixel error between the rendered latent and the target."""
    img = synthesize(gen, w_plus)
    _check_target(gen, target)
    return float(np.mean((img.values - target.values) ** 2))


def _check_target(gen: Generator, target: ImageBuffer) -> None:
    r = gen.config.max_resolution
    if target.values.shape != (r, r, RGB_CHANNELS):
        raise DimensionError(
            f"target shape {target.values.shape} does not match generator output ({r}, {r}, 3)"
        )


def latent_gradient(gen: Generator, w_plus: LatentWPlus, target: ImageBuffer) -> np.ndarray:
    """d(mean squared pixel error)/d(w_plus), by reverse accumulation through
    the synthesis path; generator parameters are treated as constants."""
    grad, _ = loss_and_gradient(gen, w_plus, target)
    return grad


def loss_and_gradient(
    gen: Generator, w_plus: LatentWPlus, target: ImageBuffer
) -> tuple[np.ndarray, float]:
    """Gradient of the reconstruction loss plus the loss itself."""
    _check_styles(gen, w_plus.rows, "w_plus")
    _check_target(gen, target)
    cfg = gen.config
    p = gen.params
    img, tape = _synthesis_forward(gen, w_plus.rows, record=True)

    tgt = np.transpose(target.values, (2, 0, 1))
    n = img.size
    loss = float(np.mean((img - tgt) ** 2))
    g_img = (2.0 / n) * (img - tgt)
    g_rgb = g_img * img * (1.0 - img)  # through the sigmoid

    resolutions = cfg.resolutions()
    g_taps: list[np.ndarray | None] = [None] * len(resolutions)
    for ridx in range(len(resolutions) - 1, -1, -1):
        g_taps[ridx] = g_rgb
        if ridx > 0:
            g_rgb = _up2_backward(g_rgb)

    g_styles = np.zeros_like(w_plus.rows)
    g_x: np.ndarray | None = None
    for ridx in range(len(resolutions) - 1, -1, -1):
        tap_grad = np.tensordot(p[f"torgb{ridx}/weight"].T, g_taps[ridx], axes=1)
        g_x = tap_grad if g_x is None else g_x + tap_grad
        for sub in (1, 0):
            i = 2 * ridx + sub
            rec = tape["layers"][i]
            g_pre = g_x * _lrelu_mask(rec["pre"])
            h = rec["x_in"].shape[1]
            g_x = K.conv3x3_grad_input(g_pre, rec["wd"], h, rec["x_in"].shape[2])
            g_wd = K.conv3x3_grad_weight(g_pre, rec["x_in"])
            g_styles[i] = _modulated_weight_backward(
                g_wd, rec["ctx"], p[f"conv{i}/weight"], p[f"conv{i}/affine"]
            )
        if ridx > 0:
            g_x = _up2_backward(g_x)
    if not np.all(np.isfinite(g_styles)):
        raise NumericError("non-finite latent gradient")
    return g_styles, loss
