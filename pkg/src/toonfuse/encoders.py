"""Image-to-latent encoders, optimization-based latent projection, and the
pluggable age estimator.

The encoders are deliberately small, untrained, seeded conv networks: two
stride-2 3x3 convolutions, global average pooling, and a dense head emitting
one row per synthesis layer.  They verify plumbing, shapes, and composition
identities rather than perceptual inversion quality.  The age encoder sees the
target age as a constant extra input plane valued age/100; swapping in the
null variant zeroes the residual so the re-aging latent collapses onto the
plain reconstruction latent.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K
from .errors import DimensionError, NumericError, ValidationError
from .latent import AgeValue, LatentWPlus, LatentZPlus, as_age
from .rng import CounterRng
from .synthesis import (
    Generator,
    GeneratorConfig,
    ImageBuffer,
    _draw,
    _fan_in,
    _lrelu,
    loss_and_gradient,
)

ENC_CHANNELS = 16
AGE_PROBE_SIZE = 16


@dataclass(frozen=True, eq=False)
class EncoderSet:
    """Reconstruction (W+ and Z+) and age-residual encoders for one generator
    shape.  Immutable; encode calls are pure."""

    input_resolution: int
    L: int
    D: int
    seed: int
    params: dict[str, np.ndarray] = field(repr=False)
    null_age: bool = False

    def with_null_age(self, flag: bool = True) -> "EncoderSet":
        return replace(self, null_age=flag)


def encoder_param_shapes(input_resolution: int, L: int, D: int) -> dict[str, tuple[int, ...]]:
    c = ENC_CHANNELS
    shapes: dict[str, tuple[int, ...]] = {}
    for head, cin in (("invw", 3), ("invz", 3), ("age", 4)):
        shapes[f"{head}/conv0/weight"] = (c, cin, 3, 3)
        shapes[f"{head}/conv0/bias"] = (c,)
        shapes[f"{head}/conv1/weight"] = (c, c, 3, 3)
        shapes[f"{head}/conv1/bias"] = (c,)
        shapes[f"{head}/dense/weight"] = (L * D, c)
        shapes[f"{head}/dense/bias"] = (L * D,)
    return shapes


def init_encoders(config: GeneratorConfig, seed: int | None = None, null_age: bool = False) -> EncoderSet:
    """Seeded encoder set sized to a generator config.  When seed is omitted
    it derives from the generator seed, so one checkpoint seed pins both."""
    if seed is None:
        seed = CounterRng(config.seed).derive("encoders").seed
    rng = CounterRng(seed)
    params = {
        name: _draw(rng, name, shape, _fan_in(name, shape))
        for name, shape in encoder_param_shapes(config.max_resolution, config.L, config.D).items()
    }
    return EncoderSet(
        input_resolution=config.max_resolution,
        L=config.L,
        D=config.D,
        seed=seed,
        params=params,
        null_age=null_age,
    )


def _check_image(enc: EncoderSet, x: ImageBuffer, what: str = "image") -> None:
    r = enc.input_resolution
    if x.values.shape != (r, r, 3):
        raise DimensionError(f"{what} shape {x.values.shape} does not match encoder input ({r}, {r}, 3)")


def _conv_head(params: dict[str, np.ndarray], head: str, planes: np.ndarray, L: int, D: int) -> np.ndarray:
    h = _lrelu(K.conv3x3(planes, params[f"{head}/conv0/weight"], stride=2)
               + params[f"{head}/conv0/bias"][:, None, None])
    h = _lrelu(K.conv3x3(h, params[f"{head}/conv1/weight"], stride=2)
               + params[f"{head}/conv1/bias"][:, None, None])
    pooled = h.mean(axis=(1, 2))
    flat = params[f"{head}/dense/weight"] @ pooled + params[f"{head}/dense/bias"]
    return flat.reshape(L, D)


def encode_inv_wplus(enc: EncoderSet, x: ImageBuffer) -> LatentWPlus:
    """Reconstruction latent of an image, directly in style space."""
    _check_image(enc, x)
    planes = np.transpose(x.values, (2, 0, 1))
    return LatentWPlus(_conv_head(enc.params, "invw", planes, enc.L, enc.D))


def encode_inv_zplus(enc: EncoderSet, s: ImageBuffer) -> LatentZPlus:
    """Style-exemplar latent in the pre-mapping extended space."""
    _check_image(enc, s, "style image")
    planes = np.transpose(s.values, (2, 0, 1))
    return LatentZPlus(_conv_head(enc.params, "invz", planes, enc.L, enc.D))


def encode_age(enc: EncoderSet, x: ImageBuffer, a: AgeValue | float) -> LatentWPlus:
    """Age residual to be added onto the reconstruction latent.  The target
    age enters as a constant input plane valued age/100."""
    _check_image(enc, x)
    age = as_age(a)
    if enc.null_age:
        return LatentWPlus(np.zeros((enc.L, enc.D)))
    planes = np.transpose(x.values, (2, 0, 1))
    age_plane = np.full((1, planes.shape[1], planes.shape[2]), age.age / 100.0)
    return LatentWPlus(_conv_head(enc.params, "age", np.concatenate([planes, age_plane]), enc.L, enc.D))


def reaging_latent(enc: EncoderSet, x: ImageBuffer, a: AgeValue | float) -> LatentWPlus:
    """Full re-aging latent: age residual plus reconstruction latent."""
    return encode_age(enc, x, a) + encode_inv_wplus(enc, x)


# --------------------------------------------------------------------------
# optimization-based projection
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ProjectionReport:
    """Result of projecting a target image into style space."""

    latent: LatentWPlus
    losses: tuple[float, ...]  # initial loss followed by accepted-step losses
    steps: int

    @property
    def initial_loss(self) -> float:
        return self.losses[0]

    @property
    def final_loss(self) -> float:
        return self.losses[-1]


def project_latent(
    gen: Generator,
    target: ImageBuffer,
    init: LatentWPlus,
    max_steps: int = 200,
    step_size: float = 1.0,
    min_step: float = 1e-12,
) -> ProjectionReport:
    """Gradient descent on the reconstruction loss.

    The step length follows the Barzilai-Borwein secant rule (momentum-free),
    and every proposed step is halved by backtracking until it does not
    increase the loss, so the accepted-loss trace is nonincreasing by
    construction.  Descent stops early once backtracking collapses below
    min_step.
    """
    if max_steps < 0:
        raise ValidationError(f"max_steps must be nonnegative, got {max_steps}")
    if not (np.isfinite(step_size) and step_size > 0.0):
        raise ValidationError(f"step_size must be positive, got {step_size!r}")

    w = init.rows.copy()
    grad, loss = loss_and_gradient(gen, LatentWPlus(w), target)
    if not np.isfinite(loss):
        raise NumericError("non-finite loss at projection step 0")
    losses = [loss]
    step = step_size
    taken = 0
    prev_w = prev_grad = None
    for _ in range(max_steps):
        if loss == 0.0:
            break
        if prev_w is not None:
            dw = (w - prev_w).ravel()
            dg = (grad - prev_grad).ravel()
            curvature = dw @ dg
            if np.isfinite(curvature) and curvature > 0.0:
                step = float(dw @ dw) / curvature
        accepted = False
        trial = step
        while trial >= min_step:
            cand = w - trial * grad
            cand_loss = _plain_loss(gen, cand, target)
            if np.isfinite(cand_loss) and cand_loss <= loss:
                accepted = True
                break
            trial *= 0.5
        if not accepted:
            break
        prev_w, prev_grad = w, grad
        w, loss, step = cand, cand_loss, trial
        losses.append(loss)
        taken += 1
        if taken < max_steps and loss > 0.0:
            grad, check = loss_and_gradient(gen, LatentWPlus(w), target)
            if not np.isfinite(check):
                raise NumericError(f"non-finite loss at projection step {taken}")
    return ProjectionReport(latent=LatentWPlus(w), losses=tuple(losses), steps=taken)


def _plain_loss(gen: Generator, rows: np.ndarray, target: ImageBuffer) -> float:
    from .synthesis import _synthesis_forward

    img, _ = _synthesis_forward(gen, rows)
    return float(np.mean((np.transpose(img, (1, 2, 0)) - target.values) ** 2))


# --------------------------------------------------------------------------
# age estimation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AgeEstimator:
    """Deterministic stand-in age classifier: a seeded linear probe on a
    16x16 grayscale thumbnail, squashed into (0, 100).  Any callable mapping
    ImageBuffer -> AgeValue can be substituted for it."""

    tag: str
    weights: np.ndarray
    bias: float

    @classmethod
    def linear_probe(cls, seed: int = 0) -> "AgeEstimator":
        w = CounterRng(seed).derive("age_probe").normal_array((AGE_PROBE_SIZE * AGE_PROBE_SIZE,))
        w = w / (AGE_PROBE_SIZE * AGE_PROBE_SIZE) ** 0.5
        w.setflags(write=False)
        return cls(tag="linear-probe", weights=w, bias=0.0)

    def __call__(self, ref: ImageBuffer) -> AgeValue:
        return estimate_age(self, ref)


def _thumbnail_gray(img: ImageBuffer, size: int) -> np.ndarray:
    """Channel-mean grayscale resized to size x size: block averaging when
    shrinking, nearest repetition when growing."""
    gray = img.values.mean(axis=2)
    h, w = gray.shape
    if h >= size:
        fh = h // size
        gray = gray[: fh * size, :].reshape(size, fh, w).mean(axis=1)
    else:
        gray = np.repeat(gray, -(-size // h), axis=0)[:size, :]
    h2, w2 = gray.shape
    if w2 >= size:
        fw = w2 // size
        gray = gray[:, : fw * size].reshape(size, size, fw).mean(axis=2)
    else:
        gray = np.repeat(gray, -(-size // w2), axis=1)[:, :size]
    return gray


def estimate_age(est: AgeEstimator, ref: ImageBuffer) -> AgeValue:
    """Deterministic age estimate in [0, 100]."""
    thumb = _thumbnail_gray(ref, AGE_PROBE_SIZE).reshape(-1)
    raw = float(thumb @ est.weights + est.bias)
    return AgeValue(100.0 / (1.0 + np.exp(-raw)))
