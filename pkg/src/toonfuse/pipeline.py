"""Pipeline orchestration: re-aging, exemplar style transfer, the fused
dual-path render, random generation, interpolation grids, parameter sweeps,
and batch frame processing.

Every function here is a pure composition of generator and encoder calls, so
fixed (checkpoint, request, seed) always reproduces the same bytes.  Grid and
sweep cells are mutually independent; ``TOONFUSE_THREADS`` caps how many are
computed concurrently (results are assembled in order either way).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .encoders import (
    AgeEstimator,
    EncoderSet,
    encode_age,
    encode_inv_wplus,
    encode_inv_zplus,
)
from .errors import ValidationError
from .latent import (
    AgeValue,
    ControlWeights,
    LatentWPlus,
    LatentZ,
    LatentZPlus,
    adaptive_target_age,
    as_age,
    default_m,
    lerp_latents,
    make_control_weights,
)
from .rng import CounterRng
from .synthesis import (
    ExtrinsicCodes,
    Generator,
    ImageBuffer,
    extrinsic_transform,
    map_z_to_w,
    synthesize,
    synthesize_dual,
)


def _thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("TOONFUSE_THREADS", "1")))
    except ValueError:
        return 1


def _map_cells(fn, items):
    cap = _thread_cap()
    if cap <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=cap) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class ToonAgingRequest:
    """Inputs of one fused re-aging + stylization render.

    When an age reference image is present it must be the only age driver:
    either leave target_age unset or set prefer_reference explicitly.
    """

    input: ImageBuffer
    style: ImageBuffer
    control: ControlWeights
    target_age: AgeValue | float | None = None
    adaptive: bool = False
    age_reference: ImageBuffer | None = None
    prefer_reference: bool = False
    seed: int = 0


@dataclass(frozen=True)
class GridResult:
    """Rows x cols of rendered cells plus the axis labels that produced them."""

    cells: tuple[tuple[ImageBuffer, ...], ...]
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.cells) != len(self.row_labels):
            raise ValidationError("grid rows do not match row labels")
        for row in self.cells:
            if len(row) != len(self.col_labels):
                raise ValidationError("grid columns do not match column labels")
        shapes = {cell.values.shape for row in self.cells for cell in row}
        if len(shapes) > 1:
            raise ValidationError(f"grid cells disagree on image shape: {sorted(shapes)}")

    @property
    def rows(self) -> int:
        return len(self.cells)

    @property
    def cols(self) -> int:
        return len(self.col_labels)


def sam_reage(gen: Generator, enc: EncoderSet, x: ImageBuffer, a: AgeValue | float) -> ImageBuffer:
    """Plain re-aging render: age residual + reconstruction latent through the
    single-path generator."""
    w_age = encode_age(enc, x, a) + encode_inv_wplus(enc, x)
    return synthesize(gen, w_age)


def dual_style_transfer(
    gen: Generator, enc: EncoderSet, x: ImageBuffer, s: ImageBuffer, cw: ControlWeights
) -> ImageBuffer:
    """Exemplar style transfer without an age term: intrinsic path carries the
    reconstruction latent, extrinsic path carries the style codes."""
    w_in = encode_inv_wplus(enc, x)
    ex = extrinsic_transform(gen, encode_inv_zplus(enc, s))
    return synthesize_dual(gen, w_in, ex, cw)


def resolve_target_age(req: ToonAgingRequest, est=None) -> AgeValue:
    """Effective age of a request: reference estimate when a reference image
    drives it, then the adaptive rescale when requested.

    ``est`` is any callable ImageBuffer -> age (the default linear probe, or a
    substituted model)."""
    if req.age_reference is not None:
        if req.target_age is not None and not req.prefer_reference:
            raise ValidationError(
                "both target_age and age_reference given; set prefer_reference to pick the reference"
            )
        est = est or AgeEstimator.linear_probe()
        age = as_age(est(req.age_reference))
    elif req.target_age is not None:
        age = as_age(req.target_age)
    else:
        raise ValidationError("request needs a target_age or an age_reference")
    if req.adaptive:
        age = adaptive_target_age(age, req.control)
    return age


def toon_aging(
    req: ToonAgingRequest,
    gen: Generator,
    enc: EncoderSet,
    age_estimator: AgeEstimator | None = None,
    extrinsic_codes: ExtrinsicCodes | None = None,
    w_in: LatentWPlus | None = None,
) -> ImageBuffer:
    """Fused render: re-aging latent on the intrinsic path, style codes on the
    extrinsic path, combined by the request's control weights.

    ``extrinsic_codes`` / ``w_in`` substitute precomputed latents for the
    corresponding encoder outputs (e.g. loaded from .lat files).
    """
    age = resolve_target_age(req, age_estimator)
    if w_in is None:
        w_in = encode_inv_wplus(enc, req.input)
    w_age = encode_age(enc, req.input, age) + w_in
    if extrinsic_codes is None:
        extrinsic_codes = extrinsic_transform(gen, encode_inv_zplus(enc, req.style))
    return synthesize_dual(gen, w_age, extrinsic_codes, req.control)


def random_generate(gen: Generator, seed: int, cw: ControlWeights | None = None) -> ImageBuffer:
    """Render from gaussian draws: one Z row mapped and broadcast onto the
    intrinsic path, a full Z+ stack through the extrinsic transform."""
    if cw is None:
        cw = make_control_weights(default_m(gen.L, gen.config.num_coarse), L=gen.L)
    rng = CounterRng(seed).derive("random_generate")
    z_in = LatentZ(rng.normal(gen.D))
    z_ex = LatentZPlus(rng.normal(gen.L * gen.D).reshape(gen.L, gen.D))
    w_row = map_z_to_w(gen, z_in)
    w_in = LatentWPlus(np.tile(w_row, (gen.L, 1)))
    ex = extrinsic_transform(gen, z_ex)
    return synthesize_dual(gen, w_in, ex, cw)


def style_age_grid(
    gen: Generator,
    enc: EncoderSet,
    x: ImageBuffer,
    s1: ImageBuffer,
    s2: ImageBuffer,
    ages: list[AgeValue | float],
    t_steps: int,
    control: ControlWeights | None = None,
) -> GridResult:
    """Grid of fused renders: rows sweep the target age, columns interpolate
    the extrinsic codes between the two style exemplars."""
    if t_steps < 2:
        raise ValidationError(f"t_steps must be at least 2, got {t_steps}")
    if not ages:
        raise ValidationError("ages must be nonempty")
    if control is None:
        control = make_control_weights(default_m(gen.L, gen.config.num_coarse), L=gen.L)
    codes1 = extrinsic_transform(gen, encode_inv_zplus(enc, s1))
    codes2 = extrinsic_transform(gen, encode_inv_zplus(enc, s2))
    ts = [j / (t_steps - 1) for j in range(t_steps)]
    ages = [as_age(a) for a in ages]

    def cell(job):
        age, t = job
        req = ToonAgingRequest(input=x, style=s1, control=control, target_age=age)
        return toon_aging(req, gen, enc, extrinsic_codes=lerp_latents(codes1, codes2, t))

    flat = _map_cells(cell, [(age, t) for age in ages for t in ts])
    rows = tuple(
        tuple(flat[i * len(ts) : (i + 1) * len(ts)]) for i in range(len(ages))
    )
    return GridResult(
        cells=rows,
        row_labels=tuple(f"age={a.age:g}" for a in ages),
        col_labels=tuple(f"t={t:.2f}" for t in ts),
    )


def sweep_m(
    gen: Generator,
    enc: EncoderSet,
    x: ImageBuffer,
    s: ImageBuffer,
    a: AgeValue | float,
    m_values: list[int],
    c: float = 0.5,
    s_weight: float = 1.0,
) -> GridResult:
    """One fused render per layer cutoff, everything else fixed."""
    if not m_values:
        raise ValidationError("m_values must be nonempty")
    return _sweep(gen, enc, x, s, a, [("m", int(m)) for m in m_values], c, s_weight, None)


def sweep_c(
    gen: Generator,
    enc: EncoderSet,
    x: ImageBuffer,
    s: ImageBuffer,
    a: AgeValue | float,
    c_values: list[float],
    m: int | None = None,
    s_weight: float = 1.0,
) -> GridResult:
    """One fused render per coarse-weight value, everything else fixed."""
    if not c_values:
        raise ValidationError("c_values must be nonempty")
    if m is None:
        m = default_m(gen.L, gen.config.num_coarse)
    return _sweep(gen, enc, x, s, a, [("c", float(c)) for c in c_values], None, s_weight, m)


def _sweep(gen, enc, x, s, a, jobs, c_fixed, s_weight, m_fixed) -> GridResult:
    codes = extrinsic_transform(gen, encode_inv_zplus(enc, s))
    w_in = encode_inv_wplus(enc, x)

    def control_for(job) -> ControlWeights:
        name, value = job
        if name == "m":
            return make_control_weights(value, c_fixed, s_weight, gen.L)
        return make_control_weights(m_fixed, value, s_weight, gen.L)

    def cell(job):
        req = ToonAgingRequest(input=x, style=s, control=control_for(job), target_age=a)
        return toon_aging(req, gen, enc, extrinsic_codes=codes, w_in=w_in)

    images = _map_cells(cell, jobs)
    labels = tuple(f"{name}={value:g}" for name, value in jobs)
    return GridResult(cells=(tuple(images),), row_labels=("",), col_labels=labels)


def process_frames(
    gen: Generator,
    enc: EncoderSet,
    frames: list[ImageBuffer],
    template: ToonAgingRequest,
) -> list[ImageBuffer]:
    """Apply the fused render to every frame with fixed latent settings: the
    style codes are computed once from the template and shared."""
    if not frames:
        raise ValidationError("no frames to process")
    codes = extrinsic_transform(gen, encode_inv_zplus(enc, template.style))

    def one(frame: ImageBuffer) -> ImageBuffer:
        return toon_aging(replace(template, input=frame), gen, enc, extrinsic_codes=codes)

    return _map_cells(one, frames)


def process_frame_dir(
    gen: Generator,
    enc: EncoderSet,
    frame_dir: str,
    template: ToonAgingRequest,
) -> list[tuple[str, ImageBuffer]]:
    """Directory variant of process_frames: frames are the .png files of the
    directory in lexicographic order; output order and count match input."""
    from .imageio import load_frame_dir

    named = load_frame_dir(frame_dir)
    outs = process_frames(gen, enc, [img for _, img in named], template)
    return [(name, out) for (name, _), out in zip(named, outs)]
