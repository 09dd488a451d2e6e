"""Command-line front end.

Exit codes: 0 success, 1 I/O or file-format failure, 2 flag/validation
failure, 3 numeric failure.  Every command is deterministic under fixed flags
and inputs, writes outputs atomically, and drops a JSON run manifest next to
its primary output.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .encoders import EncoderSet, encode_age, encode_inv_wplus, init_encoders, project_latent
from .errors import FormatError, NumericError, ValidationError
from .formats import (
    load_checkpoint,
    load_latent_wplus,
    load_latent_zplus,
    save_checkpoint,
    save_latent,
    write_atomic,
)
from .imageio import compose_grid, load_png, save_png
from .latent import (
    AgeValue,
    Convention,
    default_m,
    make_control_weights,
)
from .manifest import RunManifest, digest_map, write_manifest
from .pipeline import (
    GridResult,
    ToonAgingRequest,
    dual_style_transfer,
    process_frame_dir,
    sam_reage,
    style_age_grid,
    sweep_c,
    sweep_m,
    toon_aging,
)
from .synthesis import Generator, GeneratorConfig, extrinsic_transform, init_generator, synthesize


def _parse_values(text: str) -> list[float]:
    """Sweep value lists: either 'a..b' (inclusive integer range) or a
    comma-separated list of numbers."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return [float(v) for v in range(int(lo), int(hi) + 1)]
    return [float(v) for v in text.split(",") if v.strip()]


def _load_ckpt(path: str) -> tuple[Generator, EncoderSet]:
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such checkpoint: {path}")
    return load_checkpoint(path)


def _control_from_args(args, L: int, num_coarse: int):
    m = args.m if args.m is not None else default_m(L, num_coarse)
    return make_control_weights(m, args.c, args.s, L, Convention(args.convention))


def _emit(args, command: str, parameters: dict, inputs: list[str], outputs: list[str]) -> None:
    manifest = RunManifest(
        command=command,
        parameters=parameters,
        inputs=digest_map(inputs),
        outputs=digest_map(outputs),
    )
    write_manifest(manifest, outputs[0])


def _basename(value) -> str | None:
    return os.path.basename(value) if isinstance(value, str) else value


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_init(args) -> int:
    config = GeneratorConfig(
        max_resolution=args.max_res,
        base_resolution=args.base_res,
        channel_base=args.channel_base,
        channel_max=args.channel_max,
        D=args.dim,
        seed=args.seed,
        coarse_max_resolution=args.coarse_max_res,
    )
    gen = init_generator(config)
    enc = init_encoders(config)
    save_checkpoint(args.out, gen, enc)
    _emit(
        args,
        "init",
        {
            "max_res": config.max_resolution,
            "base_res": config.base_resolution,
            "channel_base": config.channel_base,
            "channel_max": config.channel_max,
            "dim": config.D,
            "seed": config.seed,
            "coarse_max_res": config.coarse_max_resolution,
            "layers": config.L,
        },
        [],
        [args.out],
    )
    if not args.quiet:
        print(f"wrote {args.out} ({config.L} layers at {config.max_resolution}^2)")
    return 0


def cmd_toonage(args) -> int:
    gen, enc = _load_ckpt(args.ckpt)
    x = load_png(args.input)
    s = load_png(args.style)
    cw = _control_from_args(args, gen.L, gen.config.num_coarse)
    age = AgeValue(args.age) if args.age is not None else None
    ref = load_png(args.age_ref) if args.age_ref else None
    req = ToonAgingRequest(
        input=x,
        style=s,
        control=cw,
        target_age=age,
        adaptive=args.adaptive,
        age_reference=ref,
        prefer_reference=args.prefer_age_ref,
        seed=args.seed,
    )
    codes = None
    if args.style_latent:
        codes = extrinsic_transform(gen, load_latent_zplus(args.style_latent))
    w_in = load_latent_wplus(args.input_latent) if args.input_latent else None
    img = toon_aging(req, gen, enc, extrinsic_codes=codes, w_in=w_in)
    save_png(args.out, img)
    inputs = [args.ckpt, args.input, args.style]
    if args.age_ref:
        inputs.append(args.age_ref)
    _emit(
        args,
        "toonage",
        {
            "age": None if age is None else age.age,
            "adaptive": args.adaptive,
            "m": cw.m,
            "c": cw.c,
            "s": cw.s,
            "convention": cw.convention.value,
            "seed": args.seed,
            "age_ref": _basename(args.age_ref),
            "prefer_age_ref": args.prefer_age_ref,
        },
        inputs,
        [args.out],
    )
    return 0


def cmd_reage(args) -> int:
    gen, enc = _load_ckpt(args.ckpt)
    x = load_png(args.input)
    age = AgeValue(args.age)
    if args.input_latent:
        w_age = encode_age(enc, x, age) + load_latent_wplus(args.input_latent)
        img = synthesize(gen, w_age)
    else:
        img = sam_reage(gen, enc, x, age)
    save_png(args.out, img)
    _emit(args, "reage", {"age": age.age}, [args.ckpt, args.input], [args.out])
    return 0


def cmd_stylize(args) -> int:
    gen, enc = _load_ckpt(args.ckpt)
    x = load_png(args.input)
    s = load_png(args.style)
    cw = _control_from_args(args, gen.L, gen.config.num_coarse)
    img = dual_style_transfer(gen, enc, x, s, cw)
    save_png(args.out, img)
    _emit(
        args,
        "stylize",
        {"m": cw.m, "c": cw.c, "s": cw.s, "convention": cw.convention.value},
        [args.ckpt, args.input, args.style],
        [args.out],
    )
    return 0


def _write_grid(args, grid: GridResult) -> list[str]:
    outputs = [args.out]
    save_png(args.out, compose_grid(grid))
    cells_dir = args.cells_dir or os.path.splitext(args.out)[0] + "_cells"
    os.makedirs(cells_dir, exist_ok=True)
    for i, row in enumerate(grid.cells):
        for j, cell in enumerate(row):
            row_tag = grid.row_labels[i].replace("=", "") or f"r{i}"
            col_tag = grid.col_labels[j].replace("=", "")
            path = os.path.join(cells_dir, f"cell_{row_tag}_{col_tag}.png")
            save_png(path, cell)
            outputs.append(path)
    return outputs


def cmd_interp(args) -> int:
    gen, enc = _load_ckpt(args.ckpt)
    x = load_png(args.input)
    s1 = load_png(args.style1)
    s2 = load_png(args.style2)
    ages = [float(v) for v in args.ages.split(",") if v.strip()]
    if not ages:
        raise ValidationError("--ages needs at least one value")
    cw = _control_from_args(args, gen.L, gen.config.num_coarse)
    grid = style_age_grid(gen, enc, x, s1, s2, ages, args.t_steps, control=cw)
    outputs = _write_grid(args, grid)
    _emit(
        args,
        "interp",
        {
            "ages": ages,
            "t_steps": args.t_steps,
            "m": cw.m,
            "c": cw.c,
            "s": cw.s,
            "convention": cw.convention.value,
        },
        [args.ckpt, args.input, args.style1, args.style2],
        outputs,
    )
    return 0


def cmd_sweep(args) -> int:
    gen, enc = _load_ckpt(args.ckpt)
    x = load_png(args.input)
    s = load_png(args.style)
    age = AgeValue(args.age)
    values = _parse_values(args.values)
    if not values:
        raise ValidationError("--values needs at least one value")
    if args.param == "m":
        for v in values:
            if v != int(v):
                raise ValidationError(f"--values for an m sweep must be integers, got {v}")
        grid = sweep_m(gen, enc, x, s, age, [int(v) for v in values], c=args.c, s_weight=args.s)
        params = {"param": "m", "values": [int(v) for v in values], "c": args.c, "s": args.s}
    else:
        m = args.m if args.m is not None else default_m(gen.L, gen.config.num_coarse)
        grid = sweep_c(gen, enc, x, s, age, values, m=m, s_weight=args.s)
        params = {"param": "c", "values": values, "m": m, "s": args.s}
    outputs = _write_grid(args, grid)
    params["age"] = age.age
    _emit(args, "sweep", params, [args.ckpt, args.input, args.style], outputs)
    return 0


def cmd_invert(args) -> int:
    gen, enc = _load_ckpt(args.ckpt)
    target = load_png(args.target)
    if args.init == "zeros":
        from .latent import LatentWPlus

        init = LatentWPlus(np.zeros((gen.L, gen.D)))
    else:
        init = encode_inv_wplus(enc, target)
    report = project_latent(gen, target, init, max_steps=args.steps, step_size=args.step_size)
    save_latent(args.out, report.latent)
    trace_path = args.trace_out or args.out + ".trace.txt"
    trace = "".join(f"{i}\t{loss:.17g}\n" for i, loss in enumerate(report.losses))
    write_atomic(trace_path, trace.encode("utf-8"))
    _emit(
        args,
        "invert",
        {
            "steps": args.steps,
            "step_size": args.step_size,
            "init": args.init,
            "steps_taken": report.steps,
            "initial_loss": report.initial_loss,
            "final_loss": report.final_loss,
        },
        [args.ckpt, args.target],
        [args.out, trace_path],
    )
    if not args.quiet:
        print(
            f"inverted {args.target}: loss {report.initial_loss:.6g} -> {report.final_loss:.6g} "
            f"in {report.steps} steps"
        )
    return 0


def cmd_inspect(args) -> int:
    gen, enc = _load_ckpt(args.ckpt)
    cfg = gen.config
    print(f"checkpoint: {args.ckpt}")
    print(f"  max_resolution: {cfg.max_resolution}")
    print(f"  base_resolution: {cfg.base_resolution}")
    print(f"  channel_base: {cfg.channel_base}")
    print(f"  channel_max: {cfg.channel_max}")
    print(f"  D: {cfg.D}")
    print(f"  seed: {cfg.seed}")
    print(f"  coarse_max_resolution: {cfg.coarse_max_resolution}")
    print(f"  L: {cfg.L} ({cfg.num_coarse} coarse)")
    print(f"  encoder seed: {enc.seed}")
    tensors = list(gen.params.items()) + [("enc/" + n, a) for n, a in enc.params.items()]
    print(f"  tensors: {len(tensors) + 1}")
    for name, arr in sorted(tensors):
        print(f"    {name}  {tuple(arr.shape)}")
    return 0


def cmd_frames(args) -> int:
    gen, enc = _load_ckpt(args.ckpt)
    s = load_png(args.style)
    cw = _control_from_args(args, gen.L, gen.config.num_coarse)
    template = ToonAgingRequest(
        input=s,  # placeholder; replaced per frame
        style=s,
        control=cw,
        target_age=AgeValue(args.age),
        adaptive=args.adaptive,
        seed=args.seed,
    )
    results = process_frame_dir(gen, enc, args.frames_dir, template)
    os.makedirs(args.out_dir, exist_ok=True)
    outputs = []
    for name, img in results:
        path = os.path.join(args.out_dir, name)
        save_png(path, img)
        outputs.append(path)
    _emit(
        args,
        "frames",
        {
            "age": args.age,
            "adaptive": args.adaptive,
            "m": cw.m,
            "c": cw.c,
            "s": cw.s,
            "convention": cw.convention.value,
            "count": len(outputs),
        },
        [args.ckpt, args.style],
        outputs,
    )
    if not args.quiet:
        print(f"processed {len(outputs)} frames into {args.out_dir}")
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _add_control_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--m", type=int, default=None, help="layer cutoff (default: 7 at L=18, else all coarse layers)")
    p.add_argument("--c", type=float, default=0.5, help="coarse control weight (default 0.5)")
    p.add_argument("--s", type=float, default=1.0, help="fine control weight (default 1.0)")
    p.add_argument(
        "--convention",
        choices=[c.value for c in Convention],
        default=Convention.EXTRINSIC.value,
        help="what a control weight scales: the extrinsic side (default) or the age side",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toonfuse",
        description="Dual-path toy style generator: re-aging fused with exemplar stylization.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--quiet", action="store_true", help="suppress informational output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a deterministic checkpoint")
    p.add_argument("--out", required=True)
    p.add_argument("--max-res", type=int, default=64)
    p.add_argument("--base-res", type=int, default=4)
    p.add_argument("--dim", type=int, default=64, help="latent width (desk-scale default 64)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--channel-base", type=int, default=16)
    p.add_argument("--channel-max", type=int, default=32)
    p.add_argument("--coarse-max-res", type=int, default=32)
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("toonage", help="fused re-aging + stylization render")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--style", required=True)
    p.add_argument("--age", type=float, default=None)
    p.add_argument("--age-ref", default=None, help="image whose estimated age drives the render")
    p.add_argument("--prefer-age-ref", action="store_true", help="let --age-ref win when --age is also given")
    p.add_argument("--adaptive", action="store_true", help="rescale the age by the inverse mean coarse weight")
    _add_control_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input-latent", default=None, help=".lat replacing the reconstruction encode of --input")
    p.add_argument("--style-latent", default=None, help=".lat replacing the style encode of --style")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_toonage)

    p = sub.add_parser("reage", help="plain re-aging render")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--age", type=float, required=True)
    p.add_argument("--input-latent", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reage)

    p = sub.add_parser("stylize", help="exemplar style transfer without an age term")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--style", required=True)
    _add_control_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stylize)

    p = sub.add_parser("interp", help="style-age interpolation grid")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--style1", required=True)
    p.add_argument("--style2", required=True)
    p.add_argument("--ages", default="10,55", help="comma-separated target ages (rows)")
    p.add_argument("--t-steps", type=int, default=5, help="number of interpolation columns (>= 2)")
    _add_control_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--cells-dir", default=None,
                   help="directory for per-cell PNGs (default <out>_cells)")
    p.set_defaults(func=cmd_interp)

    p = sub.add_parser("sweep", help="sweep the layer cutoff m or the coarse weight c")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--style", required=True)
    p.add_argument("--age", type=float, required=True)
    p.add_argument("--param", choices=["m", "c"], required=True)
    p.add_argument("--values", required=True, help="'1..17' or comma-separated values")
    _add_control_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--cells-dir", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("invert", help="project a target image into style space")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--step-size", type=float, default=1.0)
    p.add_argument("--init", choices=["encoder", "zeros"], default="encoder")
    p.add_argument("--out", required=True, help="output .lat path")
    p.add_argument("--trace-out", default=None, help="loss trace path (default <out>.trace.txt)")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("inspect", help="print checkpoint config and tensor table")
    p.add_argument("--ckpt", required=True)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("frames", help="apply the fused render to a directory of frames")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--frames-dir", required=True)
    p.add_argument("--style", required=True)
    p.add_argument("--age", type=float, required=True)
    p.add_argument("--adaptive", action="store_true")
    _add_control_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_frames)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (FormatError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
