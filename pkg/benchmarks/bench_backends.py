#!/usr/bin/env python3
"""Benchmark the compiled convolution kernels against the pure-numpy fallback.

Times the three conv primitives across feature-map sizes and a couple of
whole renders, checks that both backends agree numerically, and prints a
table.  Run from the repo root:

    python benchmarks/bench_backends.py [--full] [--reps N]

``--full`` adds the 1024^2 render (tens of seconds per backend).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import toonfuse as tf
from toonfuse._kernels import available_backends, get_backend

CONV_CASES = [
    # (channels, size) roughly matching the synthesis path
    (16, 8),
    (32, 16),
    (32, 32),
    (32, 64),
    (16, 256),
    (16, 1024),
]


def _time(fn, reps: int) -> float:
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_conv(reps: int) -> None:
    backends = {name: get_backend(name) for name in available_backends()}
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'case':<16}" + "".join(f"{n:>12}" for n in backends) + f"{'ratio':>10}")
    for c, n in CONV_CASES:
        x = rng.standard_normal((c, n, n))
        w = rng.standard_normal((c, c, 3, 3))
        gy = rng.standard_normal((c, n, n))
        cases = {
            "conv3x3": lambda k: k.conv3x3(x, w),
            "grad_input": lambda k: k.conv3x3_grad_input(gy, w, n, n),
            "grad_weight": lambda k: k.conv3x3_grad_weight(gy, x),
        }
        r = max(1, reps // max(1, (c * c * n * n) // 300_000))
        for label, call in cases.items():
            results = {}
            times = {}
            for name, mod in backends.items():
                times[name] = _time(lambda m=mod: call(m), r)
                results[name] = call(mod)
            if len(results) == 2:
                a, b = results.values()
                # backends reassociate long reductions differently
                np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)
                ratio = times["python"] / times["cython"]
            else:
                ratio = float("nan")
            row = "".join(f"{times[name] * 1e3:>10.3f}ms" for name in backends)
            print(f"{label:<22}{f'C={c} {n}x{n}':<16}{row}{ratio:>9.2f}x")


def bench_forward(full: bool) -> None:
    print()
    print(f"{'render':<30}" + "".join(f"{n:>12}" for n in available_backends()))
    sizes = [(16, 16), (64, 64)] + ([(1024, 64)] if full else [])
    for res, d in sizes:
        cfg = tf.GeneratorConfig(max_resolution=res, D=d, seed=0)
        times = {}
        imgs = {}
        for name in available_backends():
            mod = get_backend(name)
            import toonfuse._kernels as kernels
            import toonfuse.synthesis  # noqa: F401  (kernels resolved via the package)

            saved = (kernels.conv3x3, kernels.conv3x3_grad_input, kernels.conv3x3_grad_weight)
            kernels.conv3x3 = mod.conv3x3
            kernels.conv3x3_grad_input = mod.conv3x3_grad_input
            kernels.conv3x3_grad_weight = mod.conv3x3_grad_weight
            try:
                gen = tf.init_generator(cfg)
                w = tf.LatentWPlus(np.random.default_rng(1).standard_normal((cfg.L, cfg.D)))
                imgs[name] = tf.synthesize(gen, w)  # warm-up
                reps = 1 if res >= 1024 else 3
                times[name] = _time(lambda: tf.synthesize(gen, w), reps)
            finally:
                kernels.conv3x3, kernels.conv3x3_grad_input, kernels.conv3x3_grad_weight = saved
        if len(imgs) == 2:
            a, b = (im.values for im in imgs.values())
            np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)
        row = "".join(f"{times[name]:>11.3f}s" for name in times)
        print(f"{f'synthesize {res}x{res} (D={d})':<30}{row}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=7, help="repetitions per timing (best-of)")
    ap.add_argument("--full", action="store_true", help="include the 1024^2 render")
    args = ap.parse_args()
    names = available_backends()
    print(f"available backends: {', '.join(names)}")
    if "cython" not in names:
        print("note: compiled kernels missing; build with `python setup.py build_ext --inplace`")
    bench_conv(args.reps)
    bench_forward(args.full)


if __name__ == "__main__":
    main()
