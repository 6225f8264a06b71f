#!/usr/bin/env python3
"""Benchmark the numpy kernels against the compiled extension.

Times the two hot kernels (2-D convolution, bilinear map sampling) at
training-representative shapes plus a full training step under each
backend profile.  Run from the repository root:

    python benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from dpf import kernels
from dpf.config import TrainConfig
from dpf.kernels import numpy_backend


def timeit(fn, repeats):
    fn()
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1000.0


def bench_conv(backends, repeats):
    rng = np.random.default_rng(0)
    shapes = [(2, 3, 64, 64, 16), (2, 16, 64, 64, 16),
              (2, 16, 128, 128, 16), (1, 6, 8, 8, 6)]
    print("\nconv2d forward+backward, 3x3 stride 1 (ms, best of repeats)")
    header = f"{'shape':>22}" + "".join(f"{name:>14}" for name, _ in backends)
    print(header)
    for b, c, h, w, co in shapes:
        x = rng.standard_normal((b, c, h, w)).astype(np.float32)
        wt = rng.standard_normal((co, c, 3, 3)).astype(np.float32)
        bias = np.zeros(co, np.float32)
        g = rng.standard_normal((b, co, h, w)).astype(np.float32)
        row = f"{f'{b}x{c}x{h}x{w}->{co}':>22}"
        for _, mod in backends:
            def step():
                out = mod.conv2d_forward(x, wt, bias, 1, 1)
                mod.conv2d_backward(x, wt, 1, 1, g)
            row += f"{timeit(step, repeats):>14.2f}"
        print(row)


def bench_bilinear(backends, repeats):
    rng = np.random.default_rng(1)
    print("\nbilinear sampling forward+backward (ms, best of repeats)")
    header = f"{'points on map':>22}" + "".join(f"{name:>14}" for name, _ in backends)
    print(header)
    for n, (b, c, h, w) in [(1024, (2, 16, 64, 64)), (16384, (2, 16, 64, 64)),
                            (16384, (1, 32, 128, 128))]:
        maps = rng.standard_normal((b, c, h, w)).astype(np.float32)
        fy = rng.uniform(-1, h, n)
        fx = rng.uniform(-1, w, n)
        scene = rng.integers(0, b, n).astype(np.int64)
        g = rng.standard_normal((n, c)).astype(np.float32)
        row = f"{f'{n} on {b}x{c}x{h}x{w}':>22}"
        for _, mod in backends:
            def step():
                mod.bilinear_forward(maps, scene, fy, fx)
                mod.bilinear_backward(maps.shape, scene, fy, fx, g, np.float32)
            row += f"{timeit(step, repeats):>14.2f}"
        print(row)


def bench_training_step(repeats):
    from dpf import trainer
    from dpf.optim import OptimState, sgd_step, zero_grads
    from dpf.supervision import total_loss

    cfg = TrainConfig(task="intrinsic", seed=0, max_epochs=1, synth_scenes=4,
                      synth_resolution=64, synth_guidance_scale=2,
                      synth_regions=8, synth_levels=3, synth_pairs=40,
                      backbone_widths=(8, 16, 16, 32), downsample=4,
                      guide_blocks=2, guide_width=16, mlp_hidden=(64, 64))
    scenes, _, _ = trainer.make_dataset(cfg)
    bundle = trainer.build_model(cfg)
    optim = OptimState(bundle.param_list)

    def step():
        floss, aloss = trainer.compute_losses(bundle, scenes[:2])
        total_loss(floss, aloss, 1.0).backward()
        sgd_step(bundle.param_list, optim, 1e-6)
        zero_grads(bundle.param_list)

    print("\nfull training step, 64px scene + 128px guidance (ms, best of repeats)")
    for name in ["numpy"] + (["cython", "auto"] if kernels.has_compiled_kernels() else []):
        kernels.set_backend(name)
        print(f"{name:>22}{timeit(step, repeats):>14.1f}")
    kernels.set_backend("auto")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    backends = [("numpy", numpy_backend)]
    if kernels.has_compiled_kernels():
        from dpf.kernels import fast_backend
        backends.append(("cython", fast_backend))
    else:
        print("note: compiled kernels not built; benchmarking numpy only")
    print(f"active default profile: {kernels.backend_name()}")
    bench_conv(backends, args.repeats)
    bench_bilinear(backends, args.repeats)
    bench_training_step(args.repeats)


if __name__ == "__main__":
    main()
