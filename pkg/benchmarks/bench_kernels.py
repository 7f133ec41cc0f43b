"""Timings of the hot kernels, compiled against pure-Python fallbacks.

Run from the repository root::

    python3 benchmarks/bench_kernels.py [--repeats 5]

Every figure is the median wall time of ``--repeats`` runs with BLAS held
to one thread. numpy's own FFT is listed for reference only; the package
never calls it.
"""

import argparse
import statistics
import time

import numpy as np
import threadpoolctl

from hazardops.autodiff import Adam, Tensor, backward
from hazardops.autodiff import backend as fftb
from hazardops.autodiff import fft as pyfft
from hazardops.autodiff import tensor as ad
from hazardops.excitation import GroundMotionParams, generate_many
from hazardops.harness.dataset import newmark_config
from hazardops.operators import FNO, standard_loss
from hazardops.structural import ShearBuildingModel, simulate


def median_time(fn, repeats):
    runs = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        runs.append(time.perf_counter() - t0)
    return statistics.median(runs)


def row(name, seconds, base=None):
    ratio = f"  {base / seconds:8.1f}x" if base else ""
    print(f"{name:<44} {seconds * 1e3:10.3f} ms{ratio}")


def bench_fft(repeats):
    print("real FFT, 64 rows")
    for n in (1000, 2000, 5980):
        x = np.random.default_rng(n).standard_normal((64, n))
        py = median_time(lambda: pyfft.rfft(x), repeats)
        row(f"  n={n} pure python", py)
        row(f"  n={n} compiled", median_time(lambda: fftb.rfft(x), repeats), py)
        row(f"  n={n} numpy (reference)", median_time(lambda: np.fft.rfft(x), repeats), py)


def bench_newmark(repeats):
    print("Newmark, one 6001-step record")
    gm = GroundMotionParams()
    ag = generate_many(gm, [0])[0]
    cfg = newmark_config(gm)
    for stories in (3, 6):
        model = ShearBuildingModel(n_stories=stories)
        py = median_time(lambda: simulate(model, cfg, ag, backend="python"), max(1, repeats // 2))
        row(f"  {stories} stories pure python", py)
        row(f"  {stories} stories compiled", median_time(lambda: simulate(model, cfg, ag, backend="compiled"), repeats), py)


def bench_gelu(repeats):
    print("GELU forward + backward, 16 x 64 x 1000")
    x = np.random.default_rng(0).standard_normal((16, 64, 1000))
    g = np.ones_like(x)

    def kernels():
        y, cdf = ad._gelu(x)
        ad._gelu_grad(x, cdf, g)

    compiled = ad._act
    ad._act = None
    try:
        base = median_time(kernels, repeats)
    finally:
        ad._act = compiled
    row("  numpy/scipy expressions", base)
    if compiled is not None:
        row("  compiled", median_time(kernels, repeats), base)


def bench_fno_step(repeats):
    print("FNO training step, batch 20, n_t 1000 (d_v 16, L 4, k_max 128, 3 floors)")
    model = FNO(n_ch=3, d_v=16, n_layers=4, k_max=128)
    rng = np.random.default_rng(0)
    x, y = rng.standard_normal((20, 1000, 1)), rng.standard_normal((20, 1000, 3))
    opt = Adam(model.trainable(), lr=1e-3)

    def step():
        opt.zero_grad()
        backward(standard_loss(model.forward(Tensor(x)), Tensor(y)))
        opt.step()

    step()
    row("  forward + backward + Adam", median_time(step, repeats))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--only", choices=("fft", "newmark", "gelu", "fno"), action="append")
    args = parser.parse_args(argv)
    which = args.only or ["fft", "newmark", "gelu", "fno"]
    with threadpoolctl.threadpool_limits(1):
        for name in which:
            {"fft": bench_fft, "newmark": bench_newmark, "gelu": bench_gelu, "fno": bench_fno_step}[name](args.repeats)


if __name__ == "__main__":
    main()
