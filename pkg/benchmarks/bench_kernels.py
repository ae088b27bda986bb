"""Compare the numba and numpy kernel backends on realistic workloads.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run once per backend to warm up (numba compiles or loads its
cache), then timed; outputs of the two backends are checked for agreement.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from neurocine._backend import backend
from neurocine.ingest import default_config, generate_synthetic
from neurocine.nn import maxpool_nhwc_backward, maxpool_nhwc_forward
from neurocine.spectral import trial_band_powers
from neurocine.topomap import Renderer, Standardizer, project


def _time(fn, repeat):
    fn()
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def workloads():
    cfg = default_config(n_subjects=1, trials_per_subject=40)
    trials, montage = generate_synthetic(cfg, 0)
    bp = trial_band_powers(trials.samples, trials.sampling_rate, 0.5)
    values = Standardizer.fit(bp).transform(bp)
    renderer = Renderer(project(montage, "aep"))
    rng = np.random.default_rng(0)
    act = rng.normal(size=(140, 32, 32, 32)).astype(np.float32)
    pooled, idx = maxpool_nhwc_forward(act)
    grad = rng.normal(size=pooled.shape).astype(np.float32)
    n_maps = values.shape[0] * values.shape[1] * values.shape[3]
    return {
        f"clough-tocher render ({n_maps} maps)": lambda: renderer.render(values),
        "maxpool forward (140x32x32x32)": lambda: maxpool_nhwc_forward(act)[0],
        "maxpool backward (140x32x32x32)": lambda: maxpool_nhwc_backward(grad, idx),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"{'kernel':42s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fn in workloads().items():
        with backend("numba"):
            t_nb, out_nb = _time(fn, args.repeat)
        with backend("numpy"):
            t_np, out_np = _time(fn, args.repeat)
        diff = float(np.nanmax(np.abs(np.asarray(out_nb, np.float64) - np.asarray(out_np, np.float64))))
        print(f"{name:42s} {t_nb * 1e3:8.1f}ms {t_np * 1e3:8.1f}ms {t_np / t_nb:7.1f}x {diff:11.2e}")


if __name__ == "__main__":
    main()
