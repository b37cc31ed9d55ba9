"""Benchmark the numba kernels against their pure-numpy fallbacks.

Times the three hot reductions on two realistic workload shapes: the sparse
user-centric baseline (4 serving APs per UE) and the dense cell-free case
(every transmit AP serves every UE). Run after `pip install -e .`:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --fading 200 --repeats 7

The active simulation backend is chosen by CFISAC_BACKEND (numba|numpy);
this script always times both implementations directly.
"""

import argparse
import time

import numpy as np

from cfisac import kernels
from cfisac.channel import complex_normal


def build_problem(rng, n_fading, n_ues, n_aps, n_ant, q):
    h = complex_normal(rng, (n_fading, n_ues, n_aps, n_ant))
    serving = [np.sort(rng.choice(n_aps, size=q, replace=False)) for _ in range(n_ues)]
    indptr = np.zeros(n_ues + 1, dtype=np.int64)
    np.cumsum([len(s) for s in serving], out=indptr[1:])
    aps = np.concatenate(serving).astype(np.int64)
    w_amp = np.zeros_like(h)
    for k, s in enumerate(serving):
        w_amp[:, k, s, :] = complex_normal(rng, (n_fading, len(s), n_ant))
    sensing = np.sort(rng.choice(n_aps, size=max(1, n_aps // 3), replace=False)).astype(np.int64)
    w0 = np.zeros((n_fading, n_aps, n_ant), dtype=complex)
    w0[:, sensing, :] = complex_normal(rng, (n_fading, len(sensing), n_ant))
    n_targets, n_rx, n_tx = 8, 8, n_aps - 8
    a_rx = complex_normal(rng, (n_targets, n_rx, n_ant))
    ab = complex_normal(rng, (n_fading, n_targets, n_rx, n_tx))
    c = complex_normal(rng, (n_fading, n_targets, n_tx))
    return dict(
        cross=(h, w_amp, indptr, aps),
        leakage=(h, w0, sensing),
        echo=(a_rx, ab, c),
    )


def time_call(fn, args, repeats):
    fn(*args)  # warmup (JIT compile / path caching)
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        samples.append(time.perf_counter() - start)
    return min(samples)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--fading", type=int, default=100, help="fading batch size")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if not kernels.USE_NUMBA:
        print("note: numba backend unavailable or disabled; timing numpy only")

    shapes = {
        "user-centric (q=4)": dict(n_ues=32, n_aps=64, n_ant=8, q=4),
        "cell-free (q=56)": dict(n_ues=32, n_aps=64, n_ant=8, q=56),
    }
    impls = {
        "cross": (kernels._cross_gains_numpy, getattr(kernels, "_cross_gains_numba", None)),
        "leakage": (kernels._sense_leakage_numpy, getattr(kernels, "_sense_leakage_numba", None)),
        "echo": (kernels._echo_mix_numpy, getattr(kernels, "_echo_mix_numba", None)),
    }

    rng = np.random.default_rng(0)
    print(f"{'shape':22s} {'kernel':9s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for shape_name, dims in shapes.items():
        problems = build_problem(rng, args.fading, **dims)
        for kernel_name, (fn_np, fn_nb) in impls.items():
            t_np = time_call(fn_np, problems[kernel_name], args.repeats)
            if fn_nb is not None and kernels.numba is not None:
                t_nb = time_call(fn_nb, problems[kernel_name], args.repeats)
                out_np = fn_np(*problems[kernel_name])
                out_nb = fn_nb(*problems[kernel_name])
                np.testing.assert_allclose(out_nb, out_np, rtol=1e-9, atol=1e-12)
                print(
                    f"{shape_name:22s} {kernel_name:9s} {t_np * 1e3:9.2f}ms "
                    f"{t_nb * 1e3:9.2f}ms {t_np / t_nb:7.2f}x"
                )
            else:
                print(f"{shape_name:22s} {kernel_name:9s} {t_np * 1e3:9.2f}ms {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()
