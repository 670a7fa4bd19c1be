"""Compiled vs numpy kernels on a DISC-sized workload.

    python3 benchmarks/bench_kernels.py [--frames 2000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from discsim import kernels
from discsim.codes import CodeEnsemble


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--frames", type=int, default=2000)
    ap.add_argument("--len", type=int, default=133)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"active backend: {kernels.BACKEND}")
    if kernels.BACKEND != "cython":
        print("compiled extension not available; only the numpy path is timed")
    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])

    print(f"{'kernel':28s} " + " ".join(f"{b:>10s}" for b in backends) + "   speedup")
    for gens in ["3/1", "5/7", "15/17", "13/15/17"]:
        e = CodeEnsemble.parse(gens)
        ns, out = e.trellis()
        lc = rng.normal(1.0, 2.0, (args.frames, len(e), args.len))
        t = {b: best_of(lambda: kernels.bcjr_app(lc, ns, out, True, backend=b), args.repeat)
             for b in backends}
        ref = kernels.bcjr_app(lc[:50], ns, out, True, backend="python")
        for b in backends[1:]:
            got = kernels.bcjr_app(lc[:50], ns, out, True, backend=b)
            fin = np.isfinite(ref)
            assert np.allclose(got[fin], ref[fin], atol=1e-9), b
        row = " ".join(f"{t[b]:10.4f}" for b in backends)
        sp = f"{t['python'] / t['cython']:8.1f}x" if "cython" in t else ""
        print(f"{'bcjr ' + gens + f' ({e.n_states} st)':28s} {row} {sp}")

    frames = rng.uniform(-1, 1, (args.frames, args.len))
    t = {b: best_of(lambda: kernels.sliding_product(frames, [0, 1, 3], backend=b), args.repeat)
         for b in backends}
    row = " ".join(f"{t[b]:10.4f}" for b in backends)
    sp = f"{t['python'] / t['cython']:8.1f}x" if "cython" in t else ""
    print(f"{'sliding product (3 taps)':28s} {row} {sp}")


if __name__ == "__main__":
    main()
