"""Throughput comparison of the compiled finite-volume kernels against the
NumPy fallback.

Run:  python3 benchmarks/bench_kernels.py [--cells N] [--steps N]

Both backends are imported directly, so this works regardless of which one
the package selected at import time.  The two must agree bit for bit; the
benchmark asserts that on the side.
"""

import argparse
import time

import numpy as np

from netflux import _fvkernels_py as py

try:
    from netflux import _fvkernels as ext
except ImportError:
    ext = None


def bench(fn, rho0, args, steps):
    rho = rho0.copy()
    t0 = time.perf_counter()
    for _ in range(steps):
        fn(rho, *args)
    return time.perf_counter() - t0, rho


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--cells", type=int, default=100_000)
    parser.add_argument("--steps", type=int, default=200)
    opts = parser.parse_args()

    rng = np.random.default_rng(7)
    rho0 = rng.uniform(0.0, 1.0, opts.cells)
    dt_over_h = 0.9  # unit top speed, CFL 0.9
    # smooth positive speed field so long runs stay bounded
    j = np.arange(1, opts.cells)
    nu_iface = 0.55 + 0.45 * np.sin(2.0 * np.pi * j / opts.cells)

    cases = [
        ("upwind constant", "upwind_update_const", (1.0, dt_over_h, 0.0, 0.0)),
        ("upwind variable", "upwind_update_var", (nu_iface, dt_over_h, 0.0, 0.0)),
        ("godunov lwr", "godunov_update", (1.0, 1.0, dt_over_h, 0.0, 0.0)),
    ]

    print(f"cells={opts.cells} steps={opts.steps}")
    for label, name, args in cases:
        t_py, out_py = bench(getattr(py, name), rho0, args, opts.steps)
        rate_py = opts.cells * opts.steps / t_py / 1e6
        line = f"{label:18s} numpy {t_py:7.3f}s ({rate_py:8.1f} Mcell/s)"
        if ext is not None:
            t_ext, out_ext = bench(getattr(ext, name), rho0, args, opts.steps)
            rate_ext = opts.cells * opts.steps / t_ext / 1e6
            assert np.array_equal(out_py, out_ext), f"{name}: backends diverge"
            line += f"   compiled {t_ext:7.3f}s ({rate_ext:8.1f} Mcell/s)"
            line += f"   speedup x{t_py / t_ext:.2f}"
        else:
            line += "   compiled backend not built"
        print(line)


if __name__ == "__main__":
    main()
