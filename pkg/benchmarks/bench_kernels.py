"""Time the compiled kernels against the numpy fallback.

Run ``python benchmarks/bench_kernels.py``; prints one line per kernel with
the best-of-N wall time of each backend and the speedup.
"""
import argparse
import timeit

import numpy as np

from helmlab import available_backends
from helmlab.quadrature import quadrature_triangle
from helmlab.reference import lagrange_basis


def _cases(n_elem):
    rng = np.random.default_rng(0)
    x01 = np.concatenate([np.geomspace(1e-3, 12, 5000), np.linspace(12, 400, 5000)])
    xn = np.linspace(0.1, 150, 2000)
    q = quadrature_triangle(8)
    phi, dphi = lagrange_basis(4).eval(q.xy)
    jac = np.tile(np.eye(2), (n_elem, len(q.weights), 1, 1))
    jac = jac + 0.1 * rng.standard_normal(jac.shape)
    return {
        "jy01 (10000 points)": lambda m: m.jy01(x01),
        "jyn n=40 (2000 points)": lambda m: m.jyn(40, xn),
        "hankel1 log-derivs n<=200": lambda m: m.hankel1_ratio_logderiv(200, 37.5),
        f"element_matrices p=4 ({n_elem} elements)":
            lambda m: m.element_matrices(dphi, phi, q.weights, jac),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--elements", type=int, default=2000)
    args = ap.parse_args(argv)
    backends = available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; timing the python backend only")
    names = sorted(backends, key=lambda s: s != "compiled")
    print(f"{'kernel':44s}" + "".join(f"{n:>12s}" for n in names) + "   speedup")
    for label, fn in _cases(args.elements).items():
        times = []
        for name in names:
            mod = backends[name]
            fn(mod)  # warm-up
            times.append(min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)))
        cols = "".join(f"{1e3 * t:10.2f}ms" for t in times)
        speed = f"{times[-1] / times[0]:8.1f}x" if len(times) == 2 else ""
        print(f"{label:44s}{cols}  {speed}")


if __name__ == "__main__":
    main()
