"""Sweep the high-mode symbol ratios over n in [2k, 10k] and print the constants.

Elastic: |n k^2 / Lambda_n - sigma_n| / k per (lambda, mu).
Circle: |z_m(k) + |m|| / k.

The k grid has spacing 0.05 on [1, 32], far denser than the regression
grids.  Output is pasted into ``helmlab.boundary`` after rounding up to
three significant digits.
"""
import math

import numpy as np

from helmlab.boundary import elastic_high_mode_ratios, high_mode_ratio_2d

LAME = [(0.0, 1.0), (1.0, 1.0), (10.0, 1.0), (0.0, 3.0), (1.0, 3.0), (10.0, 3.0)]


def round_up(x, digits=3):
    scale = 10 ** (digits - 1 - math.floor(math.log10(x)))
    return math.ceil(x * scale) / scale


def main():
    ks = np.round(np.arange(1.0, 32.0 + 1e-9, 0.05), 2)
    overall = 0.0
    for lam, mu in LAME:
        worst = 0.0
        for k in ks:
            modes = np.arange(math.ceil(2 * k), math.floor(10 * k) + 1)
            worst = max(worst, float(elastic_high_mode_ratios(k, lam, mu, modes).max()))
        overall = max(overall, worst)
        print(f"    ({lam!r}, {mu!r}): {round_up(worst)!r},  # raw {worst:.6f}")
    print(f"ELASTIC_BOUND_C_DEFAULT = {round_up(overall)!r}")
    worst = 0.0
    for k in ks:
        modes = np.arange(math.ceil(2 * k), math.floor(10 * k) + 1)
        worst = max(worst, high_mode_ratio_2d(k, modes))
    print(f"DTN2D_HIGH_MODE_C = {round_up(worst)!r}  # raw {worst:.6f}")


if __name__ == "__main__":
    main()
