"""Shared test oracles."""

import numpy as np


def build_recursive_family(a, b, T, tau, p, M, N, sup_f0, grid_size=801):
    """Construct f_0..f_N satisfying the level-indexed integral recursion
    with equality on a fine grid (trapezoid quadrature for the suffix
    integrals); independent oracle for the dominance bound."""
    ts = np.linspace(tau, T, grid_size)
    fams = [np.full(grid_size, sup_f0)]
    for n in range(1, N + 1):
        fn = np.full(grid_size, a * M ** (-n / 2.0))
        for level in range(n):
            integrand = fams[level] ** p
            suffix = np.zeros(grid_size)
            if grid_size > 1:
                cell = 0.5 * np.diff(ts) * (integrand[:-1] + integrand[1:])
                suffix[:-1] = np.cumsum(cell[::-1])[::-1]
            fn = fn + b * M ** (-(n - level - 1) / 2.0) * suffix ** (1.0 / p)
        fams.append(fn)
    return fams
