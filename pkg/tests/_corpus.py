"""Shared randomized integrands and stability functions for tests."""

import numpy as np

from mmrl.integrand import power_integrand, step_function
from mmrl.params import build_alpha

ALPHA_DESCRIPTORS = [
    {"family": "constant", "p1": 1.5},
    {"family": "constant", "p1": 1.9},
    {"family": "sine", "p1": 1.5, "p2": 0.3},
    {"family": "affine", "p1": 1.1, "p2": 0.5},
    {"family": "piecewise-cubic", "knots": "0:1.3, 0.3:1.7, 0.7:1.25, 1:1.5"},
]


def alphas():
    return [build_alpha(d) for d in ALPHA_DESCRIPTORS]


def integrand_corpus(n=50, seed=12345):
    """Half step functions (signed values), half power functions with endpoint or interior anchors."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        if i % 2 == 0:
            pieces = int(rng.integers(1, 6))
            edges = np.sort(rng.choice(np.linspace(0.0, 1.0, 65), pieces + 1, replace=False))
            values = rng.uniform(-3.0, 3.0, pieces)
            out.append(step_function(edges, values))
        else:
            expo = rng.uniform(-0.45, 2.0)
            if expo < 0:
                # integrable singularity, anchored at 0 where doubles resolve it
                a, b, anchor = 0.0, rng.uniform(0.1, 1.0), 0.0
            else:
                a, b = np.sort(rng.uniform(0.0, 1.0, 2))
                b = max(b, a + 0.05)
                anchor = [a, b, 0.5 * (a + b)][int(rng.integers(3))]
            out.append(power_integrand(a, b, expo, anchor, rng.uniform(0.1, 5.0)))
    return out
