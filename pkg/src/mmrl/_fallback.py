"""Pure numpy versions of the compiled kernels in ``_core.pyx``.

Same signatures, same counter layout; results agree with the compiled core up
to libm rounding.
"""

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.1102230246251565e-16


@np.errstate(over="ignore")
def mix64(z):
    # wraparound multiplication mod 2**64 is intended
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _to_unit(z):
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _INV53


@np.errstate(over="ignore")
def _counters(key, start, n):
    idx = np.arange(start, start + n, dtype=np.uint64)
    return np.uint64(key) + (np.uint64(2) * idx + np.uint64(1)) * GAMMA


def uniform_pairs(key, start, n):
    c = _counters(key, start, n)
    return _to_unit(mix64(c)), _to_unit(mix64(c + GAMMA))


def _sheets(keys, alpha, scale):
    n = alpha.shape[0]
    idx = (np.uint64(2) * np.arange(n, dtype=np.uint64) + np.uint64(1)) * GAMMA
    c = np.asarray(keys, dtype=np.uint64)[:, None] + idx[None, :]
    u = np.pi * (_to_unit(mix64(c)) - 0.5)
    w = _to_unit(mix64(c + GAMMA))
    inv_alpha = 1.0 / alpha
    expo = (1.0 - alpha) * inv_alpha
    return scale * np.sin(alpha * u) * np.exp(
        expo * (np.log(np.cos((1.0 - alpha) * u)) - np.log(-np.log(w)))
        - inv_alpha * np.log(np.cos(u))
    )


def sas_sheets(keys, alpha, scale, out):
    alpha = np.asarray(alpha, dtype=float)
    scale = np.asarray(scale, dtype=float)
    for r0 in range(0, len(keys), 16):
        out[r0:r0 + 16] = _sheets(keys[r0:r0 + 16], alpha, scale)


def sas_project(keys, alpha, scale, weights, out):
    alpha = np.asarray(alpha, dtype=float)
    scale = np.asarray(scale, dtype=float)
    weights = np.asarray(weights, dtype=float)
    for r0 in range(0, len(keys), 16):
        out[r0:r0 + 16] = _sheets(keys[r0:r0 + 16], alpha, scale) @ weights.T


def kernel_cells(u, v, nodes, inv_alpha, gl_weights, width, count, out):
    if count <= 0:
        return
    vals = np.exp((v - inv_alpha[:count]) * np.log(u - nodes[:count]))
    out[:count] = (vals @ gl_weights) * width
