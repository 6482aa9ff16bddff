"""Riemann-Liouville kernel, its dyadic averages and Haar coefficients.

``K_{u,v}(s) = (u - s)**(v - 1/alpha(s))`` for ``0 <= s < u`` and 0 elsewhere.
Haar functions use half-open cells: ``h = 1[0,1/2) - 1[1/2,1)``.

Two routes are provided. The scalar functions (``dyadic_average``,
``haar_coefficient``, ...) integrate each quantity directly by adaptive
quadrature. :func:`cell_table` computes all finest-level cell integrals for a
batch of points at once (compiled kernel plus graded panels near ``s = u``);
coarser averages and Haar coefficients are then exact sums of those cells.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._backend import kernels
from .errors import DomainError
from .integrand import Integrand
from .numerics import GRADE_LEVELS, QuadratureSpec, gauss_legendre, integrate
from .params import AlphaFunction


@dataclass(frozen=True)
class KernelPoint:
    u: float
    v: float

    def validate(self, alpha: AlphaFunction) -> "KernelPoint":
        if not 0.0 <= self.u <= 1.0:
            raise DomainError(f"u must lie in [0, 1], got {self.u}")
        if not 1.0 / alpha.alpha_min < self.v < 1.0:
            raise DomainError(
                f"v must lie in (1/alpha_min, 1) = ({1.0 / alpha.alpha_min:.6g}, 1), got {self.v}")
        return self


@dataclass(frozen=True)
class HaarIndex:
    j: int
    k: int

    def __post_init__(self):
        if self.j < 0 or not 0 <= self.k < 2**self.j:
            raise DomainError(f"Haar index needs j >= 0 and 0 <= k < 2**j, got ({self.j}, {self.k})")


def boundary_index(u: float, j: int) -> int:
    """Integer part of ``2**j u``, clipped to the last cell when ``u == 1``."""
    return min(int(math.floor(u * 2**j)), 2**j - 1)


def kernel_eval(p: KernelPoint, alpha: AlphaFunction, s):
    s = np.asarray(s, dtype=float)
    inside = (s >= 0.0) & (s < p.u)
    base = np.where(inside, p.u - s, 1.0)
    out = np.where(inside, base ** (p.v - 1.0 / alpha(s)), 0.0)
    return out if out.ndim else float(out)


def kernel_integrand(p: KernelPoint, alpha: AlphaFunction) -> Integrand:
    return Integrand(lambda s: (p.u - s) ** (p.v - 1.0 / alpha(s)), (0.0, p.u), (), (p.u,),
                     f"K[{p.u!r},{p.v!r}]")


def kernel_integral(p: KernelPoint, alpha: AlphaFunction, a: float, b: float,
                    spec: QuadratureSpec | None = None) -> float:
    """``integral_a^b K_{u,v}(s) ds`` by adaptive quadrature graded toward ``s = u``."""
    a, b = max(a, 0.0), min(b, p.u)
    if b <= a:
        return 0.0
    f = lambda s: (p.u - s) ** (p.v - 1.0 / alpha(s))
    # grade toward b also when u sits just past it (nearly singular endpoint)
    near = p.u - b <= b - a
    return integrate(f, (a, b), spec, singular=(b,) if near else ())


def kernel_l1_norm(p: KernelPoint, alpha: AlphaFunction, spec: QuadratureSpec | None = None) -> float:
    return kernel_integral(p, alpha, 0.0, p.u, spec)


def dyadic_average(p: KernelPoint, alpha: AlphaFunction, J: int, l: int,
                   spec: QuadratureSpec | None = None) -> float:
    """Average of the kernel over ``[2**-J l, 2**-J (l+1))``."""
    if J < 0 or not 0 <= l < 2**J:
        raise DomainError(f"cell index needs 0 <= l < 2**J, got J={J}, l={l}")
    n = 2**J
    return n * kernel_integral(p, alpha, l / n, (l + 1) / n, spec)


def haar_coefficient(p: KernelPoint, alpha: AlphaFunction, idx: HaarIndex,
                     spec: QuadratureSpec | None = None) -> float:
    n = 2**idx.j
    lo, mid, hi = idx.k / n, (idx.k + 0.5) / n, (idx.k + 1) / n
    return n * (kernel_integral(p, alpha, lo, mid, spec) - kernel_integral(p, alpha, mid, hi, spec))


def coefficient_difference(p: KernelPoint, alpha: AlphaFunction, j: int, k: int,
                           spec: QuadratureSpec | None = None) -> float:
    """``w_{j,k} - w_{j,k+1}`` as one integral of the kernel's shifted second difference."""
    if j < 0 or not 0 <= k < 2**j - 1:
        raise DomainError(f"coefficient difference needs 0 <= k < 2**j - 1, got j={j}, k={k}")
    delta = 2.0 ** (-j - 1)
    lo = k * 2.0 * delta
    hi = min(lo + delta, p.u)
    if hi <= lo:
        return 0.0

    def second_difference(s):
        return (kernel_eval(p, alpha, s) - kernel_eval(p, alpha, s + delta)
                - kernel_eval(p, alpha, s + 2 * delta) + kernel_eval(p, alpha, s + 3 * delta))

    sing = [p.u - q * delta for q in range(4) if lo <= p.u - q * delta <= hi]
    return 2**j * integrate(second_difference, (lo, hi), spec, singular=sing)


# ---------------------------------------------------------------------------
# batched cell tables


@dataclass(frozen=True)
class CellNodes:
    """Gauss-Legendre nodes of every level-J cell and 1/alpha at those nodes."""

    level: int
    order: int
    nodes: np.ndarray = field(repr=False)
    inv_alpha: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)


@lru_cache(maxsize=8)
def _cell_nodes(alpha: AlphaFunction, level: int, order: int) -> CellNodes:
    x, w = gauss_legendre(order)
    n = 1 << level
    nodes = (np.arange(n)[:, None] + x[None, :]) / n
    return CellNodes(level, order, np.ascontiguousarray(nodes),
                     np.ascontiguousarray(1.0 / alpha(nodes)), np.ascontiguousarray(w))


def cell_nodes(alpha: AlphaFunction, level: int, order: int = 16) -> CellNodes:
    return _cell_nodes(alpha, level, order)


def _graded_piece(u, v, alpha, lo, hi, order):
    """``integral_lo^min(hi,u) (u-s)**(v-1/alpha(s)) ds`` with panels graded toward s = u."""
    top = min(hi, u)
    if top <= lo:
        return 0.0
    r0, r1 = u - top, u - lo
    marks = r1 * 0.5 ** np.arange(GRADE_LEVELS + 1)
    marks = np.append(marks[marks > r0], r0)
    hi_r, lo_r = marks[:-1], marks[1:]
    x, w = gauss_legendre(order)
    width = hi_r - lo_r
    r = lo_r[:, None] + width[:, None] * x[None, :]
    vals = r ** (v - 1.0 / alpha(u - r))
    return float(((vals @ w) * width).sum())


def cell_integrals(p: KernelPoint, alpha: AlphaFunction, J: int, nodes: CellNodes | None = None) -> np.ndarray:
    """``integral`` of the kernel over each of the ``2**J`` dyadic cells of [0, 1)."""
    n = 1 << J
    nodes = nodes or cell_nodes(alpha, J)
    out = np.zeros(n)
    if p.u <= 0.0:
        return out
    m = min(int(math.floor(p.u * n)), n)
    regular = max(m - 1, 0)
    kernels.kernel_cells(p.u, p.v, nodes.nodes, nodes.inv_alpha, nodes.weights, 1.0 / n, regular, out)
    for l in (m - 1, m):
        if 0 <= l < n:
            out[l] = _graded_piece(p.u, p.v, alpha, l / n, (l + 1) / n, nodes.order)
    return out


def cell_table(points, alpha: AlphaFunction, J: int) -> np.ndarray:
    """Cell integrals for many points: array of shape ``(len(points), 2**J)``."""
    nodes = cell_nodes(alpha, J)
    table = np.empty((len(points), 1 << J))
    for i, p in enumerate(points):
        table[i] = cell_integrals(p, alpha, J, nodes)
    return table


def block_sums(values: np.ndarray, level: int) -> np.ndarray:
    """Sum consecutive blocks along the last axis down to ``2**level`` entries."""
    n = values.shape[-1]
    target = 1 << level
    if target > n:
        raise DomainError(f"cannot coarsen {n} entries to level {level}")
    if target == n:
        return values
    return values.reshape(*values.shape[:-1], target, n // target).sum(axis=-1)


def averages_from_cells(cells: np.ndarray, level: int) -> np.ndarray:
    """Dyadic averages at ``level`` from finer cell integrals."""
    return block_sums(cells, level) * float(1 << level)


def haar_analysis(values: np.ndarray, weighted: bool) -> np.ndarray:
    """Packed Haar transform along the last axis.

    Entry 0 holds the total; entry ``2**j + k`` holds
    ``(first half - second half)`` of cell (j, k), times ``2**j`` if ``weighted``.
    Applied to cell integrals (weighted) this yields ``||K||_1`` and ``w_{j,k}``;
    applied to sheet increments (unweighted) it yields ``eta`` and ``eps_{j,k}``.
    """
    n = values.shape[-1]
    J = n.bit_length() - 1
    out = np.empty(values.shape)
    s = values
    for j in range(J - 1, -1, -1):
        first, second = s[..., 0::2], s[..., 1::2]
        diff = first - second
        out[..., 1 << j:2 << j] = diff * float(1 << j) if weighted else diff
        s = first + second
    out[..., 0] = s[..., 0]
    return out


def haar_from_cells(cells: np.ndarray) -> np.ndarray:
    return haar_analysis(cells, weighted=True)


def coefficient_rows(points, alpha: AlphaFunction, J: int):
    """Rows ``(j, k, u, v, w)`` for all ``j < J``; ``j = -1`` carries ``||K||_1``."""
    table = haar_from_cells(cell_table(points, alpha, J))
    rows = []
    for p, coeffs in zip(points, table):
        rows.append((-1, 0, p.u, p.v, coeffs[0]))
        for j in range(J):
            for k in range(1 << j):
                rows.append((j, k, p.u, p.v, coeffs[(1 << j) + k]))
    return rows


def write_coefficients_csv(fh, rows) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["j", "k", "u", "v", "w"])
    for j, k, u, v, w in rows:
        writer.writerow([j, k, f"{u:.17g}", f"{v:.17g}", f"{w:.17g}"])


# ---------------------------------------------------------------------------
# appendix bound lemmas


@dataclass
class LemmaReport:
    """Per-level statistics of the kernel bound lemmas, scaled by ``2**(j(a - 1/alpha_min))``.

    ``second_difference_ratio`` is unscaled: it is the largest sampled ratio of
    the second difference to its bound shape at each level.
    """

    STATISTICS = {
        "boundary_coefficient": "boundary_coefficient",
        "i1": "i1",
        "i2": "i2",
        "i3": "i3",
        "second_difference": "second_difference_ratio",
    }

    j_values: np.ndarray
    boundary_coefficient: np.ndarray
    i1: np.ndarray
    i2: np.ndarray
    i3: np.ndarray
    second_difference_ratio: np.ndarray
    fit_level: int = 4
    growth_limit: float = 2.0

    def growth(self, name: str) -> float:
        """Largest value beyond ``fit_level`` relative to the fitted level (0 if none)."""
        values = getattr(self, name)
        late = values[self.j_values > self.fit_level]
        if late.size == 0 or np.all(np.isnan(late)):
            return 0.0
        if name == "second_difference_ratio":
            # constant fitted by least squares on log(ratio) at the fit level
            ref = values[self.j_values == self.fit_level]
            base = float(np.exp(np.mean(np.log(ref)))) if ref.size else float("nan")
        else:
            base = float(np.nanmax(values[self.j_values <= self.fit_level]))
        if base == 0.0:
            return 0.0 if np.nanmax(late) == 0.0 else float("inf")
        return float(np.nanmax(late) / base)

    def verdicts(self) -> dict[str, bool]:
        return {name: self.growth(attr) <= self.growth_limit for name, attr in self.STATISTICS.items()}


def _shifted_term(p, alpha, s, q, delta):
    base = np.maximum(p.u - s - q * delta, 0.0)
    return base ** (p.v - 1.0 / alpha(s + q * delta))


def lemma_integral(p: KernelPoint, alpha: AlphaFunction, j: int, which: int,
                   spec: QuadratureSpec | None = None) -> float:
    """``I_j^which(u, v)`` for ``which`` in 1..3 (0 under the small-u convention)."""
    delta = 2.0 ** (-(j + 1))
    if p.u <= which * delta:
        return 0.0
    lo, hi = p.u - (which + 1) * delta, p.u - which * delta
    signs = {1: (1, -1), 2: (1, -1, -1), 3: (1, -1, -1, 1)}[which]

    def integrand(s):
        total = np.zeros_like(s)
        for q, sign in enumerate(signs):
            total += sign * _shifted_term(p, alpha, s, q, delta)
        return np.abs(total)

    sing = [p.u - q * delta for q in range(which + 1)]
    return 2**j * integrate(integrand, (lo, hi), spec, singular=sing)


def second_difference_ratio(p: KernelPoint, alpha: AlphaFunction, a: float, j: int,
                            samples: int = 12) -> float:
    """Largest sampled ratio of the kernel second difference to its bound shape."""
    delta = 2.0 ** (-j - 1)
    top = p.u - 4 * delta
    if j < 1 or top < 0:
        return float("nan")
    t = np.unique(np.concatenate((np.linspace(0.0, 1.0, samples + 1), 0.5 ** np.arange(1, samples + 1))))
    s = top * (1.0 - t)
    lhs = np.abs(kernel_eval(p, alpha, s) - kernel_eval(p, alpha, s + delta)
                 - kernel_eval(p, alpha, s + 2 * delta) + kernel_eval(p, alpha, s + 3 * delta))
    expo = a - 1.0 / alpha.alpha_min - 2.0
    rhs = 2.0**-j * (2.0 ** (-j * alpha.holder_exponent) + 2.0**-j * np.abs(p.u - s - 3 * delta) ** expo)
    return float(np.max(lhs / rhs))


def lemma_bound_check(alpha: AlphaFunction, a: float, j_range, u_values, v_values,
                      spec: QuadratureSpec | None = None) -> LemmaReport:
    """Evaluate the bound-lemma statistics over a (u, v) grid for each j in ``j_range``."""
    if not 1.0 / alpha.alpha_min < a < 1.0:
        raise DomainError("a must lie in (1/alpha_min, 1)")
    js = np.array(list(j_range), dtype=int)
    points = [KernelPoint(float(u), float(v)).validate(alpha) for u in u_values for v in v_values]
    rate = a - 1.0 / alpha.alpha_min
    stats = np.zeros((5, len(js)))
    for col, j in enumerate(js):
        scale = 2.0 ** (j * rate)
        w_max = i1 = i2 = i3 = 0.0
        ratio = float("nan")
        for p in points:
            w = haar_coefficient(p, alpha, HaarIndex(j, boundary_index(p.u, j)), spec)
            w_max = max(w_max, abs(w))
            i1 = max(i1, lemma_integral(p, alpha, j, 1, spec))
            i2 = max(i2, lemma_integral(p, alpha, j, 2, spec))
            i3 = max(i3, lemma_integral(p, alpha, j, 3, spec))
            r = second_difference_ratio(p, alpha, a, j)
            if not math.isnan(r):
                ratio = r if math.isnan(ratio) else max(ratio, r)
        stats[:, col] = (w_max * scale, i1 * scale, i2 * scale, i3 * scale, ratio)
    return LemmaReport(js, *stats)
