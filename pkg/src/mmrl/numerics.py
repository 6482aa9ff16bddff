"""Adaptive quadrature and bracketed root finding.

Integrands are called with numpy arrays of abscissae and must return arrays of
the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import AccuracyError, BracketError, DomainError, IterationError

# geometric panels toward a singular endpoint: widths L/2, L/4, ..., L/2**GRADE_LEVELS
GRADE_LEVELS = 45
# toward s = 0 doubles resolve much finer scales, which strong singularities need
GRADE_LEVELS_AT_ZERO = 400


@dataclass(frozen=True)
class QuadratureSpec:
    order: int = 16
    atol: float = 1e-12
    rtol: float = 1e-10
    max_depth: int = 40
    singular: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.order < 2:
            raise DomainError("quadrature order must be >= 2")
        if not (self.atol > 0 and self.rtol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_depth < 1:
            raise DomainError("max_depth must be >= 1")

    def with_singular(self, points) -> "QuadratureSpec":
        pts = tuple(sorted(set(self.singular) | {float(p) for p in points}))
        return QuadratureSpec(self.order, self.atol, self.rtol, self.max_depth, pts)


@dataclass(frozen=True)
class RootSpec:
    lo: float
    hi: float
    xtol: float = 1e-14
    max_iter: int = 200
    atol: float = 0.0

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError("root bracket needs lo < hi")
        if not (self.xtol > 0 and self.atol >= 0):
            raise DomainError("root tolerance must be positive")


@lru_cache(maxsize=None)
def gauss_legendre(order: int):
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def graded_breaks(a: float, b: float, toward: str, levels: int = GRADE_LEVELS) -> np.ndarray:
    """Breakpoints of geometric panels on [a, b] refining toward one endpoint.

    Grading stops once the innermost panel would be narrower than 64 ulps of
    the target point, so quadrature nodes never round onto it; toward 0 it
    goes much deeper.
    """
    point = a if toward == "left" else b
    if point == 0.0:
        levels = max(levels, GRADE_LEVELS_AT_ZERO)
    else:
        limit = math.floor(math.log2((b - a) / (64.0 * np.spacing(abs(point)))))
        levels = max(0, min(levels, limit))
    frac = 0.5 ** np.arange(levels, 0, -1)
    if toward == "left":
        inner = a + (b - a) * frac
        return np.concatenate(([a], inner, [b]))
    inner = b - (b - a) * frac[::-1]
    return np.concatenate(([a], inner, [b]))


def _initial_breaks(c: float, d: float, singular, breaks=()) -> np.ndarray:
    sing = sorted({p for p in singular if c <= p <= d})
    edges = sorted({c, d, *(p for p in sing if c < p < d), *(p for p in breaks if c < p < d)})
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        left = a in sing
        right = b in sing
        if left and right:
            m = 0.5 * (a + b)
            pieces.append(graded_breaks(a, m, "left")[:-1])
            pieces.append(graded_breaks(m, b, "right")[:-1])
        elif left:
            pieces.append(graded_breaks(a, b, "left")[:-1])
        elif right:
            pieces.append(graded_breaks(a, b, "right")[:-1])
        else:
            pieces.append(np.array([a]))
    pieces.append(np.array([d]))
    breaks = np.unique(np.concatenate(pieces))
    return breaks


def _panel_sums(f, a, b, order):
    x, w = gauss_legendre(order)
    h = (b - a)[:, None]
    nodes = a[:, None] + h * x[None, :]
    vals = np.asarray(f(nodes.ravel()), dtype=float).reshape(nodes.shape)
    return (vals * w[None, :]).sum(axis=1) * (b - a)


def _adapt(f, c, d, spec: QuadratureSpec, jumps=()):
    breaks = _initial_breaks(c, d, spec.singular, jumps)
    a, b = breaks[:-1], breaks[1:]
    est = _panel_sums(f, a, b, spec.order)
    depth = np.zeros(a.shape, dtype=int)
    done_a, done_b = [], []
    done_sum = 0.0
    span = d - c
    while True:
        mid = 0.5 * (a + b)
        left = _panel_sums(f, a, mid, spec.order)
        right = _panel_sums(f, mid, b, spec.order)
        fine = left + right
        err = np.abs(fine - est)
        total = done_sum + fine.sum()
        tol = max(spec.atol, spec.rtol * abs(total))
        if err.sum() <= tol:
            done_a.append(a)
            done_b.append(b)
            return total, float(err.sum()), np.concatenate(done_a), np.concatenate(done_b)
        share = tol * (b - a) / span
        refine = (err > share) & (depth < spec.max_depth)
        if not refine.any():
            raise AccuracyError("quadrature depth exhausted", float(total), float(err.sum()))
        keep = ~refine
        done_a.append(a[keep])
        done_b.append(b[keep])
        done_sum += fine[keep].sum()
        a_r, b_r, m_r = a[refine], b[refine], mid[refine]
        a = np.concatenate((a_r, m_r))
        b = np.concatenate((m_r, b_r))
        est = np.concatenate((left[refine], right[refine]))
        depth = np.concatenate((depth[refine], depth[refine])) + 1


def integrate(f, interval, spec: QuadratureSpec | None = None, *, singular=(), breaks=()) -> float:
    """Integral of ``f`` over ``interval`` by adaptive bisected Gauss-Legendre.

    Panels next to the points in ``spec.singular`` (and ``singular``) are graded
    geometrically toward them before adaptive refinement starts. Raises
    :class:`AccuracyError` if the tolerance is not met within ``max_depth``
    bisections. ``breaks`` are jump points: panels are split there but not graded.
    """
    spec = spec or QuadratureSpec()
    if singular:
        spec = spec.with_singular(singular)
    c, d = float(interval[0]), float(interval[1])
    if d < c:
        raise DomainError("integration interval must satisfy c <= d")
    if d == c:
        return 0.0
    total, _, _, _ = _adapt(f, c, d, spec, breaks)
    return float(total)


def adaptive_rule(f, interval, spec: QuadratureSpec | None = None, *, singular=(), breaks=()):
    """Nodes and weights of the panel set that ``integrate`` settles on for ``f``.

    Re-using the rule for integrands that differ from ``f`` by a smooth factor
    avoids re-running the adaptive loop.
    """
    spec = spec or QuadratureSpec()
    if singular:
        spec = spec.with_singular(singular)
    c, d = float(interval[0]), float(interval[1])
    if d <= c:
        return np.empty(0), np.empty(0)
    _, _, a, b = _adapt(f, c, d, spec, breaks)
    mid = 0.5 * (a + b)
    x, w = gauss_legendre(spec.order)
    lo = np.concatenate((a, mid))
    hi = np.concatenate((mid, b))
    nodes = (lo[:, None] + (hi - lo)[:, None] * x[None, :]).ravel()
    weights = ((hi - lo)[:, None] * w[None, :]).ravel()
    return nodes, weights


def solve_monotone_root(g, spec: RootSpec) -> float:
    """Root of a strictly decreasing ``g`` on ``[spec.lo, spec.hi]``.

    Regula falsi with the Illinois modification, falling back to bisection
    whenever a step fails to halve the bracket. Stops once the bracket is
    narrower than ``max(atol, xtol * |x|)`` and returns its midpoint.
    """
    lo, hi = float(spec.lo), float(spec.hi)
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if not (glo > 0.0 > ghi):
        raise BracketError(f"g(lo)={glo!r} and g(hi)={ghi!r} do not straddle a root on [{lo}, {hi}]")
    retained = 0
    last_width = hi - lo
    slow = 0
    for _ in range(spec.max_iter):
        width = hi - lo
        mid = 0.5 * (lo + hi)
        if width <= max(spec.atol, spec.xtol * max(abs(lo), abs(hi))) or mid in (lo, hi):
            return mid
        if slow >= 2:
            x = mid
            slow = 0
        else:
            x = hi - ghi * (hi - lo) / (ghi - glo)
            if not lo < x < hi:
                x = mid
        gx = g(x)
        if gx == 0.0:
            return x
        if gx > 0.0:
            lo, glo = x, gx
            if retained == 1:
                ghi *= 0.5
            retained = 1
        else:
            hi, ghi = x, gx
            if retained == -1:
                glo *= 0.5
            retained = -1
        if hi - lo > 0.5 * last_width:
            slow += 1
        else:
            slow = 0
            last_width = hi - lo
    raise IterationError(f"no convergence in {spec.max_iter} iterations; bracket [{lo}, {hi}]")
