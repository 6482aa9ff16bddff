"""Integrands of the multistable integral and the variable-order quasi-norm.

For a stability function ``alpha`` the quasi-norm of ``f`` is the unique
``lam > 0`` with ``integral(lam**-alpha(s) * |f(s)|**alpha(s)) == 1``; the
multistable integral of ``f`` has characteristic function
``exp(-integral(|xi f(s)|**alpha(s)))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BracketError, DomainError
from .numerics import QuadratureSpec, RootSpec, adaptive_rule, integrate, solve_monotone_root
from .params import AlphaFunction

ZERO_THRESHOLD = 1e-15
RESIDUAL_TOL = 1e-11


@dataclass(frozen=True)
class Integrand:
    """A bounded-support function ``f``; zero outside ``[c, d)``.

    ``breaks`` lists jump points, ``singular`` points where derivatives blow up
    (quadrature grades toward those).
    """

    func: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]
    breaks: tuple[float, ...] = ()
    singular: tuple[float, ...] = ()
    label: str = "f"

    def __post_init__(self):
        c, d = self.support
        if not (math.isfinite(c) and math.isfinite(d) and c <= d):
            raise DomainError("integrand support must be a bounded interval [c, d]")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        c, d = self.support
        inside = (s >= c) & (s < d)
        out = np.zeros(s.shape)
        if inside.any():
            out[inside] = np.asarray(self.func(s[inside]), dtype=float)
        return out if out.ndim else float(out)

    def scaled(self, factor: float) -> "Integrand":
        func = self.func
        return Integrand(lambda s: factor * func(s), self.support, self.breaks, self.singular,
                         f"{factor!r}*{self.label}")

    def __add__(self, other: "Integrand") -> "Integrand":
        c = min(self.support[0], other.support[0])
        d = max(self.support[1], other.support[1])
        edges = {self.support[0], self.support[1], other.support[0], other.support[1]} - {c, d}
        breaks = tuple(sorted(set(self.breaks) | set(other.breaks) | edges))
        singular = tuple(sorted(set(self.singular) | set(other.singular)))
        return Integrand(lambda s: self(s) + other(s), (c, d), breaks, singular,
                         f"({self.label}+{other.label})")

    def integrate(self, g, spec: QuadratureSpec | None = None) -> float:
        """Integral over the support of ``g`` (a function of s) with this integrand's breaks."""
        return integrate(g, self.support, spec, singular=self.singular, breaks=self.breaks)

    def rule(self, g, spec: QuadratureSpec | None = None):
        return adaptive_rule(g, self.support, spec, singular=self.singular, breaks=self.breaks)


@dataclass(frozen=True)
class BoundEstimate:
    gamma: float
    rhs_value: float
    fitted_constant: float


def indicator(a: float, b: float, height: float = 1.0) -> Integrand:
    return Integrand(lambda s: np.full(np.shape(s), height), (a, b), label=f"1[{a},{b})")


def step_function(edges, values) -> Integrand:
    """Piecewise-constant function equal to ``values[i]`` on ``[edges[i], edges[i+1])``."""
    edges = np.asarray(edges, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(edges) != len(values) + 1 or np.any(np.diff(edges) <= 0):
        raise DomainError("step function needs increasing edges and len(values) == len(edges) - 1")

    def func(s):
        idx = np.clip(np.searchsorted(edges, s, side="right") - 1, 0, len(values) - 1)
        return values[idx]

    return Integrand(func, (edges[0], edges[-1]), tuple(edges[1:-1]), label="step")


def power_integrand(a: float, b: float, exponent: float, anchor: float, scale: float = 1.0) -> Integrand:
    """``scale * |s - anchor|**exponent`` on ``[a, b)``."""
    sing = (anchor,) if a <= anchor <= b else ()
    return Integrand(lambda s: scale * np.abs(s - anchor) ** exponent, (a, b), (), sing,
                     f"pow({exponent!r})")


def haar_integrand(j: int, k: int) -> Integrand:
    """``h(2**j s - k)`` with ``h = 1[0,1/2) - 1[1/2,1)``."""
    lo, mid, hi = k / 2**j, (k + 0.5) / 2**j, (k + 1) / 2**j
    return Integrand(lambda s: np.where(s < mid, 1.0, -1.0), (lo, hi), (mid,), label=f"h[{j},{k}]")


def lp_norm(f: Integrand, p: float, spec: QuadratureSpec | None = None) -> float:
    return f.integrate(lambda s: np.abs(f(s)) ** p, spec) ** (1.0 / p)


def variable_order_integral(f: Integrand, alpha: AlphaFunction, lam: float,
                            spec: QuadratureSpec | None = None) -> float:
    """``integral(lam**-alpha(s) |f(s)|**alpha(s) ds)`` over the support of f."""
    if not lam > 0:
        raise DomainError("lambda must be positive")
    return f.integrate(lambda s: (np.abs(f(s)) / lam) ** alpha(s), spec)


def _is_zero(f: Integrand, spec) -> bool:
    return f.integrate(lambda s: np.abs(f(s)), spec) < ZERO_THRESHOLD


def quasi_norm(f: Integrand, alpha: AlphaFunction, spec: QuadratureSpec | None = None) -> float:
    """The variable-order quasi-norm ``||f||_alpha`` (0 for the zero function)."""
    if _is_zero(f, spec):
        return 0.0
    bound = lp_norm(f, alpha.alpha_min, spec) + lp_norm(f, alpha.alpha_max, spec) + 1e-30

    # one adaptive panel set, reused for every lambda (lambda**-alpha(s) is smooth in s)
    nodes, weights = f.rule(lambda s: np.abs(f(s)) ** alpha(s), spec)
    fv = np.abs(f(nodes))
    keep = fv > 0
    a_vals = alpha(nodes[keep])
    log_f = np.log(fv[keep])
    w = weights[keep]

    def log_mass(x):
        z = a_vals * (log_f - x)
        zmax = z.max()
        return zmax + math.log(np.dot(w, np.exp(z - zmax)))

    x = _bracketed_root(log_mass, math.log(bound))
    lam = math.exp(x)
    residual = variable_order_integral(f, alpha, lam, spec) - 1.0
    if abs(residual) > RESIDUAL_TOL:
        def full(x):
            return math.log(variable_order_integral(f, alpha, math.exp(x), spec))
        lam = math.exp(_bracketed_root(full, x, span=1e-6))
    return lam


def _bracketed_root(g, center: float, span: float = math.log(1e6)) -> float:
    lo, hi = center - span, center + span
    for _ in range(60):
        glo, ghi = g(lo), g(hi)
        if glo > 0 > ghi or glo == 0 or ghi == 0:
            return solve_monotone_root(g, RootSpec(lo, hi, xtol=1e-15, atol=1e-15))
        if glo <= 0:
            lo -= 2 * (hi - lo)
        if ghi >= 0:
            hi += 2 * (hi - lo)
    raise BracketError(f"quasi-norm bracket expansion failed around log-lambda {center!r}")


def characteristic_function(f: Integrand, alpha: AlphaFunction, xi, spec: QuadratureSpec | None = None):
    """``exp(-integral(|xi f(s)|**alpha(s) ds))`` for scalar or array ``xi``."""
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.empty(xi_arr.shape)
    for i, x in enumerate(xi_arr.flat):
        if x == 0.0:
            out.flat[i] = 1.0
        else:
            out.flat[i] = math.exp(-f.integrate(lambda s: np.abs(x * f(s)) ** alpha(s), spec))
    return out if np.ndim(xi) else float(out[0])


def tail_bound_rhs(f: Integrand, alpha: AlphaFunction, lam: float,
                   spec: QuadratureSpec | None = None) -> float:
    """Shape of the tail bound ``P(|I(f)| >= lam) <= k2 * rhs`` (without the constant)."""
    return variable_order_integral(f, alpha, lam, spec)


def moment_bound_rhs(f: Integrand, alpha: AlphaFunction, gamma: float,
                     spec: QuadratureSpec | None = None) -> float:
    """``||f||_alpha ** gamma``; valid moment orders are ``0 < gamma < alpha_min``."""
    if not 0.0 < gamma < alpha.alpha_min:
        raise DomainError(f"moment order must lie in (0, alpha_min={alpha.alpha_min}); got {gamma}")
    return quasi_norm(f, alpha, spec) ** gamma


def cell_averages(f: Integrand, level: int, spec: QuadratureSpec | None = None) -> np.ndarray:
    """Averages of ``f`` over the dyadic cells ``[l 2**-level, (l+1) 2**-level)`` of [0, 1)."""
    from .numerics import gauss_legendre

    spec = spec or QuadratureSpec()
    n = 1 << level
    x, w = gauss_legendre(spec.order)
    lo = np.arange(n) / n
    nodes = lo[:, None] + x[None, :] / n
    avg = f(nodes.ravel()).reshape(nodes.shape) @ w
    width = 1.0 / n
    special = set()
    for p in (*f.breaks, *f.singular, *f.support):
        l0 = int(math.floor(p * n))
        for l in (l0 - 1, l0, l0 + 1):
            if 0 <= l < n:
                special.add(l)
    for l in sorted(special):
        a, b = l * width, (l + 1) * width
        avg[l] = n * integrate(
            f, (a, b), spec,
            singular=[p for p in f.singular if a <= p <= b],
            breaks=[p for p in (*f.breaks, *f.support) if a < p < b],
        )
    return avg
