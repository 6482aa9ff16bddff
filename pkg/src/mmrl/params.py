"""Deterministic parameter functions: the stability index and the Hurst function.

Both are built from small descriptors (a family name plus numeric
parameters), e.g.::

    build_alpha({"family": "sine", "p1": 1.5, "p2": 0.3})
    build_hurst({"family": "constant", "p1": 0.72})

Supported families: ``constant`` (p1), ``affine`` (p1 + p2*s),
``sine`` (p1 + p2*sin(2*pi*p3*s + p4), p3 defaults to 1, p4 to 0) and
``piecewise-cubic`` (a C2 cubic spline through ``knots``).
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, DomainError

DEFAULT_HOLDER = 0.999
FAMILIES = ("constant", "affine", "sine", "piecewise-cubic")
_ALIASES = {"sine-mapped": "sine", "piecewise": "piecewise-cubic", "cubic": "piecewise-cubic"}


@dataclass(frozen=True)
class _ParamFunction:
    family: str
    params: tuple
    lower: float
    upper: float
    _f: Callable = field(repr=False, compare=False)
    _df: Callable = field(repr=False, compare=False)

    def _eval(self, s):
        s = np.asarray(s, dtype=float)
        out = self._f(np.clip(s, 0.0, 1.0))
        return out if out.ndim else float(out)

    def derivative(self, s):
        """Analytic derivative on [0, 1] (zero outside, matching the flat extension)."""
        s = np.asarray(s, dtype=float)
        out = np.where((s >= 0.0) & (s <= 1.0), self._df(np.clip(s, 0.0, 1.0)), 0.0)
        return out if out.ndim else float(out)

    def describe(self) -> str:
        """Canonical one-line descriptor, used in file headers and config hashes."""
        parts = [f"family={self.family}"]
        for key, value in self.params:
            if key == "knots":
                value = " ".join(f"{x!r}:{y!r}" for x, y in value)
            else:
                value = repr(value)
            parts.append(f"{key}={value}")
        return ",".join(parts)


@dataclass(frozen=True)
class AlphaFunction(_ParamFunction):
    """Stability index alpha(s) with 1 < alpha_min <= alpha(s) <= alpha_max < 2.

    Outside [0, 1] the function is extended by its boundary values.
    """

    holder_exponent: float = DEFAULT_HOLDER

    @property
    def alpha_min(self) -> float:
        return self.lower

    @property
    def alpha_max(self) -> float:
        return self.upper

    @property
    def is_constant(self) -> bool:
        return self.lower == self.upper

    def __call__(self, s):
        return self._eval(s)


@dataclass(frozen=True)
class HurstFunction(_ParamFunction):
    """Hurst function H(t) on [0, 1] with values in [h_min, h_max]."""

    @property
    def h_min(self) -> float:
        return self.lower

    @property
    def h_max(self) -> float:
        return self.upper

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any((t < 0.0) | (t > 1.0)) or np.any(np.isnan(t)):
            raise DomainError("Hurst function is only defined on [0, 1]")
        return self._eval(t)


def _number(desc: Mapping, key: str, default=None) -> float:
    if key not in desc:
        if default is None:
            raise ConfigError(f"missing parameter '{key}'")
        return default
    try:
        value = float(desc[key])
    except (TypeError, ValueError):
        raise ConfigError(f"parameter '{key}' must be a number, got {desc[key]!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"parameter '{key}' must be finite")
    return value


def parse_knots(spec) -> list[tuple[float, float]]:
    """Accept ``"0:1.3, 0.5:1.6"`` strings or sequences of pairs."""
    if isinstance(spec, str):
        pairs = []
        for item in spec.replace(",", " ").split():
            try:
                x, y = item.split(":")
                pairs.append((float(x), float(y)))
            except ValueError:
                raise ConfigError(f"malformed knot {item!r}; expected s:value") from None
        return pairs
    return [(float(x), float(y)) for x, y in spec]


def _sine_range(mean, amp, freq, phase):
    # extrema on [0,1]: endpoints plus interior critical points
    cand = [0.0, 1.0]
    if freq != 0.0 and amp != 0.0:
        w = 2.0 * math.pi * freq
        lo_n = math.floor(((min(0.0, w) + phase) - math.pi / 2) / math.pi) - 1
        hi_n = math.ceil(((max(0.0, w) + phase) - math.pi / 2) / math.pi) + 1
        for n in range(lo_n, hi_n + 1):
            s = (math.pi / 2 + n * math.pi - phase) / w
            if 0.0 < s < 1.0:
                cand.append(s)
    vals = [mean + amp * math.sin(2.0 * math.pi * freq * s + phase) for s in cand]
    return min(vals), max(vals)


def _build(desc: Mapping):
    """Return (family, params, f, df, lo, hi) for a descriptor."""
    if "family" not in desc:
        raise ConfigError("function descriptor needs a 'family'")
    family = str(desc["family"]).strip().lower()
    family = _ALIASES.get(family, family)

    if family == "constant":
        c = _number(desc, "p1")
        params = (("p1", c),)
        return family, params, (lambda s: np.full_like(s, c)), (lambda s: np.zeros_like(s)), c, c

    if family == "affine":
        c0, c1 = _number(desc, "p1"), _number(desc, "p2")
        vals = (c0, c0 + c1)
        params = (("p1", c0), ("p2", c1))
        return (family, params, (lambda s: c0 + c1 * s), (lambda s: np.full_like(s, c1)),
                min(vals), max(vals))

    if family == "sine":
        mean, amp = _number(desc, "p1"), _number(desc, "p2")
        freq, phase = _number(desc, "p3", 1.0), _number(desc, "p4", 0.0)
        w = 2.0 * math.pi * freq
        lo, hi = _sine_range(mean, amp, freq, phase)
        params = (("p1", mean), ("p2", amp), ("p3", freq), ("p4", phase))
        return (family, params, (lambda s: mean + amp * np.sin(w * s + phase)),
                (lambda s: amp * w * np.cos(w * s + phase)), lo, hi)

    if family == "piecewise-cubic":
        if "knots" not in desc:
            raise ConfigError("piecewise-cubic family needs 'knots'")
        knots = parse_knots(desc["knots"])
        if len(knots) < 4:
            raise ConfigError("piecewise-cubic family needs at least 4 knots")
        xs = np.array([k[0] for k in knots])
        ys = np.array([k[1] for k in knots])
        if np.any(np.diff(xs) <= 0):
            raise ConfigError("knot abscissae must be strictly increasing")
        if xs[0] > 0.0 or xs[-1] < 1.0:
            raise ConfigError("knots must cover [0, 1]")
        spline = CubicSpline(xs, ys)
        dspline = spline.derivative()
        crit = [r for r in dspline.roots(extrapolate=False) if 0.0 < r < 1.0]
        vals = spline(np.array([0.0, 1.0, *crit]))
        params = (("knots", tuple(knots)),)
        return (family, params, (lambda s: spline(s)), (lambda s: dspline(s)),
                float(vals.min()), float(vals.max()))

    raise ConfigError(f"unknown function family {family!r}; expected one of {FAMILIES}")


def build_alpha(desc: Mapping) -> AlphaFunction:
    """Build a stability-index function from a descriptor.

    Optional keys: ``holder`` overrides the Hoelder exponent of the derivative
    (default 0.999), ``min``/``max`` declare bounds that must contain the
    function's range and are then used as alpha_min/alpha_max.
    """
    family, params, f, df, lo, hi = _build(desc)
    if "min" in desc or "max" in desc:
        dlo, dhi = _number(desc, "min", lo), _number(desc, "max", hi)
        if not (1.0 < dlo <= dhi < 2.0):
            raise ConfigError("declared alpha range must satisfy 1 < min <= max < 2")
        if lo < dlo or hi > dhi:
            raise ConfigError(f"alpha range [{lo}, {hi}] leaves the declared [{dlo}, {dhi}]")
        lo, hi = dlo, dhi
        params = params + (("min", dlo), ("max", dhi))
    if not (1.0 < lo and hi < 2.0):
        raise ConfigError(f"alpha range [{lo:.6g}, {hi:.6g}] must lie inside (1, 2)")
    holder = _number(desc, "holder", DEFAULT_HOLDER)
    if not 0.0 < holder < 1.0:
        raise ConfigError("holder exponent must lie in (0, 1)")
    if "holder" in desc:
        params = params + (("holder", holder),)
    return AlphaFunction(family, params, lo, hi, f, df, holder_exponent=holder)


def build_hurst(desc: Mapping, alpha: AlphaFunction | None = None) -> HurstFunction:
    """Build a Hurst function; with ``alpha`` also enforce H > 1/alpha_min."""
    family, params, f, df, lo, hi = _build(desc)
    if not (0.0 < lo and hi < 1.0):
        raise ConfigError(f"H range [{lo:.6g}, {hi:.6g}] must lie inside (0, 1)")
    h = HurstFunction(family, params, lo, hi, f, df)
    if alpha is not None:
        check_hurst_range(h, alpha)
    return h


def check_hurst_range(h: HurstFunction, alpha: AlphaFunction) -> None:
    if not (1.0 / alpha.alpha_min < h.h_min and h.h_max < 1.0):
        raise ConfigError(
            f"H range must lie in (1/alpha_min, 1) = ({1.0 / alpha.alpha_min:.6g}, 1); "
            f"got [{h.h_min:.6g}, {h.h_max:.6g}]"
        )


def eval_alpha(f: AlphaFunction, s):
    return f(s)


def eval_hurst(h: HurstFunction, t):
    return h(t)
