"""Field partial sums X^J(u, v), layer sums, paths Y(t) and coupled convergence studies.

Two engines build X^J from the same increment sheet:

* ``dyadic``: ``sum_l Kbar^{J,l} M_l`` with cell averages of the kernel;
* ``haar``:   ``||K||_1 eta + sum_{j<J} sum_k w_{j,k} eps_{j,k}``.

Both are linear in the sheet, so replicas are fused into one matrix product.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .kernel_haar import (KernelPoint, HaarIndex, averages_from_cells, block_sums, boundary_index,
                          cell_table, coefficient_difference, haar_coefficient, haar_from_cells)
from .numerics import QuadratureSpec
from .params import AlphaFunction, HurstFunction, check_hurst_range
from .sampler import (IncrementSheet, _chunks, _fan_out, coarsen, epsilon_level,
                      haar_randomness, project_sheets, sample_sheets)

ENGINES = ("dyadic", "haar")


@dataclass(frozen=True)
class FieldGrid:
    u_values: np.ndarray
    v_values: np.ndarray

    @classmethod
    def make(cls, u_values, v_values) -> "FieldGrid":
        return cls(np.asarray(u_values, dtype=float), np.asarray(v_values, dtype=float))

    def validate(self, alpha: AlphaFunction) -> "FieldGrid":
        u, v = self.u_values, self.v_values
        if u.size == 0 or v.size == 0:
            raise DomainError("grid needs at least one u and one v value")
        if np.any(np.diff(u) <= 0) or np.any(np.diff(v) <= 0):
            raise DomainError("grid values must be strictly increasing")
        if u[0] < 0.0 or u[-1] > 1.0:
            raise DomainError("u values must lie in [0, 1]")
        if v[0] <= 1.0 / alpha.alpha_min:
            raise DomainError(f"v range must start above 1/alpha_min = {1.0 / alpha.alpha_min:.6g}")
        if v[-1] >= 1.0:
            raise DomainError("v range must end below 1")
        return self

    @property
    def shape(self):
        return (self.u_values.size, self.v_values.size)

    def points(self) -> list[KernelPoint]:
        return [KernelPoint(float(u), float(v)) for u in self.u_values for v in self.v_values]


@dataclass
class FieldSample:
    grid: FieldGrid
    level: int
    values: np.ndarray
    seed: int = 0
    replica_index: int = 0
    engine: str = "dyadic"

    def write_csv(self, fh, header: dict | None = None) -> None:
        _write_header(fh, {"engine": self.engine, "J": self.level, "seed": self.seed,
                           "replica": self.replica_index, **(header or {})})
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["u", "v", "value"])
        for i, u in enumerate(self.grid.u_values):
            for k, v in enumerate(self.grid.v_values):
                w.writerow([f"{u:.17g}", f"{v:.17g}", f"{self.values[i, k]:.17g}"])


@dataclass
class PathSample:
    times: np.ndarray
    values: np.ndarray
    hurst: np.ndarray
    level: int
    seed: int = 0
    replica_index: int = 0
    engine: str = "dyadic"

    def write_csv(self, fh, header: dict | None = None) -> None:
        _write_header(fh, {"engine": self.engine, "J": self.level, "seed": self.seed,
                           "replica": self.replica_index, **(header or {})})
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "value"])
        for t, y in zip(self.times, self.values):
            w.writerow([f"{t:.17g}", f"{y:.17g}"])


def _write_header(fh, items: dict) -> None:
    for key, value in items.items():
        fh.write(f"# {key}={value}\n")


def _check_engine(engine: str) -> None:
    if engine not in ENGINES:
        raise DomainError(f"engine must be one of {ENGINES}, got {engine!r}")


# ---------------------------------------------------------------------------
# deterministic weights


def dyadic_weights(points, alpha: AlphaFunction, J: int) -> np.ndarray:
    """Cell averages ``Kbar^{J,l}`` for each point, shape ``(P, 2**J)``."""
    return averages_from_cells(cell_table(points, alpha, J), J)


def haar_weights(points, alpha: AlphaFunction, J: int, route: str = "table",
                 spec: QuadratureSpec | None = None) -> np.ndarray:
    """Packed ``(||K||_1, w_{0,0}, w_{1,0}, ...)`` up to scale ``J-1``, shape ``(P, 2**J)``.

    ``route="table"`` folds the cell integrals; ``route="quadrature"`` integrates
    every coefficient directly (slow, used as an independent cross-check).
    """
    if route == "table":
        return haar_from_cells(cell_table(points, alpha, J))
    if route != "quadrature":
        raise DomainError(f"unknown coefficient route {route!r}")
    from .kernel_haar import kernel_l1_norm

    out = np.zeros((len(points), 1 << J))
    for i, p in enumerate(points):
        out[i, 0] = kernel_l1_norm(p, alpha, spec)
        for j in range(J):
            last = min(int(np.floor(p.u * 2**j)), 2**j - 1)
            for k in range(last + 1):
                out[i, (1 << j) + k] = haar_coefficient(p, alpha, HaarIndex(j, k), spec)
    return out


# ---------------------------------------------------------------------------
# single-sheet fields


def _level_check(J: int, sheet: IncrementSheet) -> None:
    if not 0 <= J <= sheet.level:
        raise DomainError(f"level J={J} must lie in [0, {sheet.level}]")


def field_dyadic(alpha: AlphaFunction, grid: FieldGrid, sheet: IncrementSheet, J: int,
                 weights: np.ndarray | None = None) -> FieldSample:
    grid.validate(alpha)
    _level_check(J, sheet)
    K = dyadic_weights(grid.points(), alpha, J) if weights is None else weights
    values = (K @ coarsen(sheet, J)).reshape(grid.shape)
    return FieldSample(grid, J, values, sheet.seed, sheet.replica_index, "dyadic")


def field_haar(alpha: AlphaFunction, grid: FieldGrid, sheet: IncrementSheet, J: int,
               weights: np.ndarray | None = None, route: str = "table") -> FieldSample:
    grid.validate(alpha)
    _level_check(J, sheet)
    W = haar_weights(grid.points(), alpha, J, route) if weights is None else weights
    values = (W @ haar_randomness(coarsen(sheet, J))).reshape(grid.shape)
    return FieldSample(grid, J, values, sheet.seed, sheet.replica_index, "haar")


def layer_sum_direct(alpha: AlphaFunction, p: KernelPoint, sheet: IncrementSheet, j: int,
                     spec: QuadratureSpec | None = None) -> float:
    """``sum_k w_{j,k} eps_{j,k}``."""
    eps = epsilon_level(sheet.increments, j)
    total = 0.0
    for k in range(boundary_index(p.u, j) + 1):
        total += haar_coefficient(p, alpha, HaarIndex(j, k), spec) * eps[k]
    return total


def layer_sum_abel(alpha: AlphaFunction, p: KernelPoint, sheet: IncrementSheet, j: int,
                   spec: QuadratureSpec | None = None) -> float:
    """Layer sum rearranged by summation by parts over the partial sums ``tau_{j,k}``.

    The differences ``w_{j,k} - w_{j,k+1}`` come from the kernel's second
    difference, not from subtracting coefficients.
    """
    tau = np.cumsum(epsilon_level(sheet.increments, j))
    m = boundary_index(p.u, j)
    total = tau[m] * haar_coefficient(p, alpha, HaarIndex(j, m), spec)
    for k in range(m):
        total += tau[k] * coefficient_difference(p, alpha, j, k, spec)
    return float(total)


# ---------------------------------------------------------------------------
# paths


def path_points(H: HurstFunction, alpha: AlphaFunction, times) -> list[KernelPoint]:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or times[0] < 0.0 or times[-1] > 1.0 or np.any(np.diff(times) <= 0):
        raise DomainError("time grid must be strictly increasing inside [0, 1]")
    check_hurst_range(H, alpha)
    return [KernelPoint(float(t), float(H(t))).validate(alpha) for t in times]


def simulate_paths(alpha: AlphaFunction, H: HurstFunction, times, J: int, seed: int, replicas,
                   engine: str = "dyadic", threads: int = 1) -> list[PathSample]:
    """``Y(t) = X^J(t, H(t))`` for each replica; all replicas share the deterministic weights."""
    _check_engine(engine)
    times = np.asarray(times, dtype=float)
    points = path_points(H, alpha, times)
    replicas = list(replicas)
    hurst = np.array([p.v for p in points])
    if engine == "dyadic":
        values = project_sheets(alpha, J, seed, replicas, dyadic_weights(points, alpha, J), threads)
    else:
        W = haar_weights(points, alpha, J)

        def work(chunk):
            return haar_randomness(sample_sheets(alpha, J, seed, chunk)) @ W.T

        parts = _fan_out(work, _chunks(replicas), threads)
        values = np.concatenate(parts) if parts else np.empty((0, len(points)))
    values[:, times == 0.0] = 0.0
    return [PathSample(times, values[i], hurst, J, seed, r, engine) for i, r in enumerate(replicas)]


def simulate_path(alpha: AlphaFunction, H: HurstFunction, times, J: int, seed: int,
                  replica_index: int = 0, engine: str = "dyadic") -> PathSample:
    return simulate_paths(alpha, H, times, J, seed, [replica_index], engine)[0]


def simulate_fields(alpha: AlphaFunction, grid: FieldGrid, J: int, seed: int, replicas,
                    engine: str = "dyadic", threads: int = 1) -> list[FieldSample]:
    _check_engine(engine)
    grid.validate(alpha)
    points = grid.points()
    replicas = list(replicas)
    if engine == "dyadic":
        values = project_sheets(alpha, J, seed, replicas, dyadic_weights(points, alpha, J), threads)
    else:
        W = haar_weights(points, alpha, J)
        parts = _fan_out(lambda c: haar_randomness(sample_sheets(alpha, J, seed, c)) @ W.T,
                         _chunks(replicas), threads)
        values = np.concatenate(parts)
    return [FieldSample(grid, J, values[i].reshape(grid.shape), seed, r, engine)
            for i, r in enumerate(replicas)]


# ---------------------------------------------------------------------------
# coupled convergence study


@dataclass
class ConvergenceReport:
    zeta: float
    levels: np.ndarray
    j_ref: int
    rate: float
    d: np.ndarray = field(repr=False)   # (replicas, levels)
    r: np.ndarray = field(repr=False)
    slopes: np.ndarray = field(repr=False)
    seed: int = 0
    replicas: int = 0
    coupled: bool = True

    @property
    def median_d(self) -> np.ndarray:
        return np.median(self.d, axis=0)

    @property
    def median_r(self) -> np.ndarray:
        return np.median(self.r, axis=0)

    @property
    def median_slope(self) -> float:
        return float(np.median(self.slopes))

    @property
    def r_ratio(self) -> float:
        """``max_J median r_J / median r_{J_min}``."""
        mr = self.median_r
        return float(np.max(mr) / mr[0]) if mr[0] > 0 else float("inf")

    def write_csv(self, fh, header: dict | None = None) -> None:
        _write_header(fh, {"zeta": self.zeta, "J_ref": self.j_ref, "rate": f"{self.rate:.17g}",
                           "seed": self.seed, "replicas": self.replicas, **(header or {})})
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["J", "median_d", "median_r", "slope"])
        for J, md, mr in zip(self.levels, self.median_d, self.median_r):
            w.writerow([int(J), f"{md:.17g}", f"{mr:.17g}", f"{self.median_slope:.17g}"])


def fit_log2_slope(levels, d) -> float:
    """Least-squares slope of ``log2 d`` against the level, ignoring zero differences."""
    levels = np.asarray(levels, dtype=float)
    d = np.asarray(d, dtype=float)
    keep = d > 0
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(levels[keep], np.log2(d[keep]), 1)[0])


def convergence_study(alpha: AlphaFunction, grid: FieldGrid, a: float, levels, j_ref: int,
                      replicas: int, seed: int, zeta: float = 1.0, rho: float | None = None,
                      threads: int = 1) -> ConvergenceReport:
    """Sup-norm gaps ``max_grid |X^{J_ref} - X^J|`` with every level cut from one sheet per replica."""
    grid.validate(alpha)
    levels = np.asarray(sorted(set(int(J) for J in levels)), dtype=int)
    if levels.size == 0 or levels[0] < 1 or levels[-1] > j_ref:
        raise DomainError(f"levels must lie in [1, J_ref={j_ref}]")
    if zeta <= 1.0 / alpha.alpha_min:
        raise DomainError(f"zeta must exceed 1/alpha_min = {1.0 / alpha.alpha_min:.6g}")
    if a <= 1.0 / alpha.alpha_min or a > grid.v_values[0]:
        raise DomainError("a must exceed 1/alpha_min and not exceed the smallest v")
    rho = alpha.holder_exponent if rho is None else rho
    rate = min(rho, a - 1.0 / alpha.alpha_min)
    cells = cell_table(grid.points(), alpha, j_ref)
    weights = [averages_from_cells(cells, J) for J in levels]
    k_ref = averages_from_cells(cells, j_ref)

    def work(chunk):
        sheets = sample_sheets(alpha, j_ref, seed, chunk)
        x_ref = sheets @ k_ref.T
        gaps = np.empty((len(chunk), levels.size))
        for i, (J, K) in enumerate(zip(levels, weights)):
            gaps[:, i] = np.abs(block_sums(sheets, J) @ K.T - x_ref).max(axis=1)
        return gaps

    d = np.concatenate(_fan_out(work, _chunks(range(replicas)), threads))
    d[:, levels == j_ref] = 0.0
    r = levels.astype(float) ** -zeta * 2.0 ** (levels * rate) * d
    slopes = np.array([fit_log2_slope(levels, row) for row in d])
    return ConvergenceReport(zeta, levels, j_ref, rate, d, r, slopes, seed, replicas, True)


__all__ = [
    "ENGINES", "FieldGrid", "FieldSample", "PathSample", "ConvergenceReport",
    "dyadic_weights", "haar_weights", "field_dyadic", "field_haar", "layer_sum_direct",
    "layer_sum_abel", "path_points", "simulate_path", "simulate_paths", "simulate_fields",
    "fit_log2_slope", "convergence_study",
]
