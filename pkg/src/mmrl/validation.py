"""Monte Carlo and deterministic checks with explicit, recorded tolerances.

Every check is a pure function of its arguments (including seeds) and returns a
:class:`CheckResult`; a :class:`ValidationReport` collects them in a fixed order.
Samples of the multistable integral ``I(f)`` are ``sum_l fbar_l M_l`` with
``fbar`` the level-J cell averages of ``f`` and ``M`` an increment sheet.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import DomainError, ProtocolError
from .integrand import (Integrand, cell_averages, characteristic_function, indicator, quasi_norm,
                        tail_bound_rhs)
from .kernel_haar import KernelPoint, kernel_integrand
from .params import AlphaFunction, HurstFunction
from .sampler import Stream, doob_statistic, project_sheets, sample_sas, sample_sheets
from .simulator import ConvergenceReport, simulate_paths

ECF_WIDTH = 5.0
TAIL_SLACK = 0.5
TAIL_SLOPE_TOL = 0.15
TAIL_MIN_COUNT = 50
MOMENT_SLACK = 0.5
SLOPE_SLACK = 0.08
R_RATIO_MAX = 10.0
PERCENTILE_BAND = (0.5, 2.0)
KS_LEVEL = 0.01


@dataclass
class CheckResult:
    check_id: str
    statistic: float
    threshold: float
    passed: bool
    n: int
    seeds: tuple = ()
    detail: str = ""
    skipped: bool = False

    def line(self) -> str:
        verdict = "SKIP" if self.skipped else ("PASS" if self.passed else "FAIL")
        seeds = ",".join(str(s) for s in self.seeds)
        text = f"{self.check_id} statistic={self.statistic:.6g} threshold={self.threshold:.6g} {verdict} seed={seeds} N={self.n}"
        return f"{text} ({self.detail})" if self.detail else text


@dataclass
class ValidationReport:
    checks: list[CheckResult] = field(default_factory=list)

    def add(self, result: CheckResult) -> CheckResult:
        self.checks.append(result)
        return result

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failing(self) -> list[str]:
        return [c.check_id for c in self.checks if not c.passed]

    def to_text(self) -> str:
        lines = [c.line() for c in self.checks]
        lines.append(f"overall {'PASS' if self.passed else 'FAIL'} ({len(self.checks)} checks)")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check_id", "statistic", "threshold", "passed", "skipped", "n", "seeds", "detail"])
        for c in self.checks:
            w.writerow([c.check_id, f"{c.statistic:.17g}", f"{c.threshold:.17g}", int(c.passed),
                        int(c.skipped), c.n, " ".join(map(str, c.seeds)), c.detail])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# sampling the integral


def integral_samples(fs, alpha: AlphaFunction, N: int, J: int, seed: int, threads: int = 1) -> np.ndarray:
    """Samples of ``I(f)`` for each integrand, sharing one sheet per draw; shape ``(N, len(fs))``."""
    weights = np.array([cell_averages(f, J) for f in fs])
    return project_sheets(alpha, J, seed, range(N), weights, threads)


def ecf_deviation(samples: np.ndarray, xi, target) -> tuple[float, float]:
    """Largest real and imaginary deviation of the empirical CF from ``target``."""
    xi = np.asarray(xi, dtype=float)
    phase = np.outer(samples, xi)
    re = np.cos(phase).mean(axis=0)
    im = np.sin(phase).mean(axis=0)
    return float(np.max(np.abs(re - target))), float(np.max(np.abs(im)))


def _ecf_result(check_id, samples, f, alpha, xi, seed) -> CheckResult:
    target = np.atleast_1d(characteristic_function(f, alpha, xi))
    dre, dim = ecf_deviation(samples, xi, target)
    thr = ECF_WIDTH / math.sqrt(samples.size)
    stat = max(dre, dim)
    return CheckResult(check_id, stat, thr, stat <= thr, samples.size, (seed,),
                       f"real={dre:.3g} imag={dim:.3g}")


def _ecf_pre(N: int, J: int) -> None:
    if N < 10_000 or J < 12:
        raise DomainError("empirical CF checks need N >= 1e4 and J >= 12")


def check_ecf(f: Integrand, alpha: AlphaFunction, xi, N: int, J: int, seed: int,
              threads: int = 1, check_id: str | None = None) -> CheckResult:
    """Empirical CF of ``I(f)`` against ``exp(-integral |xi f|**alpha)`` within ``5/sqrt(N)``."""
    _ecf_pre(N, J)
    samples = integral_samples([f], alpha, N, J, seed, threads)[:, 0]
    return _ecf_result(check_id or f"ecf[{f.label}]", samples, f, alpha, xi, seed)


def check_ecf_suite(fs, alpha: AlphaFunction, xi, N: int, J: int, seed: int, threads: int = 1,
                    prefix: str = "ecf") -> list[CheckResult]:
    """:func:`check_ecf` for several integrands on the same sheets (one generation pass)."""
    _ecf_pre(N, J)
    samples = integral_samples(fs, alpha, N, J, seed, threads)
    return [_ecf_result(f"{prefix}[{f.label}]", samples[:, i], f, alpha, xi, seed)
            for i, f in enumerate(fs)]


def _is_zero_integrand(f: Integrand) -> bool:
    return f.integrate(lambda s: np.abs(f(s))) == 0.0


def tail_profile(samples: np.ndarray, lambdas) -> np.ndarray:
    """Exceedance counts ``#{|X| >= lam}`` for each ``lam``."""
    a = np.sort(np.abs(samples))
    return a.size - np.searchsorted(a, np.asarray(lambdas, dtype=float), side="left")


def tail_slope(lambdas, counts) -> float:
    """Count-weighted least-squares slope of ``log tail`` against ``log lam``."""
    lambdas = np.asarray(lambdas, dtype=float)
    counts = np.asarray(counts, dtype=float)
    keep = counts > 0
    x, y, w = np.log(lambdas[keep]), np.log(counts[keep]), counts[keep]
    return float(np.polyfit(x, y, 1, w=np.sqrt(w))[0])


def check_tail(f: Integrand, alpha: AlphaFunction, lambdas, N: int, J: int, seed: int,
               threads: int = 1, check_id: str | None = None, samples=None) -> CheckResult:
    """Empirical tail against the fitted tail-bound shape; slope test for constant alpha."""
    check_id = check_id or f"tail[{f.label}]"
    if _is_zero_integrand(f):
        return CheckResult(check_id, 0.0, 0.0, True, N, (seed,), "zero integrand: tail is 0")
    lambdas = np.sort(np.asarray(lambdas, dtype=float))
    if samples is None:
        samples = integral_samples([f], alpha, N, J, seed, threads)[:, 0]
    counts = tail_profile(samples, lambdas)
    ok = counts >= TAIL_MIN_COUNT
    skipped = int((~ok).sum())
    if ok.sum() < 2:
        return CheckResult(check_id, float("nan"), float("nan"), True, N, (seed,),
                           f"skipped: fewer than 2 thresholds with >= {TAIL_MIN_COUNT} exceedances", True)
    lam, cnt = lambdas[ok], counts[ok]
    tail = cnt / N
    rhs = np.array([tail_bound_rhs(f, alpha, x) for x in lam])
    kappa2 = tail[0] / rhs[0]
    excess = float(np.max(tail / (kappa2 * rhs)))
    bound_ok = excess <= 1.0 + TAIL_SLACK
    detail = f"kappa2={kappa2:.4g} max_ratio={excess:.4g}"
    if skipped:
        detail += f" skipped_thresholds={skipped}"
    stat, thr, passed = excess, 1.0 + TAIL_SLACK, bound_ok
    if alpha.is_constant:
        top = lam >= lam[-1] / 10.0
        slope = tail_slope(lam[top], cnt[top])
        dev = abs(slope + alpha.alpha_min)
        detail += f" slope={slope:.4f} target={-alpha.alpha_min:.4g}"
        stat, thr, passed = dev, TAIL_SLOPE_TOL, bound_ok and dev <= TAIL_SLOPE_TOL
    return CheckResult(check_id, stat, thr, passed, N, (seed,), detail)


def check_moment(f: Integrand, alpha: AlphaFunction, gamma: float, N: int, J: int, seed: int,
                 reference: Integrand | None = None, c: float = 2.0, threads: int = 1,
                 check_id: str | None = None) -> CheckResult:
    """``E|I(f)|**gamma <= k3 ||f||**gamma`` with ``k3`` fitted on ``reference``, plus homogeneity."""
    if not 0.0 < gamma < alpha.alpha_min:
        raise DomainError(f"moment order must lie in (0, alpha_min={alpha.alpha_min}); got {gamma}")
    if N < 100_000:
        raise DomainError("moment checks need N >= 1e5")
    check_id = check_id or f"moment[{f.label},gamma={gamma:g}]"
    reference = reference or indicator(0.0, 1.0)
    samples = integral_samples([f, f.scaled(c), reference], alpha, N, J, seed, threads)
    mom = np.abs(samples) ** gamma
    m_f, m_cf, m_ref = mom.mean(axis=0)
    kappa3 = m_ref / quasi_norm(reference, alpha) ** gamma
    rhs = quasi_norm(f, alpha) ** gamma
    # heavier moment estimators near alpha_min get twice the slack
    slack = MOMENT_SLACK * (2.0 if gamma > 0.9 * alpha.alpha_min else 1.0)
    ratio = m_f / (kappa3 * rhs) if rhs > 0 else 0.0
    se = mom[:, 0].std() / math.sqrt(N) / m_f if m_f > 0 else 0.0
    homog = abs(m_cf / m_f / c**gamma - 1.0) if m_f > 0 else 0.0
    passed = ratio <= 1.0 + slack and homog <= 3.0 * se + 1e-12
    return CheckResult(check_id, ratio, 1.0 + slack, bool(passed), N, (seed,),
                       f"kappa3={kappa3:.4g} moment={m_f:.6g} homogeneity={homog:.3g} se={se:.3g}")


def check_martingale_bound(alpha: AlphaFunction, zeta: float, j_max: int, replicas=(1000, 10000),
                           seed: int = 0, threads: int = 1, J: int | None = None) -> CheckResult:
    """Stability of the 99th percentile of the Doob statistic as the replica count grows."""
    if zeta <= 1.0 / alpha.alpha_min:
        raise DomainError(f"zeta must exceed 1/alpha_min = {1.0 / alpha.alpha_min:.6g}")
    J = j_max + 1 if J is None else J
    small, large = replicas
    parts = []
    for start in range(0, large, 1000):
        sheets = sample_sheets(alpha, J, seed, range(start, min(start + 1000, large)), threads)
        parts.append(doob_statistic(sheets, zeta, j_max))
    stat = np.concatenate(parts)
    q_small = float(np.percentile(stat[:small], 99))
    q_large = float(np.percentile(stat, 99))
    ratio = q_large / q_small
    lo, hi = PERCENTILE_BAND
    return CheckResult(f"doob[zeta={zeta:g},j_max={j_max}]", ratio, hi, bool(lo <= ratio <= hi), large,
                       (seed,), f"p99({small})={q_small:.4g} p99({large})={q_large:.4g} band=[{lo},{hi}]")


def check_rate(report: ConvergenceReport, a: float, rho: float, alpha_min: float) -> CheckResult:
    """Fitted log2 slope of the coupled gaps against ``-min(rho, a - 1/alpha_min) + 0.08``."""
    if not report.coupled:
        raise ProtocolError("rate checks need a report built from coupled levels")
    rate = min(rho, a - 1.0 / alpha_min)
    thr = -rate + SLOPE_SLACK
    slope = report.median_slope
    r_ratio = report.r_ratio
    passed = slope <= thr and r_ratio <= R_RATIO_MAX
    return CheckResult("rate", slope, thr, bool(passed), report.replicas, (report.seed,),
                       f"r_ratio={r_ratio:.4g} limit={R_RATIO_MAX:g} levels={report.levels[0]}..{report.levels[-1]}"
                       f" J_ref={report.j_ref}")


def reduction_samples(alpha0: float, alpha: AlphaFunction, H: HurstFunction, t: float, N: int, J: int,
                      seed: int, threads: int = 1):
    """Simulated ``Y(t)`` and direct SaS draws at scale ``||K_{t,H(t)}||_alpha``."""
    paths = simulate_paths(alpha, H, [t], J, seed, range(N), "dyadic", threads)
    y = np.array([p.values[0] for p in paths])
    scale = quasi_norm(kernel_integrand(KernelPoint(t, float(H(t))), alpha), alpha)
    direct = sample_sas(alpha0, scale, Stream(seed, 0, tag=1), size=N)
    return y, direct, scale


def check_ks(alpha: AlphaFunction, H: HurstFunction, t: float, N: int, J: int, seed: int,
             threads: int = 1) -> CheckResult:
    """Two-sample KS between simulated ``Y(t)`` and direct draws (constant alpha only)."""
    if not alpha.is_constant:
        raise DomainError("the KS reduction needs a constant stability function")
    y, direct, scale = reduction_samples(alpha.alpha_min, alpha, H, t, N, J, seed, threads)
    res = stats.ks_2samp(y, direct)
    return CheckResult(f"ks[t={t:g}]", float(res.pvalue), KS_LEVEL, bool(res.pvalue >= KS_LEVEL), N, (seed,),
                       f"D={res.statistic:.4g} scale={scale:.6g}")
