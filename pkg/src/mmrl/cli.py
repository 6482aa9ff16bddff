"""Batch front end: ``mmrl --config run.ini [--output DIR] [--seed N] [--threads N] [--mode M]``.

Config files are INI documents with sections ``run``, ``alpha``, ``hurst``,
``grid``, ``numerics`` and ``output``. Every default that gets applied is
listed in the manifest and in the header of each output file.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .errors import ConfigError, MMRLError, ResourceError
from .integrand import haar_integrand, indicator
from .kernel_haar import KernelPoint, coefficient_rows, kernel_integrand, lemma_bound_check, write_coefficients_csv
from .numerics import QuadratureSpec
from .params import AlphaFunction, HurstFunction, build_alpha, build_hurst
from .sampler import SHEET_GUARD
from .simulator import ENGINES, FieldGrid, convergence_study, simulate_fields, simulate_paths
from .validation import (CheckResult, ValidationReport, check_ecf_suite, check_ks, check_martingale_bound,
                         check_moment, check_rate, check_tail)

MODES = ("simulate-path", "simulate-field", "convergence-study", "validate", "export-coefficients")
OUTPUT_ENV = "MMRL_OUTPUT_DIR"

_FUNCTION_KEYS = {"family", "p1", "p2", "p3", "p4", "knots", "holder", "min", "max"}
_ALLOWED = {
    "run": {"mode", "seed", "replicas", "j", "j_ref", "levels", "engine", "zeta",
            "samples", "tail_samples", "moment_samples", "gamma"},
    "alpha": _FUNCTION_KEYS,
    "hurst": _FUNCTION_KEYS,
    "grid": {"u_points", "a", "b", "v_points", "t_points"},
    "numerics": {"order", "atol", "rtol", "max_depth"},
    "output": {"dir"},
}
_RUN_DEFAULTS = {
    "seed": "0", "replicas": "1", "j": "12", "j_ref": "14", "levels": "4..10", "engine": "dyadic",
    "zeta": "1.0", "samples": "10000", "tail_samples": "200000", "moment_samples": "100000",
    "gamma": "1.2",
}
_GRID_DEFAULTS = {"u_points": "21", "v_points": "5", "t_points": "257"}


@dataclass
class RunConfig:
    mode: str
    alpha: AlphaFunction
    hurst: HurstFunction | None
    seed: int
    replicas: int
    J: int
    j_ref: int
    levels: tuple[int, ...]
    engine: str
    zeta: float
    samples: int
    tail_samples: int
    moment_samples: int
    gamma: float
    u_points: int
    v_range: tuple[float, float]
    v_points: int
    t_points: int
    quadrature: QuadratureSpec
    output_dir: str | None
    defaults: list[str] = field(default_factory=list)

    def semantic(self) -> dict:
        """Resolved settings that determine the output (no paths, no thread counts)."""
        q = self.quadrature
        return {
            "mode": self.mode, "alpha": self.alpha.describe(),
            "hurst": self.hurst.describe() if self.hurst else None,
            "seed": self.seed, "replicas": self.replicas, "J": self.J, "J_ref": self.j_ref,
            "levels": list(self.levels), "engine": self.engine, "zeta": self.zeta,
            "samples": self.samples, "tail_samples": self.tail_samples,
            "moment_samples": self.moment_samples, "gamma": self.gamma,
            "u_points": self.u_points, "v_range": list(self.v_range), "v_points": self.v_points,
            "t_points": self.t_points,
            "numerics": {"order": q.order, "atol": q.atol, "rtol": q.rtol, "max_depth": q.max_depth},
        }

    def digest(self) -> str:
        blob = json.dumps(self.semantic(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def grid(self) -> FieldGrid:
        a, b = self.v_range
        v = np.linspace(a, b, self.v_points) if self.v_points > 1 else np.array([a])
        return FieldGrid.make(np.linspace(0.0, 1.0, self.u_points), v).validate(self.alpha)

    def times(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.t_points)


def _int(value: str, key: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"'{key}' must be an integer, got {value!r}") from None


def _float(value: str, key: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"'{key}' must be a number, got {value!r}") from None


def _levels(value: str) -> tuple[int, ...]:
    value = value.strip()
    if ".." in value:
        lo, hi = value.split("..", 1)
        return tuple(range(_int(lo, "levels"), _int(hi, "levels") + 1))
    return tuple(_int(x, "levels") for x in value.replace(",", " ").split())


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse and validate a config document; ``overrides`` replaces ``run`` keys (flags)."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for section in cp.sections():
        if section not in _ALLOWED:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp[section]:
            if key not in _ALLOWED[section]:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")

    run = dict(cp["run"]) if cp.has_section("run") else {}
    for k, v in (overrides or {}).items():
        if v is not None:
            run[k] = str(v)
    defaults = []
    if "mode" not in run:
        raise ConfigError("missing key 'mode' in section [run]")
    mode = run["mode"].strip()
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    for k, v in _RUN_DEFAULTS.items():
        if k not in run:
            run[k] = v
            defaults.append(f"run.{k}={v}")

    if not cp.has_section("alpha"):
        raise ConfigError("missing section [alpha]")
    alpha = build_alpha(dict(cp["alpha"]))
    hurst = build_hurst(dict(cp["hurst"]), alpha) if cp.has_section("hurst") else None
    if hurst is None and mode in ("simulate-path", "validate"):
        raise ConfigError(f"mode {mode} needs a [hurst] section")

    seed = _int(run["seed"], "seed")
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    J, j_ref = _int(run["j"], "j"), _int(run["j_ref"], "j_ref")
    for name, level in (("j", J), ("j_ref", j_ref)):
        if level < 1:
            raise ConfigError(f"'{name}' must be >= 1")
    levels = _levels(run["levels"])
    if mode == "convergence-study":
        if not levels or min(levels) < 1 or max(levels) >= j_ref:
            raise ConfigError("levels must satisfy 1 <= level < j_ref")
    engine = run["engine"].strip()
    if engine not in ENGINES:
        raise ConfigError(f"engine must be one of {ENGINES}, got {engine!r}")
    zeta = _float(run["zeta"], "zeta")
    if zeta <= 1.0 / alpha.alpha_min:
        raise ConfigError(f"zeta must exceed 1/alpha_min = {1.0 / alpha.alpha_min:.6g}")
    replicas = _int(run["replicas"], "replicas")
    if replicas < 1:
        raise ConfigError("'replicas' must be >= 1")

    grid = dict(cp["grid"]) if cp.has_section("grid") else {}
    for k, v in _GRID_DEFAULTS.items():
        if k not in grid:
            grid[k] = v
            defaults.append(f"grid.{k}={v}")
    for k in ("a", "b"):
        if k not in grid:
            if hurst is None:
                raise ConfigError(f"missing key '{k}' in section [grid] (no [hurst] to default from)")
            grid[k] = repr(hurst.h_min if k == "a" else hurst.h_max)
            defaults.append(f"grid.{k}={grid[k]}")
    a, b = _float(grid["a"], "a"), _float(grid["b"], "b")
    if not (1.0 / alpha.alpha_min < a <= b < 1.0):
        raise ConfigError(f"grid range must satisfy 1/alpha_min < a <= b < 1 "
                          f"(1/alpha_min = {1.0 / alpha.alpha_min:.6g}); got a={a}, b={b}")
    if a == b and "grid.v_points=5" in defaults:
        # a degenerate v range (constant H) holds a single column
        grid["v_points"] = "1"
        defaults[defaults.index("grid.v_points=5")] = "grid.v_points=1"
    u_points, v_points, t_points = (_int(grid[k], k) for k in ("u_points", "v_points", "t_points"))
    if u_points < 2 or v_points < 1 or t_points < 2:
        raise ConfigError("grid needs u_points >= 2, v_points >= 1 and t_points >= 2")
    if v_points > 1 and a == b:
        raise ConfigError("v_points > 1 needs a < b")

    num = dict(cp["numerics"]) if cp.has_section("numerics") else {}
    try:
        quad = QuadratureSpec(
            order=_int(num.get("order", "16"), "order"),
            atol=_float(num.get("atol", "1e-12"), "atol"),
            rtol=_float(num.get("rtol", "1e-10"), "rtol"),
            max_depth=_int(num.get("max_depth", "40"), "max_depth"),
        )
    except MMRLError as exc:
        raise ConfigError(str(exc)) from None

    out_dir = cp["output"].get("dir") if cp.has_section("output") else None
    return RunConfig(
        mode, alpha, hurst, seed, replicas, J, j_ref, levels, engine, zeta,
        _int(run["samples"], "samples"), _int(run["tail_samples"], "tail_samples"),
        _int(run["moment_samples"], "moment_samples"), _float(run["gamma"], "gamma"),
        u_points, (a, b), v_points, t_points, quad, out_dir, defaults,
    )


# ---------------------------------------------------------------------------
# running


def _header(cfg: RunConfig) -> dict:
    head = {"mode": cfg.mode, "alpha": cfg.alpha.describe()}
    if cfg.hurst is not None:
        head["hurst"] = cfg.hurst.describe()
    head["config_sha256"] = cfg.digest()
    head["defaults"] = ";".join(cfg.defaults) or "none"
    return head


def _guard(level: int) -> None:
    if level > SHEET_GUARD:
        raise ResourceError(f"level {level} exceeds the sheet guard {SHEET_GUARD}")


def run_validation(cfg: RunConfig, threads: int = 1) -> ValidationReport:
    """Default check suite on the configured alpha and H."""
    alpha, seed = cfg.alpha, cfg.seed
    report = ValidationReport()
    xi = np.linspace(-5.0, 5.0, 21)
    p = KernelPoint(1.0, cfg.hurst.h_min)
    fs = [indicator(0.0, 1.0), haar_integrand(0, 0), kernel_integrand(p, alpha)]
    for r in check_ecf_suite(fs, alpha, xi, cfg.samples, max(cfg.J, 12), seed, threads):
        report.add(r)
    tail_J = 8 if alpha.is_constant else max(cfg.J, 12)
    report.add(check_tail(indicator(0.0, 1.0), alpha, np.geomspace(2.0, 1000.0, 60), cfg.tail_samples,
                          tail_J, seed + 1, threads))
    gamma = min(cfg.gamma, 0.8 * alpha.alpha_min)
    report.add(check_moment(indicator(0.0, 0.5), alpha, gamma, cfg.moment_samples, 10, seed + 2,
                            threads=threads))
    report.add(check_martingale_bound(alpha, cfg.zeta, 10, (1000, 10000), seed + 3, threads))
    grid = FieldGrid.make(np.linspace(0.0, 1.0, cfg.u_points), [cfg.hurst.h_min])
    study = convergence_study(alpha, grid, cfg.hurst.h_min, range(4, 11), 14, 20, seed + 4, cfg.zeta,
                              threads=threads)
    report.add(check_rate(study, cfg.hurst.h_min, alpha.holder_exponent, alpha.alpha_min))
    if alpha.is_constant:
        report.add(check_ks(alpha, cfg.hurst, 1.0, 2000, 12, seed + 5, threads))
    lemma = lemma_bound_check(alpha, cfg.hurst.h_min, range(0, 9), [0.25, 0.5, 0.77, 1.0],
                              [cfg.hurst.h_min, cfg.hurst.h_max], cfg.quadrature)
    for name, attr in lemma.STATISTICS.items():
        g = lemma.growth(attr)
        report.add(CheckResult(f"lemma[{name}]", g, lemma.growth_limit, g <= lemma.growth_limit, 0, (),
                               f"j=0..{lemma.j_values[-1]} fit_level={lemma.fit_level}"))
    return report


def _write(path: Path, text: str, written: dict) -> None:
    data = text.encode()
    path.write_bytes(data)
    written[path.name] = hashlib.sha256(data).hexdigest()


def _csv_text(obj, header) -> str:
    import io

    buf = io.StringIO()
    obj.write_csv(buf, header)
    return buf.getvalue()


def run(cfg: RunConfig, output: Path, threads: int = 1, output_source: str = "flag") -> int:
    output.mkdir(parents=True, exist_ok=True)
    head = _header(cfg)
    written: dict[str, str] = {}
    status = 0
    failing: list[str] = []

    if cfg.mode == "simulate-path":
        _guard(cfg.J)
        for path in simulate_paths(cfg.alpha, cfg.hurst, cfg.times(), cfg.J, cfg.seed,
                                   range(cfg.replicas), cfg.engine, threads):
            _write(output / f"path_{cfg.seed}_{path.replica_index}.csv", _csv_text(path, head), written)
    elif cfg.mode == "simulate-field":
        _guard(cfg.J)
        for fs in simulate_fields(cfg.alpha, cfg.grid(), cfg.J, cfg.seed, range(cfg.replicas),
                                  cfg.engine, threads):
            _write(output / f"field_{cfg.seed}_{fs.replica_index}.csv", _csv_text(fs, head), written)
    elif cfg.mode == "convergence-study":
        _guard(cfg.j_ref)
        study = convergence_study(cfg.alpha, cfg.grid(), cfg.v_range[0], cfg.levels, cfg.j_ref,
                                  cfg.replicas, cfg.seed, cfg.zeta, threads=threads)
        _write(output / "convergence.csv", _csv_text(study, head), written)
    elif cfg.mode == "export-coefficients":
        _guard(cfg.J)
        import io

        buf = io.StringIO()
        for k, v in head.items():
            buf.write(f"# {k}={v}\n")
        buf.write(f"# J={cfg.J}\n")
        write_coefficients_csv(buf, coefficient_rows(cfg.grid().points(), cfg.alpha, cfg.J))
        _write(output / "coefficients.csv", buf.getvalue(), written)
    elif cfg.mode == "validate":
        report = run_validation(cfg, threads)
        lines = "".join(f"# {k}={v}\n" for k, v in head.items())
        _write(output / "report.txt", lines + report.to_text(), written)
        _write(output / "report.csv", lines + report.to_csv(), written)
        failing = report.failing()
        status = 0 if report.passed else 1

    manifest = {
        "config_sha256": cfg.digest(),
        "config": cfg.semantic(),
        "defaults_applied": cfg.defaults,
        "seeds": [cfg.seed],
        "version": __version__,
        "backend": BACKEND,
        "output_dir_source": output_source,
        "files": written,
        "status": status,
        "failing_checks": failing,
    }
    (output / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmrl", description="Simulate multistable Riemann-Liouville fields and paths.")
    p.add_argument("--config", required=True, help="INI config file")
    p.add_argument("--output", help=f"output directory (default: [output] dir, ${OUTPUT_ENV}, or ./mmrl-out)")
    p.add_argument("--seed", type=int, help="override run.seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads (does not change output)")
    p.add_argument("--mode", choices=MODES, help="override run.mode")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text()
        cfg = parse_config(text, {"seed": args.seed, "mode": args.mode})
        if args.output:
            output, source = Path(args.output), "flag"
        elif cfg.output_dir:
            output, source = Path(cfg.output_dir), "config"
        elif os.environ.get(OUTPUT_ENV):
            output, source = Path(os.environ[OUTPUT_ENV]), f"env {OUTPUT_ENV}={os.environ[OUTPUT_ENV]}"
        else:
            output, source = Path("mmrl-out"), "default ./mmrl-out"
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        status = run(cfg, output, args.threads, source)
    except (MMRLError, OSError) as exc:
        print(f"mmrl: error: {exc}", file=sys.stderr)
        return 2
    if status:
        failing = json.loads((output / "manifest.json").read_text())["failing_checks"]
        print("mmrl: failing checks: " + ", ".join(failing), file=sys.stderr)
    else:
        print(f"mmrl: wrote {output}")
    return status


if __name__ == "__main__":
    sys.exit(main())
