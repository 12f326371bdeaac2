"""Command-line runner for configuration-driven experiments.

    cylwiener simulate  --config exp.json [--seed N] [--paths N] [--out DIR] [--serial]
    cylwiener integrate --config exp.json ...
    cylwiener check     --config exp.json ...

Exit codes: 0 all checks pass, 1 a check failed, 2 invalid configuration,
3 inconclusive radonification verdict.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import dumps
from .cylmeasure import CovOperator, GaussCylMeasure, empirical_char_check
from .errors import ConfigError, InputError
from .integrate import (Integrand, basis_independence_check, covariance_check, hilbert_agreement_check,
                        induced_covariance, isometry_check, ito_integral, martingale_check)
from .radon import (CONVERGING, DEFAULT_LEVELS, DIVERGING, INCONCLUSIVE, NOT_RADONIFYING, RADONIFYING,
                    SpectralFamily, extension_verdict, hs_check, mc_partial_sum_check)
from .rkhs import build_rkhs, rkhs_property_suite, sample_pushforward
from .simulate import (TimeGrid, eval_cyl_wiener, eval_vec_wiener, gen_drivers, inject_drift,
                       wiener_property_suite)
from .space import SpaceSpec, as_functionals
from .stat import MCConfig, StatReport, StatEntry, PASS, FAIL, exact_entry

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INCONCLUSIVE = 0, 1, 2, 3

CHECKS = {
    "simulate": ("wiener_properties", "rkhs_properties", "pushforward", "vector_consistency"),
    "integrate": ("isometry", "basis_independence", "martingale", "induced_covariance",
                  "hilbert_agreement"),
    "check": ("hs_check", "mc_partial_sum", "extension"),
}
DEFAULT_CHECKS = {
    "simulate": ("wiener_properties",),
    "integrate": ("isometry", "basis_independence", "martingale", "induced_covariance"),
    "check": ("hs_check", "extension"),
}
FORMATS = ("csv", "json")


class _Field:
    """Prefixes ConfigError messages with the offending config field."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, typ, exc, tb):
        if typ is not None and issubclass(typ, (ConfigError, InputError, KeyError, TypeError, ValueError)):
            msg = f"missing key {exc}" if typ is KeyError else str(exc)
            raise ConfigError(f"field '{self.name}': {msg}") from None
        return False


def load_config(path) -> dict:
    text = Path(path).read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return cfg


def parse_space(spec) -> SpaceSpec:
    if not isinstance(spec, dict):
        raise ConfigError("expected an object with 'dim'")
    return SpaceSpec(spec["dim"], spec.get("norm", 2.0), spec.get("kind", "finite"), spec.get("model"))


def parse_covariance(spec, dim: int) -> CovOperator:
    if not isinstance(spec, dict):
        raise ConfigError("expected an object")
    n = int(spec.get("n", dim))
    if "matrix" in spec:
        cov = CovOperator.from_matrix(np.asarray(spec["matrix"], dtype=float))
    elif "diagonal" in spec:
        cov = CovOperator.diagonal(spec["diagonal"])
    elif "explicit" in spec:
        cov = CovOperator.diagonal(spec["explicit"])
    elif "power" in spec:
        cov = CovOperator.power(float(spec["power"]), n)
    elif "geometric" in spec:
        cov = CovOperator.geometric(float(spec["geometric"]), n)
    elif "identity" in spec:
        cov = CovOperator.identity(n)
    else:
        raise ConfigError("one of matrix, diagonal, explicit, power, geometric, identity is required")
    if cov.dim != dim:
        raise ConfigError(f"covariance dimension {cov.dim} does not match space dimension {dim}")
    return cov


def config_hash(cfg: dict) -> str:
    """Digest of the experiment definition; where results are written is not part of it."""
    body = {k: v for k, v in cfg.items() if k != "output"}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()[:16]


class Experiment:
    """Validated configuration; all dimension checks happen here, before sampling."""

    def __init__(self, cfg: dict, command: str):
        self.cfg = cfg
        self.command = command
        with _Field("space"):
            self.space = parse_space(cfg["space"])
        with _Field("target_space"):
            self.target = parse_space(cfg["target_space"]) if "target_space" in cfg else self.space
        with _Field("covariance"):
            self.cov = parse_covariance(cfg["covariance"], self.space.dim)
        with _Field("paths"):
            self.paths = int(cfg.get("paths", 1000))
            if self.paths < 1:
                raise ConfigError("must be positive")
        with _Field("seed"):
            self.seed = int(cfg.get("seed", 0))
        with _Field("checks"):
            checks = cfg.get("checks", list(DEFAULT_CHECKS[command]))
            unknown = [c for c in checks if c not in CHECKS[command]]
            if unknown:
                raise ConfigError(f"unknown checks {unknown} for '{command}' (known: {list(CHECKS[command])})")
            self.checks = list(checks)
            if command == "check" and not self.space.is_hilbert:
                # Banach targets only have the statistical route
                self.checks = ["mc_partial_sum"]
        with _Field("output"):
            out = cfg.get("output", {})
            self.out_dir = Path(out.get("directory", "out"))
            self.formats = list(out.get("formats", ["json"]))
            bad = [f for f in self.formats if f not in FORMATS]
            if bad:
                raise ConfigError(f"unknown formats {bad}")
        with _Field("fixture"):
            self.drift = float(cfg.get("fixture", {}).get("drift", 0.0))
        if command in ("simulate", "integrate"):
            with _Field("grid"):
                self.grid = TimeGrid(float(cfg["grid"]["T"]), int(cfg["grid"]["steps"]))
        if command == "simulate":
            with _Field("functionals"):
                self.functionals = as_functionals(cfg["functionals"], self.space.dim)
        if command == "integrate":
            with _Field("functionals"):
                self.functionals = as_functionals(cfg["functionals"], self.target.dim)
            with _Field("integrand"):
                if "integrand" not in cfg:
                    raise ConfigError("required for 'integrate'")
                self.integrand = Integrand.from_spec(cfg["integrand"], self.target.dim, self.space.dim)
                self.integrand.on_grid(self.grid)
        if command == "check":
            with _Field("covariance"):
                if not self.cov.is_diagonal:
                    raise ConfigError("'check' needs a spectral (diagonal) covariance")
            with _Field("expect"):
                self.expect = cfg.get("expect")
                if self.expect not in (None, RADONIFYING, NOT_RADONIFYING):
                    raise ConfigError(f"must be '{RADONIFYING}' or '{NOT_RADONIFYING}'")
            with _Field("levels"):
                self.levels = [int(x) for x in cfg.get("levels", DEFAULT_LEVELS)]
                if "mc_partial_sum" in self.checks and self.levels[-1] > self.space.dim:
                    raise ConfigError(f"largest level {self.levels[-1]} exceeds space dimension {self.space.dim}")
            with _Field("p_moment"):
                self.p_moment = float(cfg.get("p_moment", 2.0))
                if not 1 <= self.p_moment <= 4:
                    raise ConfigError("must lie in [1, 4]")

    @property
    def mc(self) -> MCConfig:
        return MCConfig(n_samples=self.paths, seed=self.seed)


def _stamp(report: StatReport, cfg: dict, exp: "Experiment") -> StatReport:
    h = config_hash(cfg)
    for e in report:
        e.context = {**e.context, "config_hash": h, "seed": exp.seed, "paths": exp.paths}
    return report


def _drivers(exp: Experiment, rk, workers):
    if rk.rank == 0:
        raise ConfigError("covariance is zero; nothing to simulate")
    d = gen_drivers(rk.rank, exp.grid, exp.paths, exp.seed, workers=workers)
    return inject_drift(d, exp.drift) if exp.drift else d


def run_simulate(exp: Experiment, workers=None) -> tuple[StatReport, int]:
    rk = build_rkhs(exp.cov)
    drivers = _drivers(exp, rk, workers)
    paths = eval_cyl_wiener(rk, drivers, exp.functionals)
    report = StatReport()
    mc = exp.mc
    if "wiener_properties" in exp.checks:
        report.extend(wiener_property_suite(paths, exp.cov, mc))
    if "rkhs_properties" in exp.checks:
        report.extend(rkhs_property_suite(rk, exp.cov, mc))
    if "pushforward" in exp.checks:
        x = sample_pushforward(rk, exp.paths, np.random.default_rng(exp.seed)) @ exp.functionals.T
        report.extend(empirical_char_check(x, GaussCylMeasure(exp.space, exp.cov), exp.functionals, mc,
                                           anchor="mu = gamma o i_Q^-1"))
    if "vector_consistency" in exp.checks:
        vec = eval_vec_wiener(rk, drivers).values @ exp.functionals.T
        diff = float(np.max(np.abs(vec - np.transpose(paths.values, (0, 2, 1)))))
        scale = max(1.0, float(np.max(np.abs(paths.values))))
        report.add(exact_entry("vector_consistency.max_abs_diff", diff, 0.0, 1e-12 * scale,
                               "W(t)u* = <W(t), u*>"))
    if "csv" in exp.formats:
        exp.out_dir.mkdir(parents=True, exist_ok=True)
        dumps.write_paths_csv(exp.out_dir / "paths.csv", paths)
    return report, EXIT_OK if report.passed else EXIT_FAIL


def run_integrate(exp: Experiment, workers=None) -> tuple[StatReport, int]:
    rk = build_rkhs(exp.cov)
    drivers = _drivers(exp, rk, workers)
    phi = exp.integrand
    samples = ito_integral(phi, rk, drivers, exp.functionals, keep_path=True)
    mc = exp.mc
    report = StatReport()
    if "isometry" in exp.checks:
        report.extend(isometry_check(phi, rk, exp.functionals, samples, mc))
    if "basis_independence" in exp.checks:
        report.extend(basis_independence_check(phi, rk, drivers, exp.functionals, seed=exp.seed + 1))
    if "martingale" in exp.checks:
        report.extend(martingale_check(samples, mc))
    if "induced_covariance" in exp.checks:
        report.extend(covariance_check(samples, induced_covariance(phi, rk, exp.grid), mc))
    if "hilbert_agreement" in exp.checks:
        with _Field("checks.hilbert_agreement"):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                report.extend(hilbert_agreement_check(phi, rk, drivers, exp.functionals, exp.cov,
                                                      exp.space, mc))
    if "csv" in exp.formats:
        exp.out_dir.mkdir(parents=True, exist_ok=True)
        dumps.write_integral_csv(exp.out_dir / "integral.csv", samples)
    return report, EXIT_OK if report.passed else EXIT_FAIL


def run_check(exp: Experiment) -> tuple[StatReport, int]:
    fam = SpectralFamily.from_cov(exp.cov)
    mc = exp.mc
    report = StatReport()
    verdict = None
    if "hs_check" in exp.checks:
        v = hs_check(fam, exp.space)
        verdict = v.verdict
        report.add(StatEntry("radon.hs_check", v.hs_sum_partial, None, None, PASS,
                             {"anchor": "Hilbert-Schmidt criterion", "verdict": v.verdict, **v.evidence}))
    if "extension" in exp.checks:
        v = extension_verdict(exp.cov, exp.space, mc)
        verdict = verdict or v.verdict
        report.add(StatEntry("radon.extension", v.hs_sum_partial, None, None, PASS,
                             {"anchor": "induced iff i_Q gamma-radonifying", "verdict": v.verdict,
                              "induced": v.induced, **v.evidence}))
    if "mc_partial_sum" in exp.checks:
        diag = mc_partial_sum_check(fam, exp.space, exp.p_moment, exp.levels, mc)
        report.extend(diag.report)
        mapped = {CONVERGING: RADONIFYING, DIVERGING: NOT_RADONIFYING}.get(diag.verdict, INCONCLUSIVE)
        if verdict is None:
            verdict = mapped
        elif verdict != INCONCLUSIVE and mapped != INCONCLUSIVE:
            report.add(StatEntry("radon.analytic_vs_mc", None, None, None,
                                 PASS if mapped == verdict else FAIL,
                                 {"anchor": "analytic and Monte Carlo verdicts agree",
                                  "analytic": verdict, "mc": diag.verdict}))
    if exp.expect is not None:
        report.add(StatEntry("radon.expectation", None, None, None,
                             PASS if verdict in (exp.expect, INCONCLUSIVE) else FAIL,
                             {"anchor": "configured expectation", "expect": exp.expect, "verdict": verdict}))
    if verdict == INCONCLUSIVE:
        return report, EXIT_INCONCLUSIVE
    return report, EXIT_OK if report.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cylwiener", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("simulate", "simulate cylindrical Wiener paths and check their law"),
                        ("integrate", "cylindrical stochastic integral checks"),
                        ("check", "gamma-radonification / induced-process verdicts")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="JSON experiment file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--paths", type=int, help="override the number of paths")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--serial", action="store_true", help="single-threaded path generation")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.paths is not None:
            cfg["paths"] = args.paths
        if args.out is not None:
            cfg.setdefault("output", {})["directory"] = args.out
        exp = Experiment(cfg, args.command)
        workers = None if args.serial else min(4, os.cpu_count() or 1)
        if args.command == "simulate":
            report, code = run_simulate(exp, workers)
        elif args.command == "integrate":
            report, code = run_integrate(exp, workers)
        else:
            report, code = run_check(exp)
    except (ConfigError, InputError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _stamp(report, cfg, exp)
    if "json" in exp.formats:
        exp.out_dir.mkdir(parents=True, exist_ok=True)
        (exp.out_dir / "report.json").write_text(report.to_json() + "\n")
    print(report.to_text())
    return code


if __name__ == "__main__":
    sys.exit(main())
