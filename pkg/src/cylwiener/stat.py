"""Monte Carlo estimators, moment-based tests and the pass/fail rule.

Every statistical verdict in the package goes through :func:`within_tolerance`:
an estimate passes when ``|estimate - target| <= multiplier * se + allowance``
with ``multiplier`` taken from :class:`MCConfig` (default 4).  Distributional
tests pass when their p-value is at least ``MCConfig.significance``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ConfigError, InputError

PASS = "pass"
FAIL = "fail"

MIN_VERDICT_SAMPLES = 100


@dataclass(frozen=True)
class MCConfig:
    n_samples: int = 10_000
    seed: int = 0
    tolerance_multiplier: float = 4.0
    significance: float = 1e-3

    def __post_init__(self):
        if self.n_samples < 1:
            raise ConfigError(f"n_samples must be positive, got {self.n_samples}")
        if self.tolerance_multiplier <= 0:
            raise ConfigError("tolerance_multiplier must be positive")
        if not 0 < self.significance < 1:
            raise ConfigError("significance must lie in (0, 1)")

    def require_verdict_size(self, n: int | None = None):
        n = self.n_samples if n is None else n
        if n < MIN_VERDICT_SAMPLES:
            raise ConfigError(f"verdict-producing checks need at least {MIN_VERDICT_SAMPLES} samples, got {n}")


def within_tolerance(estimate, target, se, multiplier=4.0, allowance=0.0) -> bool:
    return bool(abs(estimate - target) <= multiplier * se + allowance)


# -- sufficient statistics -------------------------------------------------

@dataclass
class Moments:
    """Power sums of a scalar sample; merge chunks with ``+``."""

    count: int = 0
    s1: float = 0.0
    s2: float = 0.0
    s3: float = 0.0
    s4: float = 0.0

    @classmethod
    def of(cls, x) -> "Moments":
        x = np.asarray(x, dtype=float).reshape(-1)
        x2 = x * x
        return cls(x.size, float(x.sum()), float(x2.sum()), float((x2 * x).sum()), float((x2 * x2).sum()))

    def __add__(self, other: "Moments") -> "Moments":
        return Moments(self.count + other.count, self.s1 + other.s1, self.s2 + other.s2,
                       self.s3 + other.s3, self.s4 + other.s4)

    @property
    def mean(self) -> float:
        return self.s1 / self.count

    @property
    def var(self) -> float:
        n = self.count
        return max(self.s2 - self.s1 * self.s1 / n, 0.0) / (n - 1)

    def mean_se(self) -> tuple[float, float]:
        if self.count < 2:
            raise InputError("need at least 2 samples for a standard error")
        return self.mean, math.sqrt(self.var / self.count)


def mean_se(samples) -> tuple[float, float]:
    """Sample mean and standard error s/sqrt(n) with the unbiased variance."""
    x = np.asarray(samples, dtype=float).reshape(-1)
    if x.size < 2:
        raise InputError(f"need at least 2 samples, got {x.size}")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


@dataclass(frozen=True)
class NormalityResult:
    skew_z: float
    kurtosis_z: float
    statistic: float
    pvalue: float
    degenerate: bool = False


def _skew_z(g1: float, n: int) -> float:
    # D'Agostino (1970) transformation of the sample skewness
    y = g1 * math.sqrt((n + 1) * (n + 3) / (6.0 * (n - 2)))
    beta2 = 3.0 * (n * n + 27 * n - 70) * (n + 1) * (n + 3) / ((n - 2.0) * (n + 5) * (n + 7) * (n + 9))
    w2 = -1.0 + math.sqrt(2.0 * (beta2 - 1.0))
    delta = 1.0 / math.sqrt(0.5 * math.log(w2))
    alpha = math.sqrt(2.0 / (w2 - 1.0))
    r = y / alpha
    return delta * math.log(r + math.sqrt(r * r + 1.0))


def _kurtosis_z(b2: float, n: int) -> float:
    # Anscombe & Glynn (1983)
    mean = 3.0 * (n - 1) / (n + 1)
    var = 24.0 * n * (n - 2) * (n - 3) / ((n + 1.0) ** 2 * (n + 3) * (n + 5))
    x = (b2 - mean) / math.sqrt(var)
    sqrt_beta1 = (6.0 * (n * n - 5 * n + 2) / ((n + 7.0) * (n + 9))
                  * math.sqrt(6.0 * (n + 3) * (n + 5) / (n * (n - 2.0) * (n - 3))))
    a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + math.sqrt(1.0 + 4.0 / sqrt_beta1 ** 2))
    term1 = 1.0 - 2.0 / (9.0 * a)
    denom = 1.0 + x * math.sqrt(2.0 / (a - 4.0))
    if denom == 0:
        return math.inf
    term2 = math.copysign(abs((1.0 - 2.0 / a) / denom) ** (1.0 / 3.0), denom)
    return (term1 - term2) / math.sqrt(2.0 / (9.0 * a))


def normality_stat(samples) -> NormalityResult:
    """Omnibus skewness/kurtosis normality test (K^2, chi-square with 2 dof).

    Zero-variance input gives ``degenerate=True`` with NaN statistics.
    """
    x = np.asarray(samples, dtype=float).reshape(-1)
    n = x.size
    if n < 20:
        raise InputError(f"normality test needs at least 20 samples, got {n}")
    d = x - x.mean()
    m2 = float(np.mean(d * d))
    if m2 <= (np.finfo(float).eps * max(1.0, float(np.max(np.abs(x))))) ** 2:
        return NormalityResult(math.nan, math.nan, math.nan, math.nan, degenerate=True)
    m3 = float(np.mean(d ** 3))
    m4 = float(np.mean(d ** 4))
    zs = _skew_z(m3 / m2 ** 1.5, n)
    zk = _kurtosis_z(m4 / m2 ** 2, n)
    k2 = zs * zs + zk * zk
    return NormalityResult(zs, zk, k2, math.exp(-0.5 * k2))


@dataclass(frozen=True)
class CorrResult:
    r: float
    z: float
    pvalue: float
    degenerate: bool = False


def corr_test(x, y) -> CorrResult:
    """Pearson correlation with a Fisher-z test of r = 0."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise InputError("corr_test needs equal-length samples")
    n = x.size
    if n < 4:
        raise InputError("corr_test needs at least 4 samples")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return CorrResult(math.nan, math.nan, math.nan, degenerate=True)
    r = float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))
    z = math.atanh(r) * math.sqrt(n - 3) if abs(r) < 1 else math.copysign(math.inf, r)
    return CorrResult(r, z, 2.0 * _norm_sf(abs(z)))


# -- reports -----------------------------------------------------------------

def _clean(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.ndarray):
        return [_clean(a) for a in v.tolist()]
    if isinstance(v, dict):
        return {str(k): _clean(a) for k, a in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(a) for a in v]
    return v


@dataclass
class StatEntry:
    name: str
    estimate: float | None
    target: float | None
    se: float | None
    verdict: str
    context: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return {"name": self.name, "estimate": _clean(self.estimate), "target": _clean(self.target),
                "se": _clean(self.se), "verdict": self.verdict, "context": _clean(self.context)}


def estimator_entry(name, estimate, target, se, anchor, mc: MCConfig | None = None,
                    allowance=0.0, **context) -> StatEntry:
    mult = (mc or MCConfig()).tolerance_multiplier
    ok = within_tolerance(estimate, target, se, mult, allowance)
    ctx = {"anchor": anchor, "rule": "abs(estimate-target) <= multiplier*se + allowance",
           "multiplier": mult, "allowance": allowance, **context}
    return StatEntry(name, float(estimate), float(target), float(se), PASS if ok else FAIL, ctx)


def sample_entry(name, samples, target, anchor, mc: MCConfig | None = None, **context) -> StatEntry:
    est, se = mean_se(samples)
    return estimator_entry(name, est, target, se, anchor, mc, n=int(np.size(samples)), **context)


def exact_entry(name, value, target, tol, anchor, **context) -> StatEntry:
    """Deterministic identity checked to a fixed (machine-precision) tolerance."""
    ok = bool(abs(value - target) <= tol)
    return StatEntry(name, float(value), float(target), None, PASS if ok else FAIL,
                     {"anchor": anchor, "rule": "machine-precision", "tol": tol, **context})


def pvalue_entry(name, result, anchor, mc: MCConfig | None = None, **context) -> StatEntry:
    sig = (mc or MCConfig()).significance
    if getattr(result, "degenerate", False):
        return StatEntry(name, None, None, None, PASS,
                         {"anchor": anchor, "degenerate": True, "significance": sig, **context})
    stat = getattr(result, "statistic", None)
    if stat is None:
        stat = result.z
    ok = bool(result.pvalue >= sig)
    return StatEntry(name, float(stat), None, None, PASS if ok else FAIL,
                     {"anchor": anchor, "rule": "p >= significance", "pvalue": result.pvalue,
                      "significance": sig, **context})


@dataclass
class StatReport:
    entries: list[StatEntry] = field(default_factory=list)

    def add(self, entry: StatEntry) -> StatEntry:
        self.entries.append(entry)
        return entry

    def extend(self, other) -> "StatReport":
        self.entries.extend(other.entries if isinstance(other, StatReport) else other)
        return self

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, name: str) -> StatEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def failures(self) -> list[StatEntry]:
        return [e for e in self.entries if not e.passed]

    def to_json(self, indent=2) -> str:
        return json.dumps([e.to_dict() for e in self.entries], indent=indent, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "StatReport":
        return cls([StatEntry(**d) for d in json.loads(text)])

    def to_text(self) -> str:
        lines = []
        for e in self.entries:
            est = "-" if e.estimate is None else f"{e.estimate:.6g}"
            tgt = "-" if e.target is None else f"{e.target:.6g}"
            se = "" if e.se is None else f" se={e.se:.3g}"
            lines.append(f"[{e.verdict.upper():4}] {e.name}: estimate={est} target={tgt}{se}"
                         f"  ({e.context.get('anchor', '')})")
        return "\n".join(lines)
