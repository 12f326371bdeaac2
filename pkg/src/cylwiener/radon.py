"""Gamma-radonification diagnostics for diagonal operators F e_k = sigma_k f_k.

For a Hilbert target, F is gamma-radonifying exactly when it is
Hilbert-Schmidt, i.e. sum sigma_k^2 = sum lambda_k < inf, and then
E||sum_k G_k F e_k||^2 = sum_k ||F e_k||^2.  Named spectra get a closed-form
verdict; explicit lists get tail diagnostics that may well say
"inconclusive".  Banach (p != 2) targets only get the Monte Carlo
partial-sum diagnostic.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .cylmeasure import CovOperator
from .errors import ConfigError, InputError
from .space import SpaceSpec, norms
from .stat import MCConfig, StatReport, StatEntry, PASS, estimator_entry

RADONIFYING = "radonifying"
NOT_RADONIFYING = "not-radonifying"
INCONCLUSIVE = "inconclusive"

CONVERGING = "converging"
DIVERGING = "diverging"

DEFAULT_LEVELS = (10, 100, 1000)


@dataclass(frozen=True)
class SpectralFamily:
    """lambda_k = sigma_k^2 for k = 1..truncation.

    ``kind`` is ``"power"`` (lambda_k = k^-alpha), ``"geometric"``
    (lambda_k = rho^k) or ``"explicit"`` (``values`` given).
    """

    kind: str
    param: float | None = None
    values: tuple[float, ...] | None = None
    truncation: int | None = None

    def __post_init__(self):
        if self.kind not in ("power", "geometric", "explicit"):
            raise ConfigError(f"unknown spectral formula {self.kind!r}")
        if self.kind == "explicit":
            if self.values is None or len(self.values) == 0:
                raise ConfigError("explicit spectrum needs a non-empty list of values")
            vals = tuple(float(v) for v in self.values)
            if min(vals) < 0:
                raise ConfigError("explicit spectrum has a negative eigenvalue")
            object.__setattr__(self, "values", vals)
            if self.truncation is None:
                object.__setattr__(self, "truncation", len(vals))
            elif self.truncation > len(vals):
                raise ConfigError("truncation exceeds the number of explicit values")
        else:
            if self.param is None:
                raise ConfigError(f"{self.kind} spectrum needs a parameter")
            if self.kind == "geometric" and not self.param >= 0:
                raise ConfigError("geometric ratio must be nonnegative")
            if self.truncation is None:
                object.__setattr__(self, "truncation", 1000)
        if self.truncation < 1:
            raise ConfigError("truncation must be at least 1")

    @classmethod
    def power(cls, alpha: float, truncation: int = 1000) -> "SpectralFamily":
        return cls("power", float(alpha), None, truncation)

    @classmethod
    def geometric(cls, rho: float, truncation: int = 1000) -> "SpectralFamily":
        return cls("geometric", float(rho), None, truncation)

    @classmethod
    def explicit(cls, values) -> "SpectralFamily":
        return cls("explicit", None, tuple(values))

    @classmethod
    def from_cov(cls, cov: CovOperator) -> "SpectralFamily":
        if not cov.is_diagonal:
            raise InputError("covariance is not diagonal; no spectral family")
        f = cov.formula or {}
        if f.get("kind") == "power":
            return cls.power(f["alpha"], cov.dim)
        if f.get("kind") == "geometric":
            return cls.geometric(f["rho"], cov.dim)
        return cls.explicit(cov.spectrum)

    def eigenvalues(self, n: int | None = None) -> np.ndarray:
        n = self.truncation if n is None else n
        if self.kind == "explicit":
            if n > len(self.values):
                raise ConfigError(f"explicit spectrum has only {len(self.values)} values, asked for {n}")
            return np.array(self.values[:n])
        k = np.arange(1, n + 1, dtype=float)
        if self.kind == "power":
            return k ** (-self.param)
        return self.param ** k

    def sigmas(self, n: int | None = None) -> np.ndarray:
        return np.sqrt(self.eigenvalues(n))

    def covariance(self, n: int | None = None) -> CovOperator:
        n = self.truncation if n is None else n
        if self.kind == "power":
            return CovOperator.power(self.param, n)
        if self.kind == "geometric":
            return CovOperator.geometric(self.param, n)
        return CovOperator.diagonal(self.eigenvalues(n))


@dataclass(frozen=True)
class RadonVerdict:
    hs_sum_partial: float
    verdict: str
    evidence: dict = field(default_factory=dict)

    @property
    def induced(self) -> bool:
        return self.verdict == RADONIFYING


def _explicit_tail(lam: np.ndarray) -> tuple[str, dict]:
    n = lam.size
    ev = {"criterion": "tail diagnostics on explicit values", "terms": n}
    if n < 8:
        ev["reason"] = "fewer than 8 terms"
        return INCONCLUSIVE, ev
    tail = lam[n // 2:]
    if np.all(tail == 0):
        ev["reason"] = "second half of the spectrum vanishes (finite rank)"
        return RADONIFYING, ev
    if np.any(tail == 0):
        ev["reason"] = "tail mixes zero and nonzero values"
        return INCONCLUSIVE, ev
    k = np.arange(n // 2 + 1, n + 1, dtype=float)
    slope, icpt = np.polyfit(np.log(k), np.log(tail), 1)
    fit = np.exp(icpt + slope * np.log(k))
    misfit = float(np.max(np.abs(np.log(tail / fit))))
    ratio = float(np.exp(np.mean(np.diff(np.log(tail)))))
    ev.update(power_exponent=float(-slope), power_misfit=misfit, mean_ratio=ratio)
    if ratio <= 0.9 and np.all(np.diff(tail) <= 0):
        ev["reason"] = "ratio test: successive ratios bounded below 1"
        return RADONIFYING, ev
    if misfit < 0.5:
        if -slope >= 1.5:
            ev["reason"] = "power-law tail with exponent > 1"
            return RADONIFYING, ev
        if -slope <= 0.5:
            ev["reason"] = "power-law tail with exponent <= 1"
            return NOT_RADONIFYING, ev
    ev["reason"] = "tail behaviour ambiguous at this truncation"
    return INCONCLUSIVE, ev


def hs_check(fam: SpectralFamily, space: SpaceSpec | None = None) -> RadonVerdict:
    """Hilbert-Schmidt verdict for F e_k = sigma_k f_k into a Hilbert space."""
    if space is not None and not space.is_hilbert:
        raise InputError(f"hs_check needs a Hilbert target (p = 2), got p = {space.p}; "
                         "use mc_partial_sum_check for Banach targets")
    lam = fam.eigenvalues()
    partial = float(math.fsum(lam))
    N = fam.truncation
    if fam.kind == "power":
        a = fam.param
        conv = a > 1
        ev = {"criterion": "p-series: sum k^-alpha converges iff alpha > 1", "alpha": a, "N": N}
        if conv:
            ev["tail_bound"] = N ** (1 - a) / (a - 1)
            ev["limit_bracket"] = [partial, partial + ev["tail_bound"]]
        return RadonVerdict(partial, RADONIFYING if conv else NOT_RADONIFYING, ev)
    if fam.kind == "geometric":
        r = fam.param
        conv = r < 1
        ev = {"criterion": "geometric series converges iff rho < 1", "rho": r, "N": N}
        if conv:
            ev["limit"] = r / (1 - r)
            ev["tail_bound"] = r ** (N + 1) / (1 - r)
        return RadonVerdict(partial, RADONIFYING if conv else NOT_RADONIFYING, ev)
    verdict, ev = _explicit_tail(lam)
    return RadonVerdict(partial, verdict, ev)


@dataclass
class PartialSumDiagnostic:
    levels: list[int]
    moments: list[float]
    moment_se: list[float]
    gaps: list[float]
    gap_se: list[float]
    increments: list[float]
    increment_se: list[float]
    hs_partial: list[float]
    p_moment: float
    verdict: str
    report: StatReport


def mc_partial_sum_check(fam: SpectralFamily, space: SpaceSpec, p_moment: float = 2.0,
                         levels=DEFAULT_LEVELS, mc: MCConfig | None = None,
                         chunk: int = 2000) -> PartialSumDiagnostic:
    """Empirical Cauchy diagnostic on m_N = E||S_N||^p, S_N = sum_{k<=N} G_k sigma_k f_k.

    Norms are taken in the coordinate p-norm of ``space``; levels above
    ``space.dim`` are refused.  Verdict "converging" needs the gaps
    E||S_{N_{j+1}} - S_{N_j}||^p to be non-increasing within noise and the
    last gap to sit clearly below the first; "diverging" needs every step
    m_{N_{j+1}} - m_{N_j} to be positive beyond noise.
    """
    mc = mc or MCConfig()
    levels = [int(n) for n in levels]
    if len(levels) < 3:
        raise ConfigError(f"need at least 3 levels, got {len(levels)}")
    if any(b <= a for a, b in zip(levels, levels[1:])) or levels[0] < 1:
        raise ConfigError("levels must be positive and strictly increasing")
    if not 1 <= p_moment <= 4:
        raise ConfigError(f"p_moment must lie in [1, 4], got {p_moment}")
    if levels[-1] > space.dim:
        raise ConfigError(f"level {levels[-1]} exceeds the truncation level {space.dim}")
    mc.require_verdict_size()
    sig = fam.sigmas(levels[-1])
    bounds = [0] + levels
    n = mc.n_samples
    norms_at = np.empty((n, len(levels)))
    gap_norms = np.empty((n, len(levels) - 1))
    seeds = np.random.SeedSequence(mc.seed).spawn((n + chunk - 1) // chunk)
    for c, ss in enumerate(seeds):
        lo = c * chunk
        hi = min(n, lo + chunk)
        g = np.random.default_rng(ss).standard_normal((hi - lo, levels[-1])) * sig
        # block norms combine to partial-sum norms because coordinates are disjoint
        if math.isinf(space.p):
            blocks = [np.max(np.abs(g[:, a:b]), axis=1) if b > a else np.zeros(hi - lo)
                      for a, b in zip(bounds, bounds[1:])]
            norms_at[lo:hi] = np.maximum.accumulate(np.stack(blocks, axis=1), axis=1)
        else:
            q = space.p
            blocks = [np.sum(np.abs(g[:, a:b]) ** q, axis=1) for a, b in zip(bounds, bounds[1:])]
            norms_at[lo:hi] = np.cumsum(np.stack(blocks, axis=1), axis=1) ** (1.0 / q)
        gap_norms[lo:hi] = np.stack([norms(g[:, a:b], space.p) for a, b in zip(levels, levels[1:])], axis=1)

    mom = norms_at ** p_moment
    gap = gap_norms ** p_moment
    mc_mult = mc.tolerance_multiplier
    m_est = mom.mean(axis=0)
    m_se = mom.std(axis=0, ddof=1) / math.sqrt(n)
    g_est = gap.mean(axis=0)
    g_se = gap.std(axis=0, ddof=1) / math.sqrt(n)
    inc = np.diff(mom, axis=1)
    i_est = inc.mean(axis=0)
    i_se = inc.std(axis=0, ddof=1) / math.sqrt(n)
    hs = [float(math.fsum(sig[:N] ** 2)) for N in levels]

    report = StatReport()
    anchor = "moment convergence of the Gaussian series"
    hilbert_second = space.is_hilbert and p_moment == 2
    for j, N in enumerate(levels):
        if hilbert_second:
            report.add(estimator_entry(f"partial_sum.moment[N={N}]", m_est[j], hs[j], m_se[j],
                                       "E||S_N||^2 = sum ||F e_k||^2", mc))
        else:
            report.add(StatEntry(f"partial_sum.moment[N={N}]", m_est[j], None, m_se[j], PASS,
                                 {"anchor": anchor, "rule": "informational"}))

    combined = [math.hypot(g_se[j], g_se[j - 1]) for j in range(1, len(g_se))]
    all_zero = bool(np.all(gap == 0))
    monotone = all(g_est[j] < g_est[j - 1] + mc_mult * combined[j - 1] for j in range(1, len(g_est)))
    shrinking = g_est[-1] < g_est[0] - mc_mult * math.hypot(g_se[0], g_se[-1])
    growing = all(i_est[j] > mc_mult * i_se[j] for j in range(len(i_est)))
    if all_zero or (monotone and shrinking):
        verdict = CONVERGING
    elif growing:
        verdict = DIVERGING
    else:
        verdict = INCONCLUSIVE
    report.add(StatEntry("partial_sum.verdict", None, None, None, PASS,
                         {"anchor": anchor, "verdict": verdict, "levels": levels,
                          "gaps": g_est.tolist(), "gap_se": g_se.tolist(),
                          "increments": i_est.tolist(), "increment_se": i_se.tolist(),
                          "p_moment": p_moment, "norm_exponent": space.p}))
    return PartialSumDiagnostic(levels, m_est.tolist(), m_se.tolist(), g_est.tolist(), g_se.tolist(),
                                i_est.tolist(), i_se.tolist(), hs, p_moment, verdict, report)


def extension_verdict(cov: CovOperator, space: SpaceSpec, mc: MCConfig | None = None,
                      levels=None) -> RadonVerdict:
    """Is the cylindrical Wiener process with covariance ``cov`` induced by a U-valued one?

    Hilbert sequence spaces with diagonal Q: exact Hilbert-Schmidt test on
    sigma_k = sqrt(lambda_k).  Anything else falls back to the Monte Carlo
    partial-sum diagnostic with a warning.
    """
    if cov.dim != space.dim:
        raise InputError(f"covariance dimension {cov.dim} != space dimension {space.dim}")
    if cov.is_diagonal and space.is_hilbert:
        v = hs_check(SpectralFamily.from_cov(cov), space)
        return RadonVerdict(v.hs_sum_partial, v.verdict, {**v.evidence, "route": "hilbert-schmidt"})
    warnings.warn("extension_verdict: non-diagonal covariance or non-Hilbert target; "
                  "using the Monte Carlo partial-sum diagnostic", stacklevel=2)
    if cov.is_diagonal:
        fam = SpectralFamily.from_cov(cov)
    else:
        fam = SpectralFamily.explicit(np.clip(np.sort(np.linalg.eigvalsh(cov.matrix))[::-1], 0, None))
        space = SpaceSpec(space.dim, 2.0, space.kind)
    if levels is None:
        top = space.dim
        levels = sorted({max(1, top // 100), max(2, top // 10), top})
    if len(levels) < 3:
        return RadonVerdict(float(np.sum(fam.eigenvalues())), INCONCLUSIVE,
                            {"route": "monte-carlo", "reason": "dimension too small for three levels"})
    diag = mc_partial_sum_check(fam, space, 2.0, levels, mc)
    mapped = {CONVERGING: RADONIFYING, DIVERGING: NOT_RADONIFYING}.get(diag.verdict, INCONCLUSIVE)
    return RadonVerdict(diag.hs_partial[-1], mapped,
                        {"route": "monte-carlo", "mc_verdict": diag.verdict, "levels": diag.levels})
