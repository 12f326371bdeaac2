"""Centred Gaussian cylindrical measures in coordinates.

A centred Gaussian cylindrical measure is fixed by its covariance operator Q:
phi(u*) = exp(-1/2 <Q u*, u*>), and the image under finitely many functionals
u_1*, ..., u_n* is the centred normal law on R^n with Gram matrix
<Q u_i*, u_j*>.

Normalisation: phi(0) = 1 (a characteristic function of a probability
measure).  Some texts misprint this as phi(0) = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .errors import ConfigError, InputError
from .space import CylinderSet, SpaceSpec, as_functionals
from .stat import MCConfig, StatReport, estimator_entry

SYM_TOL = 1e-12
PSD_TOL = 1e-10


def _power(alpha: float, n: int) -> np.ndarray:
    return np.arange(1, n + 1, dtype=float) ** (-float(alpha))


def _geometric(rho: float, n: int) -> np.ndarray:
    return float(rho) ** np.arange(1, n + 1, dtype=float)


@dataclass(frozen=True, eq=False)
class CovOperator:
    """Symmetric positive semidefinite covariance Q: U* -> U.

    Either a dense matrix or a diagonal spectral family.  For diagonal
    operators ``spectrum`` holds the eigenvalues lambda_k along the coordinate
    axes and ``formula`` describes how they were generated.
    """

    matrix: np.ndarray
    spectrum: np.ndarray | None = None
    formula: dict = field(default_factory=dict)

    def __post_init__(self):
        q = np.array(self.matrix, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise InputError(f"covariance must be a square matrix, got shape {q.shape}")
        if not np.all(np.isfinite(q)):
            raise InputError("covariance has non-finite entries")
        scale = float(np.max(np.abs(q))) if q.size else 0.0
        asym = float(np.max(np.abs(q - q.T))) if q.size else 0.0
        if asym > SYM_TOL * scale:
            raise InputError(f"covariance is not symmetric: max|Q - Q^T| = {asym:.3g}")
        if self.spectrum is None:
            eig = np.linalg.eigvalsh(q)
        else:
            eig = np.array(self.spectrum, dtype=float)
        if eig.size and eig.min() < -PSD_TOL * max(eig.max(), 0.0) and eig.min() < 0:
            raise InputError(f"covariance is not positive semidefinite: eigenvalue {eig.min():.6g} "
                             f"(largest {eig.max():.6g})")
        q.setflags(write=False)
        object.__setattr__(self, "matrix", q)
        if self.spectrum is not None:
            s = np.array(self.spectrum, dtype=float)
            s.setflags(write=False)
            object.__setattr__(self, "spectrum", s)

    @classmethod
    def from_matrix(cls, q) -> "CovOperator":
        return cls(np.asarray(q, dtype=float))

    @classmethod
    def diagonal(cls, values, formula: dict | None = None) -> "CovOperator":
        v = np.asarray(values, dtype=float).reshape(-1)
        return cls(np.diag(v), spectrum=v, formula=formula or {"kind": "explicit", "values": v.tolist()})

    @classmethod
    def power(cls, alpha: float, n: int) -> "CovOperator":
        """lambda_k = k^(-alpha), k = 1..n."""
        return cls.diagonal(_power(alpha, n), {"kind": "power", "alpha": float(alpha), "n": int(n)})

    @classmethod
    def geometric(cls, rho: float, n: int) -> "CovOperator":
        """lambda_k = rho^k, k = 1..n."""
        if not 0 <= rho:
            raise ConfigError("geometric ratio must be nonnegative")
        return cls.diagonal(_geometric(rho, n), {"kind": "geometric", "rho": float(rho), "n": int(n)})

    @classmethod
    def identity(cls, n: int) -> "CovOperator":
        return cls.power(0.0, n)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return self.spectrum is not None

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.matrix))) if self.matrix.size else 0.0

    def apply(self, f) -> np.ndarray:
        return self.matrix @ np.asarray(f, dtype=float)

    def quad(self, f, g=None) -> float:
        f = np.asarray(f, dtype=float)
        g = f if g is None else np.asarray(g, dtype=float)
        return float(f @ self.matrix @ g)


@dataclass(frozen=True)
class GaussCylMeasure:
    space: SpaceSpec
    cov: CovOperator

    def __post_init__(self):
        if self.cov.dim != self.space.dim:
            raise InputError(f"covariance dimension {self.cov.dim} != space dimension {self.space.dim}")


def _check_dim(m: GaussCylMeasure, f) -> np.ndarray:
    f = np.asarray(f, dtype=float).reshape(-1)
    if f.size != m.space.dim:
        raise InputError(f"functional has {f.size} coordinates, space dimension is {m.space.dim}")
    return f


def char_function(m: GaussCylMeasure, f) -> complex:
    f = _check_dim(m, f)
    return complex(math.exp(-0.5 * m.cov.quad(f)), 0.0)


def image_covariance(m: GaussCylMeasure, fs) -> np.ndarray:
    """Gram matrix <Q u_i*, u_j*> of the image measure on R^n."""
    F = as_functionals(fs, m.space.dim)
    G = F @ m.cov.matrix @ F.T
    return 0.5 * (G + G.T)


def gram_factor(G: np.ndarray) -> np.ndarray:
    """Left factor L with L L^T = G for a PSD matrix, rank-deficient allowed."""
    lam, vec = np.linalg.eigh(G)
    lam = np.clip(lam, 0.0, None)
    return vec * np.sqrt(lam)


@dataclass(frozen=True)
class ProbabilityEstimate:
    estimate: float
    se: float
    n_samples: int
    method: str


def cylinder_probability(m: GaussCylMeasure, z: CylinderSet, mc: MCConfig | None = None,
                         chunk: int = 100_000) -> ProbabilityEstimate:
    """Mass of a cylinder set under the image Gaussian.

    One functional: exact normal-CDF difference.  Several: Monte Carlo with
    a factor of the (possibly singular) Gram matrix.
    """
    if z.dim != m.space.dim:
        raise InputError(f"cylinder functionals have dimension {z.dim}, space {m.space.dim}")
    G = image_covariance(m, z.functionals)
    if z.n == 1:
        sd = math.sqrt(max(G[0, 0], 0.0))
        lo, hi = float(z.lower[0]), float(z.upper[0])
        if sd == 0.0:
            p = float(z.contains_image(np.zeros(1)))
        else:
            nd = NormalDist(0.0, sd)
            p = (nd.cdf(hi) if math.isfinite(hi) else float(hi > 0)) - \
                (nd.cdf(lo) if math.isfinite(lo) else float(lo > 0))
        return ProbabilityEstimate(p, 0.0, 0, "analytic")
    mc = mc or MCConfig()
    if mc.n_samples < 1:
        raise ConfigError("Monte Carlo path needs at least one sample")
    L = gram_factor(G)
    rng = np.random.default_rng(mc.seed)
    hits = 0
    left = mc.n_samples
    while left:
        k = min(chunk, left)
        x = rng.standard_normal((k, L.shape[1])) @ L.T
        hits += int(np.count_nonzero(z.contains_image(x)))
        left -= k
    p = hits / mc.n_samples
    return ProbabilityEstimate(p, math.sqrt(p * (1 - p) / mc.n_samples), mc.n_samples, "monte-carlo")


def empirical_char_check(samples, m: GaussCylMeasure, fs, mc: MCConfig | None = None,
                         allowance: float = 1e-3, anchor: str = "char. function") -> StatReport:
    """Compare empirical E exp(i X_j) with exp(-1/2 <Q f_j, f_j>).

    ``samples[:, j]`` holds draws of the pairing with ``fs[j]``.  Each entry
    reports the modulus deviation with the bound se = 1/sqrt(n) (|e^{ix}| = 1).
    """
    F = as_functionals(fs, m.space.dim)
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] == 0:
        raise InputError("empirical_char_check needs at least one sample")
    if x.shape[1] != F.shape[0]:
        raise InputError(f"{x.shape[1]} sample columns for {F.shape[0]} functionals")
    n = x.shape[0]
    phi_hat = np.mean(np.exp(1j * x), axis=0)
    report = StatReport()
    for j, f in enumerate(F):
        dev = abs(phi_hat[j] - char_function(m, f))
        report.add(estimator_entry(f"char_function[{j}]", dev, 0.0, 1.0 / math.sqrt(n), anchor, mc,
                                   allowance=allowance, phi_hat=phi_hat[j].real, phi_hat_imag=phi_hat[j].imag,
                                   phi=char_function(m, f).real, n=n))
    return report
