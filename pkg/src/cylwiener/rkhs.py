"""Reproducing kernel Hilbert space of a covariance operator.

At finite rank H_Q is the positive eigenspace of Q with the inner product
making ``embed = S sqrt(Lambda)`` an isometry onto range(Q).  The columns of
``embed`` are the images i_Q e_k of a canonical orthonormal basis of H_Q, so
Q = embed @ embed.T and i_Q* f = embed.T @ f.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cylmeasure import PSD_TOL, CovOperator
from .errors import InputError
from .stat import MCConfig, StatReport, StatEntry, PASS, FAIL, exact_entry

DEFAULT_EIG_TOL = 1e-12
FACTOR_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class RkhsFactor:
    embed: np.ndarray        # dim x rank, column k = i_Q e_k
    rank: int
    eig_tol: float
    spectrum: np.ndarray     # retained eigenvalues, decreasing

    @property
    def dim(self) -> int:
        return self.embed.shape[0]

    @property
    def covariance(self) -> np.ndarray:
        return self.embed @ self.embed.T

    def rotated(self, rotation: np.ndarray) -> "RkhsFactor":
        """Factor for the basis f_l = sum_k R[l, k] e_k of H_Q."""
        R = np.asarray(rotation, dtype=float)
        return RkhsFactor(self.embed @ R.T, self.rank, self.eig_tol, self.spectrum)


def _as_cov(Q) -> CovOperator:
    return Q if isinstance(Q, CovOperator) else CovOperator.from_matrix(Q)


def build_rkhs(Q, eig_tol: float = DEFAULT_EIG_TOL) -> RkhsFactor:
    """Factor Q = i_Q i_Q* through its RKHS by symmetric eigendecomposition.

    Eigenvalues at or below ``eig_tol * lambda_max`` span the kernel of Q and
    are dropped.  Columns come in decreasing eigenvalue order and each
    eigenvector is signed so its first nonzero coordinate is positive.
    """
    cov = _as_cov(Q)
    n = cov.dim
    if cov.is_diagonal:
        lam = np.array(cov.spectrum, dtype=float)
        vec = np.eye(n)
    else:
        lam, vec = np.linalg.eigh(cov.matrix)
    if lam.size and lam.min() < -PSD_TOL * max(lam.max(), 0.0) and lam.min() < 0:
        raise InputError(f"covariance is not PSD: eigenvalue {lam.min():.6g} (largest {lam.max():.6g})")
    lam_max = float(lam.max()) if lam.size else 0.0
    if lam_max <= 0.0:
        embed = np.zeros((n, 0))
        embed.setflags(write=False)
        return RkhsFactor(embed, 0, eig_tol, np.zeros(0))
    # stable sort so equal eigenvalues keep coordinate order (bit-determinism)
    order = np.argsort(-lam, kind="stable")
    keep = order[lam[order] > eig_tol * lam_max]
    lam = lam[keep]
    vec = vec[:, keep]
    mag = np.abs(vec)
    first = np.argmax(mag > 1e-14 * mag.max(axis=0), axis=0)
    signs = np.sign(vec[first, np.arange(vec.shape[1])])
    signs[signs == 0] = 1.0
    embed = np.ascontiguousarray(vec * signs * np.sqrt(lam))
    embed.setflags(write=False)
    lam.setflags(write=False)
    return RkhsFactor(embed, int(lam.size), eig_tol, lam)


def adjoint_embed(rk: RkhsFactor, f) -> np.ndarray:
    """h_f = i_Q* f in H_Q coordinates; accepts one functional or a stack."""
    f = np.asarray(f, dtype=float)
    if f.shape[-1] != rk.dim:
        raise InputError(f"functional has {f.shape[-1]} coordinates, factor dimension is {rk.dim}")
    return f @ rk.embed


def factor_residual(rk: RkhsFactor, Q) -> float:
    cov = _as_cov(Q)
    return float(np.max(np.abs(rk.covariance - cov.matrix))) if cov.dim else 0.0


def sample_pushforward(rk: RkhsFactor, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draws of i_Q g with g standard Gaussian on H_Q; shape (n, dim)."""
    return rng.standard_normal((n, rk.rank)) @ rk.embed.T


def rkhs_property_suite(rk: RkhsFactor, Q, mc: MCConfig | None = None, n_probe: int = 64) -> StatReport:
    """Finite-rank checks of continuity, factorization, density and injectivity."""
    mc = mc or MCConfig()
    cov = _as_cov(Q)
    rng = np.random.default_rng(mc.seed)
    scale = max(1.0, cov.max_abs)
    report = StatReport()
    if rk.rank == 0:
        resid = factor_residual(rk, cov)
        for name in ("continuity", "factorization", "dense_range", "injective"):
            report.add(StatEntry(f"rkhs.{name}", resid if name == "factorization" else None, 0.0, None,
                                 PASS if resid <= FACTOR_TOL * scale else FAIL,
                                 {"anchor": "RKHS properties", "degenerate": True, "rank": 0}))
        return report

    # (a) ||i_Q h|| <= ||Q||^{1/2} ||h||
    h = rng.standard_normal((n_probe, rk.rank))
    ratios = np.linalg.norm(h @ rk.embed.T, axis=1) / np.linalg.norm(h, axis=1)
    bound = math.sqrt(float(rk.spectrum[0]))
    worst = float(ratios.max())
    report.add(StatEntry("rkhs.continuity", worst, bound, None,
                         PASS if worst <= bound * (1 + 1e-12) else FAIL,
                         {"anchor": "RKHS (a) continuous inclusion", "rule": "estimate <= target",
                          "probes": n_probe}))
    # (b) Q = i_Q i_Q*
    report.add(exact_entry("rkhs.factorization", factor_residual(rk, cov), 0.0, FACTOR_TOL * scale,
                           "RKHS (b) Q = i_Q i_Q*"))
    # (c) i_Q* has dense range: images of random functionals span H_Q
    fs = rng.standard_normal((max(n_probe, 2 * rk.dim), rk.dim))
    hs = adjoint_embed(rk, fs)
    sv = np.linalg.svd(hs, compute_uv=False)
    span = int(np.sum(sv > sv[0] * 1e-10))
    report.add(StatEntry("rkhs.dense_range", float(span), float(rk.rank), None,
                         PASS if span == rk.rank else FAIL,
                         {"anchor": "RKHS (c) range of i_Q* dense", "rule": "rank equality"}))
    # (d) i_Q injective: embed has full column rank
    smin = float(np.linalg.svd(rk.embed, compute_uv=False).min())
    cutoff = math.sqrt(rk.eig_tol * float(rk.spectrum[0]))
    report.add(StatEntry("rkhs.injective", smin, cutoff, None, PASS if smin > cutoff else FAIL,
                         {"anchor": "RKHS (d) i_Q injective", "rule": "estimate > target"}))
    return report
