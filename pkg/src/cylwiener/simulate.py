"""Driver Brownian motions and series realisations of Wiener processes.

With an RKHS factor ``rk`` (columns i_Q e_k) and independent scalar Brownian
motions B_k,

    W(t) u* = sum_k <i_Q e_k, u*> B_k(t)        (cylindrical)
    W(t)    = sum_k i_Q e_k B_k(t)              (U-valued)

Both sums are finite, so there is no truncation error in k.

Random streams: every (path, k) pair owns a Philox4x64 stream.  The key is
derived from ``seed`` through ``numpy.random.SeedSequence``; the counter's
two high words are set to ``(k, path)``, so streams are disjoint blocks and
the values for a pair do not depend on how paths are split across workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .cylmeasure import CovOperator, GaussCylMeasure, empirical_char_check
from .errors import ConfigError, InputError
from .rkhs import RkhsFactor
from .space import SpaceSpec, as_functionals
from .stat import (MCConfig, StatReport, corr_test, estimator_entry, normality_stat,
                   pvalue_entry)

MAX_DRIVER_BYTES = 2 * 1024 ** 3


@dataclass(frozen=True)
class TimeGrid:
    T: float
    steps: int

    def __post_init__(self):
        if not self.T > 0:
            raise ConfigError(f"horizon T must be positive, got {self.T}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ConfigError(f"steps must be a positive integer, got {self.steps}")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "steps", int(self.steps))

    @property
    def dt(self) -> float:
        return self.T / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    def index_of(self, t: float, tol: float = 1e-9) -> int:
        """Grid index of time ``t``; raises if ``t`` is not a grid point."""
        x = t / self.dt
        j = int(round(x))
        if abs(x - j) > tol * max(1.0, self.steps) or not 0 <= j <= self.steps:
            raise InputError(f"time {t} is not on the grid (T={self.T}, steps={self.steps})")
        return j


def stream_key(seed: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(2, np.uint64)


def stream_id(path: int, k: int) -> tuple[int, int]:
    """High words of the Philox counter for the (path, k) stream."""
    return (k, path)


def driver_stream(seed: int, path: int, k: int) -> np.random.Generator:
    hi, lo = stream_id(path, k)
    return np.random.Generator(np.random.Philox(key=stream_key(seed), counter=[0, 0, hi, lo]))


@dataclass(frozen=True, eq=False)
class DriverPaths:
    """Increments of independent Brownian motions, shape (paths, rank, steps)."""

    increments: np.ndarray
    grid: TimeGrid
    seed: int | None = None
    fixture: dict = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return self.increments.shape[0]

    @property
    def rank(self) -> int:
        return self.increments.shape[1]

    def values(self) -> np.ndarray:
        """B_k(t_j), shape (paths, rank, steps + 1), starting at 0."""
        out = np.zeros(self.increments.shape[:2] + (self.grid.steps + 1,))
        np.cumsum(self.increments, axis=2, out=out[:, :, 1:])
        return out

    def regenerate(self) -> "DriverPaths":
        if self.seed is None:
            raise InputError("driver paths carry no seed")
        return gen_drivers(self.rank, self.grid, self.n_paths, self.seed)


def _fill(out: np.ndarray, key: np.ndarray, paths: range, steps: int):
    rank = out.shape[1]
    for p in paths:
        for k in range(rank):
            bitgen = np.random.Philox(key=key, counter=[0, 0, k, p])
            out[p, k] = np.random.Generator(bitgen).standard_normal(steps)


def gen_drivers(rank: int, grid: TimeGrid, n_paths: int, seed: int, workers: int | None = None,
                max_bytes: int = MAX_DRIVER_BYTES) -> DriverPaths:
    """Seeded N(0, dt) increments for ``rank`` Brownian motions on ``grid``.

    ``workers`` > 1 fills path blocks concurrently; the result is
    bit-identical to the serial run because streams are per (path, k).
    """
    if rank < 1 or n_paths < 1:
        raise ConfigError(f"rank and n_paths must be >= 1 (got rank={rank}, n_paths={n_paths})")
    footprint = 8 * rank * n_paths * grid.steps
    if footprint > max_bytes:
        raise ConfigError(f"driver array needs {footprint} bytes ({n_paths} paths x {rank} x {grid.steps} steps), "
                          f"limit is {max_bytes}")
    out = np.empty((n_paths, rank, grid.steps))
    key = stream_key(seed)
    if workers and workers > 1:
        bounds = np.linspace(0, n_paths, workers + 1).astype(int)
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(lambda ab: _fill(out, key, range(*ab), grid.steps), zip(bounds[:-1], bounds[1:])))
    else:
        _fill(out, key, range(n_paths), grid.steps)
    out *= math.sqrt(grid.dt)
    return DriverPaths(out, grid, int(seed))


def inject_drift(drivers: DriverPaths, rate: float = 1.0) -> DriverPaths:
    """Test fixture: add ``rate * dt`` to every increment (breaks the Wiener law)."""
    return replace(drivers, increments=drivers.increments + rate * drivers.grid.dt,
                   fixture={**drivers.fixture, "drift": rate})


@dataclass(frozen=True, eq=False)
class CylPathEval:
    values: np.ndarray          # paths x functionals x (steps + 1)
    functionals: np.ndarray
    grid: TimeGrid
    seed: int | None = None


@dataclass(frozen=True, eq=False)
class VecPathEval:
    values: np.ndarray          # paths x (steps + 1) x dim
    grid: TimeGrid
    seed: int | None = None


def _check_rank(rk: RkhsFactor, drivers: DriverPaths):
    if drivers.rank != rk.rank:
        raise InputError(f"driver rank {drivers.rank} does not match RKHS rank {rk.rank}")


def eval_cyl_wiener(rk: RkhsFactor, drivers: DriverPaths, fs) -> CylPathEval:
    _check_rank(rk, drivers)
    F = as_functionals(fs, rk.dim)
    coef = F @ rk.embed                               # <i_Q e_k, u_i*>
    inc = np.einsum("ik,pkm->pim", coef, drivers.increments)
    vals = np.zeros(inc.shape[:2] + (drivers.grid.steps + 1,))
    np.cumsum(inc, axis=2, out=vals[:, :, 1:])
    return CylPathEval(vals, F, drivers.grid, drivers.seed)


def eval_vec_wiener(rk: RkhsFactor, drivers: DriverPaths) -> VecPathEval:
    _check_rank(rk, drivers)
    inc = np.einsum("dk,pkm->pmd", rk.embed, drivers.increments)
    vals = np.zeros((drivers.n_paths, drivers.grid.steps + 1, rk.dim))
    np.cumsum(inc, axis=1, out=vals[:, 1:, :])
    return VecPathEval(vals, drivers.grid, drivers.seed)


def _covariance_indices(steps: int) -> list[int]:
    return sorted({max(1, math.ceil(steps * i / 3)) for i in (1, 2, 3)})


def wiener_property_suite(paths: CylPathEval, Q, mc: MCConfig | None = None) -> StatReport:
    """Statistical checks that W(.)u* behaves as a cylindrical Wiener process.

    Covariance min(s, t) <Q u*, v*>, uncorrelated disjoint increments,
    Gaussian marginals, stationary increments, and the time-t marginal
    characteristic function exp(-t/2 <Q u*, u*>).
    """
    mc = mc or MCConfig()
    cov = Q if isinstance(Q, CovOperator) else CovOperator.from_matrix(Q)
    X = paths.values
    n, nf, _ = X.shape
    mc.require_verdict_size(n)
    grid = paths.grid
    t = grid.times
    F = paths.functionals
    G = F @ cov.matrix @ F.T
    report = StatReport()

    idx = _covariance_indices(grid.steps)
    for a in range(nf):
        for b in range(a, nf):
            for i in idx:
                for j in idx:
                    prod = X[:, a, i] * X[:, b, j]
                    est = prod.mean()
                    se = prod.std(ddof=1) / math.sqrt(n)
                    report.add(estimator_entry(f"wiener.cov[u{a},v{b},s={t[i]:.4g},t={t[j]:.4g}]", est,
                                               min(t[i], t[j]) * G[a, b], se,
                                               "Cov[W(s)u*, W(t)v*] = min(s,t) <Qu*,v*>", mc))

    if grid.steps >= 2:
        mid = grid.steps // 2
        for a in range(nf):
            for b in range(nf):
                res = corr_test(X[:, a, mid] - X[:, a, 0], X[:, b, -1] - X[:, b, mid])
                if res.degenerate:
                    report.add(pvalue_entry(f"wiener.indep_increments[u{a},v{b}]", res,
                                            "weakly independent increments", mc))
                else:
                    report.add(estimator_entry(f"wiener.indep_increments[u{a},v{b}]", res.r, 0.0,
                                               1.0 / math.sqrt(n - 3), "weakly independent increments", mc,
                                               z=res.z))

    for a in range(nf):
        report.add(pvalue_entry(f"wiener.normality[u{a},t={grid.T:.4g}]", normality_stat(X[:, a, -1]),
                                "Gaussian marginals", mc))

    h = max(1, grid.steps // 4)
    for a in range(nf):
        for s in range(0, grid.steps - h + 1, h):
            d = X[:, a, s + h] - X[:, a, s]
            sq = d * d
            report.add(estimator_entry(f"wiener.stationary[u{a},t={t[s]:.4g},h={h * grid.dt:.4g}]",
                                       sq.mean(), h * grid.dt * G[a, a], sq.std(ddof=1) / math.sqrt(n),
                                       "stationary increments", mc))

    space = SpaceSpec(cov.dim)
    scaled = GaussCylMeasure(space, CovOperator(cov.matrix * grid.T))
    char = empirical_char_check(X[:, :, -1], scaled, F, mc, allowance=0.0,
                                anchor="phi_{W(t)}(u*) = exp(-t/2 <Qu*,u*>)")
    for e in char:
        e.name = "wiener." + e.name
    report.extend(char)
    return report
