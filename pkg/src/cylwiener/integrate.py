"""Cylindrical stochastic integral for deterministic piecewise-constant integrands.

For Phi: [0, T] -> L(U, V) constant on grid-aligned pieces and v* in V*,

    I_t(Phi) v* = sum_k sum_j <Phi_j i_Q e_k, v*> (B_k(t_{j+1} ^ t) - B_k(t_j ^ t))

with Phi evaluated at the left endpoint of every step.  This is exact: the
rank is finite and the integrand is constant between grid points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cylmeasure import CovOperator
from .errors import ConfigError, InputError
from .radon import extension_verdict
from .rkhs import RkhsFactor
from .simulate import DriverPaths, TimeGrid, eval_vec_wiener
from .space import SpaceSpec, as_functionals
from .stat import MCConfig, StatReport, StatEntry, PASS, estimator_entry, exact_entry

IDENTITY_TOL = 1e-12
BASIS_TOL = 1e-9
AGREEMENT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Integrand:
    """Pieces ``(t_start, t_end, matrix)`` with matrices of shape (dim V, dim U)."""

    pieces: tuple

    def __post_init__(self):
        if not self.pieces:
            raise InputError("integrand needs at least one piece")
        cleaned = []
        for a, b, m in self.pieces:
            m = np.array(m, dtype=float)
            if m.ndim != 2:
                raise InputError(f"piece matrix must be 2-D, got shape {m.shape}")
            if not np.all(np.isfinite(m)):
                raise InputError("piece matrix has non-finite entries")
            if not b > a:
                raise InputError(f"empty or reversed piece [{a}, {b})")
            m.setflags(write=False)
            cleaned.append((float(a), float(b), m))
        shapes = {m.shape for _, _, m in cleaned}
        if len(shapes) != 1:
            raise InputError(f"piece matrices disagree in shape: {sorted(shapes)}")
        cleaned.sort(key=lambda p: p[0])
        object.__setattr__(self, "pieces", tuple(cleaned))

    @classmethod
    def constant(cls, matrix, T: float) -> "Integrand":
        return cls(((0.0, T, matrix),))

    @classmethod
    def from_spec(cls, spec, dim_v: int, dim_u: int) -> "Integrand":
        """Config form: list of ``{t_start, t_end, matrix}`` with row-major ``matrix``."""
        pieces = []
        for i, p in enumerate(spec):
            try:
                m = np.asarray(p["matrix"], dtype=float)
                a, b = float(p["t_start"]), float(p["t_end"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"integrand[{i}]: {exc}") from None
            if m.size != dim_v * dim_u:
                raise ConfigError(f"integrand[{i}].matrix has {m.size} entries, expected {dim_v}x{dim_u}")
            pieces.append((a, b, m.reshape(dim_v, dim_u)))
        return cls(tuple(pieces))

    @property
    def shape(self) -> tuple[int, int]:
        return self.pieces[0][2].shape

    def on_grid(self, grid: TimeGrid) -> np.ndarray:
        """Phi(t_j) for j = 0..steps-1, shape (steps, dim V, dim U).

        Raises if the pieces are not grid-aligned or do not partition [0, T].
        """
        out = np.empty((grid.steps,) + self.shape)
        pos = 0
        for a, b, m in self.pieces:
            ia, ib = grid.index_of(a), grid.index_of(b)
            if ia != pos:
                raise InputError(f"pieces do not partition [0, T]: gap or overlap at t={a}")
            out[ia:ib] = m
            pos = ib
        if pos != grid.steps:
            raise InputError(f"pieces end at t={self.pieces[-1][1]}, horizon is T={grid.T}")
        return out

    def scaled(self, c: float) -> "Integrand":
        return Integrand(tuple((a, b, c * m) for a, b, m in self.pieces))


def combine(a: float, phi1: Integrand, b: float, phi2: Integrand, grid: TimeGrid) -> Integrand:
    """a*Phi1 + b*Phi2 as a step-wise integrand on ``grid``."""
    m = a * phi1.on_grid(grid) + b * phi2.on_grid(grid)
    t = grid.times
    return Integrand(tuple((t[j], t[j + 1], m[j]) for j in range(grid.steps)))


@dataclass(frozen=True, eq=False)
class IntegralSamples:
    values: np.ndarray                 # paths x functionals, I_T(Phi) v*
    functionals: np.ndarray
    grid: TimeGrid
    running: np.ndarray | None = None  # paths x functionals x (steps + 1)


def _coefficients(phi: Integrand, rk: RkhsFactor, fs: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """<Phi_j i_Q e_k, v_i*>, shape (steps, functionals, rank)."""
    mats = phi.on_grid(grid)
    dim_v, dim_u = phi.shape
    if dim_u != rk.dim:
        raise InputError(f"integrand acts on dimension {dim_u}, RKHS factor lives in {rk.dim}")
    if fs.shape[1] != dim_v:
        raise InputError(f"functionals have dimension {fs.shape[1]}, integrand maps into {dim_v}")
    return np.einsum("iv,mvu,uk->mik", fs, mats, rk.embed)


def ito_integral(phi: Integrand, rk: RkhsFactor, drivers: DriverPaths, fs,
                 keep_path: bool = False) -> IntegralSamples:
    if drivers.rank != rk.rank:
        raise InputError(f"driver rank {drivers.rank} does not match RKHS rank {rk.rank}")
    grid = drivers.grid
    F = as_functionals(fs)
    c = _coefficients(phi, rk, F, grid)
    inc = np.einsum("mik,pkm->pim", c, drivers.increments)
    running = None
    if keep_path:
        running = np.zeros(inc.shape[:2] + (grid.steps + 1,))
        np.cumsum(inc, axis=2, out=running[:, :, 1:])
        values = running[:, :, -1].copy()
    else:
        values = inc.sum(axis=2)
    return IntegralSamples(values, F, grid, running)


def isometry_target(phi: Integrand, rk: RkhsFactor, fs, grid: TimeGrid) -> np.ndarray:
    """sum_j dt * ||i_Q* Phi_j^T v*||^2 for each functional."""
    F = as_functionals(fs)
    c = _coefficients(phi, rk, F, grid)
    return grid.dt * np.einsum("mik,mik->i", c, c)


def induced_covariance(phi: Integrand, rk: RkhsFactor, grid: TimeGrid) -> np.ndarray:
    """R = sum_j dt * Phi_j Q Phi_j^T with Q = i_Q i_Q*."""
    mats = phi.on_grid(grid)
    if phi.shape[1] != rk.dim:
        raise InputError(f"integrand acts on dimension {phi.shape[1]}, RKHS factor lives in {rk.dim}")
    a = mats @ rk.embed
    R = grid.dt * np.einsum("mvk,mwk->vw", a, a)
    return 0.5 * (R + R.T)


def isometry_check(phi: Integrand, rk: RkhsFactor, fs, samples: IntegralSamples,
                   mc: MCConfig | None = None) -> StatReport:
    mc = mc or MCConfig()
    F = as_functionals(fs)
    n = samples.values.shape[0]
    mc.require_verdict_size(n)
    grid = samples.grid
    target = isometry_target(phi, rk, F, grid)
    R = induced_covariance(phi, rk, grid)
    report = StatReport()
    for i, v in enumerate(F):
        sq = samples.values[:, i] ** 2
        report.add(estimator_entry(f"isometry.second_moment[v{i}]", sq.mean(), target[i],
                                   sq.std(ddof=1) / math.sqrt(n),
                                   "E|I_t(Phi)v*|^2 = int ||i_Q* Phi* v*||^2 ds", mc))
        quad = float(v @ R @ v)
        scale = max(1.0, abs(target[i]))
        report.add(exact_entry(f"isometry.piece_sum_vs_induced[v{i}]", target[i], quad,
                               IDENTITY_TOL * scale, "int ||i_Q* Phi* v*||^2 ds = <R v*, v*>"))
    return report


def covariance_check(samples: IntegralSamples, R: np.ndarray, mc: MCConfig | None = None) -> StatReport:
    """Empirical Cov[I_T v_a*, I_T v_b*] against <R v_a*, v_b*> entrywise."""
    mc = mc or MCConfig()
    X = samples.values
    n = X.shape[0]
    mc.require_verdict_size(n)
    F = samples.functionals
    G = F @ R @ F.T
    report = StatReport()
    for a in range(F.shape[0]):
        for b in range(a, F.shape[0]):
            prod = X[:, a] * X[:, b]
            report.add(estimator_entry(f"induced_cov[v{a},v{b}]", prod.mean(), G[a, b],
                                       prod.std(ddof=1) / math.sqrt(n),
                                       "I_T(Phi) centred Gaussian with covariance R", mc))
    return report


def random_rotation(rank: int, seed: int) -> np.ndarray:
    """Orthogonal matrix from the QR factorization of a seeded Gaussian matrix."""
    if rank < 1:
        raise ConfigError("rotation needs rank >= 1")
    g = np.random.default_rng(seed).standard_normal((rank, rank))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))


def rotate_drivers(drivers: DriverPaths, rotation: np.ndarray) -> DriverPaths:
    """C_l = sum_k R[l, k] B_k, built from the same underlying increments."""
    inc = np.einsum("lk,pkm->plm", rotation, drivers.increments)
    return DriverPaths(inc, drivers.grid, drivers.seed, {**drivers.fixture, "rotated": True})


def basis_independence_check(phi: Integrand, rk: RkhsFactor, drivers: DriverPaths, fs,
                             seed: int = 0, rotation: np.ndarray | None = None) -> StatReport:
    """Recompute the integral in a rotated orthonormal basis of H_Q and compare path-wise.

    The new basis is f_l = sum_k R[l, k] e_k with drivers C_l = W(.) w_l*,
    i.e. C = R B on the same paths.  Agreement is an algebraic identity
    (R^T R = I), so the tolerance is machine precision.
    """
    if rotation is None:
        rotation = random_rotation(rk.rank, seed)
    R = np.asarray(rotation, dtype=float)
    if R.shape != (rk.rank, rk.rank):
        raise ConfigError(f"rotation must be {rk.rank}x{rk.rank}, got {R.shape}")
    if np.max(np.abs(R.T @ R - np.eye(rk.rank))) > 1e-10:
        raise ConfigError("rotation is not orthogonal (rank-deficient or skewed basis change)")
    I1 = ito_integral(phi, rk, drivers, fs).values
    I2 = ito_integral(phi, rk.rotated(R), rotate_drivers(drivers, R), fs).values
    diff = float(np.max(np.abs(I1 - I2))) if I1.size else 0.0
    scale = max(1.0, float(np.max(np.abs(I1))) if I1.size else 0.0)
    return StatReport([exact_entry("basis_independence.max_abs_diff", diff, 0.0, BASIS_TOL * scale,
                                   "integral independent of the basis of H_Q", scale=scale)])


def martingale_check(samples: IntegralSamples, mc: MCConfig | None = None,
                     ladder: list[int] | None = None) -> StatReport:
    """E[(I_{t'} - I_t) g(I_t)] = 0 for g in {1, I_t, sign I_t} on a ladder of times."""
    if samples.running is None:
        raise InputError("martingale_check needs running values (ito_integral(..., keep_path=True))")
    mc = mc or MCConfig()
    X = samples.running
    n = X.shape[0]
    mc.require_verdict_size(n)
    M = samples.grid.steps
    if ladder is None:
        ladder = sorted({max(1, (M * i) // 4) for i in (1, 2, 3)} | {M})
    t = samples.grid.times
    report = StatReport()
    for f in range(X.shape[1]):
        for i0, i1 in zip(ladder, ladder[1:]):
            past = X[:, f, i0]
            inc = X[:, f, i1] - past
            for gname, g in (("1", np.ones(n)), ("I_t", past), ("sign", np.sign(past))):
                z = inc * g
                if not np.any(z):
                    report.add(StatEntry(f"martingale[v{f},t={t[i0]:.4g}->{t[i1]:.4g},g={gname}]", 0.0, 0.0,
                                         0.0, PASS, {"anchor": "martingale property", "degenerate": True}))
                    continue
                report.add(estimator_entry(f"martingale[v{f},t={t[i0]:.4g}->{t[i1]:.4g},g={gname}]",
                                           z.mean(), 0.0, z.std(ddof=1) / math.sqrt(n),
                                           "martingale property", mc))
    return report


def vector_integral(phi: Integrand, rk: RkhsFactor, drivers: DriverPaths) -> np.ndarray:
    """sum_j Phi_j (W(t_{j+1}) - W(t_j)) with W the U-valued process; shape (paths, dim V)."""
    W = eval_vec_wiener(rk, drivers).values
    dW = np.diff(W, axis=1)
    mats = phi.on_grid(drivers.grid)
    return np.einsum("mvu,pmu->pv", mats, dW)


def hilbert_agreement_check(phi: Integrand, rk: RkhsFactor, drivers: DriverPaths, fs,
                            cov: CovOperator | None = None, space: SpaceSpec | None = None,
                            mc: MCConfig | None = None) -> StatReport:
    """Pair the V-valued integral with v* and compare to the cylindrical integral.

    With ``cov`` and ``space`` given, refuses when the cylindrical Wiener
    process is not induced by a U-valued one (i_Q not Hilbert-Schmidt).
    """
    if space is not None and not space.is_hilbert:
        raise InputError("Hilbert agreement needs Hilbert spaces (p = 2)")
    if cov is not None and space is not None:
        verdict = extension_verdict(cov, space, mc)
        if not verdict.induced:
            raise InputError(f"cylindrical Wiener process is not induced by a U-valued process "
                             f"(i_Q is not Hilbert-Schmidt: verdict {verdict.verdict}); "
                             "the vector integral does not exist")
    F = as_functionals(fs)
    vec = vector_integral(phi, rk, drivers) @ F.T
    cyl = ito_integral(phi, rk, drivers, F).values
    diff = float(np.max(np.abs(vec - cyl))) if vec.size else 0.0
    scale = max(1.0, float(np.max(np.abs(cyl))) if cyl.size else 0.0)
    return StatReport([exact_entry("hilbert_agreement.max_abs_diff", diff, 0.0, AGREEMENT_TOL * scale,
                                   "agreement with the Hilbert-space integral", scale=scale)])
