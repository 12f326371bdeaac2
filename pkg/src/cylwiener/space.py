"""Finite coordinate models of the state spaces and their duals.

A space is ``R^dim`` with a coordinate p-norm.  Functionals live in the same
coordinates (standard biorthogonal basis), so the dual pairing is a dot
product.  A ``truncated`` space stands for the first ``dim`` coordinates of an
infinite sequence space such as l^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InputError

FINITE = "finite"
TRUNCATED = "truncated"


def _parse_exponent(norm) -> float:
    if isinstance(norm, str):
        key = norm.strip().lower()
        if key in ("euclidean", "l2", "2"):
            return 2.0
        if key in ("inf", "infinity", "max", "sup"):
            return math.inf
        try:
            return float(key)
        except ValueError:
            raise ConfigError(f"unknown norm {norm!r}") from None
    return float(norm)


@dataclass(frozen=True)
class SpaceSpec:
    """Coordinate space ``R^dim`` with the p-norm.

    ``kind="truncated"`` marks a truncation of the infinite sequence space
    named by ``model`` (e.g. ``"l2"``); the truncation level is ``dim``.
    """

    dim: int
    p: float = 2.0
    kind: str = FINITE
    model: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "p", _parse_exponent(self.p))
        if int(self.dim) != self.dim or self.dim < 1:
            raise ConfigError(f"dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        if not (self.p >= 1.0):
            raise ConfigError(f"norm exponent must satisfy p >= 1 or p = inf, got p={self.p}")
        if self.kind not in (FINITE, TRUNCATED):
            raise ConfigError(f"kind must be {FINITE!r} or {TRUNCATED!r}, got {self.kind!r}")
        if self.kind == TRUNCATED and self.model is None:
            object.__setattr__(self, "model", "l2" if self.p == 2 else f"l{self.p:g}")

    @classmethod
    def euclidean(cls, dim: int) -> "SpaceSpec":
        return cls(dim, 2.0)

    @classmethod
    def truncated(cls, level: int, p: float = 2.0) -> "SpaceSpec":
        return cls(level, p, TRUNCATED)

    @property
    def is_hilbert(self) -> bool:
        return self.p == 2.0

    @property
    def truncation(self) -> int | None:
        return self.dim if self.kind == TRUNCATED else None


@dataclass(frozen=True)
class Functional:
    """Coordinates of an element of the dual space."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.coeffs if dtype is None else self.coeffs.astype(dtype)


def as_functionals(fs, dim: int | None = None) -> np.ndarray:
    """Stack functionals row-wise into an ``(n, dim)`` float array."""
    if isinstance(fs, Functional):
        fs = [fs]
    arr = np.array([np.asarray(f, dtype=float).reshape(-1) for f in fs], dtype=float) \
        if isinstance(fs, (list, tuple)) else np.atleast_2d(np.asarray(fs, dtype=float))
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise InputError("expected a non-empty family of functionals")
    if dim is not None and arr.shape[1] != dim:
        raise InputError(f"functional dimension {arr.shape[1]} does not match space dimension {dim}")
    return arr


def pair(u, f) -> float:
    """Dual pairing <u, f> in coordinates."""
    u = np.asarray(u, dtype=float).reshape(-1)
    f = np.asarray(f, dtype=float).reshape(-1)
    if u.shape != f.shape:
        raise InputError(f"dimension mismatch: vector has {u.size} entries, functional {f.size}")
    return float(u @ f)


def norm(u, s: SpaceSpec) -> float:
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != s.dim:
        raise InputError(f"vector has {u.size} entries, space dimension is {s.dim}")
    return float(np.linalg.norm(u, ord=s.p))


def norms(us, p: float) -> np.ndarray:
    """Row-wise p-norms of a stack of vectors (last axis)."""
    p = _parse_exponent(p)
    if not p >= 1:
        raise ConfigError(f"norm exponent must satisfy p >= 1, got {p}")
    return np.linalg.norm(np.asarray(us, dtype=float), ord=p, axis=-1)


@dataclass(frozen=True)
class CylinderSet:
    """Z(u_1*, ..., u_n*, B) with B an axis-aligned box.

    ``lower``/``upper`` may hold +-inf.  The ``closed`` flags record which
    endpoints belong to B; Gaussian image measures do not charge the boundary
    unless the image is degenerate along that axis.
    """

    functionals: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    closed: tuple[bool, bool] = field(default=(True, True))

    def __post_init__(self):
        fs = as_functionals(self.functionals)
        n = fs.shape[0]
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        if np.any(lo > hi):
            raise InputError("box has lower bound above upper bound")
        for a in (fs, lo, hi):
            a.setflags(write=False)
        object.__setattr__(self, "functionals", fs)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def n(self) -> int:
        return self.functionals.shape[0]

    @property
    def dim(self) -> int:
        return self.functionals.shape[1]

    def contains_image(self, x: np.ndarray) -> np.ndarray:
        """Membership of image points ``x`` (shape ``(..., n)``) in the box."""
        lo_ok = x >= self.lower if self.closed[0] else x > self.lower
        hi_ok = x <= self.upper if self.closed[1] else x < self.upper
        return np.all(lo_ok & hi_ok, axis=-1)
