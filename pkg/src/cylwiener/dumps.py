"""CSV and binary dumps of simulated paths and integral samples.

Binary layout (little-endian): uint64 ndim, ndim x uint64 shape, then the
array as row-major float64.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .integrate import IntegralSamples
from .simulate import CylPathEval

PATH_HEADER = ("path", "functional", "t", "value")
INTEGRAL_HEADER = ("path", "functional", "value")


def write_paths_csv(dest, paths: CylPathEval):
    t = paths.grid.times
    with open(dest, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PATH_HEADER)
        n, nf, nt = paths.values.shape
        for p in range(n):
            for f in range(nf):
                row = paths.values[p, f]
                w.writerows((p, f, repr(float(t[j])), repr(float(row[j]))) for j in range(nt))


def write_integral_csv(dest, samples: IntegralSamples):
    with open(dest, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(INTEGRAL_HEADER)
        n, nf = samples.values.shape
        for p in range(n):
            w.writerows((p, f, repr(float(samples.values[p, f]))) for f in range(nf))


def write_binary(dest, array):
    a = np.ascontiguousarray(array, dtype="<f8")
    with open(dest, "wb") as fh:
        fh.write(np.array([a.ndim, *a.shape], dtype="<u8").tobytes())
        fh.write(a.tobytes(order="C"))


def read_binary(src) -> np.ndarray:
    raw = Path(src).read_bytes()
    ndim = int(np.frombuffer(raw[:8], dtype="<u8")[0])
    shape = tuple(int(s) for s in np.frombuffer(raw[8:8 + 8 * ndim], dtype="<u8"))
    return np.frombuffer(raw[8 + 8 * ndim:], dtype="<f8").reshape(shape).copy()
