"""Simulate a cylindrical Wiener process and compare with the vector-valued one.

Run with ``python demos/02_cylindrical_wiener.py``.
"""
# %%
import numpy as np

from cylwiener import build_rkhs, eval_cyl_wiener, eval_vec_wiener, gen_drivers, wiener_property_suite
from cylwiener.simulate import TimeGrid

Q = np.array([[2.0, 1.0], [1.0, 2.0]])
rk = build_rkhs(Q)
grid = TimeGrid(T=1.0, steps=8)
drivers = gen_drivers(rk.rank, grid, n_paths=10_000, seed=42)

fs = np.array([[1.0, 0.0], [0.0, 1.0]])
W = eval_cyl_wiener(rk, drivers, fs)
print("W(T)u* for the first three paths:\n", W.values[:3, :, -1])

# %%
# Cov[W(s)u*, W(t)v*] = min(s, t) <Qu*, v*>, independent increments, Gaussian marginals.
report = wiener_property_suite(W, Q)
print(f"{len(report) - len(report.failures)}/{len(report)} checks pass")
for e in report:
    if e.name.startswith("wiener.cov[u0,v1"):
        print(f"  {e.name}: {e.estimate:.3f} vs {e.target:.3f} (se {e.se:.3f})")

# %%
# Here Q lives on R^2, so the process is induced by an R^2-valued Brownian motion.
vec = eval_vec_wiener(rk, drivers)
paired = np.einsum("ptd,fd->pft", vec.values, fs)
print("max |<W(t), u*> - W(t)u*| =", np.abs(paired - W.values).max())
