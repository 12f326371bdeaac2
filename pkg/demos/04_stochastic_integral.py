"""The cylindrical stochastic integral of a piecewise-constant operator integrand.

Run with ``python demos/04_stochastic_integral.py``.
"""
# %%
import numpy as np

from cylwiener import (CovOperator, Integrand, SpaceSpec, basis_independence_check, build_rkhs, gen_drivers,
                       hilbert_agreement_check, induced_covariance, isometry_check, ito_integral,
                       martingale_check)
from cylwiener.simulate import TimeGrid, inject_drift

Q = np.array([[2.0, 1.0], [1.0, 2.0]])
rk = build_rkhs(Q)
grid = TimeGrid(T=1.0, steps=8)
drivers = gen_drivers(rk.rank, grid, n_paths=10_000, seed=7)

# Phi: [0, 1] -> L(R^2, R^3), constant on [0, 0.25), [0.25, 0.75), [0.75, 1].
rng = np.random.default_rng(3)
phi = Integrand(((0.0, 0.25, rng.standard_normal((3, 2))),
                 (0.25, 0.75, rng.standard_normal((3, 2))),
                 (0.75, 1.0, rng.standard_normal((3, 2)))))
vs = np.array([[1.0, 0.0, 0.0], [0.5, -1.0, 2.0]])
samples = ito_integral(phi, rk, drivers, vs, keep_path=True)

# %%
# Second moments match the isometry; the integral is Gaussian with covariance R.
print(isometry_check(phi, rk, vs, samples).to_text())
print("R =\n", induced_covariance(phi, rk, grid))

# %%
# Martingale statistics, and the same statistics after adding a drift to the drivers.
print("martingale:", martingale_check(samples).passed)
drifted = ito_integral(phi, rk, inject_drift(drivers, 1.0), vs, keep_path=True)
print("martingale with drift:", martingale_check(drifted).passed)

# %%
# Rotating the orthonormal basis of H_Q changes nothing, path by path.
print(basis_independence_check(phi, rk, drivers, vs, seed=11).to_text())

# %%
# With a trace-class Q the integral is an honest R^n-valued random variable.
cov = CovOperator.power(2, 20)
rk20 = build_rkhs(cov)
d20 = gen_drivers(rk20.rank, grid, 2000, seed=8)
report = hilbert_agreement_check(Integrand.constant(np.eye(20), 1.0), rk20, d20, np.ones((1, 20)),
                                 cov, SpaceSpec.truncated(20))
print(report.to_text())
