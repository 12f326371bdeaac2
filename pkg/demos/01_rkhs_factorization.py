"""Factor a covariance through its reproducing kernel Hilbert space.

Run with ``python demos/01_rkhs_factorization.py``.
"""
# %%
import numpy as np

from cylwiener import CovOperator, GaussCylMeasure, SpaceSpec, adjoint_embed, build_rkhs, empirical_char_check
from cylwiener.rkhs import rkhs_property_suite, sample_pushforward

# A rank-deficient covariance on R^3: the third eigenvalue is zero.
a = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 2.0]])
Q = a @ a.T
rk = build_rkhs(Q)
print("rank:", rk.rank, "spectrum:", rk.spectrum)
print("embed (columns are i_Q e_k):\n", rk.embed)
print("max |embed embed^T - Q| =", np.abs(rk.embed @ rk.embed.T - Q).max())

# %%
# i_Q* f gives the RKHS coordinates of Q f; their inner products reproduce <Qf, g>.
f, g = np.array([1.0, -1.0, 0.5]), np.array([0.0, 2.0, 1.0])
print("<Qf, g> =", f @ Q @ g, " [i_Q* f, i_Q* g] =", adjoint_embed(rk, f) @ adjoint_embed(rk, g))
print(rkhs_property_suite(rk, Q).to_text())

# %%
# The law of embed @ g, g standard Gaussian, is the Gaussian measure with covariance Q.
x = sample_pushforward(rk, 100_000, np.random.default_rng(0))
fs = np.random.default_rng(1).standard_normal((4, 3))
measure = GaussCylMeasure(SpaceSpec(3), CovOperator.from_matrix(Q))
print(empirical_char_check(x @ fs.T, measure, fs).to_text())
