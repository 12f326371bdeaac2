"""When is a cylindrical Wiener process induced by a vector-valued one?

Run with ``python demos/03_radonification.py``.
"""
# %%
import math

from cylwiener import CovOperator, MCConfig, SpaceSpec, SpectralFamily, extension_verdict, hs_check
from cylwiener import mc_partial_sum_check

# Diagonal operators F e_k = sqrt(lambda_k) f_k into l^2: Hilbert-Schmidt iff sum lambda_k < inf.
for fam in (SpectralFamily.power(2, 10_000), SpectralFamily.power(0.5, 10_000), SpectralFamily.geometric(0.5, 60)):
    v = hs_check(fam)
    print(f"{fam.kind}({fam.param}): {v.verdict}, partial HS sum {v.hs_sum_partial:.6f}")
print("pi^2/6 =", math.pi ** 2 / 6)

# %%
# The same question asked statistically: does E||S_N||^2 settle as N grows?
space = SpaceSpec.truncated(1000)
for alpha in (2.0, 0.5):
    d = mc_partial_sum_check(SpectralFamily.power(alpha, 1000), space, 2.0, (10, 100, 1000), MCConfig(10_000, 1))
    print(f"alpha={alpha}: m_N={[round(m, 3) for m in d.moments]} gaps={[round(g, 3) for g in d.gaps]} -> {d.verdict}")

# %%
# Banach target l^1: only the statistical route exists, and the answer changes.
d = mc_partial_sum_check(SpectralFamily.power(2.0, 1000), SpaceSpec.truncated(1000, 1), 1.0, (10, 100, 1000),
                         MCConfig(4000, 2))
print("power(2) into l^1:", d.verdict)

# %%
# Q = Id (standard cylindrical Wiener process) is never induced; trace-class Q is.
for cov in (CovOperator.identity(1000), CovOperator.power(2, 1000)):
    print(cov.formula, "induced:", extension_verdict(cov, space).induced)
