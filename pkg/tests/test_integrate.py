import numpy as np
import pytest

from cylwiener.cylmeasure import CovOperator
from cylwiener.errors import ConfigError, InputError
from cylwiener.integrate import (Integrand, basis_independence_check, combine, covariance_check,
                                 hilbert_agreement_check, induced_covariance, isometry_check, isometry_target,
                                 ito_integral, martingale_check, random_rotation, vector_integral)
from cylwiener.rkhs import build_rkhs
from cylwiener.simulate import TimeGrid, gen_drivers, inject_drift
from cylwiener.space import SpaceSpec
from cylwiener.stat import mean_se, normality_stat

from conftest import random_psd

GRID = TimeGrid(1.0, 4)


def scalar_piecewise(T=1.0):
    return Integrand(((0.0, T / 2, [[2.0]]), (T / 2, T, [[1.0]])))


def random_piecewise(rng, dim_v, dim_u, grid, pieces=3):
    cuts = np.sort(rng.choice(np.arange(1, grid.steps), size=pieces - 1, replace=False))
    t = np.concatenate([[0], cuts, [grid.steps]]) * grid.dt
    return Integrand(tuple((t[i], t[i + 1], rng.standard_normal((dim_v, dim_u))) for i in range(pieces)))


def test_integrand_validation():
    with pytest.raises(InputError):
        Integrand(((0.0, 0.3, [[1.0]]), (0.3, 1.0, [[1.0]]))).on_grid(GRID)
    with pytest.raises(InputError):
        Integrand(((0.0, 0.5, [[1.0]]),)).on_grid(GRID)
    with pytest.raises(InputError):
        Integrand(((0.0, 0.5, [[1.0]]), (0.75, 1.0, [[1.0]]))).on_grid(GRID)
    with pytest.raises(InputError):
        Integrand(((0.0, 1.0, [[np.nan]]),))
    with pytest.raises(InputError):
        Integrand(((0.0, 0.5, [[1.0]]), (0.5, 1.0, [[1.0, 2.0]])))
    spec = [{"t_start": 0, "t_end": 1, "matrix": [1, 2, 3, 4, 5, 6]}]
    np.testing.assert_array_equal(Integrand.from_spec(spec, 2, 3).pieces[0][2], [[1, 2, 3], [4, 5, 6]])
    with pytest.raises(ConfigError):
        Integrand.from_spec(spec, 2, 2)


def test_identity_integrand_gives_brownian_endpoint():
    rk = build_rkhs(np.eye(1))
    d = gen_drivers(1, GRID, 100, seed=1)
    I = ito_integral(Integrand.constant([[1.0]], 1.0), rk, d, [[1.0]])
    np.testing.assert_allclose(I.values[:, 0], d.values()[:, 0, -1], atol=1e-14)


def test_zero_integrand():
    rk = build_rkhs(np.eye(2))
    d = gen_drivers(2, GRID, 20, seed=2)
    I = ito_integral(Integrand.constant(np.zeros((2, 2)), 1.0), rk, d, np.eye(2), keep_path=True)
    assert np.all(I.values == 0) and np.all(I.running == 0)


def test_piecewise_scalar_closed_form():
    rk = build_rkhs(np.eye(1))
    d = gen_drivers(1, GRID, 20_000, seed=3)
    I = ito_integral(scalar_piecewise(), rk, d, [[1.0]], keep_path=True)
    B = d.values()[:, 0]
    np.testing.assert_allclose(I.values[:, 0], 2 * B[:, 2] + (B[:, 4] - B[:, 2]), atol=1e-13)
    assert np.all(I.running[:, :, 0] == 0)
    m, se = mean_se(I.values[:, 0] ** 2)
    assert abs(m - 2.5) <= 4 * se


def test_left_endpoint_evaluation():
    # Phi jumps at t = 0.5: the step [0.25, 0.5) must use the value on the left piece
    rk = build_rkhs(np.eye(1))
    d = gen_drivers(1, GRID, 5, seed=4)
    I = ito_integral(scalar_piecewise(), rk, d, [[1.0]], keep_path=True)
    dB = d.increments[:, 0]
    np.testing.assert_allclose(I.running[:, 0, 2], 2 * (dB[:, 0] + dB[:, 1]))


@pytest.mark.parametrize("q, v, expected", [
    (np.eye(2), (1.0, 1.0), 2.0),
    (np.diag([4.0, 1.0]), (1.0, 0.0), 4.0),
])
def test_isometry_targets_identity(q, v, expected):
    rk = build_rkhs(q)
    phi = Integrand.constant(np.eye(2), 1.0)
    assert isometry_target(phi, rk, [v], GRID)[0] == pytest.approx(expected)


def test_isometry_check_piecewise():
    rk = build_rkhs(np.eye(1))
    d = gen_drivers(1, GRID, 10_000, seed=5)
    phi = scalar_piecewise()
    rep = isometry_check(phi, rk, [[1.0]], ito_integral(phi, rk, d, [[1.0]]))
    assert rep.passed, rep.to_text()
    assert rep["isometry.second_moment[v0]"].target == pytest.approx(2.5)


def test_induced_covariance_examples(rng):
    rk = build_rkhs(np.eye(2))
    np.testing.assert_allclose(induced_covariance(Integrand.constant(np.eye(2), 1.0), rk, GRID), np.eye(2))
    q = random_psd(rng, 3)
    A = rng.standard_normal((2, 3))
    R = induced_covariance(Integrand.constant(A, 1.0), build_rkhs(q), GRID)
    np.testing.assert_allclose(R, A @ q @ A.T, rtol=1e-12)
    R1 = induced_covariance(scalar_piecewise(), build_rkhs(np.eye(1)), GRID)
    assert R1[0, 0] == pytest.approx(2.5)


def test_isometry_matches_induced_quadratic_form(rng):
    q = random_psd(rng, 3, 2)
    rk = build_rkhs(q)
    g = TimeGrid(2.0, 8)
    phi = random_piecewise(rng, 4, 3, g)
    V = rng.standard_normal((5, 4))
    R = induced_covariance(phi, rk, g)
    target = isometry_target(phi, rk, V, g)
    np.testing.assert_allclose(target, np.einsum("iv,vw,iw->i", V, R, V), rtol=1e-12)


def test_induced_covariance_empirical(rng):
    q = random_psd(rng, 2)
    rk = build_rkhs(q)
    phi = random_piecewise(rng, 2, 2, GRID)
    d = gen_drivers(rk.rank, GRID, 10_000, seed=6)
    fs = np.eye(2)
    rep = covariance_check(ito_integral(phi, rk, d, fs), induced_covariance(phi, rk, GRID))
    assert rep.passed, rep.to_text()


def test_linearity(rng):
    q = random_psd(rng, 3)
    rk = build_rkhs(q)
    d = gen_drivers(3, GRID, 50, seed=7)
    p1, p2 = random_piecewise(rng, 2, 3, GRID), random_piecewise(rng, 2, 3, GRID)
    fs = rng.standard_normal((2, 2))
    a, b = 0.7, -2.0
    I1 = ito_integral(p1, rk, d, fs).values
    I2 = ito_integral(p2, rk, d, fs).values
    I12 = ito_integral(combine(a, p1, b, p2, GRID), rk, d, fs).values
    scale = np.abs(I12).max()
    np.testing.assert_allclose(I12, a * I1 + b * I2, atol=1e-12 * scale)
    f, g = fs
    Ifg = ito_integral(p1, rk, d, [f, g, a * f + b * g]).values
    np.testing.assert_allclose(Ifg[:, 2], a * Ifg[:, 0] + b * Ifg[:, 1], atol=1e-12 * np.abs(Ifg).max())


def test_integral_is_gaussian(rng):
    rk = build_rkhs(random_psd(rng, 2))
    phi = random_piecewise(rng, 1, 2, GRID)
    I = ito_integral(phi, rk, gen_drivers(2, GRID, 20_000, seed=8), [[1.0]])
    assert normality_stat(I.values[:, 0]).pvalue >= 1e-3


def test_basis_independence_identity_rotation():
    rk = build_rkhs(np.eye(2))
    d = gen_drivers(2, GRID, 100, seed=9)
    rep = basis_independence_check(Integrand.constant(np.eye(2), 1.0), rk, d, np.eye(2), rotation=np.eye(2))
    assert rep.entries[0].estimate == 0.0


def test_basis_independence_quarter_turn():
    rk = build_rkhs(np.eye(2))
    d = gen_drivers(2, GRID, 100, seed=10)
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    rep = basis_independence_check(Integrand.constant(np.eye(2), 1.0), rk, d, [[1.0, 1.0]], rotation=rot)
    assert rep.entries[0].estimate < 1e-12 * rep.entries[0].context["scale"]


def test_basis_independence_random(rng):
    q = random_psd(rng, 4)
    rk = build_rkhs(q)
    d = gen_drivers(4, GRID, 200, seed=11)
    rep = basis_independence_check(random_piecewise(rng, 3, 4, GRID), rk, d, rng.standard_normal((2, 3)), seed=3)
    assert rep.passed


def test_basis_independence_rejects_non_orthogonal():
    rk = build_rkhs(np.eye(2))
    d = gen_drivers(2, GRID, 10, seed=12)
    with pytest.raises(ConfigError):
        basis_independence_check(Integrand.constant(np.eye(2), 1.0), rk, d, np.eye(2),
                                 rotation=np.array([[1.0, 1.0], [0.0, 0.0]]))


def test_random_rotation_orthogonal():
    R = random_rotation(5, 2)
    np.testing.assert_allclose(R.T @ R, np.eye(5), atol=1e-14)
    np.testing.assert_array_equal(R, random_rotation(5, 2))


def test_martingale_identity_and_time_dependent(rng):
    rk = build_rkhs(np.eye(1))
    g = TimeGrid(1.0, 8)
    d = gen_drivers(1, g, 10_000, seed=13)
    for phi in (Integrand.constant([[1.0]], 1.0), random_piecewise(rng, 1, 1, g, pieces=4)):
        rep = martingale_check(ito_integral(phi, rk, d, [[1.0]], keep_path=True))
        assert rep.passed, rep.to_text()


def test_martingale_detects_drift():
    rk = build_rkhs(np.eye(1))
    d = inject_drift(gen_drivers(1, GRID, 10_000, seed=14), 1.0)
    rep = martingale_check(ito_integral(Integrand.constant([[1.0]], 1.0), rk, d, [[1.0]], keep_path=True))
    assert not rep.passed


def test_martingale_needs_running_values():
    rk = build_rkhs(np.eye(1))
    d = gen_drivers(1, GRID, 200, seed=15)
    with pytest.raises(InputError):
        martingale_check(ito_integral(Integrand.constant([[1.0]], 1.0), rk, d, [[1.0]]))


def test_hilbert_agreement_trace_class():
    n = 20
    cov = CovOperator.power(2, n)
    rk = build_rkhs(cov)
    d = gen_drivers(n, GRID, 100, seed=16)
    phi = Integrand.constant(np.eye(n), 1.0)
    fs = np.random.default_rng(1).standard_normal((3, n))
    rep = hilbert_agreement_check(phi, rk, d, fs, cov, SpaceSpec.truncated(n))
    assert rep.entries[0].estimate < 1e-12


def test_hilbert_agreement_random(rng):
    n = 8
    cov = CovOperator.diagonal(rng.uniform(0.1, 1.0, n) / np.arange(1, n + 1) ** 2)
    rk = build_rkhs(cov)
    d = gen_drivers(n, GRID, 100, seed=17)
    phi = random_piecewise(rng, 5, n, GRID)
    rep = hilbert_agreement_check(phi, rk, d, rng.standard_normal((3, 5)))
    assert rep.passed
    zero = hilbert_agreement_check(Integrand.constant(np.zeros((5, n)), 1.0), rk, d, np.eye(5))
    assert zero.entries[0].estimate == 0.0
    assert np.all(vector_integral(Integrand.constant(np.zeros((5, n)), 1.0), rk, d) == 0)


def test_hilbert_agreement_refuses_non_induced():
    n = 50
    cov = CovOperator.identity(n)
    rk = build_rkhs(cov)
    d = gen_drivers(n, GRID, 10, seed=18)
    with pytest.raises(InputError, match="not induced"):
        hilbert_agreement_check(Integrand.constant(np.eye(n), 1.0), rk, d, np.eye(n)[:1], cov,
                                SpaceSpec.truncated(n))


def test_dimension_mismatch():
    rk = build_rkhs(np.eye(2))
    d = gen_drivers(2, GRID, 10, seed=19)
    with pytest.raises(InputError):
        ito_integral(Integrand.constant(np.eye(3), 1.0), rk, d, np.eye(3))
    with pytest.raises(InputError):
        ito_integral(Integrand.constant(np.eye(2), 1.0), rk, d, np.eye(3))
