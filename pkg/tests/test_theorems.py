import json
import math

import numpy as np
import pytest
from scipy import special

from fockops import theorems as th
from fockops.core import CoeffVector, DegenerateInputError, TruncationParams, kernel_coeffs
from fockops.operators import (
    OperatorMatrix,
    berezin,
    polar_samples,
    rank_one,
    toeplitz_from_measure,
    toeplitz_from_symbol,
    weighted_shift,
)
from fockops.symbols import BallIndicator, GeneralizedGaussian, PointMasses, q_beta, shift_symbol

DELTA0 = PointMasses(((0, 1.0),))
P20 = TruncationParams(1.0, 20)


def e0(params):
    return CoeffVector.basis(params, 0)


# --- reports -----------------------------------------------------------------

def test_report_plumbing(params):
    rep = th.run_lem38([1, 10], params, tol=1.0)
    assert rep.trust_radius == pytest.approx(math.sqrt(40))
    lines = rep.rows_csv().splitlines()
    assert lines[0] == "beta,error_normalized,error_unnormalized,entry00"
    assert len(lines) == 3
    m = rep.manifest(seed=3)
    json.dumps(m)
    assert m["fixture_version"] == th.fixtures_version()
    assert m["seed"] == 3 and m["trust_radius"] == pytest.approx(math.sqrt(40))
    assert all("tolerance" in a for a in m["assertions"])


def test_regression_fixtures_present():
    fx = th.load_fixtures()
    assert fx["version"] == 1
    for key in ("carleson_band_constant", "lem33_relative_error_delta4_a1_D30",
                f"lem41_max_norm_sep0.5_r3_n8_c20_seed{th.LEM41_SEED}"):
        assert key in fx["values"]


def test_fixture_frame_values_match_oracle(params):
    fx = th.load_fixtures()["values"]
    for eps in (1.0, 0.5, 0.3):
        assert th.lattice_frame_bounds(eps, params)[0] == pytest.approx(fx[f"lem43_sigma_min_eps{eps:g}_a1_D40"], rel=1e-8)


# --- heat approximation of point masses ---------------------------------------

def test_heat_approximation_point_mass(params):
    rep = th.run_thm37(DELTA0, [4, 40, 400, 4000], params)
    assert rep.passed
    assert rep.column("error")[-1] <= 1e-2


def test_heat_approximation_two_atoms_limit_is_exact(params):
    m = PointMasses(((1, 1.0), (-1, 1.0)))
    rep = th.run_thm37(m, [4, 40, 400, 4000], params)
    assert rep.passed
    T = toeplitz_from_measure(m, params).entries
    E = np.array([[math.exp(-0.5) / math.sqrt(math.factorial(k)) * s ** k for k in range(41)] for s in (1, -1)])
    np.testing.assert_allclose(T, E.T @ E, atol=1e-14)


def test_point_mass_limit_examples():
    a = math.pi
    rep = th.run_lem38([1, 10, 100], TruncationParams(a, 20))
    np.testing.assert_allclose(rep.column("error_normalized"), rep.column("error_unnormalized"), atol=1e-12)
    rep = th.run_lem38([1.0], P20, tol=1.0)
    assert rep.column("entry00")[0] == pytest.approx(0.5)


def test_point_mass_limit_main_example(params):
    rep = th.run_lem38([1000], params)
    assert rep.column("error_normalized")[0] <= 2e-3
    assert rep.column("entry00")[0] == pytest.approx(1000 / 1001)


def test_point_mass_limit_independent_oracle():
    # <T_{q_beta} 1, 1> = alpha beta / (pi (alpha + beta)), from the radial integral
    from scipy import integrate
    a, b = 1.5, 3.0
    val = a / math.pi * 2 * math.pi * integrate.quad(
        lambda r: b / math.pi * math.exp(-(a + b) * r * r) * r, 0, np.inf)[0]
    rep = th.run_lem38([b], TruncationParams(a, 20), tol=1.0)
    assert rep.column("entry00")[0] == pytest.approx(math.pi / a * val, rel=1e-10)


def test_rank_one_reduces_to_point_mass_limit():
    rep = th.run_thm39(0, 0, [10, 100], P20)
    ref = th.run_lem38([10, 100], P20, tol=1.0)
    np.testing.assert_array_equal(rep.column("error"), ref.column("error_normalized"))


def test_rank_one_diagonal_target(params):
    v = 0.3 + 0.4j
    rep = th.run_thm39(v, v, [10, 100, 1000], params)
    assert rep.passed
    K = kernel_coeffs(params, v, normalized=False)
    assert K.norm() ** 2 == pytest.approx(math.exp(abs(v) ** 2), rel=1e-12)
    proj = rank_one(K, K).entries / K.norm() ** 2
    np.testing.assert_allclose(proj @ proj, proj, atol=1e-12)
    np.testing.assert_allclose(proj @ K.coeffs, K.coeffs, atol=1e-12)


def test_rank_one_regression(params):
    rep = th.run_thm39(0.5, -0.5j, [1000], params)
    assert rep.column("error")[0] <= 5e-3
    with pytest.raises(ValueError):
        th.run_thm39(4.0, 0, [10], params)


# --- lattice frames -------------------------------------------------------------

def test_frame_values_near_density_scale(params):
    rep = th.run_lem43([1.0, 0.5, 0.3], params, audit_epsilons=())
    assert rep.passed
    sig = rep.column("sigma_min")
    np.testing.assert_allclose(sig[1:], rep.column("density_scale")[1:], rtol=1e-3)


def test_single_atom_frame_is_singular(params):
    T = toeplitz_from_measure(PointMasses(((0.7, 1.0),)), params).entries
    assert np.linalg.eigvalsh(T[:21, :21])[0] <= 1e-14


def test_frame_plain_monomial_oracle(params):
    for eps in (1.0, 0.5):
        assert th.lattice_frame_bounds(eps, params)[0] == pytest.approx(th.lattice_frame_oracle(eps, params), rel=1e-8)


def test_carleson_audit(params):
    rep = th.run_carleson_audit((0.25, 0.5, 1.0), params)
    assert rep.passed
    assert rep.extra["band_constant"] < 10


# --- interpolation ---------------------------------------------------------------

def test_single_point_interpolant(params):
    g, nrm, _ = th.interpolant([0], 0, params)
    np.testing.assert_allclose(g.coeffs, e0(params).coeffs, atol=1e-14)
    assert nrm == pytest.approx(1)


@pytest.mark.parametrize("d", [0.5, 1.0, 2.0])
def test_two_point_interpolant(d, params):
    _, nrm, _ = th.interpolant([0, d], 0, params)
    assert nrm ** 2 == pytest.approx(1 / (1 - math.exp(-d * d)), rel=1e-10)
    assert nrm == pytest.approx(th._exact_interpolant_norm([0, d], 0, 1.0), rel=1e-10)


def test_random_interpolation(interpolation_report):
    assert interpolation_report.passed
    assert math.isfinite(interpolation_report.extra["max_norm"])


def test_interpolation_other_seed_is_finite(params):
    rep = th.run_lem41_interpolation(None, params, configs=3, seed=7)
    assert rep.passed
    assert math.isfinite(rep.extra["max_norm"])


def test_interpolation_guards(params):
    with pytest.raises(DegenerateInputError):
        th.interpolant([0, 1e-9], 0, params)
    with pytest.raises(ValueError):
        th.run_lem41_interpolation(None, params, configs=2)
    with pytest.raises(ValueError):
        th.run_lem41_interpolation(None, params, configs=2, radius=6.0, seed=1)
    with pytest.raises(DegenerateInputError):
        th.separated_points(50, 2.0, 1.0, np.random.default_rng(0))


# --- localization --------------------------------------------------------------

def test_band_operator_single_atom(params):
    ring = [(1.0, 2.0)]
    assert th.band_operator_norm(DELTA0, 0.5, params, ring) > 0
    for d in (1.0, 2.0):
        assert th.band_operator_norm(DELTA0, d, params, ring) == 0


def test_band_operator_vanishes_for_large_delta(params):
    assert th.band_operator_norm(PointMasses(((0, 1.0), (0.5j, 2.0))), 50.0, params) == 0


def test_band_report_lattice(params):
    from fockops.symbols import default_lattice
    rep = th.run_lem26_band(default_lattice(0.5, params), [1, 2, 4, 6], params)
    assert rep.passed
    assert rep.column("norm")[-1] <= 1e-3


def test_partition_single_cell(params):
    from fockops.symbols import default_lattice
    A = OperatorMatrix.identity(P20)
    assert th.partition_error(A, default_lattice(0.5, P20), 2.0, single_cell=True)[0] == 0


def test_partition_identity_symbol():
    from fockops.symbols import default_lattice
    A = toeplitz_from_symbol(GeneralizedGaussian(), P20)
    m = default_lattice(0.5, P20)
    small, pu = th.partition_error(A, m, 1.0)
    large, _ = th.partition_error(A, m, 3.0)
    assert large < small
    assert pu <= 1e-8


def test_partition_report(partition_report):
    assert partition_report.passed
    assert partition_report.column("relative_error")[-1] <= 0.05


# --- profiles --------------------------------------------------------------------

def test_gamma_profiles(params):
    I = OperatorMatrix.identity(params)
    one = rank_one(e0(params), e0(params))
    for r in (0.5, 1.5, 3.0):
        assert th.gamma_profile(I, r) == pytest.approx(math.sqrt(special.gammaincc(41, r * r)), rel=1e-8)
        assert th.gamma_profile(one, r) == pytest.approx(math.exp(-r * r / 2), rel=1e-8)
    assert th.gamma_profile(I, 0) == pytest.approx(1)


def test_profiles_for_shift(params):
    C = weighted_shift(1.0, params)
    r = np.linspace(0.5, params.trust_radius() / 2, 4)
    rep = th.run_thm62_profiles(C, r, 1.0, params, "C1")
    assert rep.passed
    assert min(rep.column("gamma_profile")) >= 0.5 * math.exp(-0.5)
    with pytest.raises(ValueError):
        th.run_thm62_profiles(C, [5.0], 1.0, params)


def test_profiles_for_compact(params):
    rep = th.run_thm62_profiles(rank_one(e0(params), e0(params)), [0.5, 1.5, 3.0], 1.0, params)
    assert rep.passed
    g = rep.column("gamma_profile")
    assert g[-1] < 0.1 * g[0]


def test_alpha_profile_grows(params):
    C = weighted_shift(1.0, params)
    vals = [th.alpha_profile(C, r) for r in (0.3, 1.0, 2.0)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
    assert th.alpha_profile(C, 0.1, z=0.25 + 0.25j) == 0


@pytest.mark.parametrize("name,expected", [
    ("identity", lambda r: np.ones_like(r)),
    ("one_tensor_one", lambda r: np.exp(-r ** 2 / 2)),
])
def test_conjugated_orbit_profiles(name, expected, params):
    A = next(ex.operator for ex in th.gallery(params) if ex.name == name)
    rep = th.run_cor63(A, e0(params), [0.0, 1.0, 2.0, 3.0], params, n_angles=8)
    r = np.array(rep.column("radius"))
    np.testing.assert_allclose(rep.column("max_norm"), expected(r), atol=1e-8)


def test_conjugated_orbit_shift_symbol(params):
    A = toeplitz_from_symbol(shift_symbol(1.0, 1.0), params)
    rep = th.run_cor63(A, e0(params), [0.0, 1.5, 3.0], params, n_angles=8)
    np.testing.assert_allclose(rep.column("min_norm"), 1, atol=2e-2)
    np.testing.assert_allclose(rep.column("max_norm"), 1, atol=2e-2)
    with pytest.raises(ValueError):
        th.run_cor63(A, 2 * e0(params), [0.0], params)


# --- gallery ------------------------------------------------------------------------

def test_gallery_shape(params):
    g = th.gallery(params)
    assert [ex.compact for ex in g] == [True] * 3 + [False] * 3
    assert len({ex.name for ex in g}) == 6


def test_dichotomy(dichotomy_report):
    assert dichotomy_report.passed
    assert [r[-1] for r in dichotomy_report.rows] == [r[1] for r in dichotomy_report.rows]


def test_berezin_gallery_profiles(params, dichotomy_report):
    radii = np.array(dichotomy_report.extra["radii"])
    prof = dichotomy_report.extra["profiles"]
    np.testing.assert_allclose(prof["one_tensor_one"]["berezin"], np.exp(-radii ** 2), atol=1e-12)
    np.testing.assert_allclose(prof["weighted_shift_1"]["berezin"], math.exp(-0.5), atol=1e-10)
    # ball: B(z) <= (alpha/pi) area * max e^{-alpha|z-w|^2} = alpha e^{-alpha(|z|-1)^2}
    ball = berezin(toeplitz_from_symbol(BallIndicator(0, 1), params), polar_samples([2.5, 3.0], 8))
    r, p = ball.radial_profile()
    assert np.all(p <= np.exp(-(r - 1) ** 2))


def test_gaussian_inf_estimate():
    assert th.gaussian_inf_estimate(GeneralizedGaussian(), 1.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        th.gaussian_inf_estimate(GeneralizedGaussian(0, 1.0, 0, 0), 1.0)


def test_interpolation_inequality_rows(pnorm_report, params):
    rows = {r[0]: r for r in pnorm_report.rows}
    assert pnorm_report.passed
    assert rows["identity"][1] == pytest.approx(1, abs=1e-9)
    assert rows["identity"][7] == pytest.approx(1)
    d0 = 1 - math.exp(-1)
    assert rows["toeplitz_ball"][1] >= d0 - 1e-9
    q = rows["toeplitz_q1"]
    assert q[2] == pytest.approx(1 / (2 * math.pi))
    assert q[5] <= math.sqrt(q[2] * q[6]) * (1 + 1e-9)


def test_interpolation_inequality_rejects_p(params):
    with pytest.raises(ValueError):
        th.run_lem12_interpolation_bound([], 2.0, params)


# --- spectral identity -----------------------------------------------------------------

def test_spectral_examples():
    rep = th.run_sec7_spectral(OperatorMatrix.identity(P20), 8, P20)
    np.testing.assert_allclose(rep.column("root_norm"), 1)
    rep = th.run_sec7_spectral(BallIndicator(0, 1), 32, TruncationParams(1.0, 40))
    assert rep.extra["norm"] == pytest.approx(1 - math.exp(-1), rel=1e-12)
    assert rep.passed
    P1 = TruncationParams(1.0, 1)
    rep = th.run_sec7_spectral(OperatorMatrix(P1, np.diag([2.0, -1.0])), 10, P1)
    np.testing.assert_allclose(rep.column("root_norm"), 2)


def test_spectral_rejects_non_hermitian():
    with pytest.raises(ValueError):
        th.run_sec7_spectral(weighted_shift(1.0, P20), 4, P20)
    with pytest.raises(ValueError):
        th.run_sec7_spectral(q_beta(1.0).translate(0) * shift_symbol(1.0, 1.0), 4, P20)
