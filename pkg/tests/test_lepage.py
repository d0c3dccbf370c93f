import math

import numpy as np
import pytest
from scipy import integrate, stats

from hfsmlab import lepage
from hfsmlab.errors import ParameterError


# ---------------------------------------------------------------------------
# analytic constants
# ---------------------------------------------------------------------------

def test_a_alpha_at_one():
    assert abs(lepage.a_alpha(1.0) - 2.0 / math.pi) < 1e-10


def test_a_alpha_half_hand_value():
    # closed form Gamma(1/2) cos(pi/4) = sqrt(pi) sqrt(2)/2, inverted power
    target = (math.sqrt(math.pi) * math.sqrt(2.0) / 2.0) ** -2.0
    assert abs(lepage.a_alpha(0.5) - target) < 1e-10
    assert abs(target - 0.6366197723675814) < 1e-12


@pytest.mark.parametrize("alpha", [0.3, 0.7, 1.3, 1.7])
def test_a_alpha_quadrature_vs_closed_form(alpha):
    q = lepage.a_alpha(alpha)
    c = lepage.a_alpha_closed_form(alpha)
    assert abs(q - c) / c < 1e-8


def test_a_alpha_domain():
    with pytest.raises(ParameterError):
        lepage.a_alpha(2.0)
    with pytest.raises(ParameterError):
        lepage.a_alpha(0.0)


def test_gaussian_sigma_exact_values():
    assert abs(lepage.gaussian_sigma(2.0) - 1.0) < 1e-14
    assert abs(lepage.gaussian_sigma(1.0) - math.sqrt(math.pi / 2.0)) < 1e-14


def test_gaussian_sigma_monte_carlo():
    rng = lepage.stream_rng(2024, 0, lepage.STREAM_GAUSS)
    sigma = lepage.gaussian_sigma(1.5)
    g = rng.normal(0.0, sigma, 1000000)
    assert abs(np.mean(np.abs(g) ** 1.5) - 1.0) < 0.01


def test_mu_alpha_eps_finite_and_stable():
    v1 = lepage.mu_alpha_eps(1.5, 0.5, rtol=1e-6)
    v2 = lepage.mu_alpha_eps(1.5, 0.5, rtol=1e-9)
    assert v1 > 0.0 and np.isfinite(v1)
    assert abs(v1 - v2) / v2 < 1e-5


def test_mu_alpha_eps_lower_bound_at_pi():
    from hfsmlab.meyer import psi_hat
    alpha, eps = 1.5, 0.5
    xi = 2.0 * math.pi / 3.0
    bound = (4.0 / eps) ** (1 / alpha) * xi ** (1 / alpha) \
        * (1.0 + math.log(xi)) ** ((1 + eps) / alpha) * abs(psi_hat(math.pi))
    assert lepage.mu_alpha_eps(alpha, eps) >= bound


# ---------------------------------------------------------------------------
# level hit probability
# ---------------------------------------------------------------------------

def test_p_j_bound():
    assert all(lepage.p_j(j, 0.5) <= 6.0 * (1.0 + j) ** -1.5 for j in range(31))


def test_p_j_quadrature_oracle():
    for j, eps in ((0, 1.0), (2, 0.5), (7, 0.5), (15, 0.25)):
        lo = 2.0 ** (j + 1) * math.pi / 3.0
        hi = 2.0 ** (j + 3) * math.pi / 3.0
        val, err = integrate.quad(
            lambda x: 1.0 / (x * (1.0 + math.log(x)) ** (1.0 + eps)), lo, hi)
        assert abs(lepage.p_j(j, eps) - 0.5 * eps * val) < 1e-10 + 10 * err


def test_p_j_frozen_value():
    assert abs(lepage.p_j(0, 1.0) - 0.1275064159334427) < 1e-12


def test_p_j_monte_carlo_membership():
    rng = lepage.stream_rng(5, 0, lepage.STREAM_ZETA)
    _, logs = lepage.sample_zeta_parts(rng, 0.5, 1000000)
    lo, hi = np.log(2 * np.pi / 3), np.log(8 * np.pi / 3)
    for j in (0, 3, 8):
        hits = np.mean((logs - j * lepage.LOG2 >= lo) & (logs - j * lepage.LOG2 <= hi))
        p = lepage.p_j(j, 0.5)
        se = math.sqrt(p * (1 - p) / 1e6)
        assert abs(hits - p) <= 3.0 * se


def test_p_j_parameter_errors():
    with pytest.raises(ParameterError):
        lepage.p_j(-1, 0.5)
    with pytest.raises(ParameterError):
        lepage.p_j(2, 0.0)


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def test_gammas_monotone_and_exp_law():
    rng = lepage.stream_rng(1, 0, lepage.STREAM_GAMMA)
    g = lepage.sample_gammas(100000, rng)
    assert np.all(np.diff(g) > 0.0) and g[0] > 0.0
    incs = np.diff(np.concatenate([[0.0], g]))
    assert stats.kstest(incs, "expon").pvalue > 0.01


def test_gamma_first_arrival_exponential():
    rng = lepage.stream_rng(2, 0, lepage.STREAM_GAMMA)
    firsts = rng.standard_exponential((10000,))
    assert stats.kstest(firsts, "expon").pvalue > 0.01


def test_gamma_mean_rate():
    rng = lepage.stream_rng(3, 0, lepage.STREAM_GAMMA)
    sums = rng.standard_exponential((10000, 1000)).sum(axis=1)
    assert abs(np.mean(sums / 1000.0) - 1.0) < 0.02


def test_zeta_cdf_values():
    assert lepage.zeta_cdf(0.0, 0.5) == 0.5
    assert abs(lepage.zeta_cdf(1.0, 0.5) - 0.75) < 1e-15
    assert abs(lepage.zeta_cdf(-1.0, 0.5) - 0.25) < 1e-15


def test_zeta_cdf_quadrature_oracle():
    eps = 0.7
    for x in (0.2, 1.0, 3.0, 40.0):
        val, err = integrate.quad(
            lambda s: 0.25 * eps / (abs(s) * (1 + abs(math.log(abs(s)))) ** (1 + eps)),
            1e-12, x, limit=200)
        assert abs(lepage.zeta_cdf(x, eps) - (0.5 + val)) < 1e-6 + 10 * err


def test_zeta_sampler_ks():
    rng = lepage.stream_rng(4, 0, lepage.STREAM_ZETA)
    signs, logs = lepage.sample_zeta_parts(rng, 0.5, 100000)
    u = lepage.zeta_cdf_from_log(signs, logs, 0.5)
    assert stats.kstest(u, "uniform").pvalue > 0.01


def test_zeta_probability_integral_transform():
    # |log|zeta|| has survival (1+x)^(-eps), so (1+|log|)^(-eps) is uniform
    rng = lepage.stream_rng(6, 0, lepage.STREAM_ZETA)
    _, logs = lepage.sample_zeta_parts(rng, 0.8, 100000)
    u = (1.0 + np.abs(logs)) ** -0.8
    assert stats.kstest(u, "uniform").pvalue > 0.01


def test_zeta_never_zero():
    rng = lepage.stream_rng(7, 0, lepage.STREAM_ZETA)
    z = lepage.sample_zeta(rng, 0.5, 100000)
    assert np.all(z != 0.0)
    assert np.all(np.isfinite(z))


def test_zeta_parameter_error():
    rng = lepage.stream_rng(8, 0, lepage.STREAM_ZETA)
    with pytest.raises(ParameterError):
        lepage.sample_zeta(rng, 0.0)


def test_sample_g_parts_independent_scale():
    rng = lepage.stream_rng(9, 0, lepage.STREAM_GAUSS)
    g = lepage.sample_g(rng, 2.0, 200000)
    assert abs(np.std(g.real) - 2.0) < 0.02
    assert abs(np.std(g.imag) - 2.0) < 0.02
    assert abs(np.corrcoef(g.real, g.imag)[0, 1]) < 0.01


# ---------------------------------------------------------------------------
# draws
# ---------------------------------------------------------------------------

def test_draw_determinism_and_validation(draw_main):
    again = lepage.draw_lepage(1.5, 0.5, 10001, master_seed=11, draw_id=0)
    assert np.array_equal(draw_main.gammas, again.gammas)
    assert np.array_equal(draw_main.zeta_logs, again.zeta_logs)
    assert np.array_equal(draw_main.g_re, again.g_re)
    assert draw_main.validate()


def test_draw_streams_differ_across_ids():
    d0 = lepage.draw_lepage(1.5, 0.5, 100, master_seed=11, draw_id=0)
    d1 = lepage.draw_lepage(1.5, 0.5, 100, master_seed=11, draw_id=1)
    assert not np.array_equal(d0.gammas, d1.gammas)
    assert not np.array_equal(d0.zeta_logs, d1.zeta_logs)


def test_draw_serialization_roundtrip(tmp_path, draw_main):
    path = str(tmp_path / "draw.bin")
    lepage.save_draw(draw_main, path)
    back = lepage.load_draw(path)
    assert np.array_equal(back.gammas, draw_main.gammas)
    assert np.array_equal(back.zeta_logs, draw_main.zeta_logs)
    assert np.array_equal(back.zeta_signs, draw_main.zeta_signs)
    assert np.array_equal(back.g_im, draw_main.g_im)
    assert back.seed == draw_main.seed
    assert back.alpha == draw_main.alpha


def test_draw_parameter_errors():
    with pytest.raises(ParameterError):
        lepage.draw_lepage(2.0, 0.5, 100, 1)
    with pytest.raises(ParameterError):
        lepage.draw_lepage(1.5, -0.5, 100, 1)
    with pytest.raises(ParameterError):
        lepage.draw_lepage(1.5, 0.5, 1, 1)
