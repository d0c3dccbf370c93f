import numpy as np
import pytest

from hfsmlab import meyer
from hfsmlab.errors import DomainError


def test_ramp_endpoints_exact():
    assert meyer.nu_poly(0.0) == 0.0
    assert meyer.nu_poly(1.0) == 1.0


def test_ramp_midpoint_hand_value():
    # 0.0625 * (35 - 42 + 17.5 - 2.5) = 0.5
    assert meyer.nu_poly(0.5) == 0.5


def test_ramp_monotone_and_symmetric():
    x = np.linspace(0.0, 1.0, 2001)
    v = meyer.nu_poly(x)
    assert np.all(np.diff(v) >= 0.0)
    assert np.max(np.abs(v + meyer.nu_poly(1.0 - x) - 1.0)) < 1e-13


def test_ramp_domain_error():
    with pytest.raises(DomainError):
        meyer.nu_poly(-0.01)
    with pytest.raises(DomainError):
        meyer.nu_poly(1.01)


def test_psi_hat_outside_support():
    assert meyer.psi_hat(np.pi / 2) == 0.0
    assert meyer.psi_hat(0.0) == 0.0


def test_psi_hat_hand_value_at_pi():
    assert abs(abs(meyer.psi_hat(np.pi)) - np.sqrt(2.0) / 2.0) < 1e-14


def test_partition_of_unity():
    rng = np.random.default_rng(7)
    xi = np.exp(rng.uniform(np.log(1e-4), np.log(1e4), 1000))
    xi *= rng.choice([-1.0, 1.0], xi.size)
    total = sum(np.abs(meyer.psi_hat(2.0 ** j * xi)) ** 2 for j in range(-60, 60))
    assert np.max(np.abs(total - 1.0)) < 1e-12


def test_two_scale_hand_identity():
    v = abs(meyer.psi_hat(np.pi)) ** 2 + abs(meyer.psi_hat(2 * np.pi)) ** 2
    assert abs(v - 1.0) < 1e-14


def test_support_sharpness():
    lo, hi = meyer.PSI_SUPPORT
    eps = 1e-9
    for xi in (lo - eps, hi + eps, -(lo - eps), -(hi + eps)):
        assert meyer.psi_hat(xi) == 0.0
    assert abs(meyer.psi_hat(lo + 1e-3)) > 0.0


def test_conjugate_symmetry():
    rng = np.random.default_rng(8)
    xi = rng.uniform(-10.0, 10.0, 1000)
    assert np.max(np.abs(meyer.psi_hat(-xi) - np.conj(meyer.psi_hat(xi)))) < 1e-15


def test_theta_hat_zero_at_origin_and_outside():
    assert meyer.theta_hat(0.0) == 0.0
    assert meyer.theta_hat(2.0) == 0.0
    assert meyer.theta_hat(0.49) == 0.0
    assert meyer.theta_hat(1.01) == 0.0


def test_theta_hat_peak_regression_value():
    # midpoint of the band: ramp at 1/2, sin^2(pi/2) = 1 exactly
    assert meyer.theta_hat(0.75) == 1.0
    assert 0.0 < meyer.theta_hat(0.6) <= 1.0


def test_theta_hat_even():
    xi = np.linspace(-1.2, 1.2, 601)
    assert np.array_equal(meyer.theta_hat(xi), meyer.theta_hat(-xi))


def test_theta_time_even_and_positive_at_zero():
    t = np.linspace(-40.0, 40.0, 4001)
    th = meyer.theta_time(t)
    assert np.max(np.abs(th - th[::-1])) < 1e-12
    assert meyer.theta_time(0.0) > 0.0


def test_theta_time_integrates_to_zero():
    # integral of theta equals the spectrum at zero frequency, which vanishes
    t = np.linspace(-400.0, 400.0, 160001)
    total = np.trapezoid(meyer.theta_time(t), t)
    assert abs(total) < 5e-4


def test_wavelet_specs_validate():
    assert meyer.MEYER_PSI_SPEC.validate()
    assert meyer.THETA_BUMP_SPEC.validate()
    assert meyer.MEYER_PSI_SPEC.support_lo == 2 * np.pi / 3
    assert meyer.MEYER_PSI_SPEC.support_hi == 8 * np.pi / 3
    assert meyer.THETA_BUMP_SPEC.support_lo == 0.5
    assert meyer.THETA_BUMP_SPEC.support_hi == 1.0
