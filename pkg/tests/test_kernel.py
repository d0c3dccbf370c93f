import os

import numpy as np
import pytest

from hfsmlab import kernel
from hfsmlab.errors import ParameterError


def test_parameter_validation():
    with pytest.raises(ParameterError):
        kernel.build_table(2.5, 0.5)
    with pytest.raises(ParameterError):
        kernel.build_table(1.5, 1.5)
    with pytest.raises(ParameterError):
        kernel.build_table(1.5, 0.5, grid_step=-1.0)


def test_values_real_and_finite(table_a15h05):
    assert table_a15h05.psi_values.dtype == np.float64
    assert np.all(np.isfinite(table_a15h05.psi_values))
    assert np.all(np.isfinite(table_a15h05.psi_prime_values))


def test_refinement_oracle_at_zero():
    # small grid keeps the 10x-oversampled build cheap; the value at y = 0
    # does not depend on the grid extent
    coarse = kernel.build_table(1.5, 0.5, grid_half_width=4.0)
    fine = kernel.build_table(1.5, 0.5, grid_half_width=4.0, oversample=10.0)
    i0 = (coarse.psi_values.size - 1) // 2
    num = abs(coarse.psi_values[i0] - fine.psi_values[i0])
    assert num / abs(fine.psi_values[i0]) < 1e-8


def test_decay_bound_stable_under_quadrature_doubling(table_a15h05):
    doubled = kernel.build_table(1.5, 0.5, oversample=2.0)
    c1 = table_a15h05.decay_constant
    c2 = doubled.decay_constant
    assert np.isfinite(c1) and c1 > 0.0
    assert 0.5 < c1 / c2 < 2.0


def test_eval_exact_at_grid_nodes(table_a15h05):
    t = table_a15h05
    y = t.y_grid
    inner = slice(1, -1)
    assert np.array_equal(kernel.eval_psi(t, y[inner]), t.psi_values[inner])
    assert abs(kernel.eval_psi(t, y[-1]) - t.psi_values[-1]) < 1e-12
    assert np.array_equal(kernel.eval_psi_prime(t, y[inner]),
                          t.psi_prime_values[inner])


def test_derivative_against_central_difference(table_a15h05):
    rng = np.random.default_rng(42)
    y = rng.uniform(-60.0, 60.0, 100)
    h = 1e-3
    fd = (kernel.eval_psi(table_a15h05, y + h)
          - kernel.eval_psi(table_a15h05, y - h)) / (2.0 * h)
    sup_prime = np.max(np.abs(table_a15h05.psi_prime_values))
    err = np.abs(fd - kernel.eval_psi_prime(table_a15h05, y))
    assert np.max(err) / sup_prime < 1e-4


def test_far_field_zero(table_a15h05):
    hw = table_a15h05.grid_half_width
    assert kernel.eval_psi(table_a15h05, hw + 1.0) == 0.0
    assert kernel.eval_psi(table_a15h05, -(hw + 5.0)) == 0.0
    assert kernel.eval_psi_prime(table_a15h05, hw + 1.0) == 0.0
    assert kernel.far_field_bias(table_a15h05) < 1e-3


def test_mean_value_consistency(table_a15h05):
    rng = np.random.default_rng(3)
    sup_prime = np.max(np.abs(table_a15h05.psi_prime_values))
    a = rng.uniform(-63.0, 63.0, 500)
    b = a + rng.uniform(-1.0, 1.0, 500)
    lhs = np.abs(kernel.eval_psi(table_a15h05, a) - kernel.eval_psi(table_a15h05, b))
    assert np.all(lhs <= sup_prime * np.abs(a - b) * (1.0 + 1e-6) + 1e-12)


def test_row_sum_bound_surrogate(table_a15h05):
    y = np.linspace(0.0, 1.0, 9)
    k_small = np.arange(-1000, 1001)
    k_large = np.arange(-10000, 10001)
    for yy in y:
        s_small = np.sum(np.abs(kernel.eval_psi(table_a15h05, yy - k_small)))
        s_large = np.sum(np.abs(kernel.eval_psi(table_a15h05, yy - k_large)))
        assert abs(s_large - s_small) < 1e-6
        assert s_small < np.inf


def test_row_sum_stable_under_doubling(table_a15h05):
    doubled = kernel.build_table(1.5, 0.5, oversample=2.0)
    k = np.arange(-60, 61).astype(float)
    s1 = np.sum(np.abs(kernel.eval_psi(table_a15h05, 0.3 - k)))
    s2 = np.sum(np.abs(kernel.eval_psi(doubled, 0.3 - k)))
    assert 0.5 < s1 / s2 < 2.0


def test_cache_roundtrip(tmp_path, table_a15h05):
    path = os.path.join(tmp_path, "table.bin")
    kernel.save_table(table_a15h05, path)
    loaded = kernel.load_table(path)
    assert np.array_equal(loaded.psi_values, table_a15h05.psi_values)
    assert np.array_equal(loaded.psi_prime_values, table_a15h05.psi_prime_values)
    assert loaded.alpha == table_a15h05.alpha
    assert loaded.decay_constant == table_a15h05.decay_constant


def test_cached_table_builds_then_loads(tmp_path):
    cache = str(tmp_path / "cache")
    t1 = kernel.cached_table(1.5, 0.5, grid_half_width=4.0, cache_dir=cache)
    assert len(os.listdir(cache)) == 1
    t2 = kernel.cached_table(1.5, 0.5, grid_half_width=4.0, cache_dir=cache)
    assert np.array_equal(t1.psi_values, t2.psi_values)
