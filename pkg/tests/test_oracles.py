"""Sanity checks on the reference implementations themselves."""

import numpy as np
import pytest

from sega import apply_rotary, make_schedule
from oracles import OracleReport, naive_dft2, relative_position_reports


class TestNaiveDft:
    def test_impulse_gives_constant_spectrum(self):
        m = np.zeros((6, 5))
        m[0, 0] = 1.0
        np.testing.assert_allclose(naive_dft2(m), np.ones((6, 5), dtype=complex), atol=1e-12)

    def test_matches_fft_on_random_grid(self, rng):
        m = rng.standard_normal((8, 8))
        np.testing.assert_allclose(naive_dft2(m), np.fft.fft2(m), atol=1e-6)

    def test_linearity(self, rng):
        a = rng.standard_normal((5, 7))
        b = rng.standard_normal((5, 7))
        lhs = naive_dft2(a + b)
        rhs = naive_dft2(a) + naive_dft2(b)
        np.testing.assert_allclose(lhs, rhs, atol=1e-6)

    def test_size_guard(self):
        with pytest.raises(ValueError):
            naive_dft2(np.zeros((33, 4)))


class TestOracleReport:
    def test_pass_iff_within_tolerance(self):
        good = OracleReport("a", 1.0, 1.0 + 5e-7, 1e-6)
        bad = OracleReport("b", 1.0, 1.01, 1e-6)
        assert good.passed and not bad.passed
        assert good.abs_error <= good.tolerance < bad.abs_error
        assert bad.rel_error > 1e-3


class TestRelativePositionOracle:
    def rotate(self, x, n, sched):
        return apply_rotary(x, n, sched)

    def test_equal_positions_reduce_to_plain_inner_product(self, rng):
        sched = make_schedule("H", 12)
        q, k = rng.standard_normal(12), rng.standard_normal(12)
        lhs = np.dot(apply_rotary(q, 17.0, sched), apply_rotary(k, 17.0, sched))
        assert abs(lhs - np.dot(q, k)) < 1e-9

    def test_random_sweep_all_pass(self, rng):
        sched = make_schedule("H", 16)
        reports = relative_position_reports(self.rotate, 16, sched, rng, 200, 1e-5)
        assert all(r.passed for r in reports)

    def test_pi_schedule_keeps_property(self, rng):
        sched = make_schedule("H", 16, method="pi", ratio=4.0)
        reports = relative_position_reports(self.rotate, 16, sched, rng, 200, 1e-5)
        assert all(r.passed for r in reports)
