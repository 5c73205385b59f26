"""Tests for the signed higher-order heat kernel module.

Closed-form oracles: the Gaussian for order 2, the Airy function for
order 3, and ``exp(-sqrt(s) |x|) / (2 sqrt(s))`` for the order-2 spatial
Laplace transform.  Order 4 and 5 kernel values are frozen from the
independent brute-force contour oracles used in the quadrature tests.
"""
from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.special import airy

from fracheat._errors import DomainError
from fracheat.kernel import (
    EquationSpec,
    SignedDensitySample,
    kernel_density,
    kernel_density_grid,
    kernel_laplace,
    kernel_moment,
    kernel_moment_numeric,
    make_equation_spec,
    root_system,
)
from fracheat.quadrature import integrate_adaptive, kernel_contour_values


def gaussian_kernel(x, t):
    """Order-2 kernel: N(0, 2t) density."""
    return math.exp(-x * x / (4.0 * t)) / math.sqrt(4.0 * math.pi * t)


def airy_kernel(x, t):
    """Order-3 kernel for the +1 sign: (3t)^{-1/3} Ai(-x (3t)^{-1/3})."""
    scale = (3.0 * t) ** (1.0 / 3.0)
    return airy(-x / scale)[0] / scale


class TestEquationSpec:
    @pytest.mark.parametrize("n,expected", [(2, 1), (4, -1), (6, 1), (8, -1)])
    def test_even_sign_rule(self, n, expected):
        assert make_equation_spec(n).k == expected
        # The recorded odd_sign must not influence even orders.
        assert make_equation_spec(n, -1).k == expected

    @pytest.mark.parametrize("sign", [1, -1])
    @pytest.mark.parametrize("n", [3, 5, 7])
    def test_odd_sign_choice(self, n, sign):
        assert make_equation_spec(n, sign).k == sign

    def test_rejects_bad_order(self):
        with pytest.raises(DomainError):
            make_equation_spec(1)
        with pytest.raises(DomainError):
            make_equation_spec(0)
        with pytest.raises(DomainError):
            EquationSpec(n=3, odd_sign=2)

    def test_spec_is_immutable(self):
        spec = make_equation_spec(4)
        with pytest.raises(AttributeError):
            spec.n = 6


class TestRootSystem:
    def test_order_two_roots(self):
        rs = root_system(make_equation_spec(2))
        assert_allclose(rs.roots, [1.0, -1.0], atol=1e-15)
        assert rs.incoming == (1,)
        assert rs.outgoing == (0,)

    def test_order_three_enumeration(self):
        rs = root_system(make_equation_spec(3, 1))
        expected = np.exp(2j * np.pi * np.arange(3) / 3)
        assert_allclose(rs.roots, expected, atol=1e-15)
        assert set(rs.incoming) == {1, 2}
        assert set(rs.outgoing) == {0}

    def test_order_four_enumeration(self):
        rs = root_system(make_equation_spec(4))
        expected = np.exp(1j * (2 * np.arange(4) + 1) * np.pi / 4)
        assert_allclose(rs.roots, expected, atol=1e-15)
        assert len(rs.incoming) == 2 and len(rs.outgoing) == 2

    @pytest.mark.parametrize("sign", [1, -1])
    @pytest.mark.parametrize("n", range(2, 9))
    def test_root_and_weight_identities(self, n, sign):
        if n % 2 == 0 and sign == -1:
            pytest.skip("even order ignores the sign switch")
        spec = make_equation_spec(n, sign)
        rs = root_system(spec)
        assert_allclose(np.abs(rs.roots), 1.0, atol=1e-12)
        assert_allclose(rs.roots ** n, spec.k, atol=1e-12)
        assert len(rs.incoming) + len(rs.outgoing) == n
        # Interface system rows: sum z_k theta_k^j vanishes for
        # j = 0..n-2 and equals -k for j = n-1.
        for j in range(n - 1):
            assert abs(np.sum(rs.z * rs.roots ** j)) < 1e-12
        assert abs(np.sum(rs.z * rs.roots ** (n - 1)) + spec.k) < 1e-12


class TestSignedDensitySample:
    def test_rejects_negative_error(self):
        with pytest.raises(DomainError):
            SignedDensitySample(x=0.0, value=1.0, error_estimate=-1e-3)


class TestKernelDensity:
    @pytest.mark.parametrize("x,t", [(0.0, 1.0), (0.5, 1.0), (2.0, 0.5),
                                     (-3.0, 2.0), (6.0, 1.5)])
    def test_order_two_gaussian(self, x, t):
        sample = kernel_density(make_equation_spec(2), x, t)
        assert_allclose(sample.value, gaussian_kernel(x, t), rtol=1e-8,
                        atol=1e-12)
        assert sample.value >= 0.0
        assert sample.error_estimate >= 0.0

    def test_order_two_never_negative_in_far_tail(self):
        spec = make_equation_spec(2)
        for x in (8.0, 12.0, 20.0):
            assert kernel_density(spec, x, 0.5).value >= 0.0

    @pytest.mark.parametrize("x", [-2.2, -1.3, 0.0, 0.7, 1.0, 3.1])
    def test_order_three_airy(self, x):
        t = 1.0 / 3.0
        plus = kernel_density(make_equation_spec(3, 1), x, t)
        assert_allclose(plus.value, airy_kernel(x, t), atol=1e-9)
        # The two admissible sign choices give mirror-image kernels.
        minus = kernel_density(make_equation_spec(3, -1), -x, t)
        assert_allclose(minus.value, plus.value, atol=1e-9)

    def test_order_four_frozen(self):
        spec = make_equation_spec(4)
        frozen = {(0.0, 1.0): 0.2885168693082348,
                  (1.0, 1.0): 0.2426650945641037,
                  (2.5, 0.5): 0.04059788834746792,
                  (4.0, 1.0): -0.02258719805410781}
        for (x, t), ref in frozen.items():
            assert_allclose(kernel_density(spec, x, t).value, ref,
                            atol=1e-9)

    def test_order_five_frozen(self):
        spec = make_equation_spec(5, 1)
        frozen = {(0.0, 1.0): 0.2779578582602068,
                  (1.5, 1.0): 0.1274996408081853,
                  (-1.5, 1.0): 0.3040158738216629}
        for (x, t), ref in frozen.items():
            assert_allclose(kernel_density(spec, x, t).value, ref,
                            atol=1e-9)

    @pytest.mark.parametrize("x", [0.5, 1.0, 2.0])
    def test_order_four_symmetry(self, x):
        spec = make_equation_spec(4)
        left = kernel_density(spec, -x, 1.0).value
        right = kernel_density(spec, x, 1.0).value
        assert_allclose(left, right, atol=1e-10)

    def test_sign_changes_appear_above_order_two(self):
        # The order-4 kernel is genuinely signed.
        spec = make_equation_spec(4)
        vals, _, _ = kernel_density_grid(spec, np.linspace(0.0, 6.0, 25),
                                         1.0)
        assert vals.min() < -1e-4 and vals.max() > 0.1

    @pytest.mark.parametrize("n,sign", [(2, 1), (3, 1), (3, -1), (4, 1),
                                        (5, 1)])
    def test_self_similar_scaling(self, n, sign):
        spec = make_equation_spec(n, sign)
        for x in (-1.3, 0.0, 0.8, 2.1):
            for t in (0.5, 2.0):
                direct = kernel_density(spec, x, t, 1e-11).value
                rescaled = t ** (-1.0 / n) * kernel_density(
                    spec, x * t ** (-1.0 / n), 1.0, 1e-11).value
                assert_allclose(direct, rescaled, atol=1e-9)

    def test_grid_matches_pointwise(self):
        spec = make_equation_spec(3, 1)
        xs = np.linspace(-3.0, 3.0, 13)
        vals, err, _ = kernel_density_grid(spec, xs, 0.7)
        assert err >= 0.0
        for i in (0, 4, 9, 12):
            assert_allclose(vals[i],
                            kernel_density(spec, float(xs[i]), 0.7).value,
                            atol=1e-9)

    def test_rejects_nonpositive_time(self):
        spec = make_equation_spec(2)
        with pytest.raises(DomainError):
            kernel_density(spec, 0.0, 0.0)
        with pytest.raises(DomainError):
            kernel_density(spec, 0.0, -1.0)


class TestKernelMoment:
    def test_reference_values(self):
        assert kernel_moment(make_equation_spec(3, 1), 3, 1.0) == -6.0
        assert kernel_moment(make_equation_spec(2), 2, 1.7) == 2 * 1.7
        assert kernel_moment(make_equation_spec(3, 1), 2, 1.0) == 0.0
        assert kernel_moment(make_equation_spec(4), 4, 1.0) == -24.0
        assert kernel_moment(make_equation_spec(2), 0, 5.0) == 1.0

    def test_indivisible_orders_vanish(self):
        spec = make_equation_spec(4)
        for r in (1, 2, 3, 5, 6, 7, 9):
            assert kernel_moment(spec, r, 2.0) == 0.0

    def test_sign_switch_flips_odd_blocks(self):
        plus = make_equation_spec(3, 1)
        minus = make_equation_spec(3, -1)
        for r in (3, 9):
            assert kernel_moment(plus, r, 1.5) == -kernel_moment(minus, r, 1.5)
        # Even multiples of n are sign-independent.
        assert kernel_moment(plus, 6, 1.5) == kernel_moment(minus, 6, 1.5)

    @given(st.integers(min_value=0, max_value=4),
           st.floats(min_value=0.1, max_value=5.0))
    @settings(max_examples=40, deadline=None)
    def test_time_homogeneity(self, j, t):
        # The r-th moment scales like t^{r/n}.
        spec = make_equation_spec(3, 1)
        r = 3 * j
        base = kernel_moment(spec, r, 1.0)
        assert_allclose(kernel_moment(spec, r, t), base * t ** j,
                        rtol=1e-12)

    def test_rejects_bad_arguments(self):
        spec = make_equation_spec(2)
        with pytest.raises(DomainError):
            kernel_moment(spec, -1, 1.0)
        with pytest.raises(DomainError):
            kernel_moment(spec, 1.5, 1.0)
        with pytest.raises(DomainError):
            kernel_moment(spec, 2, 0.0)


class TestKernelMomentNumeric:
    @pytest.mark.parametrize("n,t", [(2, 0.5), (2, 1.0), (2, 2.0),
                                     (3, 0.5), (3, 1.0), (3, 2.0),
                                     (4, 0.5), (4, 1.0), (4, 2.0),
                                     (5, 0.5), (5, 1.0), (5, 2.0)])
    def test_total_mass_is_one(self, n, t):
        spec = make_equation_spec(n, 1)
        res = kernel_moment_numeric(spec, 0, t, 1e-8)
        assert_allclose(res.value, 1.0, atol=1e-7)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_moments_match_closed_form(self, n):
        spec = make_equation_spec(n, 1)
        t = 1.0
        for r in range(2 * n + 1):
            res = kernel_moment_numeric(spec, r, t, 1e-6)
            ref = kernel_moment(spec, r, t)
            scale = max(abs(ref), t ** (r / n) * math.gamma(r + 1.0)
                        / math.gamma(r / n + 1.0))
            assert abs(res.value - ref) <= 1e-4 * scale, (r, res.value, ref)

    @pytest.mark.parametrize("r,t", [(0, 0.5), (3, 2.0), (6, 0.5)])
    def test_mirrored_sign_moments(self, r, t):
        res = kernel_moment_numeric(make_equation_spec(3, -1), r, t, 1e-6)
        ref = kernel_moment(make_equation_spec(3, -1), r, t)
        scale = max(abs(ref), t ** (r / 3) * math.gamma(r + 1.0)
                    / math.gamma(r / 3 + 1.0))
        assert abs(res.value - ref) <= 1e-4 * scale

    def test_rejects_bad_arguments(self):
        spec = make_equation_spec(2)
        with pytest.raises(DomainError):
            kernel_moment_numeric(spec, -2, 1.0)
        with pytest.raises(DomainError):
            kernel_moment_numeric(spec, 0, -0.5)


class TestKernelLaplace:
    @pytest.mark.parametrize("x,s", [(1.0, 1.0), (0.5, 0.7), (1.5, 1.0),
                                     (-2.0, 2.5), (0.0, 3.0)])
    def test_order_two_closed_form(self, x, s):
        value = kernel_laplace(make_equation_spec(2), x, s)
        ref = math.exp(-math.sqrt(s) * abs(x)) / (2.0 * math.sqrt(s))
        assert_allclose(value, ref, rtol=1e-13)

    @pytest.mark.parametrize("n,sign", [(2, 1), (3, 1), (3, -1), (4, 1),
                                        (5, 1), (5, -1)])
    def test_continuous_at_origin(self, n, sign):
        spec = make_equation_spec(n, sign)
        for s in (0.5, 2.0):
            above = kernel_laplace(spec, 1e-12, s)
            below = kernel_laplace(spec, -1e-12, s)
            assert_allclose(above, below, rtol=1e-9)

    def test_positive_transform_decays_in_x(self):
        spec = make_equation_spec(4)
        vals = [kernel_laplace(spec, x, 1.0) for x in (0.0, 1.0, 3.0, 8.0)]
        assert all(abs(b) < abs(a) for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("n,sign,x,s", [
        (2, 1, 0.5, 0.7), (2, 1, 1.5, 1.0), (2, 1, 2.0, 2.5),
        (3, 1, -0.6, 1.0), (3, 1, -1.3, 2.0),
        (3, -1, 0.6, 1.0), (3, -1, 1.3, 2.0),
        (4, 1, 0.7, 2.0), (4, 1, 0.0, 1.0), (4, 1, 1.5, 0.8),
        (5, 1, 1.0, 1.5), (5, -1, -1.0, 1.5),
    ])
    def test_matches_numeric_time_transform(self, n, sign, x, s):
        # Independent oracle: integrate e^{-s t} p_n(x, t) over t after
        # the self-similar substitution t = tau^n, which turns every
        # evaluation into a reuse of the t = 1 kernel.
        spec = make_equation_spec(n, sign)

        def g(taus):
            vals, _, _ = kernel_contour_values(n, spec.k, x / taus, 1.0,
                                               1e-11)
            return np.exp(-s * taus ** n) * vals * n * taus ** (n - 2.0)

        tau_hi = (45.0 / s) ** (1.0 / n)
        # |x|/tau beyond this cutoff leaves the t=1 kernel below ~4e-18
        # on its decaying side (all chosen odd-order pairs sit there).
        cutoff = {2: 13.0, 3: 28.0, 4: 47.0, 5: 68.0}[n]
        tau_lo = abs(x) / cutoff
        numeric = integrate_adaptive(g, tau_lo, tau_hi, 1e-8,
                                     initial_intervals=32)
        assert_allclose(kernel_laplace(spec, x, s), numeric.value,
                        atol=1e-6)

    def test_rejects_nonpositive_s(self):
        with pytest.raises(DomainError):
            kernel_laplace(make_equation_spec(2), 1.0, 0.0)
