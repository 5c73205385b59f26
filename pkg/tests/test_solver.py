"""Cross-checks of the time-fractional solution field.

Two representations that share no code beyond elementary quadrature are
compared pointwise: subordination (spatial kernel integrated against the
random-time density) and Fourier inversion (characteristic function
through the Mittag-Leffler function).  For ``n = 2`` both are also pinned
to the closed Wright form ``u(x, t) = t^{-alpha/2} W(-|x| t^{-alpha/2}) / 2``
and, at ``alpha = 1``, to the Gaussian heat kernel.  Conservation laws
(mass, integer moments, characteristic values), the Laplace-transform
identity, and the discretized-equation residual close the loop from the
opposite direction: they test the field against the equation itself, not
against another evaluation of the same formulas.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import simpson
from scipy.special import gamma as gamma_fn

from fracheat import (
    DomainError,
    EquationSpec,
    SolutionRequest,
    caputo_residual,
    kernel_density_grid,
    laplace_relation_check,
    solution_char_fn,
    solution_moment,
    solve,
    solve_fourier_ml,
    solve_subordination,
)
from fracheat._errors import StencilUnderflowError
from fracheat.specfun import MLParams, WrightParams, mittag_leffler, wright_w_grid

# value of the solution at the origin for n = 2, alpha = 1/2, t = 1:
# u(0, 1) = W(0) / 2 = 1 / (2 * Gamma(3/4))
HALF_ORIGIN = 0.4080244695491314
# classical heat kernel at the origin for t = 1: 1 / sqrt(4 pi)
HEAT_ORIGIN = 0.2820947917738781


def wright_closed_form(xs: np.ndarray, alpha: float, t: float) -> np.ndarray:
    """n = 2 solution through the Wright function, the closed benchmark."""
    wp = WrightParams(eta=-alpha / 2.0, beta=1.0 - alpha / 2.0)
    scale = t ** (-alpha / 2.0)
    return 0.5 * scale * wright_w_grid(-np.abs(xs) * scale, wp)


def gaussian(xs: np.ndarray, t: float) -> np.ndarray:
    return np.exp(-xs * xs / (4.0 * t)) / math.sqrt(4.0 * math.pi * t)


# ---------------------------------------------------------------------------
# degenerate order: alpha = 1 must reproduce the plain kernel
# ---------------------------------------------------------------------------

def test_degenerate_order_heat_kernel():
    xs = np.linspace(-5.0, 5.0, 21)
    req = SolutionRequest(EquationSpec(2), 1.0, 1.4, tuple(xs))
    assert_allclose(solve(req).grid_values(), gaussian(xs, 1.4),
                    rtol=0.0, atol=1e-12)


def test_degenerate_order_signed_kernel():
    xs = np.linspace(-4.0, 4.0, 9)
    req = SolutionRequest(EquationSpec(3), 1.0, 0.8, tuple(xs))
    field = solve_subordination(req)
    kern, _, _ = kernel_density_grid(EquationSpec(3), xs, 0.8, 1e-10)
    assert_allclose(field.grid_values(), kern, rtol=0.0, atol=1e-12)


# ---------------------------------------------------------------------------
# pinned origin values
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("solver", [solve_subordination, solve_fourier_ml])
def test_origin_value_half_order(solver):
    req = SolutionRequest(EquationSpec(2), 0.5, 1.0, (0.0,))
    field = solver(req)
    assert_allclose(field.values[0].value, HALF_ORIGIN, rtol=0.0, atol=1e-9)


def test_origin_value_classical_order():
    req = SolutionRequest(EquationSpec(2), 1.0, 1.0, (0.0,))
    field = solve_fourier_ml(req)
    assert_allclose(field.values[0].value, HEAT_ORIGIN, rtol=0.0, atol=1e-12)


# ---------------------------------------------------------------------------
# n = 2: both routes against the closed Wright form
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("alpha", [0.4, 0.5, 0.75])
@pytest.mark.parametrize("t", [0.7, 1.3])
def test_wright_closed_form_both_routes(alpha, t):
    xs = np.linspace(-3.0, 3.0, 13)
    closed = wright_closed_form(xs, alpha, t)
    req = SolutionRequest(EquationSpec(2), alpha, t, tuple(xs))
    assert_allclose(solve_subordination(req).grid_values(), closed,
                    rtol=0.0, atol=1e-8)
    assert_allclose(solve_fourier_ml(req).grid_values(), closed,
                    rtol=0.0, atol=1e-8)


@pytest.mark.parametrize("n, alpha", [(3, 0.7), (4, 0.8)])
def test_routes_cross_validate(n, alpha):
    xs = np.linspace(-4.0, 4.0, 9)
    req = SolutionRequest(EquationSpec(n), alpha, 1.0, tuple(xs))
    sub = solve_subordination(req).grid_values()
    fou = solve_fourier_ml(req).grid_values()
    assert_allclose(sub, fou, rtol=0.0, atol=1e-7)


def test_error_estimates_dominate_truth():
    """Reported per-point estimates must bound the actual error."""
    xs = np.linspace(-4.0, 4.0, 9)
    closed = wright_closed_form(xs, 0.5, 1.0)
    req = SolutionRequest(EquationSpec(2), 0.5, 1.0, tuple(xs))
    for solver in (solve_subordination, solve_fourier_ml):
        field = solver(req)
        diff = np.abs(field.grid_values() - closed)
        assert np.all(diff <= field.grid_errors() + 1e-12)


# ---------------------------------------------------------------------------
# route dispatch and request validation
# ---------------------------------------------------------------------------

def test_route_dispatch():
    xs = (-1.0, 0.0, 2.0)
    even = solve(SolutionRequest(EquationSpec(2), 0.6, 1.0, xs))
    assert even.route_used == ("fourier_ml",) * 3
    odd = solve(SolutionRequest(EquationSpec(3), 0.6, 1.0, xs))
    assert odd.route_used == ("subordination",) * 3
    assert len(odd.route_used) == len(odd.values)
    pinned = solve(SolutionRequest(EquationSpec(2), 0.6, 1.0, xs,
                                   route="subordination"))
    assert pinned.route_used == ("subordination",) * 3
    assert even.degraded is False


def test_time_route_pinning_consistent():
    """Pinning either density route must not move the answer."""
    for x in (0.0, 1.0):
        vals = []
        for tr in ("wright", "stable"):
            req = SolutionRequest(EquationSpec(2), 0.6, 1.0, (x,),
                                  time_route=tr)
            vals.append(solve_subordination(req).values[0].value)
        assert_allclose(vals[0], vals[1], rtol=0.0, atol=1e-10)


@pytest.mark.parametrize("kwargs", [
    {"alpha": 0.0},
    {"alpha": 1.2},
    {"t": 0.0},
    {"t": -1.0},
    {"route": "spectral"},
    {"x_grid": ()},
    {"x_grid": (0.0, 0.0, 1.0)},
    {"x_grid": (1.0, 0.0)},
    {"time_route": "frac_integral"},
    {"alpha": 1.0, "time_route": "wright"},
])
def test_request_validation(kwargs):
    base = {"spec": EquationSpec(2), "alpha": 0.5, "t": 1.0,
            "x_grid": (0.0, 1.0)}
    base.update(kwargs)
    with pytest.raises(DomainError):
        SolutionRequest(**base)


# ---------------------------------------------------------------------------
# characteristic function and integer moments
# ---------------------------------------------------------------------------

def test_char_fn_at_zero_is_one():
    for n in (2, 3, 4):
        assert solution_char_fn(EquationSpec(n), 0.6, 0.0, 1.3) == 1.0 + 0.0j


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("beta", [0.7, 1.3])
def test_char_fn_degenerate_order(n, beta):
    spec = EquationSpec(n)
    got = solution_char_fn(spec, 1.0, beta, 0.9)
    want = np.exp(complex(spec.k) * (-1j * beta) ** n * 0.9)
    assert_allclose(got, want, rtol=1e-14, atol=0.0)


def test_char_fn_even_is_real_mittag_leffler():
    got = solution_char_fn(EquationSpec(2), 0.6, 1.5, 1.0)
    assert abs(got.imag) < 1e-15
    want = mittag_leffler(-(1.5 ** 2), MLParams(alpha=0.6))
    assert_allclose(got.real, want.real, rtol=1e-13, atol=0.0)


def test_moment_closed_forms():
    # n = 2: mu_2 = 2 t^alpha / Gamma(alpha + 1)
    got = solution_moment(EquationSpec(2), 0.5, 2, 1.0)
    assert_allclose(got, 2.0 / gamma_fn(1.5), rtol=1e-14)
    # n = 4, k = -1: mu_4 = -24 t^alpha / Gamma(alpha + 1)
    got = solution_moment(EquationSpec(4), 0.5, 4, 1.0)
    assert_allclose(got, -24.0 / gamma_fn(1.5), rtol=1e-14)
    # n = 3, k = +1: mu_3 = -6 t^alpha / Gamma(alpha + 1), and time scaling
    got = solution_moment(EquationSpec(3), 0.8, 3, 2.0)
    assert_allclose(got, -6.0 * 2.0 ** 0.8 / gamma_fn(1.8), rtol=1e-14)
    # mass and off-multiples
    assert solution_moment(EquationSpec(3), 0.6, 0, 1.0) == 1.0
    assert solution_moment(EquationSpec(3), 0.6, 5, 1.0) == 0.0
    assert solution_moment(EquationSpec(2), 0.6, 3, 1.0) == 0.0


def test_moment_validation():
    with pytest.raises(DomainError):
        solution_moment(EquationSpec(2), 0.5, -2, 1.0)
    with pytest.raises(DomainError):
        solution_moment(EquationSpec(2), 0.5, 2.5, 1.0)  # type: ignore[arg-type]
    with pytest.raises(DomainError):
        solution_moment(EquationSpec(2), 1.3, 2, 1.0)
    with pytest.raises(DomainError):
        solution_moment(EquationSpec(2), 0.5, 2, 0.0)


# ---------------------------------------------------------------------------
# grid-level conservation laws
# ---------------------------------------------------------------------------

def test_even_grid_invariants():
    """Mass, second and fourth moments, characteristic values on a dense
    grid for n = 2, alpha = 0.6 (true probability density)."""
    spec = EquationSpec(2)
    h = 0.125
    xs = np.arange(-16.0, 16.0 + h, h)
    req = SolutionRequest(spec, 0.6, 1.0, tuple(xs))
    u = solve_fourier_ml(req).grid_values()
    assert abs(simpson(u, x=xs) - 1.0) < 1e-5
    for r in (2, 4):
        want = solution_moment(spec, 0.6, r, 1.0)
        got = simpson(xs ** r * u, x=xs)
        assert abs(got / want - 1.0) < 1e-4
    for beta in (0.5, 1.0, 2.0):
        want = solution_char_fn(spec, 0.6, beta, 1.0)
        got = simpson(u * np.exp(1j * beta * xs), x=xs)
        assert abs(got - want) < 1e-4


def test_signed_grid_invariants():
    """Same laws for n = 3, alpha = 0.5: the field is signed with an
    algebraic oscillatory tail on one side, so the window is lopsided."""
    spec = EquationSpec(3)
    h = 0.2
    xs = np.arange(-16.0, 72.0 + h, h)
    req = SolutionRequest(spec, 0.5, 1.0, tuple(xs))
    u = solve_subordination(req, tol=1e-9).grid_values()
    assert abs(simpson(u, x=xs) - 1.0) < 1e-6
    for r in (3, 6):
        want = solution_moment(spec, 0.5, r, 1.0)
        got = simpson(xs ** r * u, x=xs)
        assert abs(got / want - 1.0) < 1e-3
    # r = 2 is not a multiple of n: the signed moment must vanish
    assert abs(simpson(xs ** 2 * u, x=xs)) < 1e-4


def test_gaussian_family_nonnegative():
    for alpha in (0.4, 0.7, 1.0):
        xs = np.linspace(-6.0, 6.0, 17)
        req = SolutionRequest(EquationSpec(2), alpha, 1.0, tuple(xs))
        u = solve_fourier_ml(req).grid_values()
        assert np.min(u) >= -1e-12


# ---------------------------------------------------------------------------
# far field: small values must come with small, honest estimates
# ---------------------------------------------------------------------------

def test_far_field_cross_route():
    req = SolutionRequest(EquationSpec(3), 0.5, 1.0, (-30.0, 30.0))
    sub = solve_subordination(req).grid_values()
    fou = solve_fourier_ml(req).grid_values()
    assert_allclose(sub, fou, rtol=0.0, atol=1e-6)
    # the oscillatory side carries visible signal at x = 30
    assert abs(sub[1]) > 1e-7


def test_deep_tail_honest_zero():
    req = SolutionRequest(EquationSpec(3), 0.9, 1.0, (95.0,))
    field = solve_subordination(req)
    assert abs(field.values[0].value) <= field.values[0].error_estimate + 1e-12
    assert field.values[0].error_estimate < 1e-10


# ---------------------------------------------------------------------------
# Laplace-transform identity
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n, alpha, x, s, tol", [
    (2, 1.0, 1.0, 1.0, 1e-7),
    (2, 0.5, 0.5, 1.0, 1e-4),
])
def test_laplace_identity(n, alpha, x, s, tol):
    assert laplace_relation_check(EquationSpec(n), alpha, x, s) < tol


def test_laplace_validation():
    with pytest.raises(DomainError):
        laplace_relation_check(EquationSpec(2), 1.5, 1.0, 1.0)
    with pytest.raises(DomainError):
        laplace_relation_check(EquationSpec(2), 0.5, 1.0, 0.0)


# ---------------------------------------------------------------------------
# discretized-equation residual
# ---------------------------------------------------------------------------

def test_caputo_residual_converges_on_closed_form():
    """Refining the time grid must shrink the defect of the discretized
    equation evaluated on the closed n = 2 field (first-order scheme)."""
    spec = EquationSpec(2)

    def field(xs, t):
        return wright_closed_form(np.asarray(xs, dtype=float), 0.5, t)

    res = [caputo_residual(spec, 0.5, 3.0, np.linspace(0.0, 1.0, m + 1),
                           5e-3, field)
           for m in (64, 128, 256)]
    assert res[0] / res[1] > 2.0
    assert res[1] / res[2] > 2.0
    assert res[2] < 1.2e-4


def test_caputo_residual_degenerate_order():
    res = caputo_residual(EquationSpec(2), 1.0, 3.0,
                          np.linspace(0.0, 1.0, 129), 1e-2)
    assert res < 1e-3


def test_caputo_validation():
    spec = EquationSpec(2)
    good_t = np.linspace(0.0, 1.0, 65)
    with pytest.raises(DomainError):
        caputo_residual(spec, 0.5, 3.0, np.linspace(0.0, 1.0, 33), 0.1)
    with pytest.raises(DomainError):
        caputo_residual(spec, 0.5, 3.0, np.linspace(0.1, 1.0, 65), 0.1)
    bad = np.append(0.0, np.geomspace(1e-3, 1.0, 64))
    with pytest.raises(DomainError):
        caputo_residual(spec, 0.5, 3.0, bad, 0.1)
    with pytest.raises(DomainError):
        caputo_residual(spec, 0.5, 3.0, good_t, 0.0)
    with pytest.raises(DomainError):
        caputo_residual(spec, 1.5, 3.0, good_t, 0.1)
    with pytest.raises(DomainError):
        # 5-point stencil centered at 0 puts a node on the origin
        caputo_residual(EquationSpec(3), 0.5, 0.0, good_t, 0.1)
    with pytest.raises(StencilUnderflowError):
        caputo_residual(spec, 0.5, 3.0, good_t, 1e-4,
                        lambda xs, t: np.full(np.asarray(xs).size, 1e-20))
