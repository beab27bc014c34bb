import re
from fractions import Fraction

import mpmath
import pytest

import funcspace
from kernel import ConstraintError, DomainError, HypothesisError, circle_grid, relative_discrepancy
from qcore import QParams, q_derivative
from theory import (
    case_exponent,
    case_for_beta,
    check_thm1,
    check_vor,
    estimate_rate,
    eval_L,
    fit_rate,
    sup_error,
    theorem_context,
    thm1_rhs,
    vor_residual,
    vor_rhs,
)

E2 = funcspace.monomial(2)


def test_case_selection():
    assert case_for_beta(Fraction(3, 10)) == "i"
    assert case_for_beta(0.5) == "iii"
    assert case_for_beta(0.6) == "ii"
    assert case_exponent("i", 0.3) == Fraction(3, 10)
    assert case_exponent("ii", 0.6) == Fraction(2, 5)
    assert case_exponent("iii", 0.5) == Fraction(1, 2)
    with pytest.raises(DomainError):
        case_exponent("iv", 0.5)


def test_eval_L_on_square(ctx):
    # D_q z^2 = (q+1) z, so the q-difference quotient is z for every q > 1
    assert abs(eval_L(E2, 0.5, 2, 0.3, "as_lq", ctx) - 0.5) < 1e-70
    assert abs(eval_L(E2, 0.5, 2, 0.3, "as_theorem2", ctx) - 0.25) < 1e-70
    assert abs(eval_L(E2, 0.5, 1, 0.3, ctx=ctx) - 0.5) < 1e-70
    assert abs(eval_L(E2, 0.5, 2, 0.6, ctx=ctx) + 0.25) < 1e-70
    assert abs(eval_L(E2, 0.5, 1, 0.5, ctx=ctx) - 0.25) < 1e-70


def test_eval_L_rejects_bad_input(ctx):
    with pytest.raises(DomainError):
        eval_L(E2, 0.5, 2, 0.3, "bogus", ctx)
    with pytest.raises(DomainError):
        eval_L(E2, 0.5, Fraction(1, 2), 0.3, ctx=ctx)
    with pytest.raises(DomainError):
        eval_L(E2, 0.5, 2, 1, ctx=ctx)
    with pytest.raises(DomainError):
        eval_L(funcspace.exp_neg(3), 2.5, Fraction(3, 2), 0.3, ctx=ctx)


@pytest.mark.parametrize("f", [funcspace.exp_neg(3), funcspace.monomial(3)], ids=["exp_neg", "e_3"])
@pytest.mark.parametrize("beta", [Fraction(3, 10), Fraction(1, 2)])
def test_eval_L_approaches_q_one_linearly(ctx, f, beta):
    z = ctx.mp.mpc(0.3, 0.2)
    limit = eval_L(f, z, 1, beta, ctx=ctx)
    ratios = []
    for k in range(2, 7):
        q = 1 + Fraction(1, 10 ** k)
        ratios.append(abs(eval_L(f, z, q, beta, "as_lq", ctx) - limit) / (ctx.mpf(q) - 1))
    assert min(ratios) > 0
    assert max(ratios) <= 3 * min(ratios)


def test_eval_L_of_cube_differs_by_q_minus_one_times_square(ctx):
    # D_q z^3 = (1 + q + q^2) z^2, so L_q - L_1 = (q - 1) z^2
    z = ctx.mp.mpc(0.3, 0.2)
    e3 = funcspace.monomial(3)
    for k in range(2, 7):
        q = 1 + Fraction(1, 10 ** k)
        delta = eval_L(e3, z, q, 0.3, "as_lq", ctx) - eval_L(e3, z, 1, 0.3, ctx=ctx)
        assert abs(delta / (ctx.mpf(q) - 1) - z * z) < 1e-40


def test_q_derivative_tends_to_derivative(ctx):
    f = funcspace.exp_neg(3)
    value = q_derivative(f, 0.4, Fraction(1000001, 1000000), ctx)
    assert abs(value + ctx.mp.exp(-ctx.mpf(0.4))) < 1e-5


@pytest.mark.parametrize("q", [1, Fraction(3, 2), 2])
def test_residual_of_identity_has_closed_form(ctx, q):
    # R(e_1; z) = z/(1 + a_n z), so the case-ii residual is a_n^2 z^3/(1 + a_n z)
    e1 = funcspace.monomial(1)
    for n in (2, 6, 12):
        p = QParams.create(q, Fraction(3, 5), n, ctx)
        for z in circle_grid(Fraction(3, 5), 8, ctx).points:
            expected = p.a_n ** 2 * z ** 3 / (1 + p.a_n * z)
            assert relative_discrepancy(vor_residual(e1, p, z), expected, ctx) <= 1e-20


def test_residual_of_constant_vanishes(ctx):
    p = QParams.create(Fraction(3, 2), Fraction(1, 2), 9, ctx)
    assert abs(vor_residual(funcspace.monomial(0), p, ctx.mp.mpc(0.3, 0.4))) < 1e-60


def test_residual_case_must_match_beta(ctx):
    p = QParams.create(1, Fraction(3, 5), 8, ctx)
    with pytest.raises(HypothesisError):
        vor_residual(funcspace.monomial(1), p, 0.5, case="i")


def test_thm1_rhs(ctx, exp_neg3):
    mp = ctx.mp
    p = QParams.create(1, Fraction(1, 2), 16, ctx)
    x, y = ctx.mpf(Fraction(12, 5)), ctx.mpf(Fraction(6, 5))
    # sum m(m-1) x^m/m! = x^2 e^x and sum_{m>=1} y^m/m! = e^y - 1
    expected = x ** 2 * mp.exp(x) / 4 + y * (mp.exp(y) - 1) / 4
    assert abs(thm1_rhs(exp_neg3, p, Fraction(3, 5)) - expected) < 1e-25
    assert abs(thm1_rhs(funcspace.monomial(1), p, Fraction(3, 5)) - ctx.mpf(Fraction(9, 25))) < 1e-70
    assert thm1_rhs(funcspace.monomial(0), p, Fraction(3, 5)) == 0


def test_vor_rhs_case_i(ctx, exp_neg3):
    mp = ctx.mp
    p = QParams.create(1, Fraction(3, 10), 64, ctx)
    x, y = ctx.mpf(Fraction(12, 5)), ctx.mpf(Fraction(6, 5))
    shifted = (x * mp.exp(x) - 2 * mp.exp(x) + 2 + x) / x ** 2
    curved = y ** 3 * mp.exp(y)
    expected = (4 * mp.power(64, ctx.mpf(Fraction(-3, 5))) * shifted
                + 4 * mp.power(64, ctx.mpf(Fraction(-7, 10))) * curved)
    assert abs(vor_rhs(exp_neg3, p, Fraction(3, 5)) - expected) < 1e-25


def test_vor_rhs_case_ii(ctx):
    mp = ctx.mp
    p = QParams.create(Fraction(11, 10), Fraction(3, 5), 40, ctx)
    x = ctx.mpf(Fraction(121, 50))
    # sum m(m-1)|c_m| x^m for sin is x^2 sinh x
    expected = 6 * mp.power(p.bracket_n, ctx.mpf(Fraction(-3, 5))) * x ** 2 * mp.sinh(x)
    assert abs(vor_rhs(funcspace.sin(3), p, Fraction(11, 20)) - expected) < 1e-25


def test_vor_rhs_case_iii(ctx):
    mp = ctx.mp
    p = QParams.create(Fraction(3, 2), Fraction(1, 2), 11, ctx)
    x = ctx.mpf(Fraction(99, 20))
    expected = 9 / p.bracket_n * mp.exp(x) * (x ** 4 + 4 * x ** 3 + 2 * x ** 2)
    assert abs(vor_rhs(funcspace.exp_neg(Fraction(11, 2)), p, Fraction(11, 20)) - expected) < 1e-20 * expected


def test_vor_rhs_of_linear_functions_vanishes(ctx):
    for beta in (Fraction(3, 10), Fraction(1, 2), Fraction(3, 5)):
        p = QParams.create(1, beta, 32, ctx)
        assert vor_rhs(funcspace.monomial(1), p, Fraction(3, 5)) == 0
        assert vor_rhs(funcspace.monomial(0), p, Fraction(3, 5)) == 0


def test_theorem_context_reports_first_failure():
    context = theorem_context("T1", 1, Fraction(1, 2), Fraction(7, 10), 2)
    assert not context.ok
    with pytest.raises(ConstraintError, match=re.escape("r < R/(4q²) fails: 0.7 ≥ 0.5")):
        context.require()


def test_theorem_context_n0_and_require_n():
    context = theorem_context("T1", 1, Fraction(1, 2), Fraction(3, 5), 3).require()
    assert context.n0 == 3
    assert context.case is None
    context.require_n(3)
    with pytest.raises(ConstraintError, match="n ≥ n₀ fails: 2 < 3"):
        context.require_n(2)


def test_theorem_context_case_constraints():
    assert theorem_context("T2i", 1, Fraction(3, 10), Fraction(3, 5), 3).ok
    assert theorem_context("T2iii", Fraction(3, 2), Fraction(1, 2), Fraction(11, 20), Fraction(11, 2)).n0 == 11
    wrong_case = theorem_context("T2ii", 1, Fraction(1, 2), Fraction(3, 5), 3)
    assert [c.label for c in wrong_case.failures()] == ["1/2 < β"]
    small_r = theorem_context("T3iii", 1, Fraction(1, 2), Fraction(1, 2), 3)
    assert "1/2 < r" in [c.label for c in small_r.failures()]
    with pytest.raises(DomainError):
        theorem_context("T4", 1, Fraction(1, 2), Fraction(3, 5), 3)


def test_check_thm1_holds(ctx, exp_neg3):
    p = QParams.create(1, Fraction(1, 2), 16, ctx)
    check = check_thm1(exp_neg3, p, Fraction(3, 5), 3, M=32)
    assert check.holds and check.precision_ok
    assert 0 < check.lhs_sup < check.rhs
    assert 0 < check.normalized < 1


def test_check_thm1_refuses_unbounded_and_settles_constants(ctx):
    p = QParams.create(1, Fraction(1, 2), 16, ctx)
    with pytest.raises(HypothesisError, match="unbounded"):
        check_thm1(E2, p, Fraction(3, 5), 3, M=8)
    check = check_thm1(funcspace.monomial(0), p, Fraction(3, 5), 3, M=8)
    assert check.lhs_sup == 0 and check.rhs == 0
    assert check.holds
    assert check.normalized == 0


def test_check_thm1_refuses_small_n(ctx, exp_neg3):
    p = QParams.create(1, Fraction(1, 2), 2, ctx)
    with pytest.raises(ConstraintError):
        check_thm1(exp_neg3, p, Fraction(3, 5), 3, M=8)


def test_check_vor_case_i(ctx, exp_neg3):
    p = QParams.create(1, Fraction(3, 10), 64, ctx)
    check = check_vor(exp_neg3, p, Fraction(3, 5), 3, M=16)
    assert check.holds and check.precision_ok


def test_check_vor_case_ii(ctx):
    p = QParams.create(Fraction(11, 10), Fraction(3, 5), 40, ctx)
    check = check_vor(funcspace.sin(3), p, Fraction(11, 20), 3, M=16)
    assert check.holds and check.precision_ok


def test_check_vor_case_iii(ctx):
    p = QParams.create(Fraction(3, 2), Fraction(1, 2), 11, ctx)
    check = check_vor(funcspace.exp_neg(Fraction(11, 2)), p, Fraction(11, 20), Fraction(11, 2), M=16)
    assert check.holds and check.precision_ok


@pytest.mark.slow
@pytest.mark.parametrize("q, r, R, n_list", [
    (1, Fraction(3, 5), 3, [16, 32, 64, 128]),
    (Fraction(3, 2), Fraction(11, 20), Fraction(11, 2), [8, 12, 16, 20, 24]),
], ids=["q=1", "q=1.5"])
def test_upper_estimate_holds_and_error_decreases(ctx, q, r, R, n_list):
    f = funcspace.exp_neg(R)
    checks = [check_thm1(f, QParams.create(q, Fraction(1, 2), n, ctx), r, R, M=64) for n in n_list]
    assert all(check.holds and check.precision_ok for check in checks)
    errors = [check.lhs_sup for check in checks]
    assert errors == sorted(errors, reverse=True)


VOR_SETTINGS = {
    "i": (1, Fraction(3, 10), Fraction(3, 5), 3, [16, 64, 128]),
    "ii": (Fraction(11, 10), Fraction(3, 5), Fraction(11, 20), 3, [40, 48]),
    "iii": (Fraction(3, 2), Fraction(1, 2), Fraction(11, 20), Fraction(11, 2), [11, 16, 22]),
}


@pytest.mark.slow
@pytest.mark.parametrize("case", sorted(VOR_SETTINGS))
@pytest.mark.parametrize("name", ["exp_neg", "sin", "inv_shift:6"])
def test_voronovskaja_bound_across_cases(ctx, case, name):
    q, beta, r, R, n_list = VOR_SETTINGS[case]
    f = funcspace.parse_function(name, R)
    for n in n_list:
        check = check_vor(f, QParams.create(q, beta, n, ctx), r, R, case=case, M=32)
        assert check.holds and check.precision_ok, (name, case, n)


def test_checks_read_float_radius_exactly(ctx, exp_neg3):
    p = QParams.create(1, Fraction(1, 2), 16, ctx)
    from_float = check_thm1(exp_neg3, p, 0.6, 3, M=8)
    exact = check_thm1(exp_neg3, p, Fraction(3, 5), 3, M=8)
    assert from_float.lhs_sup == exact.lhs_sup
    assert from_float.rhs == exact.rhs
    assert sup_error(exp_neg3, p, 0.6, 8)[0] == exact.lhs_sup


def test_checks_accept_only_a_grid_on_the_radius(ctx, exp_neg3):
    p = QParams.create(1, Fraction(1, 2), 16, ctx)
    grid = circle_grid(Fraction(3, 5), 8, ctx)
    assert check_thm1(exp_neg3, p, Fraction(3, 5), 3, grid=grid).lhs_sup == check_thm1(
        exp_neg3, p, Fraction(3, 5), 3, M=8).lhs_sup
    with pytest.raises(DomainError, match="grid radius"):
        check_thm1(exp_neg3, p, Fraction(3, 5), 3, grid=circle_grid(Fraction(7, 10), 8, ctx))
    with pytest.raises(DomainError, match="grid has 8 points"):
        check_thm1(exp_neg3, p, Fraction(3, 5), 3, grid=grid, M=16)
    with pytest.raises(DomainError, match="grid radius"):
        check_vor(exp_neg3, QParams.create(1, Fraction(3, 10), 64, ctx), Fraction(3, 5), 3, grid=circle_grid(0.6, 8, ctx))


def test_sup_error_refuses_disk_around_pole(ctx, exp_neg3):
    # a_4 = 1/2 at q = 1, beta = 1/2: the pole -2 sits on |z| = 2
    p = QParams.create(1, Fraction(1, 2), 4, ctx)
    with pytest.raises(DomainError, match="pole"):
        sup_error(exp_neg3, p, 2, 8)


def test_fit_rate_on_exact_power_law():
    pairs = [(mpmath.mpf(b), 3 * mpmath.mpf(b) ** -0.5) for b in (4, 16, 64, 256)]
    report = fit_rate(pairs, Fraction(1, 2))
    assert report.fitted_slope == pytest.approx(-0.5, abs=1e-9)
    assert report.window_ratio == pytest.approx(1, abs=1e-9)
    assert report.holds


def test_fit_rate_flags_wrong_slope():
    pairs = [(mpmath.mpf(b), mpmath.mpf(b) ** -0.9) for b in (4, 16, 64)]
    report = fit_rate(pairs, Fraction(1, 2))
    assert not report.slope_ok
    assert not report.holds


def test_fit_rate_input_errors():
    with pytest.raises(DomainError):
        fit_rate([(4, 1), (16, 0.5)], 0.5)
    with pytest.raises(HypothesisError):
        fit_rate([(4, 1), (16, 0), (64, 0.25)], 0.5)


def test_estimate_rate_refuses_degenerate_input(ctx):
    with pytest.raises(DomainError):
        estimate_rate(funcspace.exp_neg(3), 1, 0.5, 0.6, 3, [16, 32], ctx=ctx)
    with pytest.raises(HypothesisError):
        estimate_rate(funcspace.monomial(0), 1, 0.5, 0.6, 3, [16, 32, 64], ctx=ctx)
    with pytest.raises(HypothesisError):
        estimate_rate(funcspace.monomial(1), 1, 0.3, 0.6, 3, [16, 32, 64], ctx=ctx)
    with pytest.raises(DomainError):
        estimate_rate(funcspace.exp_neg(3), 1, 0.5, 0.6, 3, [32, 16, 64], ctx=ctx)


@pytest.mark.slow
def test_estimate_rate_at_q_one(ctx):
    report = estimate_rate(funcspace.exp_neg(Fraction(5, 2)), 1, 0.5, 0.6, 2.5, [64, 128, 256, 512], M=64, ctx=ctx)
    errors = [err for _, err in report.errors]
    assert errors == sorted(errors, reverse=True)
    assert report.slope_ok
    assert report.window_ok
    assert all(report.precision_ok)


@pytest.mark.slow
def test_estimate_rate_above_q_one(ctx):
    n_list = list(range(11, 23))
    report = estimate_rate(funcspace.exp_neg(Fraction(11, 2)), 1.5, 0.5, 0.55, 5.5, n_list, M=64, ctx=ctx)
    assert report.case == "iii"
    assert report.n_list == tuple(n_list)
    assert report.expected_slope == -0.5
    assert report.slope_ok
    assert report.window_ok
    assert all(report.precision_ok)
