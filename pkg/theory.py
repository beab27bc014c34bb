"""Quantitative statements about R_{n,q}: the upper estimate, the
Voronovskaja correction L and its residual bounds, and exact-order rates.

Every check gates on its hypotheses first (ConstraintError / HypothesisError)
and reports numbers computed at doubled precision together with the
agreement flag of the P/2P re-run.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

import config
from funcspace import (
    M2_M1_2,
    M_M1,
    M_MINUS_2,
    ONE_FROM_1,
    FunctionSpec,
    derivative_at,
    eval_in_disk,
    weighted_tail_sum,
)
from kernel import (
    DEFAULT_CONTEXT,
    ConstraintError,
    DomainError,
    HypothesisError,
    NumericContext,
    as_rational,
    circle_grid,
    precision_checked,
    relative_discrepancy,
    sup_norm,
)
from operators import BalazsSzabadosOperator, admissibility, pole_outside_disk
from qcore import QParams, q_derivative, q_integer, rational_power_at_least, rational_power_cmp

CASES = ("i", "ii", "iii")
CASE_TAGS = ("T1", "T2i", "T2ii", "T2iii", "T3i", "T3ii", "T3iii")
VARIANTS = ("as_lq", "as_theorem2")
HALF = Fraction(1, 2)


def case_for_beta(beta) -> str:
    """i for beta < 1/2, iii for beta = 1/2, ii above."""
    beta = as_rational(beta)
    if beta < HALF:
        return "i"
    if beta == HALF:
        return "iii"
    return "ii"


def case_exponent(case: str, beta) -> Fraction:
    """e with error ~ [n]_q^(-e): beta, 1 - beta or 1/2."""
    beta = as_rational(beta)
    return {"i": beta, "ii": 1 - beta, "iii": HALF}[_check_case(case)]


def _check_case(case: str) -> str:
    if case not in CASES:
        raise DomainError(f"case must be one of {', '.join(CASES)}, got {case!r}")
    return case


def _match_case(case: Optional[str], beta) -> str:
    expected = case_for_beta(beta)
    if case is None:
        return expected
    if _check_case(case) != expected:
        raise HypothesisError(f"case {case} does not match beta = {beta} (which is case {expected})")
    return case


# ---- Hypothesis chains ----


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return f"{float(x):.6g}"


@dataclass(frozen=True)
class Constraint:
    label: str
    holds: bool
    lhs: Any
    rhs: Any
    negation: str  # relation printed when the constraint fails

    def describe(self) -> str:
        if self.holds:
            return f"{self.label} holds"
        return f"{self.label} fails: {_fmt(self.lhs)} {self.negation} {_fmt(self.rhs)}"


def _lt(label, a, b) -> Constraint:
    return Constraint(label, a < b, a, b, "≥")


def _le(label, a, b) -> Constraint:
    return Constraint(label, a <= b, a, b, ">")


@dataclass(frozen=True)
class TheoremContext:
    case_tag: str
    q: Fraction
    beta: Fraction
    r: Fraction
    R: Fraction
    n0: int
    constraint_report: Tuple[Constraint, ...]
    binding: str = ""

    @property
    def case(self) -> Optional[str]:
        return None if self.case_tag == "T1" else self.case_tag[2:]

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.constraint_report)

    def failures(self) -> List[Constraint]:
        return [c for c in self.constraint_report if not c.holds]

    def require(self) -> "TheoremContext":
        failed = self.failures()
        if failed:
            raise ConstraintError(failed[0].describe())
        return self

    def require_n(self, n: int):
        if n < self.n0:
            raise ConstraintError(f"n ≥ n₀ fails: {n} < {self.n0} ({self.binding} binds)")


def _power_constraint(label: str, q, n0: int, exponent, bound) -> Constraint:
    """[n0]_q^exponent >= bound, decided exactly; reported as bound/2 against half the power."""
    bracket = q_integer(n0, q)
    holds = rational_power_at_least(bracket, exponent, bound)
    return Constraint(label, holds, bound / 2, float(bracket) ** float(exponent) / 2, ">")


def theorem_context(case_tag: str, q, beta, r, R, n0: Optional[int] = None) -> TheoremContext:
    """Hypothesis chain of the upper estimate (T1), the Voronovskaja bounds (T2*) or the exact order (T3*)."""
    if case_tag not in CASE_TAGS:
        raise DomainError(f"case_tag must be one of {', '.join(CASE_TAGS)}, got {case_tag!r}")
    q, beta, r, R = (as_rational(v) for v in (q, beta, r, R))
    checks = [Constraint("q ≥ 1", q >= 1, q, 1, "<"),
              Constraint("0 < β < 1", 0 < beta < 1, beta, "(0, 1)", "∉")]
    binding = ""
    if n0 is None:
        if q >= 1 and 0 < beta < 1 and R > 0:
            found = admissibility("T1" if case_tag == "T1" else case_tag[2:], q, beta, r, R)
            n0, binding = found.n0, found.binding
        else:
            n0 = 2
    checks.append(Constraint("n₀ ≥ 2", n0 >= 2, n0, 2, "<"))
    checks.append(_lt("1/2 < r", HALF, r))

    if case_tag == "T1":
        checks.append(_le("β ≤ 2/3", beta, Fraction(2, 3)))
        checks.append(_lt("r < R/(4q²)", r, R / (4 * q * q)))
        if q >= 1 and 0 < beta < 1:
            checks.append(_power_constraint("R/(4q²) ≤ (1/2)[n₀]_q^{1−β}", q, n0, 1 - beta, R / (2 * q * q)))
    else:
        case = case_tag[2:]
        if case == "i":
            checks.append(_lt("β < 1/2", beta, HALF))
            checks.append(_lt("r < R/max(4q, 2q²)", r, R / max(4 * q, 2 * q * q)))
        elif case == "ii":
            checks.append(_lt("1/2 < β", HALF, beta))
            checks.append(_le("β ≤ 2/3", beta, Fraction(2, 3)))
            checks.append(_lt("r < R/(4q)", r, R / (4 * q)))
        else:
            checks.append(Constraint("β = 1/2", beta == HALF, beta, HALF, "≠"))
            checks.append(_lt("r < R/(4q²)", r, R / (4 * q * q)))
        if q >= 1 and 0 < beta < 1:
            checks.append(_power_constraint("R ≤ (1/2)[n₀]_q^{1−β}", q, n0, 1 - beta, 2 * R))
    if q >= 1 and 0 < beta < 1:
        bracket = q_integer(n0, q)
        holds = rational_power_cmp(bracket, 1 - beta, r) > 0
        checks.append(Constraint("r < [n₀]_q^{1−β}", holds, r, float(bracket) ** float(1 - beta), "≥"))

    context = TheoremContext(case_tag=case_tag, q=q, beta=beta, r=r, R=R, n0=n0,
                             constraint_report=tuple(checks), binding=binding)
    for c in checks:
        config.debug(f"{case_tag}: {c.describe()}")
    return context


def _require_analytic(f: FunctionSpec, R: Fraction):
    if f.radius is not None and R > f.radius:
        raise HypothesisError(f"{f.name} is only known analytic for |z| < {f.radius}, R = {R} requested")


def _require_bounded(f: FunctionSpec):
    if not f.bounded:
        raise HypothesisError(f"{f.name} is unbounded on [0,∞)")


# ---- The correction term L ----


def eval_L(f: FunctionSpec, z, q, beta, variant: str = "as_lq", ctx: NumericContext = DEFAULT_CONTEXT):
    """Voronovskaja correction at z.

    q = 1:  z f''/2, -z^2 f' + z f''/2 or -z^2 f' for beta <, =, > 1/2.
    q > 1:  z f''/2 is replaced by the q-difference quotient (D_q f - f')/(q - 1);
            as_theorem2 multiplies that quotient by z.
    """
    if variant not in VARIANTS:
        raise DomainError(f"variant must be one of {', '.join(VARIANTS)}, got {variant!r}")
    q, beta = as_rational(q), as_rational(beta)
    if q < 1:
        raise DomainError(f"L is defined for q ≥ 1, got {q}")
    if not 0 < beta < 1:
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    z = ctx.mpc(z)
    if f.radius is not None and abs(z) * ctx.mpf(q) >= ctx.mpf(f.radius):
        raise DomainError(f"L needs |z| < R/q = {_fmt(f.radius / q)}, got |z| = {ctx.mp.nstr(abs(z), 8)}")

    case = case_for_beta(beta)
    first = derivative_at(f, z, 1, ctx) if case != "i" else 0
    if case == "ii":
        return -z * z * first
    if q == 1:
        curvature = z * derivative_at(f, z, 2, ctx) / 2
    else:
        curvature = (q_derivative(f, z, q, ctx) - derivative_at(f, z, 1, ctx)) / (ctx.mpf(q) - 1)
        if variant == "as_theorem2":
            curvature *= z
    if case == "i":
        return curvature
    return -z * z * first + curvature


def vor_residual(f: FunctionSpec, p: QParams, z, case: Optional[str] = None, variant: str = "as_theorem2",
                 operator: Optional[BalazsSzabadosOperator] = None):
    """R_{n,q}(f;z) - f(z) - L(f;z) / [n]_q^e with e = beta, 1 - beta or 1/2 per case."""
    case = _match_case(case, p.beta)
    ctx = p.ctx
    operator = operator or BalazsSzabadosOperator(f, p)
    z = ctx.mpc(z)
    scale = p.bracket_power(-case_exponent(case, p.beta))
    return operator(z) - eval_in_disk(f, z, ctx) - scale * eval_L(f, z, p.q, p.beta, variant, ctx)


# ---- Right-hand sides ----


def thm1_rhs(f: FunctionSpec, p: QParams, r):
    """[n]^-beta sum m(m-1)|c_m|(4q^2 r)^m + 2r [n]^-(1-beta) sum_{m>=1} |c_m|(2r)^m."""
    ctx = p.ctx
    q, r = p.q, as_rational(r)
    first = weighted_tail_sum(f, M_M1, 4 * q * q * r, ctx=ctx)
    second = weighted_tail_sum(f, ONE_FROM_1, 2 * r, ctx=ctx)
    return p.bracket_power(-p.beta) * first + 2 * ctx.mpf(r) * p.bracket_power(p.beta - 1) * second


def vor_rhs(f: FunctionSpec, p: QParams, r, case: Optional[str] = None):
    case = _match_case(case, p.beta)
    ctx = p.ctx
    q, r = p.q, as_rational(r)
    if case == "i":
        x, y = 4 * q * r, 2 * q * q * r
        # sum_{m>=2} (m-2)|c_m| x^(m-2), and y * sum m(m-1)|c_m| y^m
        shifted = weighted_tail_sum(f, M_MINUS_2, x, ctx=ctx) / ctx.mpf(x) ** 2
        curved = ctx.mpf(y) * weighted_tail_sum(f, M_M1, y, ctx=ctx)
        return 4 * p.bracket_power(-2 * p.beta) * shifted + 4 * p.bracket_power(p.beta - 1) * curved
    if case == "ii":
        return 6 * p.bracket_power(-p.beta) * weighted_tail_sum(f, M_M1, 4 * q * r, ctx=ctx)
    return 9 / p.bracket_n * weighted_tail_sum(f, M2_M1_2, 4 * q * q * r, ctx=ctx)


# ---- Checks ----


@dataclass(frozen=True)
class BoundCheck:
    n: int
    bracket_n: Any
    lhs_sup: Any
    rhs: Any
    holds: bool
    precision_ok: bool

    @property
    def normalized(self):
        if self.rhs == 0:
            return self.lhs_sup * 0 if self.lhs_sup == 0 else None
        return self.lhs_sup / self.rhs


def _grid_size(grid, M: Optional[int], r: Fraction, ctx: NumericContext) -> int:
    """Grid size for a check on |z| = r; a grid is only accepted on that circle."""
    if grid is None:
        return M or config.DEFAULT_GRID_M
    if M is not None and M != grid.M:
        raise DomainError(f"grid has {grid.M} points but M = {M} was requested")
    if relative_discrepancy(grid.radius, ctx.mpf(r), ctx) > ctx.tol:
        raise DomainError(f"grid radius {mpmath.nstr(grid.radius, 10)} differs from r = {r}")
    return grid.M


def sup_error(f: FunctionSpec, p: QParams, r, M: int = config.DEFAULT_GRID_M):
    """(sup over |z| = r of |R_{n,q}(f;z) - f(z)| at doubled precision, agreement flag)."""
    r = as_rational(r)
    if not pole_outside_disk(p, r):
        raise DomainError(f"the pole -1/a_n lies in |z| ≤ {r} for n={p.n}")

    def compute(c: NumericContext):
        op = BalazsSzabadosOperator(f, p.with_context(c))
        return sup_norm(op(z) - eval_in_disk(f, z, c) for z in circle_grid(r, M, c).points)

    return precision_checked(compute, p.ctx)


def check_thm1(f: FunctionSpec, p: QParams, r, R, grid=None, M: Optional[int] = None) -> BoundCheck:
    """sup_{|z|=r} |R_{n,q}(f;z) - f(z)| <= thm1_rhs, under the upper-estimate hypotheses."""
    _require_bounded(f)
    r, R = as_rational(r), as_rational(R)
    _require_analytic(f, R)
    context = theorem_context("T1", p.q, p.beta, r, R).require()
    context.require_n(p.n)
    M = _grid_size(grid, M, r, p.ctx)

    def compute(c: NumericContext):
        pc = p.with_context(c)
        op = BalazsSzabadosOperator(f, pc)
        lhs = sup_norm(op(z) - eval_in_disk(f, z, c) for z in circle_grid(r, M, c).points)
        return lhs, thm1_rhs(f, pc, r)

    (lhs, rhs), ok = precision_checked(compute, p.ctx)
    check = BoundCheck(n=p.n, bracket_n=p.bracket_n, lhs_sup=lhs, rhs=rhs, holds=bool(lhs <= rhs), precision_ok=ok)
    config.debug(f"thm1 n={p.n}: lhs={mpmath.nstr(lhs, 8)} rhs={mpmath.nstr(rhs, 8)} holds={check.holds}")
    return check


def check_vor(f: FunctionSpec, p: QParams, r, R, case: Optional[str] = None, variant: str = "as_theorem2",
              grid=None, M: Optional[int] = None) -> BoundCheck:
    """|vor_residual| <= vor_rhs at every grid point of |z| = r."""
    _require_bounded(f)
    case = _match_case(case, p.beta)
    r, R = as_rational(r), as_rational(R)
    _require_analytic(f, R)
    context = theorem_context("T2" + case, p.q, p.beta, r, R).require()
    context.require_n(p.n)
    M = _grid_size(grid, M, r, p.ctx)

    def compute(c: NumericContext):
        pc = p.with_context(c)
        op = BalazsSzabadosOperator(f, pc)
        lhs = sup_norm(vor_residual(f, pc, z, case, variant, op) for z in circle_grid(r, M, c).points)
        return lhs, vor_rhs(f, pc, r, case)

    (lhs, rhs), ok = precision_checked(compute, p.ctx)
    check = BoundCheck(n=p.n, bracket_n=p.bracket_n, lhs_sup=lhs, rhs=rhs, holds=bool(lhs <= rhs), precision_ok=ok)
    config.debug(f"vor {case} n={p.n}: lhs={mpmath.nstr(lhs, 8)} rhs={mpmath.nstr(rhs, 8)} holds={check.holds}")
    return check


# ---- Rates ----


@dataclass(frozen=True)
class RateReport:
    errors: Tuple[Tuple[Any, Any], ...]  # ([n]_q, sup-error)
    fitted_slope: float
    expected_slope: float
    constant_window: Tuple[float, float]
    case: Optional[str] = None
    n_list: Tuple[int, ...] = ()
    precision_ok: Tuple[bool, ...] = field(default=())

    @property
    def slope_ok(self) -> bool:
        return abs(self.fitted_slope - self.expected_slope) <= config.SLOPE_TOL

    @property
    def window_ratio(self) -> float:
        low, high = self.constant_window
        return high / low

    @property
    def window_ok(self) -> bool:
        return self.window_ratio <= config.WINDOW_FACTOR

    @property
    def holds(self) -> bool:
        return self.slope_ok and self.window_ok


def fit_rate(pairs: Sequence[Tuple[Any, Any]], expected_exponent, case: Optional[str] = None,
             n_list: Sequence[int] = (), precision_ok: Sequence[bool] = ()) -> RateReport:
    """Least-squares slope of log(error) against log([n]_q) and the range of error * [n]_q^exponent."""
    if len(pairs) < 3:
        raise DomainError(f"a rate fit needs at least 3 points, got {len(pairs)}")
    if any(not err > 0 for _, err in pairs):
        raise HypothesisError("zero error: the function is reproduced exactly (degenerate for a rate estimate)")
    exponent = float(expected_exponent)
    log_brackets = np.array([float(mpmath.log(bracket)) for bracket, _ in pairs])
    log_errors = np.array([float(mpmath.log(err)) for _, err in pairs])
    slope = float(np.polyfit(log_brackets, log_errors, 1)[0])
    normalized = np.exp(log_errors + exponent * log_brackets)
    report = RateReport(errors=tuple(pairs), fitted_slope=slope, expected_slope=-exponent,
                        constant_window=(float(normalized.min()), float(normalized.max())),
                        case=case, n_list=tuple(n_list), precision_ok=tuple(precision_ok))
    config.debug(f"rate fit: slope {slope:.4f} (expected {-exponent:.4f}), window {report.constant_window}")
    return report


def _require_non_degenerate(f: FunctionSpec, case: str):
    if case == "i" and f.is_polynomial_of_degree_at_most(1):
        raise HypothesisError(f"{f.name} is a polynomial of degree ≤ 1; case i needs a higher-degree function")
    if f.is_polynomial_of_degree_at_most(0):
        raise HypothesisError(f"{f.name} is constant; the approximation error is identically zero")


def estimate_rate(f: FunctionSpec, q, beta, r, R, n_list: Sequence[int], case: Optional[str] = None,
                  M: int = config.DEFAULT_GRID_M, ctx: NumericContext = DEFAULT_CONTEXT) -> RateReport:
    """Sup-errors over |z| = r for each n and their fitted order against the case's exponent."""
    n_list = [int(n) for n in n_list]
    if len(n_list) < 3:
        raise DomainError(f"estimate_rate needs at least 3 values of n, got {len(n_list)}")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise DomainError(f"n values must be strictly increasing, got {n_list}")
    q, beta, R = as_rational(q), as_rational(beta), as_rational(R)
    case = _match_case(case, beta)
    _require_bounded(f)
    _require_non_degenerate(f, case)
    _require_analytic(f, R)
    context = theorem_context("T3" + case, q, beta, r, R).require()
    for n in n_list:
        context.require_n(n)

    pairs, flags = [], []
    for n in n_list:
        p = QParams.create(q, beta, n, ctx)
        err, ok = sup_error(f, p, r, M)
        pairs.append((p.bracket_n, err))
        flags.append(ok)
        config.debug(f"rate {case} n={n}: sup error {mpmath.nstr(err, 8)}")
    return fit_rate(pairs, case_exponent(case, beta), case=case, n_list=n_list, precision_ok=flags)
