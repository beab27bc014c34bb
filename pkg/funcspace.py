"""Admissible test functions: a Taylor coefficient stream on D_R plus
closed-form evaluators on [0, inf) and on the disk.

Operator nodes [k]_q/b_n leave the disk, so node values always come from
the closed forms, never from the power series.
"""

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np

import config
from kernel import (
    DEFAULT_CONTEXT,
    DomainError,
    NumericContext,
    SeriesDivergenceError,
    as_rational,
)

Evaluator = Callable[[NumericContext, Any], Any]


@dataclass(frozen=True)
class FunctionSpec:
    name: str
    coeff: Callable[[NumericContext, int], Any]
    radius: Optional[Fraction]  # None: entire
    eval_real: Evaluator
    eval_complex: Evaluator
    derivative: Callable[[NumericContext, Any, int], Any]
    bound_M: Optional[Any]  # None: unbounded on [0, inf)
    coeff_envelope: Callable[[NumericContext], Tuple[Any, Any]]
    degree: Optional[int] = None  # finite polynomials only

    @property
    def bounded(self) -> bool:
        return self.bound_M is not None

    def is_polynomial_of_degree_at_most(self, d: int) -> bool:
        return self.degree is not None and self.degree <= d


@dataclass(frozen=True)
class Weight:
    """w_m = prod(m - c) over roots c >= 0, and 0 for m below the start index.

    Such weights satisfy w_m <= m**degree, which certifies the truncation tail.
    """

    roots: Tuple[int, ...] = ()
    start: int = 0

    def __post_init__(self):
        if any(c < 0 for c in self.roots):
            raise DomainError("weight roots must be nonnegative")

    @property
    def degree(self) -> int:
        return len(self.roots)

    @property
    def first_index(self) -> int:
        return max((self.start,) + self.roots)

    def __call__(self, m: int) -> int:
        if m < self.first_index:
            return 0
        value = 1
        for c in self.roots:
            value *= m - c
        return value


ONE = Weight()
ONE_FROM_1 = Weight(start=1)
M_M1 = Weight((0, 1))
M_MINUS_2 = Weight((2,))
M2_M1_2 = Weight((0, 0, 1, 1))


def in_disk(f: FunctionSpec, z, ctx: NumericContext = DEFAULT_CONTEXT) -> bool:
    return f.radius is None or abs(ctx.mpc(z)) < ctx.mpf(f.radius)


def coeff_at(f: FunctionSpec, m: int, ctx: NumericContext = DEFAULT_CONTEXT):
    if int(m) != m or m < 0:
        raise DomainError(f"coefficient index must be a nonnegative integer, got {m}")
    return f.coeff(ctx, int(m))


def eval_on_ray(f: FunctionSpec, x, ctx: NumericContext = DEFAULT_CONTEXT):
    x = ctx.mpf(x)
    if x < 0:
        raise DomainError(f"{f.name} is sampled on [0, inf) only, got x = {ctx.mp.nstr(x, 8)}")
    return f.eval_real(ctx, x)


def eval_in_disk(f: FunctionSpec, z, ctx: NumericContext = DEFAULT_CONTEXT):
    z = ctx.mpc(z)
    if not in_disk(f, z, ctx):
        raise DomainError(f"|z| = {ctx.mp.nstr(abs(z), 8)} is outside the disk of radius {f.radius} for {f.name}")
    return f.eval_complex(ctx, z)


def derivative_at(f: FunctionSpec, z, order: int, ctx: NumericContext = DEFAULT_CONTEXT):
    z = ctx.mpc(z)
    if not in_disk(f, z, ctx):
        raise DomainError(f"derivative of {f.name} requested outside its disk at |z| = {ctx.mp.nstr(abs(z), 8)}")
    return f.derivative(ctx, z, order)


def partial_sum(f: FunctionSpec, z, T: int, ctx: NumericContext = DEFAULT_CONTEXT):
    z = ctx.mpc(z)
    total, power = [], ctx.mpc(1)
    for m in range(T + 1):
        total.append(coeff_at(f, m, ctx) * power)
        power *= z
    return ctx.mp.fsum(total)


def envelope_tail(f: FunctionSpec, x, T: int, ctx: NumericContext = DEFAULT_CONTEXT):
    """A (Bx)^(T+1) / (1 - Bx): bound on sum_{m > T} |c_m| x^m."""
    if f.degree is not None and T >= f.degree:
        return ctx.mpf(0)
    A, B = f.coeff_envelope(ctx)
    rho = B * ctx.mpf(x)
    if rho >= 1:
        raise SeriesDivergenceError(f"envelope of {f.name} diverges at x = {x}")
    return A * rho ** (T + 1) / (1 - rho)


def weighted_tail_sum(f: FunctionSpec, weight: Weight, x, tol=config.SERIES_TOL,
                      ctx: NumericContext = DEFAULT_CONTEXT):
    """sum_m w_m |c_m| x^m, truncated once the certified tail drops below tol."""
    mp = ctx.mp
    x = ctx.mpf(x)
    if not x > 0:
        raise DomainError(f"weighted_tail_sum needs x > 0, got {x}")
    if f.degree is not None:
        return mp.fsum(weight(m) * abs(coeff_at(f, m, ctx)) * x ** m for m in range(f.degree + 1))

    A, B = f.coeff_envelope(ctx)
    rho = B * x
    if rho >= 1:
        raise SeriesDivergenceError(
            f"series for {f.name} diverges: B*x = {mp.nstr(rho, 8)} >= 1 (x = {mp.nstr(x, 8)}, envelope radius {mp.nstr(1 / B, 8)})")
    tol = ctx.mpf(tol)
    d = weight.degree
    terms = []
    power = ctx.mpf(1)
    rho_next = rho  # rho^(T+1)
    for T in range(config.MAX_SERIES_TERMS):
        w = weight(T)
        if w:
            terms.append(w * abs(coeff_at(f, T, ctx)) * power)
        power *= x
        ratio = rho * (mp.mpf(T + 2) / (T + 1)) ** d
        if ratio < 1:
            tail = A * mp.mpf(T + 1) ** d * rho_next / (1 - ratio)
            if tail < tol:
                config.debug(f"weighted_tail_sum {f.name}: truncated at T={T}, tail={mp.nstr(tail, 5)}")
                return mp.fsum(terms)
        rho_next *= rho
    raise SeriesDivergenceError(
        f"series for {f.name} not certified within {config.MAX_SERIES_TERMS} terms at x = {mp.nstr(x, 8)}")


def truncation_index(f: FunctionSpec, x, tol, ctx: NumericContext = DEFAULT_CONTEXT) -> int:
    """Smallest T whose weight-1 envelope tail at x is below tol."""
    if f.degree is not None:
        return f.degree
    T = 0
    while envelope_tail(f, x, T, ctx) >= ctx.mpf(tol):
        T += 1
        if T > config.MAX_SERIES_TERMS:
            raise SeriesDivergenceError(f"no truncation index for {f.name} at x = {x}")
    return T


def check_invariants(f: FunctionSpec, ctx: NumericContext = DEFAULT_CONTEXT, samples: int = 64,
                     seed: int = 0) -> List[str]:
    """Spot-check the FunctionSpec invariants; returns failure descriptions (empty when valid)."""
    mp = ctx.mp
    failures = []
    rng = np.random.default_rng(seed)
    half = ctx.mpf(f.radius) / 2 if f.radius is not None else ctx.mpf(1)
    tol = ctx.mpf(config.SERIES_TOL)
    for rad, angle in zip(rng.uniform(0, 1, samples), rng.uniform(0, 2, samples)):
        z = half * ctx.mpf(float(rad)) * mp.expjpi(ctx.mpf(float(angle)))
        T = truncation_index(f, abs(z), tol, ctx)
        err = abs(partial_sum(f, z, T, ctx) - eval_in_disk(f, z, ctx))
        if err > 10 * max(envelope_tail(f, abs(z), T, ctx), tol):
            failures.append(f"series/closed-form mismatch {mp.nstr(err, 5)} at z = {mp.nstr(z, 8)}")
    if f.bound_M is not None:
        bound = ctx.mpf(f.bound_M) * (1 + ctx.tol)
        for x in np.linspace(0, config.RAY_SAMPLE_MAX, 201):
            value = abs(eval_on_ray(f, float(x), ctx))
            if value > bound:
                failures.append(f"|f({x})| = {mp.nstr(value, 8)} exceeds bound_M = {f.bound_M}")
    A, B = f.coeff_envelope(ctx)
    top = f.degree if f.degree is not None else 200
    for m in range(top + 1):
        if abs(coeff_at(f, m, ctx)) > A * B ** m * (1 + ctx.tol):
            failures.append(f"coefficient envelope violated at m = {m}")
    return failures


# ---- Catalog ----


def _radius(R) -> Fraction:
    R = as_rational(R)
    if not R > 0:
        raise DomainError(f"working radius must be positive, got {R}")
    return R


def exp_neg(R=config.DEFAULT_WORKING_R) -> FunctionSpec:
    """e^{-z}, entire; Cauchy envelope on the working disk: |c_m| <= e^R / R^m."""
    R = _radius(R)
    return FunctionSpec(
        name="exp_neg",
        coeff=lambda ctx, m: ctx.mpf((-1) ** m) / ctx.mp.factorial(m),
        radius=R,
        eval_real=lambda ctx, x: ctx.mp.exp(-x),
        eval_complex=lambda ctx, z: ctx.mp.exp(-z),
        derivative=lambda ctx, z, k: (-1) ** k * ctx.mp.exp(-z),
        bound_M=Fraction(1),
        coeff_envelope=lambda ctx: (ctx.mp.exp(ctx.mpf(R)), 1 / ctx.mpf(R)),
    )


def _sin_coeff(ctx, m):
    if m % 2 == 0:
        return ctx.mpf(0)
    return ctx.mpf((-1) ** ((m - 1) // 2)) / ctx.mp.factorial(m)


def _sin_derivative(ctx, z, k):
    mp = ctx.mp
    return (mp.sin(z), mp.cos(z), -mp.sin(z), -mp.cos(z))[k % 4]


def sin(R=config.DEFAULT_WORKING_R) -> FunctionSpec:
    """sin z, entire; |sin z| <= cosh R on |z| = R."""
    R = _radius(R)
    return FunctionSpec(
        name="sin",
        coeff=_sin_coeff,
        radius=R,
        eval_real=lambda ctx, x: ctx.mp.sin(x),
        eval_complex=lambda ctx, z: ctx.mp.sin(z),
        derivative=_sin_derivative,
        bound_M=Fraction(1),
        coeff_envelope=lambda ctx: (ctx.mp.cosh(ctx.mpf(R)), 1 / ctx.mpf(R)),
    )


def inv_shift(c, R=None) -> FunctionSpec:
    """1/(z + c): analytic in D_c, bounded by 1/c on [0, inf)."""
    c = _radius(c)
    R = c if R is None else _radius(R)
    if R > c:
        raise DomainError(f"inv_shift:{c} is analytic only for |z| < {c}; working R = {R} exceeds it")
    return FunctionSpec(
        name=f"inv_shift:{c}",
        coeff=lambda ctx, m: ctx.mpf((-1) ** m) / ctx.mpf(c) ** (m + 1),
        radius=R,
        eval_real=lambda ctx, x: 1 / (x + ctx.mpf(c)),
        eval_complex=lambda ctx, z: 1 / (z + ctx.mpf(c)),
        derivative=lambda ctx, z, k: (-1) ** k * ctx.mp.factorial(k) / (z + ctx.mpf(c)) ** (k + 1),
        bound_M=1 / c,
        coeff_envelope=lambda ctx: (1 / ctx.mpf(c), 1 / ctx.mpf(c)),
    )


def _horner(coeffs, z):
    value = 0 * z
    for c in reversed(coeffs):
        value = value * z + c
    return value


def polynomial(coeffs: Sequence[Any], name: Optional[str] = None) -> FunctionSpec:
    """Finite coefficient list c_0, c_1, ...; entire, bounded on [0, inf) only when constant."""
    coeffs = [as_rational(c) for c in coeffs] or [Fraction(0)]
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    degree = len(coeffs) - 1

    def coeff(ctx, m):
        return ctx.mpf(coeffs[m]) if m <= degree else ctx.mpf(0)

    def derivative(ctx, z, k):
        shifted = []
        for m in range(k, degree + 1):
            falling = 1
            for j in range(k):
                falling *= m - j
            shifted.append(ctx.mpf(coeffs[m] * falling))
        return _horner(shifted, z) if shifted else 0 * z

    def evaluate(ctx, z):
        return _horner([ctx.mpf(c) for c in coeffs], z)

    return FunctionSpec(
        name=name or "poly:" + ",".join(str(c) for c in coeffs),
        coeff=coeff,
        radius=None,
        eval_real=evaluate,
        eval_complex=evaluate,
        derivative=derivative,
        bound_M=abs(coeffs[0]) if degree == 0 else None,
        coeff_envelope=lambda ctx: (max(ctx.mpf(abs(c)) for c in coeffs), ctx.mpf(1)),
        degree=degree,
    )


def monomial(m: int) -> FunctionSpec:
    """e_m(z) = z^m."""
    if int(m) != m or m < 0:
        raise DomainError(f"monomial degree must be a nonnegative integer, got {m}")
    return polynomial([0] * m + [1], name=f"e_{m}")


def _envelope_scale(f: FunctionSpec, B, ctx: NumericContext):
    """A with |c_m| <= A B^m for all m, given B no smaller than f's own envelope ratio."""
    if f.degree is not None:
        return max(abs(coeff_at(f, m, ctx)) / B ** m for m in range(f.degree + 1))
    A_f, _ = f.coeff_envelope(ctx)
    return A_f


def linear_combination(alpha, f: FunctionSpec, gamma, g: FunctionSpec) -> FunctionSpec:
    """alpha*f + gamma*g on the smaller of the two disks."""
    radii = [r for r in (f.radius, g.radius) if r is not None]
    radius = min(radii) if radii else None
    degree = max(f.degree, g.degree) if f.degree is not None and g.degree is not None else None

    def combine(fa, ga):
        return lambda ctx, *args: ctx.mpc(alpha) * fa(ctx, *args) + ctx.mpc(gamma) * ga(ctx, *args)

    def envelope(ctx):
        ratios = [s.coeff_envelope(ctx)[1] for s in (f, g) if s.degree is None]
        B = max(ratios) if ratios else ctx.mpf(1)
        A = abs(ctx.mpc(alpha)) * _envelope_scale(f, B, ctx) + abs(ctx.mpc(gamma)) * _envelope_scale(g, B, ctx)
        return A, B

    bound = None
    if f.bounded and g.bounded:
        bound = abs(complex(alpha)) * float(f.bound_M) + abs(complex(gamma)) * float(g.bound_M)
    return FunctionSpec(
        name=f"({alpha})*{f.name}+({gamma})*{g.name}",
        coeff=combine(f.coeff, g.coeff),
        radius=radius,
        eval_real=combine(f.eval_real, g.eval_real),
        eval_complex=combine(f.eval_complex, g.eval_complex),
        derivative=combine(f.derivative, g.derivative),
        bound_M=bound,
        coeff_envelope=envelope,
        degree=degree,
    )


_MONOMIAL = re.compile(r"^e_(\d+)$")


def parse_function(name: str, R=config.DEFAULT_WORKING_R) -> FunctionSpec:
    """CLI catalog names: exp_neg, sin, inv_shift:<c>, e_<m>, poly:<c0,c1,...>."""
    name = name.strip()
    if name == "exp_neg":
        return exp_neg(R)
    if name == "sin":
        return sin(R)
    if name.startswith("inv_shift:"):
        # the working disk never reaches the pole at -c
        c = _radius(name.split(":", 1)[1])
        return inv_shift(c, min(_radius(R), c))
    match = _MONOMIAL.match(name)
    if match:
        return monomial(int(match.group(1)))
    if name.startswith("poly:"):
        return polynomial([c for c in name.split(":", 1)[1].split(",") if c.strip()])
    raise DomainError(f"unknown function name {name!r}; expected exp_neg, sin, inv_shift:<c>, e_<m> or poly:<c0,c1,...>")


def builtin_catalog(R=config.DEFAULT_WORKING_R) -> dict:
    return {
        "exp_neg": exp_neg(R),
        "sin": sin(R),
        "inv_shift:2": parse_function("inv_shift:2", R),
        "e_0": monomial(0),
        "e_1": monomial(1),
        "e_2": monomial(2),
        "e_3": monomial(3),
        "poly:1,-1/2,1/4": polynomial([1, "-1/2", "1/4"]),
    }
