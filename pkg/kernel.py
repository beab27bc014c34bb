"""Precision-configurable arithmetic shared by every other module.

Each NumericContext owns a private mpmath context, so a computation at 256
bits and its 512-bit re-run never touch global precision state.
"""

from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import Any, Callable, Iterable, Tuple

from mpmath.ctx_mp import MPContext

import config


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


class SingularDenominatorError(ZeroDivisionError):
    """|1 + a_n z| fell below the context's zero guard."""


class SeriesDivergenceError(ArithmeticError):
    """A weighted coefficient series cannot be certified at the given argument."""


class HypothesisError(ValueError):
    """A theorem hypothesis does not hold for the requested check."""


class ConstraintError(HypothesisError):
    """A named inequality of a theorem's constraint chain fails."""


class PrecisionError(RuntimeError):
    """Results at P and 2P bits disagree beyond the agreement tolerance."""


@dataclass(frozen=True)
class NumericContext:
    mantissa_bits: int = config.DEFAULT_PRECISION_BITS
    zero_guard: float = config.ZERO_GUARD
    agreement_tol: float = config.AGREEMENT_TOL

    def __post_init__(self):
        if int(self.mantissa_bits) != self.mantissa_bits or self.mantissa_bits < config.MIN_PRECISION_BITS:
            raise DomainError(f"mantissa_bits must be an integer >= {config.MIN_PRECISION_BITS}, got {self.mantissa_bits}")
        if not self.zero_guard > 0:
            raise DomainError(f"zero_guard must be positive, got {self.zero_guard}")
        if not self.agreement_tol > 0:
            raise DomainError(f"agreement_tol must be positive, got {self.agreement_tol}")

    @cached_property
    def mp(self) -> MPContext:
        ctx = MPContext()
        ctx.prec = self.mantissa_bits
        return ctx

    def doubled(self) -> "NumericContext":
        return replace(self, mantissa_bits=2 * self.mantissa_bits)

    def mpf(self, x):
        """Real number in this context; Fractions convert exactly."""
        if isinstance(x, Rational) and not isinstance(x, int):
            return self.mp.mpf(x.numerator) / x.denominator
        return self.mp.mpf(x)

    def mpc(self, z):
        if isinstance(z, Rational):
            return self.mp.mpc(self.mpf(z))
        return self.mp.mpc(z)

    @property
    def guard(self):
        return self.mpf(as_rational(self.zero_guard))

    @property
    def tol(self):
        return self.mpf(as_rational(self.agreement_tol))


DEFAULT_CONTEXT = NumericContext()


def make_context(mantissa_bits: int = config.DEFAULT_PRECISION_BITS, **overrides) -> NumericContext:
    return NumericContext(mantissa_bits=mantissa_bits, **overrides)


def as_rational(x) -> Fraction:
    """Exact rational parameter. Floats are read through their shortest repr, so 1.1 is 11/10."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise DomainError(f"not a number: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except ValueError:
            raise DomainError(f"not a rational literal: {x!r}") from None
    raise DomainError(f"cannot read {x!r} as an exact rational")


@dataclass(frozen=True)
class CircleGrid:
    radius: Any
    points: Tuple[Any, ...]

    @property
    def M(self) -> int:
        return len(self.points)


def circle_grid(r, M: int = config.DEFAULT_GRID_M, ctx: NumericContext = DEFAULT_CONTEXT) -> CircleGrid:
    """M equi-angular samples z_j = r*exp(2*pi*i*j/M) on |z| = r."""
    radius = ctx.mpf(r)
    if not radius > 0:
        raise DomainError(f"grid radius must be positive, got {r}")
    if int(M) != M or M < 1:
        raise DomainError(f"grid size must be a positive integer, got {M}")
    mp = ctx.mp
    points = []
    for j in range(M):
        # cospi/sinpi keep quarter turns exact
        t = mp.mpf(2 * j) / M
        points.append(mp.mpc(radius * mp.cospi(t), radius * mp.sinpi(t)))
    return CircleGrid(radius=radius, points=tuple(points))


def sup_norm(values: Iterable[Any]):
    moduli = [abs(v) for v in values]
    if not moduli:
        raise DomainError("sup_norm of an empty list")
    return max(moduli)


def relative_discrepancy(x, y, ctx: NumericContext = DEFAULT_CONTEXT):
    x, y = ctx.mpc(x), ctx.mpc(y)
    return abs(x - y) / max(ctx.mpf(1), abs(y))


def precision_agree(x, y, ctx: NumericContext = DEFAULT_CONTEXT) -> bool:
    """x from P bits, y from 2P bits: |x - y| <= agreement_tol * max(1, |y|)."""
    return bool(relative_discrepancy(x, y, ctx) <= ctx.tol)


def precision_checked(compute: Callable[[NumericContext], Any], ctx: NumericContext = DEFAULT_CONTEXT,
                      strict: bool = False):
    """Run compute at ctx and at doubled precision.

    Returns (doubled-precision value, agreement flag). compute must rebuild
    all of its inputs from exact data inside the context it is given.
    Values that collapse when the precision doubles are rounding noise of an
    exact zero and are reported as 0.
    """
    low = compute(ctx)
    high = compute(ctx.doubled())
    ok = _agree_nested(low, high, ctx)
    high = _settle_nested(low, high, ctx.doubled())
    config.debug(f"precision check at {ctx.mantissa_bits}/{2 * ctx.mantissa_bits} bits: ok={ok}")
    if strict and not ok:
        raise PrecisionError(f"results at {ctx.mantissa_bits} and {2 * ctx.mantissa_bits} bits disagree beyond {ctx.agreement_tol}")
    return high, ok


def settle(low, high, ctx: NumericContext):
    """high, or exact 0 when it is noise that shrinks with precision.

    Noise means |high| < |low| * 2^(-bits/4), or low == 0 with |high| below the zero guard.
    """
    mp = ctx.mp
    if high == 0 or abs(high) < abs(low) * mp.ldexp(1, -ctx.mantissa_bits // 4):
        return 0 * high
    if low == 0 and abs(high) <= ctx.guard:
        return 0 * high
    return high


def _settle_nested(low, high, ctx: NumericContext):
    if isinstance(low, (list, tuple)):
        return type(high)(_settle_nested(a, b, ctx) for a, b in zip(low, high))
    return settle(low, high, ctx)


def _agree_nested(low, high, ctx: NumericContext) -> bool:
    if isinstance(low, (list, tuple)):
        return len(low) == len(high) and all(_agree_nested(a, b, ctx) for a, b in zip(low, high))
    return precision_agree(low, high, ctx)
