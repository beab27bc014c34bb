"""q-calculus primitives: q-integers, q-factorials, Gaussian binomials,
the Jackson q-derivative and the node/scale sequences a_n, b_n, [k]_q/b_n.

q_integer, q_factorial, q_binomial and q_binomial_row are generic in the
number type of q: Fractions give exact rationals, mpmath numbers give
big floats in the caller's precision.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, List

import config
from funcspace import coeff_at, eval_in_disk, eval_on_ray, in_disk
from kernel import DEFAULT_CONTEXT, DomainError, NumericContext, as_rational

MAX_BETA = Fraction(2, 3)


def _check_q(q):
    if not q > 0:
        raise DomainError(f"q must be positive, got {q}")


def _check_order(n):
    if int(n) != n or n < 0:
        raise DomainError(f"expected a nonnegative integer, got {n}")


def q_integer(n: int, q):
    """[n]_q = 1 + q + ... + q^(n-1); [0]_q = 0."""
    _check_q(q)
    _check_order(n)
    total, power = 0 * q, 1 + 0 * q
    for _ in range(n):
        total += power
        power *= q
    return total


def q_integer_table(n: int, q) -> List[Any]:
    """[[0]_q, [1]_q, ..., [n]_q] by one running summation."""
    _check_q(q)
    _check_order(n)
    table = [0 * q]
    power = 1 + 0 * q
    for _ in range(n):
        table.append(table[-1] + power)
        power *= q
    return table


def q_factorial(n: int, q):
    product = 1 + 0 * q
    for bracket in q_integer_table(n, q)[1:]:
        product *= bracket
    return product


def q_binomial_row(n: int, q) -> List[Any]:
    """Row n of the Gaussian binomials via C(n,k) = C(n-1,k-1) + q^k C(n-1,k)."""
    _check_q(q)
    _check_order(n)
    one = 1 + 0 * q
    powers = [one]
    for _ in range(n):
        powers.append(powers[-1] * q)
    row = [one]
    for m in range(1, n + 1):
        nxt = [one] * (m + 1)
        for k in range(1, m):
            nxt[k] = row[k - 1] + powers[k] * row[k]
        row = nxt
    return row


def q_binomial(n: int, k: int, q):
    _check_order(n)
    if int(k) != k or k < 0 or k > n:
        raise DomainError(f"q-binomial needs 0 <= k <= n, got n={n}, k={k}")
    return q_binomial_row(n, q)[k]


def q_derivative(f, z, q, ctx: NumericContext = DEFAULT_CONTEXT):
    """Jackson derivative (f(qz) - f(z)) / ((q-1) z), and f'(0) at z = 0."""
    q = as_rational(q)
    _check_q(q)
    if q == 1:
        raise DomainError("q-derivative needs q != 1; use derivative_at for f'")
    z = ctx.mpc(z)
    if z == 0:
        return ctx.mpc(coeff_at(f, 1, ctx))
    qm = ctx.mpf(q)
    qz = qm * z
    if in_disk(f, qz, ctx):
        f_qz, f_z = eval_in_disk(f, qz, ctx), eval_in_disk(f, z, ctx)
    elif z.imag == 0 and z.real > 0:
        f_qz, f_z = eval_on_ray(f, qz.real, ctx), eval_on_ray(f, z.real, ctx)
    else:
        raise DomainError(f"q*z = {ctx.mp.nstr(qz, 8)} leaves the analyticity disk of {f.name}")
    return (f_qz - f_z) / ((qm - 1) * z)


def rational_power_cmp(base: Fraction, exponent: Fraction, bound: Fraction) -> int:
    """Sign of base**exponent - bound for positive rationals, decided exactly when feasible."""
    base, exponent, bound = Fraction(base), Fraction(exponent), Fraction(bound)
    if bound <= 0:
        return 1
    if exponent.denominator <= 64 and abs(exponent.numerator) <= 64:
        # base^(a/b) vs c  <=>  base^a vs c^b for base > 0, b > 0
        lhs, rhs = base ** exponent.numerator, bound ** exponent.denominator
        return (lhs > rhs) - (lhs < rhs)
    ctx = DEFAULT_CONTEXT
    lhs = ctx.mp.power(ctx.mpf(base), ctx.mpf(exponent))
    rhs = ctx.mpf(bound)
    return (lhs > rhs) - (lhs < rhs)


def rational_power_at_least(base: Fraction, exponent: Fraction, bound: Fraction) -> bool:
    return rational_power_cmp(base, exponent, bound) >= 0


@dataclass(frozen=True)
class QParams:
    """(q, beta, n) with [n]_q, a_n = [n]_q^(beta-1), b_n = [n]_q^beta in one precision."""

    q: Fraction
    beta: Fraction
    n: int
    bracket_n: Any
    a_n: Any
    b_n: Any
    ctx: NumericContext

    @classmethod
    def create(cls, q, beta, n: int, ctx: NumericContext = DEFAULT_CONTEXT) -> "QParams":
        q, beta = as_rational(q), as_rational(beta)
        _check_q(q)
        if not 0 < beta <= MAX_BETA:
            raise DomainError(f"beta must lie in (0, 2/3], got {beta}")
        if int(n) != n or n < 1:
            raise DomainError(f"n must be a positive integer, got {n}")
        mp = ctx.mp
        bracket = q_integer(int(n), ctx.mpf(q))
        log_bracket = mp.log(bracket)
        beta_m = ctx.mpf(beta)
        a_n = mp.exp((beta_m - 1) * log_bracket)
        b_n = mp.exp(beta_m * log_bracket)
        config.debug(f"QParams q={q} beta={beta} n={n}: [n]_q={mp.nstr(bracket, 12)}")
        return cls(q=q, beta=beta, n=int(n), bracket_n=bracket, a_n=a_n, b_n=b_n, ctx=ctx)

    @property
    def q_mp(self):
        return self.ctx.mpf(self.q)

    def bracket_power(self, exponent):
        """[n]_q ** exponent in this precision."""
        mp = self.ctx.mp
        return mp.exp(self.ctx.mpf(exponent) * mp.log(self.bracket_n))

    def with_context(self, ctx: NumericContext) -> "QParams":
        return QParams.create(self.q, self.beta, self.n, ctx)


def node_sequence(p: QParams) -> List[Any]:
    """Sample nodes t_k = [k]_q / b_n, k = 0..n."""
    return [bracket / p.b_n for bracket in q_integer_table(p.n, p.q_mp)]
