"""The q-Balazs-Szabados operator R_{n,q} (real and complex form), the complex
q-Bernstein operator B_{n,q} and the connection between them.

eval_R and eval_B share no arithmetic beyond the Gaussian binomial row, so
the connection identity is a genuine cross-check of the two code paths.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Optional, Tuple, Union

import config
from funcspace import FunctionSpec, eval_on_ray
from kernel import (
    DEFAULT_CONTEXT,
    DomainError,
    NumericContext,
    SingularDenominatorError,
    as_rational,
)
from qcore import (
    QParams,
    node_sequence,
    q_binomial_row,
    q_integer,
    q_integer_table,
    rational_power_at_least,
    rational_power_cmp,
)


@dataclass(frozen=True)
class OperatorEval:
    params: QParams
    z: Any
    value: Any
    denom: Any  # (1 + a_n z)^n
    numerator: Any
    basis_terms: Optional[Tuple[Any, ...]] = None


class BalazsSzabadosOperator:
    """R_{n,q}(f; .) with node values f([k]_q/b_n) * [n,k]_q computed once.

    Grid sweeps evaluate the same (f, params) at many z; only the product
    prod_{s<n-k}(1 + (1-q)[s]_q a_n z) depends on z.
    """

    def __init__(self, f: FunctionSpec, params: QParams):
        self.f = f
        self.params = params
        self.ctx = params.ctx
        q = params.q_mp
        nodes = node_sequence(params)
        binomials = q_binomial_row(params.n, q)
        self.weights = [eval_on_ray(f, t, self.ctx) * c for t, c in zip(nodes, binomials)]
        # (1 - q)[s]_q, s = 0..n-1
        self.shifts = [(1 - q) * bracket for bracket in q_integer_table(params.n - 1, q)]

    def evaluate(self, z, diagnostics: bool = False) -> OperatorEval:
        ctx, p = self.ctx, self.params
        mp = ctx.mp
        z = ctx.mpc(z)
        az = p.a_n * z
        base = 1 + az
        if abs(base) <= ctx.guard:
            raise SingularDenominatorError(
                f"|1 + a_n z| = {mp.nstr(abs(base), 5)} at z = {mp.nstr(z, 10)} (n={p.n}, q={p.q}) is within the zero guard")
        n = p.n
        # products P_k = prod_{s=0}^{n-k-1} (1 + (1-q)[s]_q a_n z), built from k = n down
        products = [None] * (n + 1)
        products[n] = mp.mpc(1)
        for k in range(n - 1, -1, -1):
            products[k] = products[k + 1] * (1 + self.shifts[n - k - 1] * az)
        terms = []
        power = mp.mpc(1)
        for k in range(n + 1):
            terms.append(self.weights[k] * power * products[k])
            power *= az
        numerator = mp.fsum(terms)
        denom = base ** n
        return OperatorEval(params=p, z=z, value=numerator / denom, denom=denom, numerator=numerator,
                            basis_terms=tuple(terms) if diagnostics else None)

    def __call__(self, z):
        return self.evaluate(z).value


def eval_R(f: FunctionSpec, p: QParams, z):
    """R_{n,q}(f; z) in the precision of p."""
    return BalazsSzabadosOperator(f, p)(z)


def eval_B(g: Union[FunctionSpec, Callable[[Any], Any]], n: int, q, u, ctx: NumericContext = DEFAULT_CONTEXT):
    """Complex q-Bernstein polynomial sum_k g([k]_q/[n]_q) [n,k]_q u^k prod_{s<n-k}(1 - q^s u)."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    mp = ctx.mp
    qm = ctx.mpf(as_rational(q))
    if not qm > 0:
        raise DomainError(f"q must be positive, got {q}")
    u = ctx.mpc(u)
    sample = (lambda x: eval_on_ray(g, x, ctx)) if isinstance(g, FunctionSpec) else g
    bracket_n = q_integer(n, qm)
    binomials = q_binomial_row(n, qm)
    # tails[j] = prod_{s=0}^{j-1} (1 - q^s u), grown from the empty product
    tails = [mp.mpc(1)]
    q_power = mp.mpf(1)
    for _ in range(n):
        tails.append(tails[-1] * (1 - q_power * u))
        q_power *= qm
    terms = []
    bracket_k = mp.mpf(0)
    q_power = mp.mpf(1)
    u_power = mp.mpc(1)
    for k in range(n + 1):
        terms.append(sample(bracket_k / bracket_n) * binomials[k] * u_power * tails[n - k])
        bracket_k += q_power
        q_power *= qm
        u_power *= u
    return mp.fsum(terms)


def connection_transform(f: FunctionSpec, p: QParams, z):
    """Right-hand side of R_{n,q}(f;z) = B_{n,q}(F_n; a_n z/(1 + a_n z)) with F_n(w) = f([n]_q w / b_n)."""
    ctx = p.ctx
    mp = ctx.mp
    z = ctx.mpc(z)
    base = 1 + p.a_n * z
    if abs(base) <= ctx.guard:
        raise SingularDenominatorError(
            f"|1 + a_n z| = {mp.nstr(abs(base), 5)} at z = {mp.nstr(z, 10)} (n={p.n}, q={p.q}) is within the zero guard")
    scale = p.bracket_n / p.b_n
    u = p.a_n * z / base

    def F(w):
        return eval_on_ray(f, scale * w, ctx)

    return eval_B(F, p.n, p.q, u, ctx)


def classical_R(f: FunctionSpec, n: int, beta, z, ctx: NumericContext = DEFAULT_CONTEXT):
    """Classical R_n(f; z) = (1 + a_n z)^{-n} sum_k f(k/b_n) C(n,k) (a_n z)^k, a_n = n^{beta-1}, b_n = n^beta."""
    mp = ctx.mp
    beta = ctx.mpf(as_rational(beta))
    a_n = mp.power(n, beta - 1)
    b_n = mp.power(n, beta)
    z = ctx.mpc(z)
    az = a_n * z
    terms = [eval_on_ray(f, mp.mpf(k) / b_n, ctx) * math.comb(n, k) * az ** k for k in range(n + 1)]
    return mp.fsum(terms) / (1 + az) ** n


def admissible_n0(q, beta, R) -> int:
    """Smallest n0 >= 2 with [n0]_q^(1-beta) >= 2R."""
    q, beta, R = as_rational(q), as_rational(beta), as_rational(R)
    if q < 1:
        raise DomainError(f"admissible_n0 needs q >= 1, got {q}")
    if not 0 < beta < 1:
        raise DomainError(f"admissible_n0 needs 0 < beta < 1, got {beta}")
    if not R > 0:
        raise DomainError(f"admissible_n0 needs R > 0, got {R}")
    return _smallest_n(q, lambda bracket: rational_power_at_least(bracket, 1 - beta, 2 * R))


def _smallest_n(q: Fraction, accept: Callable[[Fraction], bool]) -> int:
    """Smallest n >= 2 whose exact [n]_q is accepted."""
    n = 2
    bracket = 1 + q
    while not accept(bracket):
        bracket = 1 + q * bracket
        n += 1
    return n


@dataclass(frozen=True)
class Admissibility:
    n0: int
    binding: str
    domain_n0: int
    theorem_n0: int


def admissibility(case: str, q, beta, r, R) -> Admissibility:
    """n0 satisfying both the pole condition r < [n0]_q^(1-beta) and the theorem chain.

    The theorem chain is R/(4q^2) <= [n0]^(1-beta)/2 for the upper estimate (case T1)
    and R <= [n0]^(1-beta)/2 for the Voronovskaja and exact-order cases.
    """
    q, beta, r, R = (as_rational(v) for v in (q, beta, r, R))
    if q < 1:
        raise DomainError(f"admissibility needs q >= 1, got {q}")
    if not 0 < beta < 1:
        raise DomainError(f"admissibility needs 0 < beta < 1, got {beta}")
    exponent = 1 - beta
    domain_n0 = _smallest_n(q, lambda bracket: rational_power_cmp(bracket, exponent, r) > 0)
    if case == "T1":
        theorem_n0 = _smallest_n(q, lambda bracket: rational_power_at_least(bracket, exponent, R / (2 * q * q)))
        label = "R/(4q²) ≤ (1/2)[n₀]_q^{1−β}"
    else:
        theorem_n0 = admissible_n0(q, beta, R)
        label = "R ≤ (1/2)[n₀]_q^{1−β}"
    if domain_n0 > theorem_n0:
        binding = "r < [n₀]_q^{1−β}"
    else:
        binding = label
    n0 = max(domain_n0, theorem_n0)
    config.debug(f"admissibility {case}: pole n0={domain_n0}, theorem n0={theorem_n0}, binding {binding}")
    return Admissibility(n0=n0, binding=binding, domain_n0=domain_n0, theorem_n0=theorem_n0)


def pole_outside_disk(p: QParams, r) -> bool:
    """r < [n]_q^(1-beta), which keeps the pole z = -1/a_n off the disk |z| <= r."""
    return rational_power_cmp(q_integer(p.n, p.q), 1 - p.beta, as_rational(r)) > 0
