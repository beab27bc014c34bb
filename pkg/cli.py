#!/usr/bin/env python3
"""
q-Balazs-Szabados Experiment Runner
===================================

Runs one experiment (identity, thm1, vor or rate) over a list of n and
emits one row per n as CSV or JSON on stdout (or --out). Status lines go to
stderr so the emitted table is byte-identical for identical configs.

Exit codes: 0 all rows hold with agreeing precision, 1 some row falsified
or precision check failed, 2 configuration refused, 3 evaluation error.
"""

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

import config
from funcspace import FunctionSpec, parse_function
from kernel import (
    DomainError,
    HypothesisError,
    NumericContext,
    as_rational,
    circle_grid,
    precision_checked,
    relative_discrepancy,
)
from operators import BalazsSzabadosOperator, connection_transform
from qcore import MAX_BETA, QParams
from theory import (
    VARIANTS,
    RateReport,
    TheoremContext,
    case_exponent,
    case_for_beta,
    check_thm1,
    check_vor,
    fit_rate,
    sup_error,
    theorem_context,
)

MODES = ("identity", "thm1", "vor", "rate")
OUTPUTS = ("csv", "json")


@dataclass
class ExperimentConfig:
    mode: str
    function: str
    q: Fraction
    beta: Fraction
    r: Fraction
    R: Fraction
    n_list: List[int]
    grid_M: int = config.DEFAULT_GRID_M
    precision_bits: int = config.DEFAULT_PRECISION_BITS
    variant: str = "as_theorem2"
    output: str = "csv"
    seed: int = 0
    spot_checks: int = config.DEFAULT_SPOT_CHECKS
    inject_slope: Optional[Fraction] = None
    out: Optional[str] = None
    context: Optional[TheoremContext] = field(default=None, compare=False)

    @property
    def ctx(self) -> NumericContext:
        return NumericContext(mantissa_bits=self.precision_bits)

    @property
    def case(self) -> str:
        return case_for_beta(self.beta)

    def function_spec(self) -> FunctionSpec:
        return parse_function(self.function, self.R)


@dataclass(frozen=True)
class ReportRow:
    n: int
    bracket_n: Any
    r: Fraction
    lhs: Any
    rhs: Optional[Any]
    normalized_error: Optional[Any]
    holds: bool
    precision_ok: bool


# ---- Parsing ----


def parse_n_list(text: str) -> List[int]:
    """'16,32,64' or the inclusive range '11:22'."""
    text = str(text).strip()
    try:
        if ":" in text:
            start, stop = (int(part) for part in text.split(":", 1))
            values = list(range(start, stop + 1))
        else:
            values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise DomainError(f"cannot read n list {text!r}; use a comma list or a:b") from None
    if not values or any(n < 1 for n in values):
        raise DomainError(f"n list must be nonempty positive integers, got {text!r}")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise DomainError(f"n list must be strictly increasing, got {text!r}")
    return values


def config_text_to_argv(text: str) -> List[str]:
    """key=value lines (same keys as the flags, '#' comments) as CLI flags."""
    argv = []
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"config line {number} is not key=value: {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        argv.extend([f"--{key.replace('_', '-')}", value])
    return argv


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cli.py", description="q-Balazs-Szabados operator experiments")
    parser.add_argument("--config", help="file of key=value lines; explicit flags override it")
    parser.add_argument("--preset", help=f"named experiment: {', '.join(config.get_available_presets())}")
    parser.add_argument("--mode", choices=MODES, required=True)
    parser.add_argument("--function", required=True, help="exp_neg, sin, inv_shift:<c>, e_<m> or poly:<c0,c1,...>")
    parser.add_argument("--q", type=as_rational, required=True)
    parser.add_argument("--beta", type=as_rational, required=True)
    parser.add_argument("--r", type=as_rational, required=True)
    parser.add_argument("--R", type=as_rational, default=Fraction(config.DEFAULT_WORKING_R))
    parser.add_argument("--n", required=True, help="comma list or inclusive a:b range")
    parser.add_argument("--grid-M", type=int, default=config.DEFAULT_GRID_M)
    parser.add_argument("--precision-bits", type=int, default=config.DEFAULT_PRECISION_BITS)
    parser.add_argument("--variant", choices=VARIANTS, default="as_theorem2")
    parser.add_argument("--output", choices=OUTPUTS, default="csv")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--spot-checks", type=int, default=config.DEFAULT_SPOT_CHECKS)
    parser.add_argument("--inject-slope", type=as_rational, default=None,
                        help="rate mode: replace measured errors by [n]_q^slope")
    parser.add_argument("--out", help="write the table here instead of stdout")
    return parser


def parse_config(argv: Optional[Sequence[str]] = None, text: Optional[str] = None) -> ExperimentConfig:
    """Flags (and/or config-file text) to a validated ExperimentConfig.

    Precedence: preset < config file < explicit flags.
    """
    argv = list(sys.argv[1:] if argv is None and text is None else argv or [])
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    pre.add_argument("--preset")
    known, _ = pre.parse_known_args(argv)

    merged = []
    if known.preset:
        merged.extend(config.preset_to_argv(known.preset))
    if known.config:
        with open(known.config, "r") as f:
            merged.extend(config_text_to_argv(f.read()))
    if text is not None:
        merged.extend(config_text_to_argv(text))
    merged.extend(argv)

    args = _build_parser().parse_args(merged)
    cfg = ExperimentConfig(
        mode=args.mode,
        function=args.function,
        q=args.q,
        beta=args.beta,
        r=args.r,
        R=args.R,
        n_list=parse_n_list(args.n),
        grid_M=args.grid_M,
        precision_bits=args.precision_bits,
        variant=args.variant,
        output=args.output,
        seed=args.seed,
        spot_checks=args.spot_checks,
        inject_slope=args.inject_slope,
        out=args.out,
    )
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig):
    """Refuse configurations outside the hypotheses of the requested mode."""
    if cfg.precision_bits < config.MIN_PRECISION_BITS:
        raise DomainError(f"precision-bits must be at least {config.MIN_PRECISION_BITS}, got {cfg.precision_bits}")
    if cfg.grid_M < 1:
        raise DomainError(f"grid-M must be positive, got {cfg.grid_M}")
    if cfg.spot_checks < 0:
        raise DomainError(f"spot-checks must be nonnegative, got {cfg.spot_checks}")
    if not cfg.q > 0:
        raise DomainError(f"q must be positive, got {cfg.q}")
    if not 0 < cfg.beta <= MAX_BETA:
        raise DomainError(f"beta must lie in (0, 2/3], got {cfg.beta}")
    if not 0 < cfg.r:
        raise DomainError(f"r must be positive, got {cfg.r}")
    f = cfg.function_spec()
    if cfg.inject_slope is not None and cfg.mode != "rate":
        raise DomainError("--inject-slope only applies to rate mode")
    if cfg.mode == "identity":
        return

    if not f.bounded:
        raise HypothesisError(f"{f.name} is unbounded on [0,∞)")
    if f.radius is not None and cfg.R > f.radius:
        raise HypothesisError(f"{f.name} is only known analytic for |z| < {f.radius}, R = {cfg.R} requested")
    tag ="T1" if cfg.mode == "thm1" else ("T2" if cfg.mode == "vor" else "T3") + cfg.case
    context = theorem_context(tag, cfg.q, cfg.beta, cfg.r, cfg.R).require()
    for n in cfg.n_list:
        context.require_n(n)
    if cfg.mode == "rate":
        if len(cfg.n_list) < 3:
            raise DomainError(f"rate mode needs at least 3 values of n, got {len(cfg.n_list)}")
        if cfg.inject_slope is None:
            if cfg.case == "i" and f.is_polynomial_of_degree_at_most(1):
                raise HypothesisError(f"{f.name} is a polynomial of degree ≤ 1; case i needs a higher-degree function")
            if f.is_polynomial_of_degree_at_most(0):
                raise HypothesisError(f"{f.name} is constant; the approximation error is identically zero")
    cfg.context = context


# ---- Running ----


def _spot_points(cfg: ExperimentConfig, n: int) -> List[complex]:
    """Seeded interior points of |z| <= r, independent of the thread that asks for them."""
    rng = np.random.default_rng([cfg.seed, n])
    radii = rng.uniform(0, 1, cfg.spot_checks) * float(cfg.r)
    angles = rng.uniform(0, 2 * np.pi, cfg.spot_checks)
    return [complex(rad * np.cos(t), rad * np.sin(t)) for rad, t in zip(radii, angles)]


def _identity_row(cfg: ExperimentConfig, f: FunctionSpec, n: int) -> ReportRow:
    spots = _spot_points(cfg, n)

    def compute(c: NumericContext):
        p = QParams.create(cfg.q, cfg.beta, n, c)
        op = BalazsSzabadosOperator(f, p)
        points = list(circle_grid(cfg.r, cfg.grid_M, c).points) + [c.mpc(z) for z in spots]
        return max(relative_discrepancy(op(z), connection_transform(f, p, z), c) for z in points)

    ctx = cfg.ctx
    lhs, ok = precision_checked(compute, ctx)
    rhs = ctx.tol
    bracket = QParams.create(cfg.q, cfg.beta, n, ctx).bracket_n
    return ReportRow(n=n, bracket_n=bracket, r=cfg.r, lhs=lhs, rhs=rhs, normalized_error=lhs / rhs,
                     holds=bool(lhs <= rhs), precision_ok=ok)


def _bound_row(cfg: ExperimentConfig, f: FunctionSpec, n: int) -> ReportRow:
    p = QParams.create(cfg.q, cfg.beta, n, cfg.ctx)
    if cfg.mode == "thm1":
        check = check_thm1(f, p, cfg.r, cfg.R, M=cfg.grid_M)
    else:
        check = check_vor(f, p, cfg.r, cfg.R, cfg.case, cfg.variant, M=cfg.grid_M)
    return ReportRow(n=n, bracket_n=check.bracket_n, r=cfg.r, lhs=check.lhs_sup, rhs=check.rhs,
                     normalized_error=check.normalized, holds=check.holds, precision_ok=check.precision_ok)


def _rate_sample(cfg: ExperimentConfig, f: FunctionSpec, n: int) -> Tuple[Any, Any, bool, Any]:
    """([n]_q, sup error, precision flag, error * [n]_q^exponent)."""
    p = QParams.create(cfg.q, cfg.beta, n, cfg.ctx)
    if cfg.inject_slope is not None:
        err, ok = p.bracket_power(cfg.inject_slope), True
    else:
        err, ok = sup_error(f, p, cfg.r, cfg.grid_M)
    return p.bracket_n, err, ok, err * p.bracket_power(case_exponent(cfg.case, cfg.beta))


def _guarded(task, cfg: ExperimentConfig, f: FunctionSpec):
    """Attach the offending n to evaluation errors."""
    def run_one(n: int):
        try:
            return task(cfg, f, n)
        except (ArithmeticError, ValueError) as e:
            raise type(e)(f"n={n}: {e}") from e
    return run_one


def _fan_out(task, cfg: ExperimentConfig, f: FunctionSpec) -> list:
    workers = max(1, min(config.MAX_WORKERS, len(cfg.n_list)))
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_guarded(task, cfg, f), cfg.n_list))


def execute(cfg: ExperimentConfig) -> Tuple[List[ReportRow], Optional[RateReport]]:
    """Rows in n order, plus the fitted rate report in rate mode."""
    f = cfg.function_spec()
    if cfg.mode == "identity":
        return _fan_out(_identity_row, cfg, f), None
    if cfg.mode in ("thm1", "vor"):
        return _fan_out(_bound_row, cfg, f), None

    samples = _fan_out(_rate_sample, cfg, f)
    report = fit_rate([(bracket, err) for bracket, err, _, _ in samples], case_exponent(cfg.case, cfg.beta),
                      case=cfg.case, n_list=cfg.n_list, precision_ok=[ok for _, _, ok, _ in samples])
    rows = [ReportRow(n=n, bracket_n=bracket, r=cfg.r, lhs=err, rhs=None, normalized_error=normalized,
                      holds=report.holds, precision_ok=ok)
            for n, (bracket, err, ok, normalized) in zip(cfg.n_list, samples)]
    return rows, report


def run(cfg: ExperimentConfig) -> List[ReportRow]:
    return execute(cfg)[0]


# ---- Output ----


def _number(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Fraction):
        with mpmath.workdps(config.CSV_DIGITS + 5):
            return mpmath.nstr(mpmath.mpf(value.numerator) / value.denominator, config.CSV_DIGITS)
    return mpmath.nstr(value, config.CSV_DIGITS)


def row_to_record(row: ReportRow) -> Dict[str, Any]:
    return {
        "n": row.n,
        "bracket_n": _number(row.bracket_n),
        "r": _number(row.r),
        "lhs": _number(row.lhs),
        "rhs": _number(row.rhs),
        "normalized_error": _number(row.normalized_error),
        "holds": row.holds,
        "precision_ok": row.precision_ok,
    }


def emit(rows: Sequence[ReportRow], fmt: str = "csv") -> str:
    """CSV with the fixed header, or a JSON array with the same keys; numbers carry 25 significant digits."""
    if not rows:
        raise DomainError("nothing to emit")
    records = [row_to_record(row) for row in rows]
    if fmt == "json":
        for record in records:
            record["rhs"] = record["rhs"] or None
            record["normalized_error"] = record["normalized_error"] or None
        return json.dumps(records, indent=2) + "\n"
    if fmt != "csv":
        raise DomainError(f"output format must be csv or json, got {fmt!r}")
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=config.CSV_HEADER, lineterminator="\n")
    writer.writeheader()
    for record in records:
        record["holds"] = "true" if record["holds"] else "false"
        record["precision_ok"] = "true" if record["precision_ok"] else "false"
        writer.writerow(record)
    return buffer.getvalue()


def _status(msg: str):
    print(msg, file=sys.stderr)


def summarize(cfg: ExperimentConfig, rows: Sequence[ReportRow], report: Optional[RateReport]):
    held = sum(row.holds for row in rows)
    precise = sum(row.precision_ok for row in rows)
    if report is not None:
        low, high = report.constant_window
        verdict = "✅ holds" if report.holds else "❌ falsified"
        _status(f"📈 fitted slope {report.fitted_slope:.6f} (expected {report.expected_slope:.6f}), "
                f"window ratio {high / low:.4f} (limit {config.WINDOW_FACTOR}), verdict {verdict}")
    else:
        icon = "✅" if held == len(rows) else "❌"
        _status(f"{icon} {cfg.mode}: {held}/{len(rows)} rows hold")
    if precise < len(rows):
        _status(f"⚠️ precision doubling disagrees on {len(rows) - precise} of {len(rows)} rows")


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = parse_config(argv)
    except (ValueError, KeyError, OSError) as e:
        _status(f"🚫 Refused: {e}")
        return 2

    _status(f"🚀 {cfg.mode} on {cfg.function}: q={cfg.q} beta={cfg.beta} r={cfg.r} R={cfg.R} "
            f"n={','.join(str(n) for n in cfg.n_list)} ({cfg.precision_bits} bits)")
    if cfg.context is not None and cfg.context.binding:
        _status(f"📐 n₀ = {cfg.context.n0} ({cfg.context.binding} binds)")
    try:
        rows, report = execute(cfg)
    except (ArithmeticError, ValueError) as e:
        _status(f"❌ Evaluation error: {e}")
        return 3

    text = emit(rows, cfg.output)
    if cfg.out:
        with open(cfg.out, "w", newline="") as f:
            f.write(text)
        _status(f"💾 Wrote {len(rows)} rows to {cfg.out}")
    else:
        sys.stdout.write(text)
    summarize(cfg, rows, report)
    return 0 if all(row.holds and row.precision_ok for row in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
