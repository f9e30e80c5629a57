"""Numeric probes for regular variation and its closure properties.

A positive function T is b-regularly varying when T(ax)/T(x) -> a^b for
every a > 0.  A finite grid cannot certify a limit, so every check here
reports residuals on a geometric grid and requires them to decay as the
grid grows; results are "consistent at probe scale", never proofs.
Ratios are measured in log domain so exponential growth cannot overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import median

from .costs import CostFunction
from .errors import DomainError, UnsupportedCostError

_DEFAULT_GRID = tuple(10.0**j for j in range(4, 10))


@dataclass(frozen=True)
class RvProbe:
    """Scale factors and evaluation grid for the variation checks."""

    scale_factors: tuple[float, ...] = (2.0, 3.0, 10.0)
    grid: tuple[float, ...] = _DEFAULT_GRID
    rel_tol: float = 1e-3

    def __post_init__(self):
        if any(a <= 0 for a in self.scale_factors):
            raise DomainError("scale factors must be positive")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise DomainError("probe grid must be strictly increasing")


class _LogFn:
    """Uniform log-domain view of a cost family or plain callable."""

    def __init__(self, fn, log_fn=None, name: str = ""):
        self.name = name or getattr(fn, "family", "") or getattr(fn, "__name__", "fn")
        if isinstance(fn, CostFunction):
            self._log = lambda x: fn.eval_log(x)
            self._fn = fn.eval
        else:
            self._fn = fn
            self._log = log_fn

    def __call__(self, x: float) -> float:
        return self._fn(x)

    def log_at(self, x: float) -> float:
        if self._log is not None:
            lv = self._log(x)
            if hasattr(lv, "is_zero"):
                if lv.is_zero:
                    raise DomainError(f"{self.name} is zero at {x!r}; not a positive function")
                return lv.log_magnitude
            return float(lv)
        v = self._fn(x)
        if v <= 0 or math.isnan(v):
            raise DomainError(f"{self.name} must be positive on the grid, got {v!r} at {x!r}")
        return math.log(v)


@dataclass(frozen=True)
class RvIndexReport:
    beta: float
    residuals: tuple[float, ...]  # one per grid point (max over scale factors)
    max_residual: float
    passed: bool
    reason: str = ""


@dataclass(frozen=True)
class RvCheckReport:
    name: str
    measured: tuple[float, ...]
    expected: tuple[float, ...]
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)


def _ratio_deviation(log_ratio: float, beta: float, log_a: float) -> float:
    d = log_ratio - beta * log_a
    if abs(d) > 700.0:
        return math.inf
    return abs(math.expm1(d))


def rv_index(theta, probe: RvProbe = RvProbe()) -> RvIndexReport:
    """Estimate the variation index from log ratios on the probe grid.

    beta is the median of log(T(ax)/T(x))/log(a) at the largest grid
    point; a pass additionally requires the per-grid-point residuals to
    decay as x grows (the honest finite surrogate for a limit).
    """
    f = theta if isinstance(theta, _LogFn) else _LogFn(theta)
    logs: dict[float, float] = {}
    for x in probe.grid:
        logs[x] = f.log_at(x)
        for a in probe.scale_factors:
            logs[a * x] = f.log_at(a * x)

    x_top = probe.grid[-1]
    estimates = [
        (logs[a * x_top] - logs[x_top]) / math.log(a) for a in probe.scale_factors
    ]
    beta = median(estimates)

    residuals = []
    for x in probe.grid:
        devs = [
            _ratio_deviation(logs[a * x] - logs[x], beta, math.log(a))
            for a in probe.scale_factors
        ]
        residuals.append(max(devs))
    max_residual = max(residuals)

    decaying = all(
        r_next <= r * (1.0 + 1e-6) + 1e-12
        for r, r_next in zip(residuals, residuals[1:])
    )
    if residuals[-1] > probe.rel_tol:
        return RvIndexReport(
            beta, tuple(residuals), max_residual, False,
            "not regularly varying at this probe: residual above tolerance",
        )
    if not decaying:
        return RvIndexReport(
            beta, tuple(residuals), max_residual, False,
            "residuals do not decay along the grid",
        )
    return RvIndexReport(beta, tuple(residuals), max_residual, True)


def numeric_inverse(theta: CostFunction):
    """Pointwise inverse via the generalized inverse (midpoint of the
    interval, which is a single point for strictly increasing families)."""

    def inv(level: float) -> float:
        lo, hi = theta.generalized_inverse(level)
        return 0.5 * (lo + hi)

    return inv


def check_inverse_rv(theta: CostFunction, probe: RvProbe = RvProbe()) -> RvCheckReport:
    """Inverse of a b-regularly varying function should be 1/b-varying."""
    _require_invertible(theta)
    direct = rv_index(theta, probe)
    inv_report = rv_index(_LogFn(numeric_inverse(theta), name="inverse"), probe)
    expected = 1.0 / direct.beta
    passed = (
        direct.passed
        and inv_report.passed
        and abs(inv_report.beta - expected) <= probe.rel_tol * max(1.0, abs(expected))
    )
    return RvCheckReport(
        "inverse_rv",
        (inv_report.beta,),
        (expected,),
        probe.rel_tol,
        passed,
        {"beta_direct": direct.beta, "inverse_residual": inv_report.max_residual},
    )


def check_scaling_identity(
    theta: CostFunction, gamma: float, probe: RvProbe = RvProbe()
) -> RvCheckReport:
    """T^{-1}(gamma T(t))/t -> gamma^{1/b} at large t."""
    if gamma <= 0:
        raise DomainError(f"gamma must be positive, got {gamma!r}")
    _require_invertible(theta)
    direct = rv_index(theta, probe)
    inv = numeric_inverse(theta)
    profile = tuple(inv(gamma * theta.eval(t)) / t for t in probe.grid)
    target = gamma ** (1.0 / direct.beta)
    passed = direct.passed and abs(profile[-1] - target) <= probe.rel_tol * max(1.0, target)
    return RvCheckReport(
        "scaling_identity",
        (profile[-1],),
        (target,),
        probe.rel_tol,
        passed,
        {"gamma": gamma, "profile": profile, "beta": direct.beta},
    )


def check_product_and_integral_rv(
    theta: CostFunction, probe: RvProbe = RvProbe()
) -> RvCheckReport:
    """x*T(x) and int_0^x T should both be (1+b)-regularly varying."""
    base = rv_index(theta, probe)
    f = _LogFn(theta)
    product = _LogFn(
        lambda x: x * theta.eval(x),
        log_fn=lambda x: math.log(x) + f.log_at(x),
        name="product",
    )
    integral = _LogFn(theta.primitive, name="integral")
    p_report = rv_index(product, probe)
    i_report = rv_index(integral, probe)
    expected = 1.0 + base.beta
    passed = (
        p_report.passed
        and i_report.passed
        and abs(p_report.beta - expected) <= probe.rel_tol * max(1.0, expected)
        and abs(i_report.beta - expected) <= probe.rel_tol * max(1.0, expected)
    )
    return RvCheckReport(
        "product_and_integral_rv",
        (p_report.beta, i_report.beta),
        (expected, expected),
        probe.rel_tol,
        passed,
        {"beta_base": base.beta},
    )


def check_composition_rv(
    theta_outer: CostFunction,
    theta_inner: CostFunction,
    probe: RvProbe = RvProbe(),
    tol: float = 1e-2,
) -> RvCheckReport:
    """Composition multiplies variation indices: index(T1 o T2) = b1*b2.

    Evaluated on the subset of the grid where the inner value stays well
    inside float range (the composition itself goes through log domain).
    """
    outer = _LogFn(theta_outer)
    a_max = max(probe.scale_factors)
    usable = [x for x in probe.grid if theta_inner.eval(a_max * x) <= 1e150]
    if len(usable) < 3:
        usable = [x for x in (10.0**j for j in range(1, 10))
                  if theta_inner.eval(a_max * x) <= 1e150]
    if len(usable) < 3:
        raise DomainError("inner function overflows on every usable grid")
    reduced = RvProbe(probe.scale_factors, tuple(usable), probe.rel_tol)
    comp = _LogFn(
        lambda x: theta_outer.eval(theta_inner.eval(x)),
        log_fn=lambda x: outer.log_at(theta_inner.eval(x)),
        name="composition",
    )
    b1 = rv_index(theta_outer, probe).beta
    b2 = rv_index(theta_inner, reduced).beta
    comp_report = rv_index(comp, reduced)
    expected = b1 * b2
    passed = comp_report.passed and abs(comp_report.beta - expected) <= tol * max(1.0, expected)
    return RvCheckReport(
        "composition_rv",
        (comp_report.beta,),
        (expected,),
        tol,
        passed,
        {"beta_outer": b1, "beta_inner": b2, "grid": tuple(usable)},
    )


def check_sum_rv(
    theta_1: CostFunction, theta_2: CostFunction, probe: RvProbe = RvProbe()
) -> RvCheckReport:
    """The sum of two b-regularly varying functions stays b-varying."""
    r1, r2 = rv_index(theta_1, probe), rv_index(theta_2, probe)
    if abs(r1.beta - r2.beta) > probe.rel_tol * max(1.0, abs(r1.beta)):
        raise DomainError(
            f"summands have different variation indices: {r1.beta} vs {r2.beta}"
        )
    f1, f2 = _LogFn(theta_1), _LogFn(theta_2)

    def log_sum_fn(x: float) -> float:
        l1, l2 = f1.log_at(x), f2.log_at(x)
        hi, lo = max(l1, l2), min(l1, l2)
        return hi + math.log1p(math.exp(lo - hi))

    total = _LogFn(
        lambda x: theta_1.eval(x) + theta_2.eval(x), log_fn=log_sum_fn, name="sum"
    )
    report = rv_index(total, probe)
    expected = r1.beta
    passed = (
        r1.passed and r2.passed and report.passed
        and abs(report.beta - expected) <= probe.rel_tol * max(1.0, abs(expected))
    )
    return RvCheckReport(
        "sum_rv", (report.beta,), (expected,), probe.rel_tol, passed,
        {"beta_1": r1.beta, "beta_2": r2.beta},
    )


def _require_invertible(theta: CostFunction) -> None:
    if not (theta.is_continuous() and theta.is_strictly_increasing()):
        raise UnsupportedCostError(
            "inverse checks need a continuous, strictly increasing function"
        )


def rv_suite(probe: RvProbe = RvProbe()) -> dict:
    """Run the full closure-property battery on the canonical families.

    The canonical battery must pass on {x, 2x, x^2, 3x^2+x, x^3, constant}
    and the non-variation detector must fire on exp(x)/x; asserting both
    directions guards against vacuous passes.
    """
    from .costs import Constant, ExpOverX, Monomial, Polynomial

    identity = Monomial(1.0, 1.0)
    canonical = {
        "x": identity,
        "2x": Monomial(2.0, 1.0),
        "x^2": Monomial(1.0, 2.0),
        "3x^2+x": Polynomial((0.0, 1.0, 3.0)),
        "x^3": Monomial(1.0, 3.0),
        "constant": Constant(5.0),
    }
    expected_beta = {"x": 1, "2x": 1, "x^2": 2, "3x^2+x": 2, "x^3": 3, "constant": 0}

    checks = []
    for name, cost in canonical.items():
        r = rv_index(cost, probe)
        checks.append(
            {
                "check": f"rv_index[{name}]",
                "beta": r.beta,
                "expected_beta": expected_beta[name],
                "residuals": list(r.residuals),
                "passed": bool(
                    r.passed
                    and abs(r.beta - expected_beta[name]) <= probe.rel_tol
                ),
            }
        )
        if cost.is_strictly_increasing():
            inv = check_inverse_rv(cost, probe)
            checks.append(_check_row(f"inverse[{name}]", inv))
            sc = check_scaling_identity(cost, 4.0, probe)
            checks.append(_check_row(f"scaling[{name}]", sc))
        pi = check_product_and_integral_rv(cost, probe)
        checks.append(_check_row(f"product_integral[{name}]", pi))

    comp = check_composition_rv(canonical["x^2"], canonical["x^3"], probe)
    checks.append(_check_row("composition[x^2 o x^3]", comp))
    s = check_sum_rv(canonical["x^2"], canonical["3x^2+x"], probe)
    checks.append(_check_row("sum[x^2 + 3x^2+x]", s))

    non_rv = rv_index(ExpOverX(), probe)
    checks.append(
        {
            "check": "non_rv_detector[exp(x)/x]",
            "beta": non_rv.beta,
            "residuals": [r if math.isfinite(r) else 1e308 for r in non_rv.residuals],
            "passed": bool(not non_rv.passed),
        }
    )
    return {"checks": checks, "all_pass": all(c["passed"] for c in checks)}


def _check_row(name: str, report: RvCheckReport) -> dict:
    return {
        "check": name,
        "measured": list(report.measured),
        "expected": list(report.expected),
        "tolerance": report.tolerance,
        "passed": bool(report.passed),
    }
