"""Wardrop equilibrium solvers.

The parallel solver finds the equilibrium cost level lambda by monotone
bisection: with set-valued inverses [x-_i, x+_i] = c_i^{-1}(lambda), the
correct level is the smallest lambda whose aggregate inverse interval
[sum x-_i, sum x+_i] contains the demand M.  This handles jumps (step
costs) and flats (constant costs) uniformly; any allocation inside the
per-link intervals is an equilibrium and the surplus M - sum x-_i is
distributed proportionally to interval widths, which is deterministic and
scale-covariant.

Equilibrium verification compares each used path's cost against the
cheapest *entry* cost (right limits of the edge costs): for continuous
costs this is the textbook condition, and for left-continuous step costs
it is the deviation an infinitesimal player would actually face, which is
what the counterexample constructions rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .costs import ExpOverX, StepExp
from .errors import (
    ConvergenceError,
    DemandBracketError,
    DomainError,
    UnsupportedCostError,
)
from .logdomain import LogValue
from .network import (
    FlowProfile,
    Network,
    edge_flows,
    social_cost,
    social_cost_log,
)

RESIDUAL_RTOL = 1e-9
GENERAL_RTOL = 1e-7


@dataclass(frozen=True)
class EquilibriumSolution:
    flow: FlowProfile
    lam: float | LogValue  # common cost level (binding level at jumps)
    residual: float
    cost: float | LogValue


@dataclass(frozen=True)
class ResidualReport:
    residual: float
    min_entry_cost: float
    path_costs: tuple[float, ...]
    entry_costs: tuple[float, ...]
    worst_path: int | None


# ---------------------------------------------------------------------------
# the level-bisection engine (shared with the marginal-cost optimum)
# ---------------------------------------------------------------------------


def _aggregate_inverse(funcs, lam: float):
    los, his = [], []
    for f in funcs:
        lo, hi = f.generalized_inverse(lam)
        los.append(lo)
        his.append(hi)
    return los, his


def level_allocation(
    funcs,
    M: float,
    *,
    hi_seed: float = 1.0,
    rel_tol: float = 1e-15,
) -> tuple[float, list[float]]:
    """Solve sum_i f_i(x_i) balanced at a common level with sum x_i = M.

    ``funcs`` are weakly increasing level functions exposing ``eval`` and
    ``generalized_inverse``.  Returns (level, allocation).
    """
    if M <= 0:
        raise DomainError(f"demand must be positive, got {M!r}")

    def g_plus(lam: float) -> float:
        return sum(f.generalized_inverse(lam)[1] for f in funcs)

    lam_lo = min(f.eval(0.0) for f in funcs)
    if g_plus(lam_lo) >= M:
        lam_star = lam_lo
    else:
        lam_hi = max(1.0, min(f.eval(M) for f in funcs)) * hi_seed
        doublings = 0
        while g_plus(lam_hi) < M:
            lam_hi *= 2.0
            doublings += 1
            if doublings > 128:
                raise ConvergenceError(
                    "no finite level can route the demand (cost level unbounded)"
                )
        lo, hi = lam_lo, lam_hi
        for _ in range(300):
            if hi - lo <= rel_tol * max(1.0, abs(hi)):
                break
            mid = 0.5 * (lo + hi)
            if g_plus(mid) >= M:
                hi = mid
            else:
                lo = mid
        lam_star = hi

    slack = 1e-9 * max(1.0, M)
    los, his = _aggregate_inverse(funcs, lam_star)
    if math.fsum(los) > M + slack:
        # the bisection stopped a hair past a jump of g+; snap the level to
        # a nearby attained cost value and re-check the sandwich
        for cand in _snap_candidates(funcs, los, his, lam_star):
            c_los, c_his = _aggregate_inverse(funcs, cand)
            if math.fsum(c_los) <= M + slack and sum(c_his) >= M - slack:
                lam_star, los, his = cand, c_los, c_his
                break
        else:
            raise ConvergenceError(
                "level bisection failed to bracket the demand", residual=sum(los) - M
            )

    return lam_star, _allocate(funcs, lam_star, los, his, M)


def _snap_candidates(funcs, los, his, lam_star: float) -> list[float]:
    cands = set()
    for f, lo, hi in zip(funcs, los, his):
        for x in (lo, hi):
            if math.isfinite(x):
                try:
                    cands.add(f.eval(x))
                except Exception:
                    pass
    return sorted(c for c in cands if c <= lam_star * (1.0 + 1e-12) + 1e-300)


def _allocate(funcs, lam: float, los, his, M: float) -> list[float]:
    x = list(los)
    surplus = M - math.fsum(los)
    if surplus > 0:
        widths = [hi - lo for lo, hi in zip(los, his)]
        infinite = [i for i, w in enumerate(widths) if math.isinf(w)]
        if infinite:
            share = surplus / len(infinite)
            for i in infinite:
                x[i] += share
        else:
            total = math.fsum(widths)
            if total > 0:
                for i, w in enumerate(widths):
                    x[i] = min(los[i] + surplus * (w / total), his[i])
    # absorb bisection roundoff (either sign) on a link whose cost passes
    # through lam continuously; perturbing a knot-pinned link would move it
    # off the knot, where the entry cost is discontinuous
    diff = M - math.fsum(x)
    if diff != 0.0:
        x[_smoothest_link(funcs, lam, x, diff)] += diff
    return [max(v, 0.0) for v in x]


def _smoothest_link(funcs, lam: float, x, diff: float) -> int:
    best, arg = math.inf, 0
    for i, (f, xi) in enumerate(zip(funcs, x)):
        if xi + diff < 0:
            continue
        try:
            gap = abs(f.eval(max(xi, 0.0)) - lam)
        except Exception:
            continue
        if gap < best:
            best, arg = gap, i
    return arg


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------


def wardrop_parallel(
    net: Network, M: float, *, hi_seed: float = 1.0
) -> EquilibriumSolution:
    """Equilibrium of a parallel network via level bisection.

    Jumps are allowed; the allocation puts each link at the lower end of
    its inverse interval plus a proportional share of the remaining demand.
    """
    if not net.is_parallel():
        raise DomainError("wardrop_parallel requires a parallel network")
    if M <= 0:
        raise DomainError(f"demand must be positive, got {M!r}")
    lam, x = level_allocation(net.costs, M, hi_seed=hi_seed)
    flow = FlowProfile(tuple(x), M)
    report = verify_equilibrium(net, flow)
    tol = RESIDUAL_RTOL * max(lam, 1.0)
    if report.residual > tol:
        raise ConvergenceError(
            "parallel equilibrium residual above tolerance", residual=report.residual
        )
    return EquilibriumSolution(flow, lam, report.residual, social_cost(net, flow))


def verify_equilibrium(
    net: Network, flow: FlowProfile, used_tol: float = 1e-9
) -> ResidualReport:
    """Worst violation of the equilibrium condition over used paths.

    A path counts as used when its flow exceeds used_tol * M.  The
    comparison cost for each path is its entry cost (edge right limits),
    which coincides with the plain path cost for continuous families.
    """
    x = edge_flows(net, flow)
    own = tuple(net.path_cost(i, x) for i in range(net.n_paths))
    entry = tuple(net.path_entry_cost(i, x) for i in range(net.n_paths))
    min_entry = min(entry)
    threshold = used_tol * max(flow.total, 0.0)
    worst, worst_path = 0.0, None
    for i, f in enumerate(flow.path_flows):
        if f > threshold:
            gap = own[i] - min_entry
            if gap > worst:
                worst, worst_path = gap, i
    return ResidualReport(worst, min_entry, own, entry, worst_path)


def wardrop_general(
    net: Network,
    M: float,
    *,
    tol: float = GENERAL_RTOL,
    max_iter: int = 100_000,
) -> EquilibriumSolution:
    """Equilibrium on an arbitrary network by conditional-gradient descent
    on the separable potential sum_e int_0^{x_e} c_e, with exact line
    search toward the currently cheapest path (all-or-nothing direction).

    Requires continuous costs; discontinuous parallel instances are routed
    to the bisection solver.
    """
    if M <= 0:
        raise DomainError(f"demand must be positive, got {M!r}")
    if not all(c.is_continuous() for c in net.costs):
        if net.is_parallel():
            return wardrop_parallel(net, M)
        raise UnsupportedCostError(
            "discontinuous costs on a non-parallel network are not supported"
        )

    n_paths = net.n_paths
    path_matrix = np.zeros((n_paths, net.n_edges))
    for i, p in enumerate(net.paths):
        for e in p:
            path_matrix[i, e] += 1.0

    zero_edges = np.zeros(net.n_edges)
    start = min(range(n_paths), key=lambda i: net.path_cost(i, zero_edges))
    x_paths = np.zeros(n_paths)
    x_paths[start] = M

    residual = math.inf
    for _ in range(max_iter):
        xe = path_matrix.T @ x_paths
        own = [net.path_cost(i, xe) for i in range(n_paths)]
        lam = min(own)
        residual = max(
            (own[i] - lam for i in range(n_paths) if x_paths[i] > 1e-12 * M),
            default=0.0,
        )
        if residual <= tol * max(lam, 1.0):
            flow = FlowProfile(tuple(x_paths / np.sum(x_paths) * M), M)
            return EquilibriumSolution(
                flow, lam, residual, social_cost(net, flow)
            )
        target = min(range(n_paths), key=lambda i: own[i])
        d_paths = np.zeros(n_paths)
        d_paths[target] = M
        delta_e = path_matrix.T @ d_paths - xe

        def dphi(t: float) -> float:
            return float(
                sum(
                    delta_e[e] * net.costs[e].eval(float(xe[e] + t * delta_e[e]))
                    for e in range(net.n_edges)
                    if delta_e[e] != 0.0
                )
            )

        if dphi(1.0) <= 0.0:
            t_star = 1.0
        else:
            lo_t, hi_t = 0.0, 1.0
            for _ in range(80):
                mid = 0.5 * (lo_t + hi_t)
                if dphi(mid) <= 0.0:
                    lo_t = mid
                else:
                    hi_t = mid
            t_star = 0.5 * (lo_t + hi_t)
        x_paths = (1.0 - t_star) * x_paths + t_star * d_paths

    raise ConvergenceError(
        "conditional gradient hit the iteration cap", residual=residual
    )


def wardrop_parallel_log(net: Network, M: float) -> EquilibriumSolution:
    """Equilibrium of the exponential two-link instance, in log domain.

    Applies the explicit bracket split: for 2 a_k < M <= a_k + a_{k+1} the
    step link carries a_k; for a_k + a_{k+1} < M <= 2 a_{k+1} the smooth
    link carries a_{k+1}.
    """
    if M <= 0:
        raise DomainError(f"demand must be positive, got {M!r}")
    if (
        net.n_edges != 2
        or not isinstance(net.costs[0], ExpOverX)
        or not isinstance(net.costs[1], StepExp)
    ):
        raise UnsupportedCostError(
            "log-domain solver expects links (exp_over_x, step_exp)"
        )
    alphas = net.costs[1].alphas
    if alphas.kind == "explicit" and len(alphas.values) < 2:
        raise DemandBracketError(
            "alpha sequence needs at least two terms to define the bracket lattice"
        )
    if M <= 2.0 * alphas.alpha(1):
        raise DemandBracketError(
            f"demand {M!r} at or below 2*alpha_1; the bracket lattice starts above it",
            needed_index=0,
        )
    k = 1
    while 2.0 * alphas.alpha(k + 1) < M:
        k += 1
        if k + 1 > alphas.max_index():
            raise DemandBracketError(
                f"demand {M!r} beyond the generated alpha sequence",
                needed_index=k + 1,
            )
    a_k, a_k1 = alphas.alpha(k), alphas.alpha(k + 1)
    if M <= a_k + a_k1:
        x, y = M - a_k, a_k
    else:
        x, y = a_k1, M - a_k1
    flow = FlowProfile((x, y), M)

    own = (net.costs[0].eval_log(x), net.costs[1].eval_log(y))
    entry = (net.costs[0].eval_log(x), net.costs[1].eval_right_log(y))
    min_entry = min(entry)
    residual = 0.0
    for i, f in enumerate(flow.path_flows):
        if f > 1e-9 * M:
            gap = own[i].log_magnitude - min_entry.log_magnitude
            residual = max(residual, math.expm1(gap) if gap > 0 else 0.0)
    lam = max(own)
    cost = social_cost_log(net, flow)
    return EquilibriumSolution(flow, lam, residual, cost)
