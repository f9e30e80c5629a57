import math

import numpy as np
import pytest

from wardrop.costs import Affine, AlphaSequence, Constant, Monomial
from wardrop.errors import DomainError
from wardrop.instances import (
    designated_limit_instances,
    exp_game,
    pigou,
    pwl_game,
    step_breakpoints,
    step_game,
)
from wardrop.network import build_parallel
from wardrop.asymptotics import (
    TrendInstance,
    bounded_path_experiment,
    extremes_estimate,
    poa,
    poa_sweep,
    rv_poa_experiment,
    shift_experiment,
    step_jump_value,
    step_game_closed_form,
    pwl_game_constants,
    pwl_game_poa_at_special_demand,
    exp_game_poa_near_breakpoint,
)

GRID_TO_1E6 = tuple(np.geomspace(10.0, 1e6, 26))


# ---------------------------------------------------------------------------
# point evaluations
# ---------------------------------------------------------------------------


def test_pigou_poa():
    assert poa(pigou(), 1.0).poa == pytest.approx(4.0 / 3.0, rel=1e-9)


def test_symmetric_poa_is_one():
    net = build_parallel([Affine(0.0, 1.0), Affine(0.0, 1.0)])
    assert poa(net, 3.0).poa == pytest.approx(1.0, rel=1e-12)


def test_single_link_poa_is_one():
    net = build_parallel([Monomial(1.0, 2.0)])
    assert poa(net, 5.0).poa == pytest.approx(1.0, rel=1e-12)


def test_poa_needs_positive_demand():
    with pytest.raises(DomainError):
        poa(pigou(), 0.0)


def test_step_jump_just_after_breakpoint():
    a, k = 2.0, 1
    M = (a**k + a ** (k + 1)) * (1.0 + 1e-9)
    assert poa(step_game(a), M).poa == pytest.approx(step_jump_value(a), rel=1e-6)
    assert step_jump_value(2.0) == pytest.approx(1.2)


# ---------------------------------------------------------------------------
# closed form vs solver
# ---------------------------------------------------------------------------


def test_closed_form_regions():
    a = 2.0
    # flat region before the rise
    assert step_game_closed_form(a, 5.0).poa == pytest.approx(1.0, rel=1e-12)
    # immediately after the jump at z = 1 + a
    just_after = step_game_closed_form(a, 6.0 * (1.0 + 1e-12))
    assert just_after.poa == pytest.approx((4.0 + 4.0 * a) / (4.0 + 3.0 * a), rel=1e-9)
    # back to 1 at the period end z = 2a
    assert step_game_closed_form(a, 8.0).poa == pytest.approx(1.0, rel=1e-12)


def test_closed_form_region_boundaries_continuous_for_opt():
    for a in (2.0, 3.0, 5.0):
        beta = 1.0 + a / 2.0 + math.sqrt(a - 1.0)
        gamma = 1.5 * a
        for z in (beta, gamma):
            lo = step_game_closed_form(a, (z - 1e-11) * a)
            hi = step_game_closed_form(a, (z + 1e-11) * a)
            assert lo.opt == pytest.approx(hi.opt, rel=1e-9)


def test_closed_form_matches_solver_at_random_demands():
    rng = np.random.default_rng(3)
    net = step_game(3.0)
    for _ in range(120):
        M = float(np.exp(rng.uniform(math.log(6.0), math.log(2.0 * 27.0))))
        if _near_any_breakpoint(3.0, M):
            continue
        cf = step_game_closed_form(3.0, M)
        solver = poa(net, M)
        assert cf.poa == pytest.approx(solver.poa, rel=1e-6)


def _near_any_breakpoint(a, M, collar=1e-8):
    from wardrop.optimum import _period_index

    k = _period_index(a, M)
    return any(
        abs(M - b) <= collar * b for b in step_breakpoints(a, k - 1, k + 1)
    )


# ---------------------------------------------------------------------------
# sweeps, periods, extremes
# ---------------------------------------------------------------------------


def _step_curve(a, k_lo, k_hi, per_decade=96):
    hints = step_breakpoints(a, k_lo, k_hi + 1)
    return poa_sweep(
        step_game(a),
        2.0 * a**k_lo,
        2.0 * a ** (k_hi + 1),
        samples_per_decade=per_decade,
        breakpoint_hints=hints,
        period_base=a,
    )


def test_sweep_shape_one_period_a3():
    # rise to the jump at a^k + a^{k+1}, then decay back to 1
    a, k = 3.0, 1
    curve = _step_curve(a, 1, 1, per_decade=256)
    jump_M = a**k + a ** (k + 1)
    before = [s for s in curve.samples if s.M <= jump_M]
    after = [s for s in curve.samples if s.M > jump_M]
    beta = 1.0 + a / 2.0 + math.sqrt(a - 1.0)
    flat = [s for s in before if s.M < beta * a**k * (1.0 - 1e-9)]
    assert all(abs(s.poa - 1.0) <= 1e-9 for s in flat)
    rise = [s for s in before if s.M >= beta * a**k]
    assert all(b.poa >= a_.poa - 1e-9 for a_, b in zip(rise, rise[1:]))
    assert all(b.poa <= a_.poa + 1e-9 for a_, b in zip(after, after[1:]))
    assert max(s.poa for s in curve.samples) == pytest.approx(
        step_jump_value(a), rel=1e-6
    )


def test_sweep_invariants():
    curve = _step_curve(2.0, 1, 3)
    assert all(s.poa >= 1.0 - 1e-9 for s in curve.samples)
    assert all(s.poa == pytest.approx(s.weq / s.opt, rel=1e-12) for s in curve.samples)
    Ms = [s.M for s in curve.samples]
    assert Ms == sorted(Ms)
    assert not curve.failures


def test_extremes_estimate_a2():
    est = extremes_estimate(_step_curve(2.0, 1, 4))
    assert est.limsup_est == pytest.approx(1.2, abs=1e-3)
    assert est.liminf_est == pytest.approx(1.0, abs=1e-9)
    assert est.accepted


def test_extremes_estimate_a3():
    est = extremes_estimate(_step_curve(3.0, 1, 3))
    assert est.limsup_est == pytest.approx(16.0 / 13.0, abs=1e-3)
    assert est.liminf_est == pytest.approx(1.0, abs=1e-9)


def test_small_demand_periods_same_extrema():
    # periodicity also holds as M -> 0: periods k in {-3, -2, -1}
    est = extremes_estimate(_step_curve(2.0, -3, -1))
    assert est.limsup_est == pytest.approx(1.2, abs=1e-3)
    assert est.liminf_est == pytest.approx(1.0, abs=1e-9)


def test_extremes_requires_enough_periods():
    with pytest.raises(DomainError):
        extremes_estimate(_step_curve(2.0, 1, 2), periods_required=3)


def test_constant_pair_poa_identically_one():
    net = build_parallel([Constant(2.0), Constant(2.0)])
    curve = poa_sweep(net, 1.0, 100.0, samples_per_decade=8)
    assert all(s.poa == pytest.approx(1.0, rel=1e-12) for s in curve.samples)


def test_decade_windows_without_period_base():
    curve = poa_sweep(pigou(), 1.0, 1000.0, samples_per_decade=8)
    assert [p.index for p in curve.periods] == [0, 1, 2]
    # PoA decays toward 1, so later decades have smaller maxima
    maxima = [p.max_poa for p in curve.periods]
    assert maxima == sorted(maxima, reverse=True)


def test_sweep_records_failures_and_continues():
    # demands below the exponential bracket lattice cannot be solved
    curve = poa_sweep(exp_game(), 1.0, 30.0, samples_per_decade=8)
    assert curve.failures
    assert curve.samples  # the solvable demands still went through
    assert all(s.M > 2.0 for s in curve.samples)


def test_parallel_sweep_matches_serial():
    hints = step_breakpoints(2.0, 1, 2)
    serial = poa_sweep(step_game(2.0), 4.0, 16.0, 32, hints, 2.0, jobs=None)
    parallel = poa_sweep(step_game(2.0), 4.0, 16.0, 32, hints, 2.0, jobs=2)
    assert [s.M for s in serial.samples] == [s.M for s in parallel.samples]
    assert [s.poa for s in serial.samples] == [s.poa for s in parallel.samples]


# ---------------------------------------------------------------------------
# interpolated-square constants
# ---------------------------------------------------------------------------


def test_pwl_game_constants_a2():
    c = pwl_game_constants(2.0)
    assert c.b == pytest.approx(math.sqrt(10.0 / 3.0), rel=1e-15)
    assert 1.0 < c.d < 2.0
    assert 1.0055 <= c.poa_at_mk <= 1.0063  # reported value ~1.0059


def test_pwl_game_poa_independent_of_k():
    values = [pwl_game_poa_at_special_demand(2.0, k).poa for k in range(1, 6)]
    assert max(values) - min(values) <= 1e-9 * values[0]
    assert values[0] == pytest.approx(pwl_game_constants(2.0).poa_at_mk, rel=1e-9)


def test_pwl_game_matches_brute_force():
    from wardrop.optimum import opt_bruteforce

    consts = pwl_game_constants(2.0)
    exact = pwl_game_poa_at_special_demand(2.0, 1)
    brute_opt = opt_bruteforce(pwl_game(2.0), consts.m1)
    poa_vs_brute = exact.equilibrium.cost / brute_opt.cost
    assert poa_vs_brute == pytest.approx(exact.poa, rel=1e-4)


# ---------------------------------------------------------------------------
# exponential instance
# ---------------------------------------------------------------------------


def test_exp_game_closed_form_value_k4():
    rep = exp_game_poa_near_breakpoint(AlphaSequence("factorial"), 4)
    assert rep.closed_form == pytest.approx(144.0 / (25.0 + math.log(120.0)), rel=1e-12)
    assert rep.closed_form == pytest.approx(4.834, abs=2e-3)


def test_exp_game_monotone_growth():
    al = AlphaSequence("factorial")
    values = [exp_game_poa_near_breakpoint(al, k).closed_form for k in range(3, 9)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_exp_game_numeric_agreement():
    al = AlphaSequence("factorial")
    for k in (3, 4, 5):
        rep = exp_game_poa_near_breakpoint(al, k)
        assert rep.relative_gap <= 1e-2
        assert rep.candidate_flag is None


def test_exp_game_guard_for_small_k():
    # k = 1 precedes the asymptotic regime; the report must still come back
    # with the candidate-set flag surfaced rather than an assertion
    rep = exp_game_poa_near_breakpoint(AlphaSequence("factorial"), 1)
    assert rep.closed_form > 0
    assert rep.numeric_poa >= 1.0 - 1e-9


def test_exp_game_sequence_too_short():
    with pytest.raises(DomainError):
        exp_game_poa_near_breakpoint(AlphaSequence("explicit", values=(1.0, 3.0)), 2)


# ---------------------------------------------------------------------------
# vanishing-inefficiency trend experiments
# ---------------------------------------------------------------------------


def test_bounded_path_pigou_rate():
    grid = tuple(np.geomspace(1.0, 1000.0, 13))
    rep = bounded_path_experiment(pigou(), grid, eps=2e-3)
    assert rep.hypothesis["B"] == 1.0
    assert rep.final_poa - 1.0 <= 2e-3
    assert rep.passed
    # proof-side bound: PoA <= M B / Opt at every sample
    for (M, p), bound in zip(rep.samples, rep.hypothesis["weq_over_opt_bound"]):
        assert p <= bound + 1e-12


def test_bounded_path_constant_only():
    net = build_parallel([Constant(2.0), Constant(3.0)])
    rep = bounded_path_experiment(net, (1.0, 10.0, 100.0))
    assert all(p == pytest.approx(1.0, rel=1e-12) for _, p in rep.samples)


def test_bounded_path_rejects_diverging_instance():
    net = build_parallel([Affine(0.0, 1.0), Monomial(1.0, 2.0)])
    with pytest.raises(DomainError):
        bounded_path_experiment(net, (1.0, 10.0))


def test_bounded_path_on_general_graph():
    # the bounded-limit argument holds on any topology, not just parallel
    from wardrop.network import Edge, Network

    net = Network(
        ("s", "v", "t"),
        (Edge("e1", "s", "v"), Edge("e2", "s", "v"), Edge("e3", "v", "t")),
        (Affine(0.0, 1.0), Constant(5.0), Constant(1.0)),
        "s",
        "t",
    )
    rep = bounded_path_experiment(net, tuple(np.geomspace(1.0, 1000.0, 9)), eps=2e-3)
    assert rep.hypothesis["B"] == 6.0  # cheapest path limit: 5 + 1
    assert rep.passed


def test_shift_experiment_sandwich_and_trend():
    base = build_parallel([Affine(0.0, 1.0), Affine(0.0, 2.0)])
    rep = shift_experiment(base, (1.0, 3.0), GRID_TO_1E6)
    assert rep.sandwich_ok
    assert rep.passed
    assert rep.shifted.final_poa <= 1.01


def test_shift_experiment_zero_shifts_identical():
    base = build_parallel([Affine(0.0, 1.0), Affine(0.0, 2.0)])
    rep = shift_experiment(base, (0.0, 0.0), (1.0, 10.0, 100.0))
    for M, lam, lam_shifted in rep.lambda_pairs:
        assert lam == pytest.approx(lam_shifted, rel=1e-12)
    base_curve = dict(rep.base.samples)
    for M, p in rep.shifted.samples:
        assert p == pytest.approx(base_curve[M], rel=1e-12)


def test_shift_experiment_equal_shifts_exact_lambda_offset():
    base = build_parallel([Affine(0.0, 1.0), Affine(0.0, 2.0)])
    rep = shift_experiment(base, (2.0, 2.0), (1.0, 10.0, 100.0))
    for M, lam, lam_shifted in rep.lambda_pairs:
        assert lam_shifted == pytest.approx(lam + 2.0, rel=1e-9)


def test_rv_poa_experiment_instances():
    insts = designated_limit_instances()
    cases = [
        TrendInstance("affine", insts["affine"], "affine"),
        TrendInstance(
            "polynomial-over-common-rv",
            insts["polynomial-over-common-rv"],
            "ratio-to-rv",
            reference=Monomial(1.0, 2.0),
            expected=(1.0, 3.0),
        ),
        TrendInstance(
            "derivative-limit", insts["derivative-limit"], "derivative",
            expected=(2.0, math.inf),
        ),
        TrendInstance(
            "affine-sandwich", insts["affine-sandwich"], "sandwich",
            sandwich=((0.0, 1.0, 1.0), (0.0, 0.0, 1.0)),
        ),
        TrendInstance(
            "one-slope-infinite",
            build_parallel([Affine(0.0, 1.0), Monomial(1.0, 2.0)]),
            "ratio-to-identity",
            expected=(1.0, math.inf),
        ),
    ]
    for case in cases:
        rep = rv_poa_experiment(case, GRID_TO_1E6)
        assert rep.passed, case.name
        assert rep.final_poa <= 1.01
        assert rep.monotone_tail


def test_rv_poa_experiment_rejects_wrong_hypothesis():
    bad = TrendInstance(
        "wrong-expectation",
        build_parallel([Affine(0.0, 1.0), Affine(0.0, 2.0)]),
        "ratio-to-identity",
        expected=(1.0, 5.0),  # the true slope is 2
    )
    with pytest.raises(DomainError):
        rv_poa_experiment(bad, (10.0, 100.0))
