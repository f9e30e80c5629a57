"""The geometric-step counterexample: PoA oscillates forever.

Pair the identity cost with a step function equal to a^k on (a^{k-1}, a^k].
Within every demand window (2a^k, 2a^{k+1}] the price of anarchy starts at
1, rises, jumps to (4+4a)/(4+3a) when the equilibrium flips links at
M = a^k + a^{k+1}, and decays back to 1 -- the same shape in every window,
so the curve is periodic on a log axis and has no limit.  The jump value
is 6/5 for a = 2 and tends to 4/3 as a grows.
"""

import csv

from wardrop import (
    extremes_estimate,
    poa_sweep,
    step_breakpoints,
    step_game,
    step_jump_value,
    step_game_closed_form,
)

a = 3.0
net = step_game(a)
k_lo, k_hi = 1, 4

curve = poa_sweep(
    net,
    2.0 * a**k_lo,
    2.0 * a ** (k_hi + 1),
    samples_per_decade=192,
    breakpoint_hints=step_breakpoints(a, k_lo, k_hi + 1),
    period_base=a,
)

print(f"step game with a = {a}: jump value (4+4a)/(4+3a) = {step_jump_value(a):.6f}\n")
print("per-period extrema (window (2a^k, 2a^{k+1}]):")
for p in curve.periods:
    print(f"  k={p.index}: min {p.min_poa:.9f}  max {p.max_poa:.9f}  at M={p.argmax_M:.4f}")

est = extremes_estimate(curve)
print(f"\nliminf estimate {est.liminf_est:.9f}, limsup estimate {est.limsup_est:.9f}")
print(f"cross-period stability {est.stability:.2e} (accepted: {est.accepted})")

# the closed-form piecewise table gives the same curve without a solver
M_probe = a**2 + a**3 + 1e-6
cf = step_game_closed_form(a, M_probe)
print(f"\nclosed form just after the k=2 jump: PoA = {cf.poa:.6f} ({cf.region})")

with open("step_poa_curve.csv", "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["M", "weq", "opt", "poa"])
    for s in curve.samples:
        w.writerow([f"{s.M:.17g}", f"{s.weq:.17g}", f"{s.opt:.17g}", f"{s.poa:.17g}"])
print(f"\nwrote {len(curve.samples)} samples to step_poa_curve.csv")
