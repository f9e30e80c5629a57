"""A game whose price of anarchy has no finite limsup.

Pair c(x) = e^x/x with its step majorant over knots alpha_k = k!.  Just
after each demand breakpoint alpha_k + alpha_{k+1} the PoA equals
(alpha_k + alpha_{k+1}) / (1 + alpha_k + ln alpha_{k+1}), which grows
without bound in k.  The costs reach e^{alpha} with alpha in the
hundreds of thousands, far beyond native floats, so the equilibrium and
optimum pipelines run entirely in log domain.
"""

from wardrop import (
    AlphaSequence,
    exp_game,
    opt_parallel_exp_log,
    exp_game_poa_near_breakpoint,
    wardrop_parallel_log,
)

alphas = AlphaSequence("factorial")

print("PoA just after M = alpha_k + alpha_{k+1} (alpha_k = k!):")
for k in range(3, 9):
    rep = exp_game_poa_near_breakpoint(alphas, k)
    print(f"  k={k}: closed form {rep.closed_form:9.4f}   "
          f"log-domain numeric {rep.numeric_poa:9.4f}   "
          f"gap {rep.relative_gap:.1e}")

k = 8
a_k, a_k1 = alphas.alpha(k), alphas.alpha(k + 1)
M = (a_k + a_k1) * (1.0 + 1e-6)
weq = wardrop_parallel_log(exp_game(alphas), M)
opt = opt_parallel_exp_log(alphas, M)
print(f"\nat k={k} the raw magnitudes dwarf float range:")
print(f"  demand M = {M:.6g}")
print(f"  ln WEq = {weq.cost.log_magnitude:.4f}   (WEq ~ 10^{weq.cost.log_magnitude / 2.302585:.0f})")
print(f"  ln Opt = {opt.cost.log_magnitude:.4f}")
print(f"  PoA = {(weq.cost / opt.cost).to_float():.4f}")
print("\nthe ratio keeps growing with k, so no finite bound holds at large demand")
