"""Convexity does not rescue the limit: the interpolated-square game.

Both costs here are increasing and convex: c1(x) = x^2 and c2 = the
piecewise-linear interpolation of x^2 through the knots a^k.  At the
special demands M_k = a^{k-1}(a+b) the optimum parks the interpolated
link exactly on a knot while the equilibrium sits strictly inside the
piece, and the resulting PoA is the same for every k (about 1.0059 for
a = 2), so it cannot converge to 1.
"""

from wardrop import (
    opt_bruteforce,
    pwl_game,
    pwl_game_constants,
    pwl_game_poa_at_special_demand,
    wardrop_parallel,
)

a = 2.0
consts = pwl_game_constants(a)
print(f"a = {a}:")
print(f"  b = sqrt((2a^2+a)/3) = {consts.b:.12f}")
print(f"  equilibrium constants c = {consts.c:.12f}, d = {consts.d:.12f} (1 < d < a)")
print(f"  first special demand M_1 = a + b = {consts.m1:.12f}")
print(f"  closed-form PoA at every M_k: {consts.poa_at_mk:.10f}\n")

print("numeric pipeline at the first five special demands:")
for k in range(1, 6):
    r = pwl_game_poa_at_special_demand(a, k)
    print(f"  k={k}: M_k = {r.M:.6f}  PoA = {r.poa:.12f}")

M1 = consts.m1
eq = wardrop_parallel(pwl_game(a), M1)
oracle = opt_bruteforce(pwl_game(a), M1)
print(f"\nindependent grid oracle at M_1: optimum {oracle.cost:.10f} "
      f"(bound {oracle.resolution_bound:.1e})")
print(f"PoA against the oracle: {eq.cost / oracle.cost:.10f}")
