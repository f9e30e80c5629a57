"""Probe regular variation numerically.

A positive function T is b-regularly varying when T(ax)/T(x) -> a^b.
These probes estimate b from log ratios on a geometric grid and check the
closure properties: the inverse has index 1/b, x*T(x) and the primitive
have index 1+b, compositions multiply indices, and sums preserve them.
Residuals must decay along the grid for a verdict; e^x/x fails loudly.
"""

import json

from wardrop import (
    ExpOverX,
    Monomial,
    Polynomial,
    check_composition_rv,
    check_inverse_rv,
    check_product_and_integral_rv,
    check_scaling_identity,
    check_sum_rv,
    rv_index,
    rv_suite,
)

print("index estimates:")
for label, cost in [
    ("x", Monomial(1, 1)),
    ("x^2", Monomial(1, 2)),
    ("3x^2 + x", Polynomial((0, 1, 3))),
    ("x^3", Monomial(1, 3)),
]:
    r = rv_index(cost)
    print(f"  {label:10s} -> beta = {r.beta:.9f}, residuals {['%.1e' % v for v in r.residuals]}")

r = rv_index(ExpOverX())
print(f"  e^x/x      -> {r.reason}")

print("\nclosure properties:")
print("  inverse of x^3:", check_inverse_rv(Monomial(1, 3)).measured, "(expect 1/3)")
print("  T^-1(4 T(t))/t for x^2:", check_scaling_identity(Monomial(1, 2), 4.0).measured,
      "(expect 2)")
print("  x*T and primitive of x^2:", check_product_and_integral_rv(Monomial(1, 2)).measured,
      "(expect 3, 3)")
print("  x^2 o x^3:", check_composition_rv(Monomial(1, 2), Monomial(1, 3)).measured,
      "(expect 6)")
print("  x^2 + (3x^2+x):", check_sum_rv(Monomial(1, 2), Polynomial((0, 1, 3))).measured,
      "(expect 2)")

suite = rv_suite()
print(f"\nfull battery: {sum(c['passed'] for c in suite['checks'])}/"
      f"{len(suite['checks'])} checks pass (all_pass={suite['all_pass']})")
with open("rv_report.json", "w") as fh:
    json.dump(suite, fh, indent=2, sort_keys=True)
print("wrote rv_report.json")
