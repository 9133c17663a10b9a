#!/usr/bin/env python3
"""Orbit m-schemes, the property checkers, and matchings."""

from mschemes.mscheme import (
    catalog_mscheme,
    check_properties,
    find_matchings,
    load_catalog,
    nonexistence_check,
    prime_matching,
)

print("== Z_5 translations, depth 3 ==")
pi = catalog_mscheme("Z5", 3)
rep = check_properties(pi)
print("colors per level:", [pi.num_colors(s) for s in (1, 2, 3)])
print("homogeneous:", rep.homogeneous, " antisymmetric:", rep.antisymmetric)
ms = find_matchings(pi)
print("matchings found:", len(ms), " first:", ms[0])

print("\n== Z_6: an even point count breaks antisymmetry ==")
rep6 = check_properties(catalog_mscheme("Z6", 2))
print("antisymmetric at level 2:", rep6.antisymmetric_at[2], " (the d=3 class is swap-fixed)")

print("\n== divisibility obstruction ==")
for name in ("Z4", "Z6", "Z12", "A4"):
    pi2 = catalog_mscheme(name, 4)
    print(f"{name}: nonexistence check:", "ok" if nonexistence_check(pi2) is None else "CONTRADICTION")

print("\n== matchings on a prime point count ==")
pi13 = catalog_mscheme("Z13", 5)
m = prime_matching(pi13, 2)
print("Z_13 depth 5: matching", m)

print("\n== catalog sweep at depth 4 ==")
for name in sorted(load_catalog()):
    degree, _ = load_catalog()[name]
    pi = catalog_mscheme(name, min(4, degree))
    rep = check_properties(pi)
    if rep.homogeneous and rep.antisymmetric:
        print(f"{name:>4}: homogeneous antisymmetric, matchings: {len(find_matchings(pi))}")
