#!/usr/bin/env python3
"""The refinement pipeline end to end: factors, stuck certificates, and the
transparent supports view."""

from mschemes import mscheme
from mschemes.factor import (
    IdealSystem,
    StuckScheme,
    iks_factor,
    prime_degree_factor,
    refine_step,
    supports,
)
from mschemes.gf import Poly, field_ctx

ctx = field_ctx(7, 1)
f = Poly(ctx, [-1, 0, 0, 1])
print("factoring x^3 - 1 over F_7:")
res = iks_factor(f, 2)
print("  ->", res.g.int_coeffs(), "(x - 1; the deterministic canonical-least factor)")

print("\nprime-degree driver on x^5 - 1 over F_11 (r = 2, ell = 1):")
ctx11 = field_ctx(11, 1)
res5 = prime_degree_factor(Poly(ctx11, [-1, 0, 0, 0, 0, 1]), 2, 1)
print("  ->", res5.g.int_coeffs())

print("\na genuinely stuck system: x(x+4)(x+6)(x+7)(x+9) over F_11 at depth 2:")
f11 = Poly(ctx11, [0, 1, 4, 8, 8, 1])
stuck = iks_factor(f11, 2)
assert isinstance(stuck, StuckScheme)
print("  certificate:", {k: v for k, v in stuck.certificate.items() if k != "dimension_sums"})
roots = [a.index for a in ctx11.elements() if f11(a).is_zero()]
pi = supports(stuck.system, roots)
rep = mscheme.check_properties(pi)
print("  transparent view: homogeneous", rep.homogeneous, "antisymmetric", rep.antisymmetric,
      "matchings", len(mscheme.find_matchings(pi)))
print("  (deepening to m = 3 factors it:", iks_factor(f11, 3).g.int_coeffs(), ")")

print("\nstep-by-step refinement of a fresh system (x^3 - 1, depth 2):")
sys = IdealSystem(Poly(ctx, [-1, 0, 0, 1]), 2)
for rule in ("R4", "R1", "R2", "R3", "R5"):
    out = refine_step(sys, rule)
    print(f"  {rule}: {type(out).__name__}")
    if isinstance(out, type(res)) or hasattr(out, "system"):
        if hasattr(out, "system"):
            sys = out.system
