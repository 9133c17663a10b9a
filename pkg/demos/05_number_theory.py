#!/usr/bin/env python3
"""Number-theory utilities behind the prime-degree driver."""

from mschemes.cli import linnik_p1s, smooth_divisor

print("least prime congruent to 1 mod s:")
for s in (1, 4, 8, 30, 100):
    print(f"  s={s:>3}: {linnik_p1s(s)}")

print("\nlargest r-smooth divisor of n - 1 (drives the prime-degree theorem):")
for n, r in [(5, 2), (7, 3), (13, 3), (97, 2), (101, 5)]:
    print(f"  n={n:>3}, r={r}: smooth part of n-1 = {smooth_divisor(n - 1, r)}")

print("\ndegrees where the prime-degree driver applies with r = 2, ell = 1:")
good = []
for n in (5, 7, 13, 17, 97):
    s = smooth_divisor(n - 1, 2)
    ok = (s - 1) ** 2 >= n  # s >= sqrt(n/ell) + 1 with ell = 1
    good.append((n, s, ok))
    print(f"  n={n:>3}: 2-smooth divisor {s:>3}, large enough: {ok}")
