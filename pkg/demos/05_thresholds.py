"""
Threshold bound versus the critical point
=========================================

The strong-disorder threshold exceeds the 1/(2d) expansion of p_c by
(3 log 2 - 3/2 - eps)/(2d)^3, positive once eps < 3 log 2 - 3/2.
"""
import math

import sympy as sp

from sawperc.experiments import pc_expansion, threshold_bound, threshold_gap_exact

for d in (2, 4, 8, 16, 32):
    tb, pc = threshold_bound(d, 0.1), pc_expansion(d)
    print(f"d={d:2d}  bound {tb:.8f}  p_c {pc:.8f}  gap*(2d)^3 {(tb - pc) * (2 * d) ** 3:.6f}")

print("exact gap at d=3:", threshold_gap_exact(3, sp.Rational(1, 10)))
print("eps at which the gap closes:", 3 * math.log(2) - 1.5)
