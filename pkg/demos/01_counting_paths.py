"""
Counting self-avoiding paths
============================

Exact |S_N| by depth-first search, the no-four-loop class, and how far the
per-step growth rate sits from the first terms of its 1/(2d) expansion.
"""
from sawperc import count_saw, count_saw_no4
from sawperc.experiments import castor_rates, mu_expansion

# square lattice: 4, 12, 36, 100, ...
print("d=2:", [count_saw(2, N) for N in range(1, 11)])

# walks that never close a square are a superset of SAWs
for N in (4, 6, 8):
    print(f"d=3 N={N}: |S|={count_saw(3, N)}  |S4|={count_saw_no4(3, N)}")

# |S_N|^{1/N} against 2d - 1 - 1/(2d)
for d in (3, 4):
    N = 9
    print(f"d={d}: |S_{N}|^(1/{N}) = {count_saw(d, N) ** (1 / N):.4f}, expansion {mu_expansion(d):.4f}")

# ratio of consecutive |S_N| / (2d (2d-1)^{N-1}) terms, close to 1 - 1/(2d)^2
for n, r in castor_rates(4, 10):
    print(f"  N={n}: {float(r):.6f}")
