"""
Size-biased disorder and the spine
==================================

Under dP~/dP = W_N the environment looks like a Bernoulli field with one
uniformly chosen path forced open. On tiny boxes both laws can be computed
exactly, as rationals.
"""
from fractions import Fraction

from sawperc import Environment, make_spined, size_biased_law_exact, spine_law_exact, tilde_partition
from sawperc.paths import Path, count_open_saw

p = Fraction(1, 2)
biased = size_biased_law_exact(2, 2, p)
spined = spine_law_exact(2, 2, p)
print("P~(Z_2 = k):", {k: str(v) for k, v in biased.support.items()})
print("TV distance to the spine law:", biased.tv_distance(spined))

# on a sampled environment the spine can only add open paths
spine = Path(3, (1, 2, 1, 3, 3, -2, 1, 2))
env = Environment(0.3, seed=5)
print("Z_N =", count_open_saw(env, spine.N, d=3), " Z~_N =", tilde_partition(make_spined(env, spine)))
