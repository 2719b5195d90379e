"""
Bridges over a good spine
=========================

On a typical spine in high dimension, three kinds of short detours are
available. Each admissible combination of them gives a different open path,
so their count is a floor for Z~_N.
"""
from sawperc import Environment, detect_bridges, enumerate_selected_paths
from sawperc.bridges import bridge_squares, count_lower_bound, overlap_audit
from sawperc.experiments import sample_good_spine
from sawperc.sizebias import environment_seed

d, N = 5, 200
p = 0.3  # above 1/(2d) so the sets are not tiny
spine, tries = sample_good_spine(d, N, eps=0.5, seed=3, trial=0)
env = Environment(p, environment_seed(3, 0))
sets = detect_bridges(env, spine)
print(f"good spine after {tries} tries; |A|, |B|, |C| = {sets.sizes}")
print("floor on the number of open paths:", count_lower_bound(*sets.sizes))

# the squares never share edges and free sites stay off the spine
print("overlap problems:", overlap_audit(spine, bridge_squares(spine, sets)))

# build the paths (capped) and check they are distinct, open and self-avoiding
enum = enumerate_selected_paths(spine, sets, cap=2000, env=env, truncate=True)
print(f"built {enum.count} distinct paths out of {enum.expected}")
