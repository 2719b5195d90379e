"""
Reference walks and the pi2 change of measure
=============================================

pi1 never backtracks; pi2 also refuses to close a square. Exact enumeration
of the pi2 tree shows that its law is geometric in the number of U-turns,
which gives the weight that turns pi2 into the uniform law on S^4_N.
"""
from sawperc.experiments import no4_exact_mean_u
from sawperc.refwalks import (
    importance_sampled_mean,
    resolve_pi2_direction,
    rng_stream,
    sample_pi1_batch,
    u_turn_counts,
    u_turn_rate_pi1,
)

print("pi2(path) ratio per U-turn:", resolve_pi2_direction(2, 5))

d, N = 2, 8
est = importance_sampled_mean(lambda c: u_turn_counts(d, c), d, N, 20000, rng_stream(1))
print(f"E|U_N| under uniform S^4: IS {est.mean:.4f} +- {est.stderr:.4f}, exact {float(no4_exact_mean_u(d, N)):.4f}")

# U-turn frequency under pi1 in d=4
codes = sample_pi1_batch(4, 100, 2000, rng_stream(2))
print("pi1 U-turn rate:", u_turn_counts(4, codes).mean() / 98, "vs", u_turn_rate_pi1(4))
