"""How often two independent oriented walks meet again.

Two walks from the origin step up a uniform coordinate each tick.  Their
re-meeting probability decays like 1/d^2, and the structure of meetings
(runs travelled together, isolated touches) is what the pair-moment bound
charges for.
"""

import numpy as np

from orientedcp import (WalkPair, collision_stats, meet_probability,
                        sample_walk_pair)

print("first re-meet probability q = P(2 <= tau <= horizon):")
print(f"{'d':>3} {'P(tau=1)':>9} {'q':>8} {'q d^2':>8} {'never':>7}")
for d in (2, 3, 4, 6, 8):
    est = meet_probability(d, horizon=2000, samples=30_000, seed=[9, d])
    print(f"{d:3d} {est.tau1_fraction:9.4f} {est.q_hat:8.4f} "
          f"{est.d2_scaled:8.3f} {est.censored_fraction:7.4f}")
print("P(tau=1) is exactly 1/d; q d^2 staying bounded is the point")

# episode decomposition of a single pair
wp = WalkPair(d=2, n_steps=6, steps_a=np.array([0, 1, 0, 0, 1, 0]),
              steps_b=np.array([1, 0, 0, 1, 0, 1]))
st = collision_stats(wp)
print(f"\nhand-built pair, meets at steps {wp.meet_indices().tolist()}:")
print(f"  episodes (runs of >= 2): {st.episodes}")
print(f"  isolated touches per gap: {st.isolated_counts}")
print(f"  cut off at the horizon: {st.truncated}")

counts = {"episodes": 0, "touch_only": 0, "clean": 0}
for r in range(2000):
    wp = sample_walk_pair(2, 40, seed=[10, r])
    st = collision_stats(wp)
    if st.n_episodes:
        counts["episodes"] += 1
    elif st.total_isolated > 1:
        counts["touch_only"] += 1
    else:
        counts["clean"] += 1
print(f"\n2000 sampled pairs in d=2 over 40 steps: {counts}")
