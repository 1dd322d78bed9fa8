"""E[exp(theta / int_0^t exp(B_s) ds)] is finite for theta < 2 and infinite beyond.

Running means, the largest sample's share of the total and a Hill estimate
of the tail index show the transition.  The index is about 2/theta, so the
mean is lost once it drops below 1.
"""

from gbm_integrals import MomentVariant, SamplingConfig, exp_moment

CFG = SamplingConfig(steps=256, seed=4)

for theta in (0.5, 1.0, 1.5, 2.0, 2.5, 3.0):
    m = exp_moment(1.0, theta, MomentVariant.NO_DRIFT, 2**19, CFG)
    means = " ".join(f"{v:10.4g}" for _, v in m.running_means)
    print(f"theta={theta:3.1f} tail index {m.tail_index:5.2f} max share {m.domination:6.3f} "
          f"diverging={str(m.diverging):5}  running means {means}")
