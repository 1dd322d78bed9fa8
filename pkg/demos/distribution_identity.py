"""Distribution of A_t two ways, and why the change-of-measure side falls short.

P{A_t <= a} can be read off directly as a frequency, or as
e^(-2/a) E[exp(2 M_t / (a + A_t))].  Both are unbiased.  The second has
a tail so heavy (index 1) that a finite sample almost surely misses part of
its mean; the missing part is computed here through the other side of the
change of measure.
"""

from gbm_integrals import SamplingConfig, cdf_check, density_check, density_mass, hidden_tail_mass

N = 200_000
CFG = SamplingConfig(steps=512, seed=1)

print(f"{'t':>5} {'a':>5} {'direct':>9} {'identity':>9} {'z':>7} {'hidden':>8}")
for t in (0.25, 1.0):
    for a in (0.5, 1.0, 2.0):
        rep = cdf_check(t, a, 0.0, N, CFG)
        # mass of the identity integrand above the largest sample actually seen
        hidden = hidden_tail_mass(t, a, rep.rhs.max_sample, N, CFG.paired().paired())
        print(f"{t:5.2f} {a:5.2f} {rep.lhs.mean:9.5f} {rep.rhs.mean:9.5f} {rep.z_score:7.2f} {hidden.mean:8.5f}")

print("\ndirect - identity is close to the hidden mass in every row.")
print("Density needs no heavy-tailed weight: both forms are indicator averages.")
rep = density_check(1.0, 1.0, N, CFG)
print(f"g_1(1): event form {rep.lhs.mean:.4f}, difference form {rep.rhs.mean:.4f}, z = {rep.z_score:.2f}")
print(f"integral of g_1 over [0.01, 20]: {density_mass(1.0, None, N, CFG):.4f}")
