"""Two closed forms the simulator has to reproduce.

The infinite-horizon integral of exp(-2B_s - mu s) is 1/(2 gamma) with gamma
of index mu/2; simulated up to T and compared by Kolmogorov-Smirnov with an
allowance for the truncated remainder.  Yor's formula gives
E[2 exp(-2u^2 / A) / sqrt(A)] for the drift-1/2 integral over [0, 4t].
"""

from gbm_integrals import GammaLawSpec, SamplingConfig, dufresne_ks_check, yor_closed_form, yor_mc_check
from gbm_integrals.oracles import truncation_allowance

CFG = SamplingConfig(steps=1024, seed=3)

spec = GammaLawSpec(2.0)
for T in (5.0, 10.0, 20.0):
    print(f"truncation at T={T:4.0f}: allowance {truncation_allowance(spec, T):.2e}")
res = dufresne_ks_check(spec, 20.0, 50_000, CFG)
print(f"KS D = {res.statistic:.5f}, threshold {res.threshold:.5f}, pass {res.passed}")
wrong = dufresne_ks_check(spec, 20.0, 50_000, CFG, oracle=GammaLawSpec(4.0))
print(f"against the mu = 4 law: D = {wrong.statistic:.4f}, pass {wrong.passed}")

print()
for u, t in ((0.0, 1.0), (0.0, 4.0), (1.0, 1.0), (2.0, 0.5)):
    rep = yor_mc_check(u, t, 100_000, CFG)
    print(f"u={u:3.1f} t={t:3.1f}: simulated {rep.lhs.mean:.5f} +- {rep.lhs.stderr:.5f}, "
          f"closed form {yor_closed_form(u, t):.5f}")
