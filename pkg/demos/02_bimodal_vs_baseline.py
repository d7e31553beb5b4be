"""
Two modes, two intervals
========================

Nearby feature points carry labels near +1 and -1, so the conditional
label distribution is bimodal. The density-based sets split into two
pieces; an absolute-residual baseline around a mean regressor has to
cover the gap between them.
"""

from binconf import evalbench as eb
from binconf.data import gen_bimodal
from binconf.pipeline import AbsResidualBaseline, BinnedConformalRegressor, PipelineConfig

cfg = PipelineConfig(seed=0)
train, cal, test = eb.prepare(gen_bimodal(2000, seed=0), seed=cfg.seed)

reg = BinnedConformalRegressor(cfg).fit(train)
reg.calibrate(cal, alpha=0.1)
ours = eb.evaluate_regressor(reg, test)

base = AbsResidualBaseline(cfg).fit(train)
base.calibrate(cal, alpha=0.1)
theirs = eb.evaluate_baseline(base, test)

print(f"binned density: coverage {ours.coverage:.3f}, length {ours.mean_length:.3f}, "
      f"singletons {ours.singleton_fraction:.3f}")
print(f"abs residual  : coverage {theirs.coverage:.3f}, length {theirs.mean_length:.3f}")
print("example set:", ours.records[0]["intervals"])
