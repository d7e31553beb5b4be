"""
Coverage levels and bin counts
==============================

One trained model, recalibrated at several miscoverage levels: the sets
are nested and shrink as alpha grows. Then the number of bins is varied,
retraining each time with the same seed.
"""

from binconf import evalbench as eb
from binconf.data import gen_lei_fork
from binconf.pipeline import PipelineConfig

ds = gen_lei_fork(3000, seed=0)
cfg = PipelineConfig(seed=0)

reg, _, (_, _, test) = eb.run_once(ds, cfg, alpha=0.1)
for rep in eb.alpha_sweep(reg, test, [0.05, 0.1, 0.2, 0.4]):
    print(f"alpha {rep.alpha:<5} coverage {rep.coverage:.3f}  length {rep.mean_length:.3f}")

print("residual/length rank correlation:", round(eb.residual_length_correlation(eb.evaluate_regressor(reg, test)), 3))

for row in eb.bin_count_sweep(ds, [2, 5, 10, 25, 50, 100], cfg):
    print(f"K = {row['k_bins']:<4} length {row['mean_length']:.3f}")
