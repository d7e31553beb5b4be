"""
Intervals that widen with the noise
===================================

Labels are drawn as y ~ N(0, |x|), so the spread grows away from x = 0.
A binned softmax density picks this up and the conformal sets follow.
"""

import numpy as np

from binconf import evalbench as eb
from binconf.data import gen_heteroscedastic
from binconf.pipeline import PipelineConfig

ds = gen_heteroscedastic(3000, seed=0)

# split 50/25/25, train on the first part, calibrate at 90% on the second
reg, report, (train, cal, test) = eb.run_once(ds, PipelineConfig(seed=0), alpha=0.1)
print(f"coverage {report.coverage:.3f}  mean length {report.mean_length:.3f}")

# feature values were z-scored for training; undo that for display
x = test.feature_scaler.inverse(test.features)[:, 0]
order = np.argsort(np.abs(x))
for i in order[:: len(order) // 8]:
    print(f"|x| = {abs(x[i]):.2f}   set = {report.records[i]['intervals']}")

print("Spearman(|x|, length):", round(eb.spearman(np.abs(x), report.lengths), 3))

# plot data for one input: (z, score) pairs of the interpolated density
curve = eb.emit_density_curve(reg.model, reg.grid, test.features[order[-1]], 100)
print(curve[:5])
