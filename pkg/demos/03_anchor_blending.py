"""The anchored generator is a slow exponential moving average of the tuned
one. This demo shows the blend schedule and verifies the closed form.

The anchor is what the replay objective compares against, so it must move
much slower than the tuned weights: beta = 0.9999 means each blend keeps
99.99% of the anchor.
"""

import numpy as np

from makeitso.generator import MICRO_CONFIG, clone_params, init_toy_generator
from makeitso.inversion import ema_blend

init = init_toy_generator(0, MICRO_CONFIG)

# pretend tuning moved the synthesis weights somewhere else
tuned = clone_params(init)
rng = np.random.default_rng(1)
for name in tuned.synthesis:
    tuned.arrays[name] = tuned.arrays[name] + rng.standard_normal(
        tuned.arrays[name].shape).astype(tuned.dtype)

beta = 0.9999
anchored = clone_params(init)
for k in range(1, 11):
    anchored = ema_blend(anchored, tuned, beta)
    # closed form: after k blends the anchor is beta^k of the way back to init
    expected_fraction = 1.0 - beta ** k
    name = "synthesis.const"
    moved = np.mean(np.abs(anchored.arrays[name] - init.arrays[name]))
    full = np.mean(np.abs(tuned.arrays[name] - init.arrays[name]))
    print(f"after {k:2d} blends: moved {moved / full:.6f} of the way"
          f" (closed form {expected_fraction:.6f})")

# the mapping network never participates in blending
assert all(np.array_equal(anchored.arrays[n], init.arrays[n]) for n in init.mapping)
print("mapping arrays bit-identical through all blends")
