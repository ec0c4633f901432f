"""Frozen-generator inversion in three latent spaces, plus two-phase pivot
tuning, on the same out-of-range target.

Expected shape of the results: with the generator frozen, W+ fits best
(it optimizes one style vector per layer), W next, Z depends on the mapping.
Pivot tuning then crushes the residual by moving the weights, which is
exactly why it needs the replay machinery when edits should survive.
"""

from makeitso.baselines import BaselineConfig, optimize_latent, pivotal_tune, \
    scaled_pti_config
from makeitso.generator import GeneratorConfig, broadcast_w, init_toy_generator, \
    synthesize
from makeitso.harness import pattern_target
from makeitso.objectives import FeatureExtractor, eval_mse

params = init_toy_generator(0, GeneratorConfig(resolution=16))
extractor = FeatureExtractor(params.config.resolution)
target = pattern_target(16, 2)
iters = 200

for space in ("Z", "W", "W_PLUS"):
    latent, trace = optimize_latent(params, target,
                                    BaselineConfig(space=space, iters=iters, seed=0),
                                    extractor)
    if space == "Z":
        from makeitso.generator import generate
        img = generate(params, latent)
    elif space == "W":
        img = synthesize(params, broadcast_w(latent, params.config.num_style_slots))
    else:
        img = synthesize(params, latent)
    print(f"frozen {space:7s} recon mse {eval_mse(img, target):.5f}")

# pivot tuning: find the closest W code, then fine-tune the weights around it
pivot, tuned, trace = pivotal_tune(params, target, scaled_pti_config(2 * iters),
                                   extractor)
img = synthesize(tuned, broadcast_w(pivot, params.config.num_style_slots))
print(f"pivot-tuned     recon mse {eval_mse(img, target):.5f}")
print("the weights moved; the mapping did not:",
      all((tuned.arrays[n] == params.arrays[n]).all() for n in params.mapping))
