"""Invert a target image, then re-render it with an edit applied.

Everything runs at 16x16 with a short budget so the demo finishes in a few
seconds; drop the overrides to get the full 32x32 preset quality.
"""

from pathlib import Path

import numpy as np

from makeitso.editing import make_default_bank
from makeitso.generator import GeneratorConfig, generate, init_toy_generator
from makeitso.imageio import save_png
from makeitso.inversion import InversionConfig, make_it_so, reconstruct_image
from makeitso.objectives import FeatureExtractor, eval_mse

out = Path("demo_out/invert_and_edit")
out.mkdir(parents=True, exist_ok=True)

# a seeded generator and a bank of eight random edit directions sized to it
params = init_toy_generator(0, GeneratorConfig(resolution=16))
bank = make_default_bank(params)
extractor = FeatureExtractor(params.config.resolution)

# the target here is one of the generator's own samples, so we know a perfect
# reconstruction exists; any PNG loaded with imageio.load_image works the same
z_true = np.random.default_rng(7).standard_normal(params.config.z_dim).astype(np.float32)
target = generate(params, z_true)
save_png(target, out / "target.png")

config = InversionConfig(total_iters=120, ema_interval=30, seed=0)
result = make_it_so(params, target, bank, config, extractor)

recon = reconstruct_image(result.tuned, result.z_star, "Z")
save_png(recon, out / "reconstruction.png")
print(f"eval_mse after {config.total_iters} iterations: {eval_mse(recon, target):.5f}")
print(f"anchor blends happened at iterations {result.ema_iterations}")

# edits are additive offsets in the per-layer style space; strength scales them
from makeitso.editing import edited_generate

for strength in (-1.5, 0.0, 1.5):
    img = edited_generate(result.tuned, result.z_star, bank.get("edit_00"), strength)
    save_png(img, out / f"edit_00_strength_{strength:+.1f}.png")
    print(f"wrote edit at strength {strength:+.1f}")

print(f"outputs in {out}/")
