"""Noise-space GAN inversion with experience replay and EMA anchoring.

The package centers on :func:`makeitso.inversion.make_it_so`, which jointly
optimizes a noise vector and a copy of the generator against a target image
while replaying samples from a slowly-updated anchor model so the original
editing behavior survives fine-tuning.
"""

__version__ = "0.1.0"

from .editing import EditBank, EditDirection, apply_edit, edited_generate, load_bank, save_bank
from .errors import (BankFormatError, CheckpointFormatError, ConfigError,
                     ContractViolationError, IncompatibleArchitectureError, MakeItSoError,
                     NonFiniteLossError)
from .generator import (GeneratorConfig, GeneratorParams, MICRO_CONFIG, generate,
                        init_toy_generator)
from .checkpoint import load_checkpoint, save_checkpoint
from .inversion import (GeneratorPair, InversionConfig, InversionResult, ema_blend,
                        extended_config, make_it_so, replay_loss, sample_replay_batch)
from .objectives import (FeatureExtractor, LossWeights, eval_mse, eval_perceptual,
                         perceptual_loss, recon_loss, total_inversion_loss)
from .baselines import BaselineConfig, optimize_latent, pivotal_tune

__all__ = [
    "__version__",
    "BankFormatError", "CheckpointFormatError", "ConfigError", "ContractViolationError",
    "IncompatibleArchitectureError", "MakeItSoError", "NonFiniteLossError",
    "GeneratorConfig", "GeneratorParams", "MICRO_CONFIG", "generate", "init_toy_generator",
    "load_checkpoint", "save_checkpoint",
    "EditBank", "EditDirection", "apply_edit", "edited_generate", "load_bank", "save_bank",
    "GeneratorPair", "InversionConfig", "InversionResult", "ema_blend", "extended_config",
    "make_it_so", "replay_loss", "sample_replay_batch",
    "FeatureExtractor", "LossWeights", "eval_mse", "eval_perceptual", "perceptual_loss",
    "recon_loss", "total_inversion_loss",
    "BaselineConfig", "optimize_latent", "pivotal_tune",
]
