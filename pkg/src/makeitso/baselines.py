"""Frozen-generator latent optimization and the two-phase pivot-tuning baseline.

Both share the target objective with the main engine but never touch the
mapping network, and ``optimize_latent`` never touches any generator weight
at all.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ContractViolationError, NonFiniteLossError
from .generator import GeneratorParams, broadcast_w, clone_params, map_z_to_w
from .inversion import LATENT_SPACES, latent_forward
from .objectives import FeatureExtractor, LossWeights, total_inversion_loss
from .optim import Adam

MEAN_W_SAMPLES = 10_000


@dataclass(frozen=True)
class BaselineConfig:
    space: str = "W"
    iters: int = 500
    lr: float = 1e-2
    pivot_iters: int = 900       # pivot-tuning phase 1
    tune_iters: int = 1100       # pivot-tuning phase 2
    lr_g: float = 3e-4
    weights: LossWeights = field(default_factory=LossWeights)
    seed: int = 0
    w_init: str = "mean"         # "mean" (average of mapped samples) or "sample"

    def validate(self):
        if self.space not in LATENT_SPACES:
            raise ConfigError(f"space must be one of {LATENT_SPACES}, got {self.space!r}")
        for name in ("iters", "pivot_iters"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.tune_iters < 0:   # 0 = skip phase 2, leaving the weights untouched
            raise ConfigError("tune_iters must be >= 0")
        for name in ("lr", "lr_g"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ConfigError(f"{name} must be finite and > 0")
        if self.w_init not in ("mean", "sample"):
            raise ConfigError(f"w_init must be 'mean' or 'sample', got {self.w_init!r}")
        self.weights.validate()


def mean_w(params: GeneratorParams, n_samples: int = MEAN_W_SAMPLES, seed: int = 0) -> np.ndarray:
    """Average style vector over mapped standard-normal draws."""
    rng = np.random.default_rng(seed)
    cfg = params.config
    acc = np.zeros(cfg.w_dim, dtype=np.float64)
    for _ in range(n_samples):
        z = rng.standard_normal(cfg.z_dim).astype(params.dtype)
        acc += map_z_to_w(params, z).astype(np.float64)
    return (acc / n_samples).astype(params.dtype)


def _baseline_init(params: GeneratorParams, config: BaselineConfig,
                   rng: np.random.Generator) -> np.ndarray:
    cfg = params.config
    if config.space == "Z":
        return rng.standard_normal(cfg.z_dim).astype(params.dtype)
    if config.w_init == "mean":
        w0 = mean_w(params, seed=config.seed)
    else:
        w0 = map_z_to_w(params, rng.standard_normal(cfg.z_dim).astype(params.dtype))
    if config.space == "W":
        return w0
    return broadcast_w(w0, cfg.num_style_slots)


def _check_target(params: GeneratorParams, target: np.ndarray) -> np.ndarray:
    target = np.asarray(target, dtype=params.dtype)
    r = params.config.resolution
    if target.shape != (3, r, r):
        raise ContractViolationError(f"target shape {target.shape} != (3, {r}, {r})")
    return target


def optimize_latent(params: GeneratorParams, target: np.ndarray, config: BaselineConfig,
                    extractor: FeatureExtractor | None = None,
                    init: np.ndarray | None = None):
    """Gradient descent on a latent with every generator weight frozen.

    Returns (latent, trace) where trace holds the per-iteration total loss.
    """
    config.validate()
    target = _check_target(params, target)
    if extractor is None:
        extractor = FeatureExtractor(params.config.resolution)
    rng = np.random.default_rng(config.seed)
    latent = np.array(init, dtype=params.dtype) if init is not None \
        else _baseline_init(params, config, rng)

    opt = Adam(config.lr)
    box = {"latent": latent}
    trace: list[float] = []
    for it in range(config.iters):
        img, backward = latent_forward(params, box["latent"], config.space)
        loss, _, _, dimg = total_inversion_loss(config.weights, extractor, img, target)
        if not np.isfinite(loss):
            raise NonFiniteLossError("latent optimization diverged", iteration=it, trace=trace)
        dlatent, _, _ = backward(dimg)
        opt.step(box, {"latent": dlatent})
        trace.append(float(loss))
    return box["latent"], trace


def pivotal_tune(params: GeneratorParams, target: np.ndarray, config: BaselineConfig,
                 extractor: FeatureExtractor | None = None):
    """Two phases: find a W pivot with the generator frozen, then fine-tune
    the synthesis weights with the pivot fixed.

    Returns (pivot, tuned params, trace); trace concatenates both phases.
    """
    config.validate()
    target = _check_target(params, target)
    if extractor is None:
        extractor = FeatureExtractor(params.config.resolution)

    phase1 = BaselineConfig(space="W", iters=config.pivot_iters, lr=config.lr,
                            weights=config.weights, seed=config.seed, w_init=config.w_init)
    pivot, trace = optimize_latent(params, target, phase1, extractor)
    pivot = pivot.copy()
    styles = broadcast_w(pivot, params.config.num_style_slots)

    tuned = clone_params(params)
    group = tuned.synthesis
    opt = Adam(config.lr_g)
    for it in range(config.tune_iters):
        img, backward = latent_forward(tuned, styles, "W_PLUS")
        loss, _, _, dimg = total_inversion_loss(config.weights, extractor, img, target)
        if not np.isfinite(loss):
            raise NonFiniteLossError("pivot tuning diverged",
                                     iteration=config.pivot_iters + it, trace=trace)
        _, sgrads, _ = backward(dimg)
        opt.step(group, {k: v for k, v in sgrads.items() if k in group})
        trace.append(float(loss))
    return pivot, tuned, trace


def scaled_pti_config(total_steps: int, base: BaselineConfig = BaselineConfig()) -> BaselineConfig:
    """Split a step budget into pivot/tune phases at the default 900:1100 ratio."""
    if total_steps < 2:
        raise ConfigError("total_steps must be >= 2 to cover both phases")
    pivot = max(1, round(total_steps * 900 / 2000))
    tune = max(1, total_steps - pivot)
    if pivot + tune != total_steps:
        pivot = total_steps - tune
    from dataclasses import replace
    return replace(base, pivot_iters=pivot, tune_iters=tune)
