"""Joint noise/generator inversion with experience replay and EMA anchoring.

The engine keeps two generator snapshots: ``tuned`` receives gradient steps,
``anchored`` is a slow exponential moving average of it and acts as the frozen
reference for the replay objective. Each iteration runs, in order:

1. every ``ema_interval`` iterations (excluding iteration 0 and the final
   boundary) the anchor absorbs the tuned weights: ``anchored <- beta *
   anchored + (1 - beta) * tuned``;
2. a replay batch is sampled: support noises, their style stacks under the
   anchored mapping, and edit directions drawn from the bank;
3. one optimizer step on the latent and the tuned synthesis weights against
   the reconstruction + perceptual target loss;
4. one optimizer step on the tuned synthesis weights pulling its outputs on
   the replay batch (plain and edited) toward the anchored model's outputs.

The mapping network is never updated unless ``tune_mapping`` is set, so the
latent space the edits live in stays put while the synthesis stack adapts.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .editing import EditBank, apply_edit, random_direction
from .errors import (ConfigError, ContractViolationError, IncompatibleArchitectureError,
                     NonFiniteLossError)
from .generator import (GeneratorParams, broadcast_w, clone_params, mapping_backward,
                        mapping_forward, map_z_to_w, synthesis_backward, synthesis_forward)
from .objectives import (FeatureExtractor, LossWeights, eval_mse, perceptual_loss,
                         recon_loss, total_inversion_loss)
from .optim import Adam

LATENT_SPACES = ("Z", "W", "W_PLUS")


@dataclass(frozen=True)
class InversionConfig:
    total_iters: int = 500
    ema_interval: int = 100          # > total_iters disables EMA entirely
    ema_beta: float = 0.9999
    replay_batch: int = 4
    lr_z: float = 1e-2
    lr_g: float = 3e-4
    weights: LossWeights = field(default_factory=LossWeights)
    seed: int = 0
    tune_mapping: bool = False
    replay_weight: float = 1.0       # global multiplier on the replay objective
    replay_support: bool = True      # plain support terms of the replay loss
    replay_anchor: bool = True       # edited (anchor) terms of the replay loss
    combined_step: bool = False      # fold both objectives into one step per iteration
    early_stop_mse: float | None = None
    latent_space: str = "Z"

    def validate(self):
        if self.total_iters < 1:
            raise ConfigError("total_iters must be >= 1")
        if self.ema_interval < 1:
            raise ConfigError("ema_interval must be >= 1")
        if not (0.0 <= self.ema_beta <= 1.0):
            raise ConfigError(f"ema_beta must be in [0, 1], got {self.ema_beta}")
        if self.replay_batch < 1:
            raise ConfigError("replay_batch must be >= 1")
        for name in ("lr_z", "lr_g"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ConfigError(f"{name} must be finite and >= 0, got {v}")
        if not np.isfinite(self.replay_weight) or self.replay_weight < 0:
            raise ConfigError("replay_weight must be finite and >= 0")
        if self.latent_space not in LATENT_SPACES:
            raise ConfigError(f"latent_space must be one of {LATENT_SPACES}")
        self.weights.validate()


def extended_config(**overrides) -> InversionConfig:
    """The long-budget preset: 1000 iterations, anchor refresh every 200."""
    base = InversionConfig(total_iters=1000, ema_interval=200)
    return replace(base, **overrides) if overrides else base


@dataclass(frozen=True)
class GeneratorPair:
    anchored: GeneratorParams
    tuned: GeneratorParams

    def __post_init__(self):
        if self.anchored.arch_hash != self.tuned.arch_hash:
            raise IncompatibleArchitectureError(
                f"anchored arch {self.anchored.arch_hash} != tuned arch {self.tuned.arch_hash}")


@dataclass(frozen=True)
class ReplayBatch:
    z_s: np.ndarray                      # (N, z_dim)
    w_plus_s: tuple[np.ndarray, ...]     # N style stacks from the anchored mapping
    anchors: tuple                       # N EditDirection


@dataclass
class InversionResult:
    z_star: np.ndarray                   # optimized latent; shape depends on latent_space
    tuned: GeneratorParams
    anchored_final: GeneratorParams
    trace: list[tuple[float, float, float]]   # (recon, perceptual, replay) per iteration
    wall_time: float
    config: InversionConfig
    ema_iterations: list[int]

    @property
    def n_ema_updates(self) -> int:
        return len(self.ema_iterations)


def final_anchored_sync(result: InversionResult) -> GeneratorParams:
    return result.anchored_final


# ---------------------------------------------------------------------------
# mechanisms


def ema_blend(anchored: GeneratorParams, tuned: GeneratorParams, beta: float) -> GeneratorParams:
    """New snapshot ``beta * anchored + (1 - beta) * tuned`` over every array.

    Arranged as ``tuned + beta * (anchored - tuned)`` so arrays that are
    bit-equal in both inputs stay bit-equal in the output (the mapping group
    relies on this).
    """
    if anchored.arch_hash != tuned.arch_hash:
        raise IncompatibleArchitectureError(
            f"cannot blend arch {anchored.arch_hash} with {tuned.arch_hash}")
    if not (0.0 <= beta <= 1.0):
        raise ContractViolationError(f"beta must be in [0, 1], got {beta}")
    if beta == 1.0:
        return clone_params(anchored)
    if beta == 0.0:
        return clone_params(tuned)
    out = {}
    for name, a in anchored.arrays.items():
        t = tuned.arrays[name]
        blended = t.astype(np.float64) + beta * (a.astype(np.float64) - t.astype(np.float64))
        out[name] = blended.astype(a.dtype)
    return GeneratorParams(config=anchored.config, arrays=out, _arch_hash=anchored.arch_hash)


def sample_replay_batch(anchored: GeneratorParams, bank: EditBank, n: int,
                        rng: np.random.Generator) -> ReplayBatch:
    """Draw support noises and anchor directions for one replay step.

    Draw order is fixed (noise block, then directions) so a given rng state
    always yields the same batch. An empty bank falls back to fresh random
    directions with unit per-layer norm.
    """
    if n < 1:
        raise ContractViolationError(f"replay batch size must be >= 1, got {n}")
    cfg = anchored.config
    z_s = rng.standard_normal((n, cfg.z_dim)).astype(anchored.dtype)
    if len(bank) > 0:
        idx = rng.integers(0, len(bank), size=n)
        anchors = tuple(bank.directions[int(i)] for i in idx)
    else:
        anchors = tuple(
            random_direction(rng, cfg.num_style_slots, cfg.w_dim, norm=1.0, name=f"fallback_{i}")
            for i in range(n)
        )
    w_plus = tuple(
        broadcast_w(map_z_to_w(anchored, z_s[i]), cfg.num_style_slots) for i in range(n)
    )
    return ReplayBatch(z_s=z_s, w_plus_s=w_plus, anchors=anchors)


def replay_loss(pair: GeneratorPair, batch: ReplayBatch, extractor: FeatureExtractor,
                support: bool = True, anchor: bool = True):
    """Replay objective and its gradients w.r.t. the tuned synthesis arrays.

    Per batch element the tuned model is pulled toward the anchored model's
    output on the plain support styles and on the anchor-edited styles, each
    under reconstruction + perceptual distance. Anchored outputs are
    constants; nothing flows into the latents or the mapping.
    """
    n = len(batch.anchors)
    grads: dict[str, np.ndarray] = {}
    total = 0.0

    def accumulate(styles):
        nonlocal total
        ref, _ = synthesis_forward(pair.anchored, styles)
        img, cache = synthesis_forward(pair.tuned, styles)
        r, dr = recon_loss(img, ref)
        p, dp = perceptual_loss(extractor, img, ref)
        total += (r + p) / n
        _, g = synthesis_backward(cache, (dr + dp) / n)
        for k, v in g.items():
            if k in grads:
                grads[k] += v
            else:
                grads[k] = v

    for i in range(n):
        styles = batch.w_plus_s[i]
        if support:
            accumulate(styles)
        if anchor:
            d = batch.anchors[i]
            accumulate(apply_edit(styles, d, d.default_strength))

    return total, grads


# ---------------------------------------------------------------------------
# latent handling for the Z / W / W+ ablation


def init_latent(params: GeneratorParams, space: str, rng: np.random.Generator) -> np.ndarray:
    """Seeded starting latent. W-family spaces start from a mapped noise draw."""
    cfg = params.config
    z0 = rng.standard_normal(cfg.z_dim).astype(params.dtype)
    if space == "Z":
        return z0
    w0 = map_z_to_w(params, z0)
    if space == "W":
        return w0
    return broadcast_w(w0, cfg.num_style_slots)


def latent_forward(params: GeneratorParams, latent: np.ndarray, space: str):
    """Image plus a closure giving (dlatent, synthesis grads, mapping grads)."""
    cfg = params.config
    if space == "Z":
        w, mcache = mapping_forward(params, latent)
        styles = broadcast_w(w, cfg.num_style_slots)
        img, scache = synthesis_forward(params, styles)

        def backward(dimg):
            dstyles, sgrads = synthesis_backward(scache, dimg)
            dz, mgrads = mapping_backward(mcache, dstyles.sum(axis=0))
            return dz, sgrads, mgrads
        return img, backward

    if space == "W":
        styles = broadcast_w(latent, cfg.num_style_slots)
    elif space == "W_PLUS":
        styles = latent
    else:
        raise ConfigError(f"unknown latent space {space!r}")
    img, scache = synthesis_forward(params, styles)

    def backward(dimg):
        dstyles, sgrads = synthesis_backward(scache, dimg)
        dlatent = dstyles.sum(axis=0) if space == "W" else dstyles
        return dlatent, sgrads, None
    return img, backward


def reconstruct_image(params: GeneratorParams, latent: np.ndarray, space: str = "Z") -> np.ndarray:
    img, _ = latent_forward(params, latent, space)
    return img


# ---------------------------------------------------------------------------
# main loop


def make_it_so(anchored_init: GeneratorParams, target: np.ndarray, bank: EditBank,
               config: InversionConfig = InversionConfig(),
               extractor: FeatureExtractor | None = None,
               progress_cb=None, progress_every: int = 10) -> InversionResult:
    config.validate()
    cfg = anchored_init.config
    target = np.asarray(target, dtype=anchored_init.dtype)
    if target.shape != (3, cfg.resolution, cfg.resolution):
        raise ContractViolationError(
            f"target shape {target.shape} != (3, {cfg.resolution}, {cfg.resolution})")
    if not np.all(np.isfinite(target)):
        raise ContractViolationError("target contains non-finite pixels")
    if len(bank) > 0:
        bank.check_compatible(anchored_init)
    if extractor is None:
        extractor = FeatureExtractor(cfg.resolution)

    start = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    anchored = clone_params(anchored_init)
    tuned = clone_params(anchored_init)
    latent = init_latent(anchored_init, config.latent_space, rng)

    tuned_group = tuned.synthesis
    if config.tune_mapping:
        tuned_group = dict(tuned.arrays)
    opt_latent = Adam(config.lr_z)
    opt_g = Adam(config.lr_g)
    # the replay step keeps its own moment state: folding both objectives into
    # one Adam state lets the larger gradient's second moment shrink the
    # other's effective steps, which visibly stalls target fitting
    opt_replay = Adam(config.lr_g)
    latent_box = {"latent": latent}

    replay_on = (config.replay_weight > 0.0
                 and (config.replay_support or config.replay_anchor))

    trace: list[tuple[float, float, float]] = []
    ema_iterations: list[int] = []

    for it in range(config.total_iters):
        if it > 0 and it % config.ema_interval == 0:
            anchored = ema_blend(anchored, tuned, config.ema_beta)
            ema_iterations.append(it)

        batch = sample_replay_batch(anchored, bank, config.replay_batch, rng)

        img, backward = latent_forward(tuned, latent_box["latent"], config.latent_space)
        loss, r_val, p_val, dimg = total_inversion_loss(config.weights, extractor, img, target)
        dlatent, sgrads, mgrads = backward(dimg)

        replay_val = 0.0
        replay_grads: dict[str, np.ndarray] = {}
        if replay_on:
            replay_val, replay_grads = replay_loss(
                GeneratorPair(anchored=anchored, tuned=tuned), batch, extractor,
                support=config.replay_support, anchor=config.replay_anchor)

        if not np.isfinite(loss) or not np.isfinite(replay_val):
            raise NonFiniteLossError(
                f"loss diverged (target {loss}, replay {replay_val})", iteration=it, trace=trace)

        if config.tune_mapping and mgrads:
            sgrads = {**sgrads, **mgrads}
        g_grads = {k: v for k, v in sgrads.items() if k in tuned_group}

        if config.combined_step and replay_on:
            for k, v in replay_grads.items():
                gv = g_grads.get(k)
                g_grads[k] = v * config.replay_weight if gv is None \
                    else gv + v * config.replay_weight
            opt_latent.step(latent_box, {"latent": dlatent})
            opt_g.step(tuned_group, g_grads)
        else:
            opt_latent.step(latent_box, {"latent": dlatent})
            opt_g.step(tuned_group, g_grads)
            if replay_on:
                scaled = {k: v * config.replay_weight for k, v in replay_grads.items()}
                opt_replay.step(tuned_group, scaled)

        trace.append((float(r_val), float(p_val), float(replay_val)))
        if progress_cb is not None and ((it + 1) % progress_every == 0
                                        or it + 1 == config.total_iters):
            progress_cb(it + 1, config.total_iters)

        if config.early_stop_mse is not None:
            current = reconstruct_image(tuned, latent_box["latent"], config.latent_space)
            if eval_mse(current, target) < config.early_stop_mse:
                break

    return InversionResult(
        z_star=latent_box["latent"],
        tuned=tuned,
        anchored_final=anchored,
        trace=trace,
        wall_time=time.perf_counter() - start,
        config=config,
        ema_iterations=ema_iterations,
    )
