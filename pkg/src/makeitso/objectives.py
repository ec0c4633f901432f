"""Reconstruction and perceptual losses plus evaluation metrics.

The perceptual distance runs both images through a frozen multi-scale conv
pyramid and compares channel-unit-normalized feature maps stage by stage.
The pyramid weights are seeded random, never trained, and recorded by
(identifier, seed, resolution) in run manifests.

Loss functions return ``(value, grad_wrt_first_image)`` so callers can
backpropagate into whatever produced the first argument; ``eval_*`` variants
clamp to [-1, 1] first and return plain floats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractViolationError
from . import nn

EXTRACTOR_KIND = "random-pyramid-v1"
DEFAULT_EXTRACTOR_SEED = 7
_STAGE_CHANNELS = (16, 32, 64)


@dataclass(frozen=True)
class LossWeights:
    lambda_recon: float = 1.0
    lambda_lpips: float = 1.0

    def validate(self):
        for name in ("lambda_recon", "lambda_lpips"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ConfigError(f"{name} must be finite and >= 0, got {v}")
        if self.lambda_recon == 0 and self.lambda_lpips == 0:
            raise ConfigError("loss weights must not both be zero")


class FeatureExtractor:
    """Frozen seeded conv pyramid: 3 -> 16 -> 32 -> 64 channels, stride 2 each."""

    def __init__(self, resolution: int, seed: int = DEFAULT_EXTRACTOR_SEED):
        if resolution < 2 ** len(_STAGE_CHANNELS):
            raise ConfigError(
                f"extractor needs resolution >= {2 ** len(_STAGE_CHANNELS)}, got {resolution}")
        self.resolution = resolution
        self.seed = seed
        self.identifier = f"{EXTRACTOR_KIND}:seed={seed}:res={resolution}"
        rng = np.random.default_rng(seed)
        self.weights = []
        c_in = 3
        for c_out in _STAGE_CHANNELS:
            w = rng.standard_normal((c_out, c_in, 3, 3)) * (1.0 / np.sqrt(c_in * 9))
            self.weights.append(w.astype(np.float32))
            c_in = c_out

    def state_fingerprint(self) -> bytes:
        return b"".join(np.ascontiguousarray(w).tobytes() for w in self.weights)

    def features_fwd(self, img: np.ndarray):
        """Normalized feature maps per stage, with caches for the backward pass."""
        x = img
        feats, caches = [], []
        for w in self.weights:
            w = w.astype(x.dtype)
            x, conv_cache = nn.conv2d_fwd(x, w, stride=2, pad=1)
            x, act_cache = nn.lrelu_fwd(x, 0.2)
            f, norm_cache = nn.channel_normalize_fwd(x)
            feats.append(f)
            caches.append((conv_cache, act_cache, norm_cache))
        return feats, caches

    def features_bwd(self, caches, dfeats):
        """Gradient w.r.t. the input image given grads on each normalized stage."""
        dimg = None
        dx = None
        for (conv_cache, act_cache, norm_cache), df in zip(reversed(caches), reversed(dfeats)):
            g = nn.channel_normalize_bwd(norm_cache, df)
            if dx is not None:
                g = g + dx
            g = nn.lrelu_bwd(act_cache, g)
            dx = nn.conv2d_bwd(conv_cache, g)[0]
        dimg = dx
        return dimg


def _check_pair(a: np.ndarray, b: np.ndarray):
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ContractViolationError(f"image shapes differ: {a.shape} vs {b.shape}")
    if a.ndim != 3 or a.shape[0] != 3:
        raise ContractViolationError(f"expected (3, H, W) images, got {a.shape}")
    return a, b


def recon_loss(a: np.ndarray, b: np.ndarray):
    """Mean squared error over all pixels; returns (value, d/da)."""
    a, b = _check_pair(a, b)
    diff = a - b
    value = float(np.mean(diff * diff))
    grad = (2.0 / diff.size) * diff
    return value, grad


def perceptual_loss(extractor: FeatureExtractor, a: np.ndarray, b: np.ndarray):
    """Mean over stages of feature-map MSE; returns (value, d/da)."""
    a, b = _check_pair(a, b)
    if a.shape[1] != extractor.resolution or a.shape[2] != extractor.resolution:
        raise ContractViolationError(
            f"extractor expects {extractor.resolution}x{extractor.resolution} images, "
            f"got {a.shape[1]}x{a.shape[2]}")
    fa, caches = extractor.features_fwd(a)
    fb, _ = extractor.features_fwd(b)
    n_stages = len(fa)
    value = 0.0
    dfeats = []
    for sa, sb in zip(fa, fb):
        diff = sa - sb
        value += float(np.mean(diff * diff)) / n_stages
        dfeats.append((2.0 / (diff.size * n_stages)) * diff)
    grad = extractor.features_bwd(caches, dfeats)
    return value, grad


def total_inversion_loss(weights: LossWeights, extractor: FeatureExtractor,
                         generated: np.ndarray, target: np.ndarray):
    """Weighted sum of the two losses; returns (value, recon, perc, d/dgenerated)."""
    weights.validate()
    r, dr = recon_loss(generated, target)
    p, dp = perceptual_loss(extractor, generated, target)
    value = weights.lambda_recon * r + weights.lambda_lpips * p
    grad = weights.lambda_recon * dr + weights.lambda_lpips * dp
    return value, r, p, grad


def _clamp(img: np.ndarray) -> np.ndarray:
    return np.clip(np.asarray(img), -1.0, 1.0)


def eval_mse(a: np.ndarray, b: np.ndarray) -> float:
    value, _ = recon_loss(_clamp(a), _clamp(b))
    return value


def eval_perceptual(extractor: FeatureExtractor, a: np.ndarray, b: np.ndarray) -> float:
    value, _ = perceptual_loss(extractor, _clamp(a), _clamp(b))
    return value
