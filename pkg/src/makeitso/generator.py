"""Deterministic toy style-based generator.

The generator is the standard two-stage design: a mapping MLP sends a noise
vector ``z`` to a style vector ``w``, the style is broadcast to one copy per
style slot, and a synthesis network turns the per-slot styles into an RGB
image in ``[-1, 1]``. The synthesis path starts from a learned constant,
doubles resolution per block with two style-modulated convolutions each, and
ends in a modulated 1x1 RGB projection followed by tanh.

Parameters live in a flat ``{path: array}`` dict with ``mapping.`` /
``synthesis.`` prefixes so the two groups can be addressed independently.
Arrays are float32 canonically (checkpoints store float32 payloads); cast a
params snapshot to float64 with :func:`cast_params` for gradient checking.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import ConfigError, ContractViolationError, IncompatibleArchitectureError
from . import nn

PARAM_DTYPE = np.float32
BASE_RESOLUTION = 4

# Demodulation makes the synthesis output invariant to overall kernel scale,
# so conv weights can initialize small; smaller stored kernels rotate further
# per fixed-size optimizer step, which is what lets fine-tuning fit a target
# within the default iteration budgets.
CONV_INIT_STD = 0.15


@dataclass(frozen=True)
class GeneratorConfig:
    """Architecture knobs. Defaults give the 32x32 toy model with 8 style slots."""

    z_dim: int = 64
    w_dim: int = 64
    resolution: int = 32
    channel_base: int = 512   # channels at resolution r: min(channel_max, channel_base // r)
    channel_max: int = 64
    mapping_hidden: int = 1   # deeper mappings make the noise landscape much harder to invert
    mapping_width: int = 64
    lrelu_slope: float = 0.2

    def validate(self):
        r = self.resolution
        if r < 2 * BASE_RESOLUTION or (r & (r - 1)) != 0:
            raise ConfigError(f"resolution must be a power of two >= {2 * BASE_RESOLUTION}, got {r}")
        for name in ("z_dim", "w_dim", "channel_base", "channel_max", "mapping_width"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.mapping_hidden < 1:
            raise ConfigError("mapping_hidden must be >= 1")

    def channels_at(self, res: int) -> int:
        return min(self.channel_max, self.channel_base // res)

    @property
    def num_blocks(self) -> int:
        return int(np.log2(self.resolution // BASE_RESOLUTION))

    @property
    def num_style_slots(self) -> int:
        # initial conv + two convs per upsampling block + RGB projection
        return 1 + 2 * self.num_blocks + 1


# 8x8 micro configuration for finite-difference gradient checks (L = 4 slots)
MICRO_CONFIG = GeneratorConfig(z_dim=16, w_dim=16, resolution=8,
                               channel_base=64, channel_max=8,
                               mapping_width=16)


@dataclass(frozen=True)
class GeneratorMeta:
    z_dim: int
    w_dim: int
    num_style_slots: int
    resolution: int
    arch_hash: str


@dataclass
class GeneratorParams:
    """All learnable state: flat named arrays plus the architecture config."""

    config: GeneratorConfig
    arrays: dict[str, np.ndarray]
    _arch_hash: str = field(default="", repr=False)

    def __post_init__(self):
        if not self._arch_hash:
            self._arch_hash = compute_arch_hash(self.config, self.arrays)

    @property
    def arch_hash(self) -> str:
        return self._arch_hash

    @property
    def meta(self) -> GeneratorMeta:
        c = self.config
        return GeneratorMeta(c.z_dim, c.w_dim, c.num_style_slots, c.resolution, self._arch_hash)

    @property
    def mapping(self) -> dict[str, np.ndarray]:
        return {k: v for k, v in self.arrays.items() if k.startswith("mapping.")}

    @property
    def synthesis(self) -> dict[str, np.ndarray]:
        return {k: v for k, v in self.arrays.items() if k.startswith("synthesis.")}

    @property
    def dtype(self):
        return next(iter(self.arrays.values())).dtype

    def num_parameters(self) -> int:
        return sum(int(a.size) for a in self.arrays.values())


def compute_arch_hash(config: GeneratorConfig, arrays: dict[str, np.ndarray]) -> str:
    manifest = {
        "config": asdict(config),
        "arrays": [[name, list(arrays[name].shape)] for name in sorted(arrays)],
    }
    blob = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# construction


def _conv_slots(config: GeneratorConfig):
    """Yield (name, resolution, c_in, c_out, upsample) for each 3x3 conv slot."""
    slots = []
    res = BASE_RESOLUTION
    c = config.channels_at(res)
    slots.append(("conv0", res, c, c, False))
    i = 1
    while res < config.resolution:
        res *= 2
        c_out = config.channels_at(res)
        slots.append((f"conv{i}", res, c, c_out, True))
        slots.append((f"conv{i + 1}", res, c_out, c_out, False))
        c = c_out
        i += 2
    return slots


def init_toy_generator(seed: int, config: GeneratorConfig = GeneratorConfig()) -> GeneratorParams:
    """Seeded random initialization of the toy generator."""
    config.validate()
    rng = np.random.default_rng(seed)
    arrays: dict[str, np.ndarray] = {}

    def normal(shape, std=1.0):
        return (rng.standard_normal(shape) * std).astype(PARAM_DTYPE)

    # mapping MLP: z_dim -> width x hidden -> w_dim, leaky ReLU between layers
    dims = [config.z_dim] + [config.mapping_width] * config.mapping_hidden + [config.w_dim]
    for i, (d_in, d_out) in enumerate(zip(dims[:-1], dims[1:])):
        gain = 1.0 if i == len(dims) - 2 else np.sqrt(2.0)
        arrays[f"mapping.fc{i}.weight"] = normal((d_out, d_in), std=gain / np.sqrt(d_in))
        arrays[f"mapping.fc{i}.bias"] = np.zeros(d_out, dtype=PARAM_DTYPE)

    c0 = config.channels_at(BASE_RESOLUTION)
    arrays["synthesis.const"] = normal((c0, BASE_RESOLUTION, BASE_RESOLUTION))

    def add_modconv(name, c_in, c_out, k, weight_std):
        arrays[f"synthesis.{name}.weight"] = normal((c_out, c_in, k, k), std=weight_std)
        arrays[f"synthesis.{name}.bias"] = np.zeros(c_out, dtype=PARAM_DTYPE)
        arrays[f"synthesis.{name}.affine_weight"] = normal((c_in, config.w_dim),
                                                           std=1.0 / np.sqrt(config.w_dim))
        arrays[f"synthesis.{name}.affine_bias"] = np.ones(c_in, dtype=PARAM_DTYPE)

    for name, _res, c_in, c_out, _up in _conv_slots(config):
        add_modconv(name, c_in, c_out, 3, CONV_INIT_STD)

    c_last = config.channels_at(config.resolution)
    # no demodulation on the RGB projection: its scale sets the pre-tanh range,
    # sized so images neither saturate nor collapse to gray
    add_modconv("torgb", c_last, 3, 1, 2.0 / np.sqrt(c_last))

    return GeneratorParams(config=config, arrays=arrays)


def clone_params(params: GeneratorParams) -> GeneratorParams:
    return GeneratorParams(config=params.config,
                           arrays={k: v.copy() for k, v in params.arrays.items()},
                           _arch_hash=params.arch_hash)


def cast_params(params: GeneratorParams, dtype) -> GeneratorParams:
    return GeneratorParams(config=params.config,
                           arrays={k: v.astype(dtype) for k, v in params.arrays.items()},
                           _arch_hash=params.arch_hash)


def param_distance(a: GeneratorParams, b: GeneratorParams) -> float:
    """RMS difference over all synthesis arrays."""
    if a.arch_hash != b.arch_hash:
        raise IncompatibleArchitectureError(
            f"architecture hashes differ: {a.arch_hash} vs {b.arch_hash}")
    sq = 0.0
    n = 0
    for k, arr in a.synthesis.items():
        diff = arr.astype(np.float64) - b.arrays[k].astype(np.float64)
        sq += float(np.sum(diff * diff))
        n += arr.size
    return float(np.sqrt(sq / n))


def params_equal(a: GeneratorParams, b: GeneratorParams, group: str = "") -> bool:
    """Bit-level equality, optionally restricted to a name prefix."""
    keys = [k for k in a.arrays if k.startswith(group)]
    if set(keys) != {k for k in b.arrays if k.startswith(group)}:
        return False
    return all(np.array_equal(a.arrays[k], b.arrays[k]) for k in keys)


# ---------------------------------------------------------------------------
# validation helpers


def _require_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise ContractViolationError(f"{name} contains non-finite entries")


def check_noise(params: GeneratorParams, z: np.ndarray):
    z = np.asarray(z)
    if z.shape != (params.config.z_dim,):
        raise ContractViolationError(
            f"noise vector shape {z.shape} != ({params.config.z_dim},)")
    _require_finite("noise vector", z)
    return z


def check_styles(params: GeneratorParams, styles: np.ndarray):
    styles = np.asarray(styles)
    expected = (params.config.num_style_slots, params.config.w_dim)
    if styles.shape != expected:
        raise ContractViolationError(f"style stack shape {styles.shape} != {expected}")
    _require_finite("style stack", styles)
    return styles


# ---------------------------------------------------------------------------
# forward / backward


def mapping_forward(params: GeneratorParams, z: np.ndarray):
    z = check_noise(params, z)
    cfg = params.config
    arrs = params.arrays
    x = z
    caches = []
    n_layers = cfg.mapping_hidden + 1
    for i in range(n_layers):
        x, lin_cache = nn.linear_fwd(x, arrs[f"mapping.fc{i}.weight"], arrs[f"mapping.fc{i}.bias"])
        if i < n_layers - 1:
            x, act_cache = nn.lrelu_fwd(x, cfg.lrelu_slope)
        else:
            act_cache = None
        caches.append((lin_cache, act_cache))
    return x, (caches, n_layers)


def mapping_backward(cache, dw: np.ndarray):
    caches, n_layers = cache
    grads: dict[str, np.ndarray] = {}
    g = dw
    for i in reversed(range(n_layers)):
        lin_cache, act_cache = caches[i]
        if act_cache is not None:
            g = nn.lrelu_bwd(act_cache, g)
        g, gw, gb = nn.linear_bwd(lin_cache, g)
        grads[f"mapping.fc{i}.weight"] = gw
        grads[f"mapping.fc{i}.bias"] = gb
    return g, grads


def map_z_to_w(params: GeneratorParams, z: np.ndarray) -> np.ndarray:
    w, _ = mapping_forward(params, z)
    return w


def broadcast_w(w: np.ndarray, num_slots: int) -> np.ndarray:
    """Replicate one style vector into a per-slot style stack."""
    if num_slots < 1:
        raise ContractViolationError(f"style slot count must be >= 1, got {num_slots}")
    w = np.asarray(w)
    return np.repeat(w[None, :], num_slots, axis=0).copy()


def synthesis_forward(params: GeneratorParams, styles: np.ndarray):
    styles = check_styles(params, styles)
    cfg = params.config
    arrs = params.arrays
    slots = _conv_slots(cfg)

    x = arrs["synthesis.const"].astype(styles.dtype, copy=True)
    layer_caches = []
    for slot_idx, (name, _res, _ci, _co, up) in enumerate(slots):
        up_cache = None
        if up:
            x, up_cache = nn.upsample2x_fwd(x)
        p = f"synthesis.{name}"
        x, mc = nn.modconv2d_fwd(x, styles[slot_idx], arrs[f"{p}.weight"], arrs[f"{p}.bias"],
                                 arrs[f"{p}.affine_weight"], arrs[f"{p}.affine_bias"],
                                 demodulate=True, pad=1)
        x, act_cache = nn.lrelu_fwd(x, cfg.lrelu_slope)
        layer_caches.append((name, up_cache, mc, act_cache))

    rgb_idx = len(slots)
    x, rgb_cache = nn.modconv2d_fwd(x, styles[rgb_idx], arrs["synthesis.torgb.weight"],
                                    arrs["synthesis.torgb.bias"],
                                    arrs["synthesis.torgb.affine_weight"],
                                    arrs["synthesis.torgb.affine_bias"],
                                    demodulate=False, pad=0)
    img, tanh_cache = nn.tanh_fwd(x)
    return img, (styles.dtype, layer_caches, rgb_cache, tanh_cache, cfg)


def synthesis_backward(cache, dimg: np.ndarray):
    """Returns (grad wrt style stack, grads wrt synthesis arrays by name)."""
    dtype, layer_caches, rgb_cache, tanh_cache, cfg = cache
    grads: dict[str, np.ndarray] = {}
    dstyles = np.zeros((cfg.num_style_slots, cfg.w_dim), dtype=dtype)

    g = nn.tanh_bwd(tanh_cache, dimg)
    g, dstyle, dw, db, daw, dab = nn.modconv2d_bwd(rgb_cache, g)
    dstyles[len(layer_caches)] = dstyle
    grads["synthesis.torgb.weight"] = dw
    grads["synthesis.torgb.bias"] = db
    grads["synthesis.torgb.affine_weight"] = daw
    grads["synthesis.torgb.affine_bias"] = dab

    for slot_idx in reversed(range(len(layer_caches))):
        name, up_cache, mc, act_cache = layer_caches[slot_idx]
        g = nn.lrelu_bwd(act_cache, g)
        g, dstyle, dw, db, daw, dab = nn.modconv2d_bwd(mc, g)
        p = f"synthesis.{name}"
        dstyles[slot_idx] = dstyle
        grads[f"{p}.weight"] = dw
        grads[f"{p}.bias"] = db
        grads[f"{p}.affine_weight"] = daw
        grads[f"{p}.affine_bias"] = dab
        if up_cache is not None:
            g = nn.upsample2x_bwd(up_cache, g)

    grads["synthesis.const"] = g
    return dstyles, grads


def synthesize(params: GeneratorParams, styles: np.ndarray) -> np.ndarray:
    img, _ = synthesis_forward(params, styles)
    return img


def generate(params: GeneratorParams, z: np.ndarray) -> np.ndarray:
    w = map_z_to_w(params, z)
    styles = broadcast_w(w, params.config.num_style_slots)
    return synthesize(params, styles)
