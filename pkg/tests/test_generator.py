import numpy as np
import pytest

from makeitso.errors import ConfigError, ContractViolationError
from makeitso.generator import (GeneratorConfig, MICRO_CONFIG, broadcast_w, cast_params,
                                clone_params, compute_arch_hash, generate, init_toy_generator,
                                map_z_to_w, param_distance, params_equal, synthesize)


def test_channel_schedule():
    cfg = GeneratorConfig()
    assert [cfg.channels_at(r) for r in (4, 8, 16, 32)] == [64, 64, 32, 16]
    assert cfg.num_blocks == 3
    assert cfg.num_style_slots == 8


def test_micro_config_slots():
    assert MICRO_CONFIG.num_style_slots == 4
    assert MICRO_CONFIG.resolution == 8


def test_bad_resolution_rejected():
    with pytest.raises(ConfigError):
        GeneratorConfig(resolution=24).validate()
    with pytest.raises(ConfigError):
        GeneratorConfig(resolution=4).validate()


def test_init_is_seeded(toy_params):
    again = init_toy_generator(0)
    assert params_equal(toy_params, again)
    other = init_toy_generator(1)
    assert not params_equal(toy_params, other)
    assert toy_params.arch_hash == other.arch_hash  # same architecture, different weights


def test_output_shape_and_range(toy_params):
    rng = np.random.default_rng(3)
    for _ in range(3):
        z = rng.standard_normal(64).astype(np.float32)
        img = generate(toy_params, z)
        assert img.shape == (3, 32, 32)
        assert img.dtype == np.float32
        assert np.all(img >= -1.0) and np.all(img <= 1.0)


def test_generate_equals_composition(toy_params):
    z = np.random.default_rng(4).standard_normal(64).astype(np.float32)
    w = map_z_to_w(toy_params, z)
    styles = broadcast_w(w, toy_params.config.num_style_slots)
    assert np.array_equal(generate(toy_params, z), synthesize(toy_params, styles))


def test_determinism(toy_params):
    z = np.random.default_rng(5).standard_normal(64).astype(np.float32)
    assert np.array_equal(generate(toy_params, z), generate(toy_params, z))


def test_every_style_slot_is_live(toy_params):
    # perturbing any single slot must change the image
    z = np.random.default_rng(6).standard_normal(64).astype(np.float32)
    w = map_z_to_w(toy_params, z)
    L = toy_params.config.num_style_slots
    styles = broadcast_w(w, L)
    base = synthesize(toy_params, styles)
    for i in range(L):
        bumped = styles.copy()
        bumped[i] += 0.5
        assert np.abs(synthesize(toy_params, bumped) - base).max() > 0, f"slot {i} dead"


def test_noise_contract(toy_params):
    with pytest.raises(ContractViolationError):
        generate(toy_params, np.zeros(63, dtype=np.float32))
    bad = np.zeros(64, dtype=np.float32)
    bad[0] = np.nan
    with pytest.raises(ContractViolationError):
        generate(toy_params, bad)


def test_style_contract(toy_params):
    with pytest.raises(ContractViolationError):
        synthesize(toy_params, np.zeros((7, 64), dtype=np.float32))


def test_clone_is_independent(toy_params):
    c = clone_params(toy_params)
    assert params_equal(c, toy_params)
    c.arrays["synthesis.const"][0, 0, 0] += 1.0
    assert not params_equal(c, toy_params)


def test_param_distance(toy_params):
    c = clone_params(toy_params)
    assert param_distance(toy_params, c) == 0.0
    for k in c.synthesis:
        c.arrays[k] += 0.1
    d = param_distance(toy_params, c)
    assert d == pytest.approx(0.1, rel=1e-5)
    # mapping-only changes are invisible to the synthesis distance
    c2 = clone_params(toy_params)
    c2.arrays["mapping.fc0.weight"] += 1.0
    assert param_distance(toy_params, c2) == 0.0


def test_arch_hash_sensitivity(toy_params, micro_params):
    assert toy_params.arch_hash != micro_params.arch_hash
    h = compute_arch_hash(toy_params.config, toy_params.arrays)
    assert h == toy_params.arch_hash


def test_cast_round_trip(micro_params):
    p64 = cast_params(micro_params, np.float64)
    assert p64.dtype == np.float64
    back = cast_params(p64, np.float32)
    assert params_equal(back, micro_params)   # float32 -> float64 -> float32 is exact


def test_group_views(toy_params):
    names = set(toy_params.arrays)
    assert set(toy_params.mapping) | set(toy_params.synthesis) == names
    assert not (set(toy_params.mapping) & set(toy_params.synthesis))
    assert all(k.startswith("mapping.") for k in toy_params.mapping)
