"""Edit directions: additive per-layer style offsets and their JSON banks.

A direction is an (L, w_dim) offset stack applied as ``styles + strength *
offsets``. Banks are JSON files tagged with the architecture hash they were
made for; floats survive the round trip exactly because they are written as
shortest repr decimals.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import BankFormatError, ContractViolationError, IncompatibleArchitectureError
from .generator import GeneratorParams, broadcast_w, map_z_to_w, synthesize

DEFAULT_STRENGTH = 1.0
DEFAULT_STRENGTH_RANGE = (-3.0, 3.0)


@dataclass(frozen=True)
class EditDirection:
    name: str
    offsets: np.ndarray   # (L, w_dim), float32
    default_strength: float = DEFAULT_STRENGTH
    strength_range: tuple[float, float] = DEFAULT_STRENGTH_RANGE

    def __post_init__(self):
        arr = np.asarray(self.offsets, dtype=np.float32)
        if arr.ndim != 2:
            raise ContractViolationError(
                f"direction '{self.name}': offsets must be 2-d, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ContractViolationError(f"direction '{self.name}': non-finite offsets")
        arr.setflags(write=False)
        object.__setattr__(self, "offsets", arr)
        lo, hi = self.strength_range
        if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
            raise ContractViolationError(
                f"direction '{self.name}': invalid strength range {self.strength_range}")


@dataclass(frozen=True)
class EditBank:
    arch_hash: str
    directions: tuple[EditDirection, ...] = ()
    _by_name: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        by_name = {}
        for d in self.directions:
            if d.name in by_name:
                raise BankFormatError(f"duplicate direction name '{d.name}'", "directions")
            by_name[d.name] = d
        shapes = {d.offsets.shape for d in self.directions}
        if len(shapes) > 1:
            raise BankFormatError(f"inconsistent offset shapes {sorted(shapes)}", "directions")
        object.__setattr__(self, "_by_name", by_name)

    def __len__(self):
        return len(self.directions)

    def names(self) -> list[str]:
        return [d.name for d in self.directions]

    def get(self, name: str) -> EditDirection:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(
                f"unknown direction '{name}'; available: {', '.join(self.names()) or '(none)'}"
            ) from None

    def check_compatible(self, params: GeneratorParams):
        if self.arch_hash != params.arch_hash:
            raise IncompatibleArchitectureError(
                f"bank was built for arch {self.arch_hash}, generator is {params.arch_hash}")
        expected = (params.config.num_style_slots, params.config.w_dim)
        for d in self.directions:
            if d.offsets.shape != expected:
                raise IncompatibleArchitectureError(
                    f"direction '{d.name}' has shape {d.offsets.shape}, expected {expected}")


def apply_edit(styles: np.ndarray, direction: EditDirection, strength: float) -> np.ndarray:
    """Return ``styles + strength * offsets`` without touching the input."""
    styles = np.asarray(styles)
    if styles.shape != direction.offsets.shape:
        raise ContractViolationError(
            f"style stack shape {styles.shape} != direction shape {direction.offsets.shape}")
    return styles + styles.dtype.type(strength) * direction.offsets.astype(styles.dtype)


def edited_generate(params: GeneratorParams, z: np.ndarray, direction: EditDirection,
                    strength: float) -> np.ndarray:
    w = map_z_to_w(params, z)
    styles = broadcast_w(w, params.config.num_style_slots)
    return synthesize(params, apply_edit(styles, direction, strength))


def random_direction(rng: np.random.Generator, num_slots: int, w_dim: int,
                     norm: float = 1.0, name: str = "random") -> EditDirection:
    """Gaussian offsets rescaled so every layer row has the requested norm."""
    if norm <= 0:
        raise ContractViolationError(f"norm must be > 0, got {norm}")
    offsets = rng.standard_normal((num_slots, w_dim))
    row_norms = np.linalg.norm(offsets, axis=1, keepdims=True)
    offsets = offsets / row_norms * norm
    return EditDirection(name=name, offsets=offsets.astype(np.float32))


# ---------------------------------------------------------------------------
# bank serialization


def _expect(cond: bool, message: str, path: str):
    if not cond:
        raise BankFormatError(message, path)


def bank_to_dict(bank: EditBank) -> dict:
    return {
        "arch_hash": bank.arch_hash,
        "directions": [
            {
                "name": d.name,
                "default_strength": float(d.default_strength),
                "strength_range": [float(d.strength_range[0]), float(d.strength_range[1])],
                "offsets": [[float(v) for v in row] for row in d.offsets],
            }
            for d in bank.directions
        ],
    }


def bank_from_dict(doc: dict) -> EditBank:
    _expect(isinstance(doc, dict), "bank document must be an object", "")
    _expect("arch_hash" in doc, "missing field", "arch_hash")
    _expect(isinstance(doc["arch_hash"], str), "must be a string", "arch_hash")
    _expect("directions" in doc, "missing field", "directions")
    _expect(isinstance(doc["directions"], list), "must be an array", "directions")

    directions = []
    shape = None
    for i, entry in enumerate(doc["directions"]):
        path = f"directions[{i}]"
        _expect(isinstance(entry, dict), "must be an object", path)
        _expect(isinstance(entry.get("name"), str) and entry["name"],
                "must have a non-empty string name", f"{path}.name")
        offsets = entry.get("offsets")
        _expect(isinstance(offsets, list) and offsets, "must be a non-empty array of rows",
                f"{path}.offsets")
        for j, row in enumerate(offsets):
            _expect(isinstance(row, list) and all(isinstance(v, (int, float)) for v in row),
                    "row must be an array of numbers", f"{path}.offsets[{j}]")
            _expect(len(row) == len(offsets[0]), "rows must have equal length",
                    f"{path}.offsets[{j}]")
        arr = np.asarray(offsets, dtype=np.float32)
        if shape is None:
            shape = arr.shape
        _expect(arr.shape == shape, f"shape {arr.shape} differs from first direction {shape}",
                f"{path}.offsets")

        strength = entry.get("default_strength", DEFAULT_STRENGTH)
        _expect(isinstance(strength, (int, float)), "must be a number", f"{path}.default_strength")
        srange = entry.get("strength_range", list(DEFAULT_STRENGTH_RANGE))
        _expect(isinstance(srange, list) and len(srange) == 2
                and all(isinstance(v, (int, float)) for v in srange),
                "must be [lo, hi]", f"{path}.strength_range")
        _expect(srange[0] <= srange[1], "lo must be <= hi", f"{path}.strength_range")
        directions.append(EditDirection(name=entry["name"], offsets=arr,
                                        default_strength=float(strength),
                                        strength_range=(float(srange[0]), float(srange[1]))))
    try:
        return EditBank(arch_hash=doc["arch_hash"], directions=tuple(directions))
    except BankFormatError:
        raise
    except ContractViolationError as e:
        raise BankFormatError(str(e), "directions") from None


def save_bank(bank: EditBank, path: str | os.PathLike):
    tmp = os.fspath(path) + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(bank_to_dict(bank), fh, indent=2)
        fh.write("\n")
    os.replace(tmp, path)


def load_bank(path: str | os.PathLike) -> EditBank:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise BankFormatError(f"not valid JSON: {e}") from None
    return bank_from_dict(doc)


def make_default_bank(params: GeneratorParams, n_directions: int = 8, seed: int = 11,
                      norm: float = 1.0) -> EditBank:
    """Seeded bank of random directions sized to a generator."""
    rng = np.random.default_rng(seed)
    cfg = params.config
    dirs = tuple(
        random_direction(rng, cfg.num_style_slots, cfg.w_dim, norm=norm, name=f"edit_{i:02d}")
        for i in range(n_directions)
    )
    return EditBank(arch_hash=params.arch_hash, directions=dirs)
