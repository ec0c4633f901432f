"""Persistence for inversion runs: result directories, manifests, loss CSVs.

A result directory is self-sufficient for serving edits after a restart:

    manifest.json             run config, seeds, extractor id, artifact paths
    z.npy                     optimized latent
    tuned.misockpt            fine-tuned generator
    anchored_final.misockpt   anchored generator after the final EMA blend
    losses.csv                per-iteration (recon, perceptual, replay)
    target.png                ingested target
    reconstruction.png        tuned-model output at the optimized latent
    bank.json                 edit bank the run used
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from . import imageio
from .editing import EditBank, load_bank, save_bank
from .errors import ContractViolationError
from .generator import GeneratorParams
from .inversion import InversionConfig, InversionResult, reconstruct_image
from .objectives import FeatureExtractor, LossWeights, eval_mse, eval_perceptual

MANIFEST_FORMAT = "makeitso-run/1"

MANIFEST_NAME = "manifest.json"
Z_NAME = "z.npy"
TUNED_NAME = "tuned.misockpt"
ANCHORED_NAME = "anchored_final.misockpt"
LOSSES_NAME = "losses.csv"
TARGET_PNG = "target.png"
RECON_PNG = "reconstruction.png"
BANK_NAME = "bank.json"


def config_to_dict(config: InversionConfig) -> dict:
    doc = asdict(config)
    doc["weights"] = {"lambda_recon": config.weights.lambda_recon,
                      "lambda_lpips": config.weights.lambda_lpips}
    return doc


def config_from_dict(doc: dict) -> InversionConfig:
    doc = dict(doc)
    weights = doc.pop("weights", None)
    cfg = InversionConfig(**doc) if weights is None else InversionConfig(
        weights=LossWeights(**weights), **doc)
    cfg.validate()
    return cfg


def write_losses_csv(path, trace):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "recon", "perceptual", "replay"])
        for i, (r, p, rep) in enumerate(trace):
            writer.writerow([i, repr(float(r)), repr(float(p)), repr(float(rep))])


def read_losses_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [(float(r["recon"]), float(r["perceptual"]), float(r["replay"])) for r in rows]


def write_result_dir(out_dir, result: InversionResult, target: np.ndarray, bank: EditBank,
                     extractor: FeatureExtractor, target_info: dict | None = None) -> dict:
    """Persist a completed run; returns the manifest dict."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    np.save(out / Z_NAME, result.z_star)
    ckpt.save_checkpoint(result.tuned, out / TUNED_NAME)
    ckpt.save_checkpoint(result.anchored_final, out / ANCHORED_NAME)
    write_losses_csv(out / LOSSES_NAME, result.trace)
    imageio.save_png(target, out / TARGET_PNG)
    recon = reconstruct_image(result.tuned, result.z_star, result.config.latent_space)
    imageio.save_png(recon, out / RECON_PNG)
    save_bank(bank, out / BANK_NAME)

    manifest = {
        "format": MANIFEST_FORMAT,
        "kind": "invert",
        "config": config_to_dict(result.config),
        "seed": result.config.seed,
        "extractor": extractor.identifier,
        "arch_hash": result.tuned.arch_hash,
        "total_iters": len(result.trace),
        "ema_iterations": list(result.ema_iterations),
        "n_ema_updates": result.n_ema_updates,
        "wall_time": result.wall_time,
        "final": {
            "eval_mse": eval_mse(recon, target),
            "eval_perceptual": eval_perceptual(extractor, recon, target),
        },
        "target": target_info or {},
        "paths": {
            "z": Z_NAME,
            "tuned": TUNED_NAME,
            "anchored_final": ANCHORED_NAME,
            "losses": LOSSES_NAME,
            "target_png": TARGET_PNG,
            "reconstruction_png": RECON_PNG,
            "bank": BANK_NAME,
        },
    }
    tmp = out / (MANIFEST_NAME + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, out / MANIFEST_NAME)
    return manifest


@dataclass
class LoadedResult:
    manifest: dict
    config: InversionConfig
    z_star: np.ndarray
    tuned: GeneratorParams
    anchored_final: GeneratorParams | None
    bank: EditBank
    root: Path


def load_result_dir(path) -> LoadedResult:
    root = Path(path)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise ContractViolationError(f"{root}: not a result directory (no {MANIFEST_NAME})")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("format") != MANIFEST_FORMAT:
        raise ContractViolationError(
            f"{root}: unsupported manifest format {manifest.get('format')!r}")
    paths = manifest["paths"]
    config = config_from_dict(manifest["config"])
    z_star = np.load(root / paths["z"])
    tuned = ckpt.load_checkpoint(root / paths["tuned"])
    anchored = None
    anchored_path = root / paths.get("anchored_final", ANCHORED_NAME)
    if anchored_path.is_file():
        anchored = ckpt.load_checkpoint(anchored_path)
    bank = load_bank(root / paths["bank"])
    return LoadedResult(manifest=manifest, config=config, z_star=z_star, tuned=tuned,
                        anchored_final=anchored, bank=bank, root=root)
