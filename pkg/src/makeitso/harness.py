"""Benchmark protocols: inversion quality, edit deviation, and ablations.

Edit deviation quantifies how much a tuning method warped the generator's
editing behavior: sample fresh latents, apply every bank direction (plus the
unedited pair) under both the initial generator and the method's tuned
generator, and average the distance between the paired outputs. An untouched
generator scores exactly zero.

Targets come in two kinds. "out_of_range" targets (the default) are synthetic
checkerboard-plus-ramp images that the generator cannot emit exactly, standing
in for real photographs: they force genuine generator tuning, which is the
regime where methods differ. "in_range" targets are generator samples with a
known preimage, useful as a solvable oracle.

Method rows are produced by config transforms registered in METHODS, so every
ablation row is reachable from the full method purely through flags.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import BaselineConfig, pivotal_tune, scaled_pti_config
from .editing import EditBank, edited_generate
from .errors import ConfigError, ContractViolationError
from .generator import GeneratorParams, generate
from .inversion import InversionConfig, make_it_so, reconstruct_image
from .objectives import FeatureExtractor, eval_mse, eval_perceptual

REPORT_FORMAT = "makeitso-report/1"

TARGET_KINDS = ("out_of_range", "in_range")


@dataclass(frozen=True)
class BenchmarkSpec:
    n_inversion_targets: int = 10
    n_edit_samples: int = 10
    n_directions: int = 8
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    methods: tuple[str, ...] = ("full", "pti")
    total_iters: int = 500
    ema_interval: int = 100
    target_kind: str = "out_of_range"

    def validate(self):
        for name in ("n_inversion_targets", "n_edit_samples", "n_directions",
                     "total_iters", "ema_interval"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if not self.methods:
            raise ConfigError("methods must be non-empty")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method '{m}'; known: {sorted(METHODS)}")
        if self.target_kind not in TARGET_KINDS:
            raise ConfigError(f"target_kind must be one of {TARGET_KINDS}")


@dataclass
class MethodRow:
    method: str
    inversion_mse: float | None
    inversion_perceptual: float | None
    edit_mse: float | None
    edit_perceptual: float | None
    raw: dict = field(default_factory=dict)   # per-seed lists + per-run detail


@dataclass
class Report:
    spec: dict
    rows: list[MethodRow]

    def row(self, method: str) -> MethodRow:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)


# ---------------------------------------------------------------------------
# method registry: name -> config transform over the full-method defaults


def _full(cfg: InversionConfig) -> InversionConfig:
    return cfg


def _no_support(cfg: InversionConfig) -> InversionConfig:
    return replace(cfg, replay_support=False)


def _no_anchor(cfg: InversionConfig) -> InversionConfig:
    return replace(cfg, replay_anchor=False)


def _no_replay(cfg: InversionConfig) -> InversionConfig:
    return replace(cfg, replay_weight=0.0)


def _no_ema(cfg: InversionConfig) -> InversionConfig:
    return replace(cfg, ema_interval=cfg.total_iters + 1)


def _short(cfg: InversionConfig) -> InversionConfig:
    # halved budget; EMA interval shrinks with it to keep four updates
    return replace(cfg, total_iters=max(1, cfg.total_iters // 2),
                   ema_interval=max(1, cfg.ema_interval // 2))


def _space_w(cfg: InversionConfig) -> InversionConfig:
    return replace(cfg, latent_space="W")


def _space_wplus(cfg: InversionConfig) -> InversionConfig:
    return replace(cfg, latent_space="W_PLUS")


METHODS: dict[str, object] = {
    "full": _full,
    "no_support": _no_support,
    "no_anchor": _no_anchor,
    "no_replay": _no_replay,
    "no_ema": _no_ema,
    "short_budget": _short,
    "space_w": _space_w,
    "space_wplus": _space_wplus,
    "pti": None,         # handled separately: not an InversionConfig transform
    "identity": None,    # no-op method, pins the edit-deviation zero point
}

ABLATION_METHODS = ("full", "no_support", "no_anchor", "no_ema", "short_budget", "pti")
LATENT_SPACE_METHODS = ("full", "space_w", "space_wplus")


def method_config(method: str, spec: BenchmarkSpec, seed: int) -> InversionConfig:
    base = InversionConfig(total_iters=spec.total_iters, ema_interval=spec.ema_interval,
                           seed=seed)
    transform = METHODS[method]
    if transform is None:
        raise ConfigError(f"method '{method}' has no inversion config")
    return transform(base)


@dataclass
class MethodOutcome:
    tuned: GeneratorParams
    latent: np.ndarray
    latent_space: str


def run_method(method: str, generator_init: GeneratorParams, target: np.ndarray,
               bank: EditBank, spec: BenchmarkSpec, seed: int,
               extractor: FeatureExtractor) -> MethodOutcome:
    """One inversion run of the named method; equal gradient-step budgets.

    The engine takes two sub-steps per iteration (target + replay), so
    pivot tuning gets 2x the iteration count, split at its phase ratio.
    """
    if method == "identity":
        rng = np.random.default_rng(seed)
        z0 = rng.standard_normal(generator_init.config.z_dim).astype(generator_init.dtype)
        return MethodOutcome(tuned=generator_init, latent=z0, latent_space="Z")
    if method == "pti":
        cfg = scaled_pti_config(2 * spec.total_iters, BaselineConfig(seed=seed))
        pivot, tuned, _ = pivotal_tune(generator_init, target, cfg, extractor)
        return MethodOutcome(tuned=tuned, latent=pivot, latent_space="W")
    cfg = method_config(method, spec, seed)
    result = make_it_so(generator_init, target, bank, cfg, extractor)
    return MethodOutcome(tuned=result.tuned, latent=result.z_star,
                         latent_space=cfg.latent_space)


# ---------------------------------------------------------------------------
# targets


PATTERN_SEED_BASE = 140_000
EDIT_EVAL_SEED_OFFSET = 50_000   # decouples eval latents from run seeds
TARGET_SEED_OFFSET = 90_000


def pattern_target(resolution: int, index: int) -> np.ndarray:
    """Synthetic probe image outside the generator's output family.

    Hard-edged checkerboard under a linear color ramp. Both components are
    derived from `index` alone, so target i is stable across runs.
    """
    rng = np.random.default_rng(PATTERN_SEED_BASE + index)
    res = resolution
    cell = int(rng.choice([max(2, res // 8), max(2, res // 4)]))
    phase = rng.integers(0, cell, size=2)
    ys, xs = np.mgrid[0:res, 0:res]
    checker = (((ys + phase[0]) // cell + (xs + phase[1]) // cell) % 2).astype(np.float64)
    color_a = rng.uniform(-0.55, 0.55, size=3)
    color_b = rng.uniform(-0.55, 0.55, size=3)
    # resample until the two plateaus differ visibly in some channel
    while np.abs(color_a - color_b).max() < 0.4:
        color_b = rng.uniform(-0.55, 0.55, size=3)
    img = color_a[:, None, None] * checker + color_b[:, None, None] * (1.0 - checker)
    theta = rng.uniform(0.0, 2.0 * np.pi)
    ramp = ((xs - res / 2) * np.cos(theta) + (ys - res / 2) * np.sin(theta)) / res
    gains = rng.uniform(0.2, 0.5, size=3)
    img = img + gains[:, None, None] * ramp
    return np.clip(img, -0.95, 0.95).astype(np.float32)


def sampled_target(generator_init: GeneratorParams, index: int) -> np.ndarray:
    """In-range target: a generator sample with a known preimage."""
    rng = np.random.default_rng(TARGET_SEED_OFFSET + index)
    z = rng.standard_normal(generator_init.config.z_dim).astype(generator_init.dtype)
    return generate(generator_init, z)


def benchmark_target(spec: BenchmarkSpec, generator_init: GeneratorParams,
                     index: int) -> np.ndarray:
    if spec.target_kind == "in_range":
        return sampled_target(generator_init, index)
    return pattern_target(generator_init.config.resolution, index)


def target_assignment(spec: BenchmarkSpec) -> dict[int, list[int]]:
    """Round-robin map seed -> target indices; every target runs once."""
    assignment: dict[int, list[int]] = {seed: [] for seed in spec.seeds}
    for t in range(spec.n_inversion_targets):
        assignment[spec.seeds[t % len(spec.seeds)]].append(t)
    return assignment


def run_benchmark(spec: BenchmarkSpec, generator_init: GeneratorParams, bank: EditBank,
                  extractor: FeatureExtractor | None = None,
                  progress=None) -> Report:
    """One inversion per (method, target) powering both metric families.

    Targets are spread round-robin over seeds; per-seed cells average over
    that seed's targets, and the method mean averages the per-seed cells.
    """
    spec.validate()
    if extractor is None:
        extractor = FeatureExtractor(generator_init.config.resolution)
    assignment = target_assignment(spec)

    rows = []
    for method in spec.methods:
        raw = {"seeds": list(spec.seeds), "inversion_mse": [], "inversion_perceptual": [],
               "edit_mse": [], "edit_perceptual": [], "runs": []}
        for seed in spec.seeds:
            cell = {"inversion_mse": [], "inversion_perceptual": [],
                    "edit_mse": [], "edit_perceptual": []}
            for t in assignment[seed]:
                target = benchmark_target(spec, generator_init, t)
                try:
                    outcome = run_method(method, generator_init, target, bank, spec,
                                         seed, extractor)
                except Exception as e:   # failures become missing cells, not crashes
                    raw.setdefault("errors", []).append(
                        {"seed": seed, "target": t, "error": str(e)})
                    continue
                recon = reconstruct_image(outcome.tuned, outcome.latent,
                                          outcome.latent_space)
                run = {"seed": seed, "target": t,
                       "inversion_mse": eval_mse(recon, target),
                       "inversion_perceptual": eval_perceptual(extractor, recon, target)}
                em, ep = edit_deviation(generator_init, outcome.tuned, bank,
                                        spec.n_edit_samples,
                                        EDIT_EVAL_SEED_OFFSET + seed, extractor)
                run["edit_mse"] = em
                run["edit_perceptual"] = ep
                raw["runs"].append(run)
                for key in cell:
                    cell[key].append(run[key])
                if progress is not None:
                    progress(method, seed, t)
            for key in cell:
                raw[key].append(float(np.mean(cell[key])) if cell[key] else None)

        def mean(key):
            vals = [v for v in raw[key] if v is not None]
            return float(np.mean(vals)) if vals else None

        rows.append(MethodRow(
            method=method,
            inversion_mse=mean("inversion_mse"),
            inversion_perceptual=mean("inversion_perceptual"),
            edit_mse=mean("edit_mse"),
            edit_perceptual=mean("edit_perceptual"),
            raw=raw,
        ))

    spec_doc = {
        "n_inversion_targets": spec.n_inversion_targets,
        "n_edit_samples": spec.n_edit_samples,
        "n_directions": spec.n_directions,
        "seeds": list(spec.seeds),
        "methods": list(spec.methods),
        "total_iters": spec.total_iters,
        "ema_interval": spec.ema_interval,
        "target_kind": spec.target_kind,
        "extractor": extractor.identifier,
        "arch_hash": generator_init.arch_hash,
    }
    return Report(spec=spec_doc, rows=rows)


# ---------------------------------------------------------------------------
# metrics


def edit_deviation(generator_init: GeneratorParams, tuned: GeneratorParams, bank: EditBank,
                   n_samples: int, seed: int, extractor: FeatureExtractor):
    """Mean (mse, perceptual) distance between initial-model and tuned-model
    outputs over fresh latents x (bank directions + unedited)."""
    rng = np.random.default_rng(seed)
    cfg = generator_init.config
    mses, percs = [], []
    for _ in range(n_samples):
        z = rng.standard_normal(cfg.z_dim).astype(generator_init.dtype)
        pairs = [(generate(generator_init, z), generate(tuned, z))]
        for d in bank.directions:
            a = edited_generate(generator_init, z, d, d.default_strength)
            b = edited_generate(tuned, z, d, d.default_strength)
            pairs.append((a, b))
        for a, b in pairs:
            mses.append(eval_mse(a, b))
            percs.append(eval_perceptual(extractor, a, b))
    return float(np.mean(mses)), float(np.mean(percs))


# ---------------------------------------------------------------------------
# stand-alone protocols


def run_inversion_quality(spec: BenchmarkSpec, generator_init: GeneratorParams,
                          bank: EditBank, extractor: FeatureExtractor | None = None) -> Report:
    return run_benchmark(spec, generator_init, bank, extractor)


def run_edit_quality(spec: BenchmarkSpec, generator_init: GeneratorParams, bank: EditBank,
                     method: str, extractor: FeatureExtractor | None = None) -> Report:
    return run_benchmark(replace(spec, methods=(method,)), generator_init, bank, extractor)


def run_leave_one_out(spec: BenchmarkSpec, generator_init: GeneratorParams, bank: EditBank,
                      extractor: FeatureExtractor | None = None) -> Report:
    return run_benchmark(replace(spec, methods=ABLATION_METHODS), generator_init, bank,
                         extractor)


def run_latent_space_ablation(spec: BenchmarkSpec, generator_init: GeneratorParams,
                              bank: EditBank,
                              extractor: FeatureExtractor | None = None) -> Report:
    return run_benchmark(replace(spec, methods=LATENT_SPACE_METHODS), generator_init, bank,
                         extractor)


# ---------------------------------------------------------------------------
# report serialization


def report_to_dict(report: Report) -> dict:
    return {
        "format": REPORT_FORMAT,
        "spec": report.spec,
        "rows": [
            {
                "method": r.method,
                "inversion_mse": r.inversion_mse,
                "inversion_perceptual": r.inversion_perceptual,
                "edit_mse": r.edit_mse,
                "edit_perceptual": r.edit_perceptual,
                "raw": r.raw,
            }
            for r in report.rows
        ],
    }


def report_from_dict(doc: dict) -> Report:
    if doc.get("format") != REPORT_FORMAT:
        raise ContractViolationError(f"unsupported report format {doc.get('format')!r}")
    rows = [MethodRow(method=r["method"], inversion_mse=r["inversion_mse"],
                      inversion_perceptual=r["inversion_perceptual"],
                      edit_mse=r["edit_mse"], edit_perceptual=r["edit_perceptual"],
                      raw=r.get("raw", {}))
            for r in doc["rows"]]
    return Report(spec=doc["spec"], rows=rows)


def emit_report(report: Report, path, fmt: str = "json"):
    path = Path(path)
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
            fh.write("\n")
    elif fmt == "csv":
        import csv as _csv
        with open(path, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["method", "seed", "inversion_mse", "inversion_perceptual",
                             "edit_mse", "edit_perceptual"])
            for r in report.rows:
                seeds = r.raw.get("seeds", [])
                for i, seed in enumerate(seeds):
                    def cell(key, i=i, r=r):
                        vals = r.raw.get(key, [])
                        v = vals[i] if i < len(vals) else None
                        return "" if v is None else repr(v)
                    writer.writerow([r.method, seed, cell("inversion_mse"),
                                     cell("inversion_perceptual"), cell("edit_mse"),
                                     cell("edit_perceptual")])
    elif fmt == "markdown-table":
        lines = ["| method | inversion MSE | inversion perc. | edit MSE | edit perc. |",
                 "| --- | --- | --- | --- | --- |"]
        for r in report.rows:
            def fmt_cell(v):
                return "-" if v is None else f"{v:.6f}"
            lines.append(f"| {r.method} | {fmt_cell(r.inversion_mse)} | "
                         f"{fmt_cell(r.inversion_perceptual)} | {fmt_cell(r.edit_mse)} | "
                         f"{fmt_cell(r.edit_perceptual)} |")
        path.write_text("\n".join(lines) + "\n")
    else:
        raise ConfigError(f"unknown report format {fmt!r}")


def load_report(path) -> Report:
    with open(path) as fh:
        return report_from_dict(json.load(fh))
