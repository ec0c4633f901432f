"""Command-line entry points.

Every failure path prints one line of JSON to stderr of the form
``{"error": kind, "message": ...}`` and exits 2 (bad arguments or inputs) or
3 (runtime failure), so scripts can branch without parsing prose.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from . import editing, harness, imageio, runio
from .errors import MakeItSoError
from .generator import GeneratorConfig, init_toy_generator
from .inversion import InversionConfig, make_it_so, reconstruct_image
from .objectives import FeatureExtractor

EXIT_BAD_ARGS = 2
EXIT_RUNTIME = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_BAD_ARGS, kind: str = "bad_args"):
        super().__init__(message)
        self.code = code
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    """argparse that reports errors as JSON on stderr with exit code 2."""

    def error(self, message):
        raise CliError(message)


def _emit_error(kind: str, message: str):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="makeitso", description="Noise-space GAN inversion toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init-generator", help="write a seeded toy generator checkpoint")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resolution", type=int, default=32)
    p.add_argument("--out", required=True)

    p = sub.add_parser("make-bank", help="write a seeded bank of random edit directions")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--directions", type=int, default=8)
    p.add_argument("--seed", type=int, default=11)
    p.add_argument("--norm", type=float, default=1.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("invert", help="invert a target image")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--target", required=True, help="target image file (PNG/JPEG)")
    p.add_argument("--bank", default=None)
    p.add_argument("--iters", type=int, default=500,
                   help="500 and 1000 are the named presets; any count works")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--ema-interval", type=int, default=None)
    p.add_argument("--replay-n", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="result directory")

    p = sub.add_parser("edit", help="apply a bank direction to an inverted result")
    p.add_argument("--result", required=True, help="result directory")
    p.add_argument("--direction", required=True)
    p.add_argument("--strength", type=float, default=None)
    p.add_argument("--sweep", action="store_true",
                   help="also write the opposite-strength image")
    p.add_argument("--out", required=True, help="output PNG path")

    for name, default_preset in (("evaluate", None), ("ablate", "tab2-toy")):
        p = sub.add_parser(name, help="run a benchmark protocol and emit a report")
        p.add_argument("--checkpoint", required=True)
        p.add_argument("--bank", default=None)
        p.add_argument("--preset", choices=["tab2-toy", "fig8-toy"], default=default_preset)
        p.add_argument("--methods", default=None,
                       help="comma-separated method ids (overrides --preset)")
        p.add_argument("--seeds", default="0,1,2,3,4")
        p.add_argument("--edit-samples", type=int, default=10)
        p.add_argument("--targets", type=int, default=10)
        p.add_argument("--iters", type=int, default=500)
        p.add_argument("--target-kind", choices=list(harness.TARGET_KINDS),
                       default="out_of_range",
                       help="out_of_range: synthetic probe patterns; "
                            "in_range: generator samples with a known preimage")
        p.add_argument("--format", choices=["json", "csv", "markdown-table"], default="json")
        p.add_argument("--out", required=True)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--data-root", default=None,
                   help="overrides MAKEITSO_DATA_ROOT")
    p.add_argument("--checkpoint", default=None,
                   help="generator the service inverts with (default: seeded toy)")
    p.add_argument("--bank", default=None)

    return parser


def _load_checkpoint_arg(path: str):
    if not Path(path).is_file():
        raise CliError(f"--checkpoint: no such file: {path}")
    return ckpt.load_checkpoint(path)


def _load_bank_arg(path, params):
    if path is None:
        return editing.make_default_bank(params)
    if not Path(path).is_file():
        raise CliError(f"--bank: no such file: {path}")
    bank = editing.load_bank(path)
    bank.check_compatible(params)
    return bank


def _inversion_config(args) -> InversionConfig:
    interval = args.ema_interval
    if interval is None:
        interval = 200 if args.iters == 1000 else 100
    cfg = InversionConfig(total_iters=args.iters, ema_interval=interval, seed=args.seed)
    if args.beta is not None:
        cfg = replace(cfg, ema_beta=args.beta)
    if args.replay_n is not None:
        cfg = replace(cfg, replay_batch=args.replay_n)
    cfg.validate()
    return cfg


def cmd_init_generator(args) -> int:
    params = init_toy_generator(args.seed, GeneratorConfig(resolution=args.resolution))
    ckpt.save_checkpoint(params, args.out)
    print(json.dumps({"out": args.out, "arch_hash": params.arch_hash,
                      "parameters": params.num_parameters()}))
    return 0


def cmd_make_bank(args) -> int:
    params = _load_checkpoint_arg(args.checkpoint)
    bank = editing.make_default_bank(params, n_directions=args.directions,
                                     seed=args.seed, norm=args.norm)
    editing.save_bank(bank, args.out)
    print(json.dumps({"out": args.out, "directions": bank.names()}))
    return 0


def cmd_invert(args) -> int:
    params = _load_checkpoint_arg(args.checkpoint)
    if not Path(args.target).is_file():
        raise CliError(f"--target: no such file: {args.target}")
    try:
        target, orig_size = imageio.load_image(args.target, params.config.resolution)
    except Exception as e:
        raise CliError(f"--target: cannot decode image: {e}")
    bank = _load_bank_arg(args.bank, params)
    config = _inversion_config(args)
    extractor = FeatureExtractor(params.config.resolution)
    result = make_it_so(params, target, bank, config, extractor)
    manifest = runio.write_result_dir(
        args.out, result, target, bank, extractor,
        target_info={"source": str(args.target),
                     "original_size": list(orig_size)})
    print(json.dumps({"out": args.out,
                      "final": manifest["final"],
                      "n_ema_updates": manifest["n_ema_updates"]}))
    return 0


def cmd_edit(args) -> int:
    loaded = runio.load_result_dir(args.result)
    try:
        direction = loaded.bank.get(args.direction)
    except KeyError:
        raise CliError(f"--direction: unknown direction '{args.direction}'; "
                       f"available: {', '.join(loaded.bank.names()) or '(none)'}")
    strength = args.strength if args.strength is not None else direction.default_strength
    img = render_edit(loaded, direction.name, strength)
    imageio.save_png(img, args.out)
    written = [args.out]
    if args.sweep and strength != 0:
        img_neg = render_edit(loaded, direction.name, -strength)
        out = Path(args.out)
        neg_path = out.with_name(out.stem + ".neg" + out.suffix)
        imageio.save_png(img_neg, neg_path)
        written.append(str(neg_path))
    print(json.dumps({"out": written, "direction": direction.name, "strength": strength}))
    return 0


def render_edit(loaded: runio.LoadedResult, direction_name: str, strength: float) -> np.ndarray:
    """Edited image for a stored result; strength 0 reproduces the reconstruction.

    Both the CLI and the HTTP service render through this function.
    """
    space = loaded.config.latent_space
    if strength == 0:
        return reconstruct_image(loaded.tuned, loaded.z_star, space)
    direction = loaded.bank.get(direction_name)
    if space == "Z":
        return editing.edited_generate(loaded.tuned, loaded.z_star, direction, strength)
    from .generator import broadcast_w, synthesize
    styles = loaded.z_star if space == "W_PLUS" else broadcast_w(
        loaded.z_star, loaded.tuned.config.num_style_slots)
    return synthesize(loaded.tuned, editing.apply_edit(styles, direction, strength))


def _benchmark_spec(args) -> harness.BenchmarkSpec:
    try:
        seeds = tuple(int(s) for s in str(args.seeds).split(",") if s != "")
    except ValueError:
        raise CliError(f"--seeds: expected comma-separated integers, got {args.seeds!r}")
    if args.methods:
        methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    elif args.preset == "tab2-toy":
        methods = harness.ABLATION_METHODS
    elif args.preset == "fig8-toy":
        methods = harness.LATENT_SPACE_METHODS
    else:
        methods = ("full", "pti")
    spec = harness.BenchmarkSpec(
        n_inversion_targets=args.targets, n_edit_samples=args.edit_samples,
        seeds=seeds, methods=methods, total_iters=args.iters,
        ema_interval=200 if args.iters == 1000 else 100,
        target_kind=args.target_kind)
    try:
        spec.validate()
    except MakeItSoError as e:
        raise CliError(str(e))
    return spec


def cmd_benchmark(args) -> int:
    params = _load_checkpoint_arg(args.checkpoint)
    bank = _load_bank_arg(args.bank, params)
    spec = _benchmark_spec(args)
    report = harness.run_benchmark(spec, params, bank)
    harness.emit_report(report, args.out, args.format)
    print(json.dumps({"out": args.out, "methods": list(spec.methods),
                      "rows": len(report.rows)}))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(data_root=args.data_root, checkpoint_path=args.checkpoint,
                     bank_path=args.bank)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


COMMANDS = {
    "init-generator": cmd_init_generator,
    "make-bank": cmd_make_bank,
    "invert": cmd_invert,
    "edit": cmd_edit,
    "evaluate": cmd_benchmark,
    "ablate": cmd_benchmark,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except CliError as e:
        _emit_error(e.kind, str(e))
        return e.code
    except MakeItSoError as e:
        _emit_error("runtime", str(e))
        return EXIT_RUNTIME
    except OSError as e:
        _emit_error("io", str(e))
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
