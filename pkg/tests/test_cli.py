import json
import subprocess
import sys

import numpy as np
import pytest

from makeitso import checkpoint as ckpt
from makeitso import editing, harness, runio
from makeitso.cli import EXIT_BAD_ARGS, EXIT_RUNTIME, build_parser, main, _inversion_config


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def stdout_json(out: str) -> dict:
    return json.loads(out.strip().splitlines()[-1])


def stderr_json(err: str) -> dict:
    lines = err.strip().splitlines()
    assert len(lines) == 1, f"expected one JSON error line, got: {err!r}"
    return json.loads(lines[0])


# ---------------------------------------------------------------------------
# shared workspace: one tiny checkpoint, bank, target, and inversion run


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    code = main(["init-generator", "--seed", "0", "--resolution", "8",
                 "--out", str(root / "gen.misockpt")])
    assert code == 0
    code = main(["make-bank", "--checkpoint", str(root / "gen.misockpt"),
                 "--directions", "3", "--seed", "5", "--out", str(root / "bank.json")])
    assert code == 0
    from makeitso.imageio import save_png
    save_png(harness.pattern_target(8, 0), root / "target.png")
    code = main(["invert", "--checkpoint", str(root / "gen.misockpt"),
                 "--target", str(root / "target.png"), "--bank", str(root / "bank.json"),
                 "--iters", "4", "--ema-interval", "2", "--seed", "3",
                 "--out", str(root / "run")])
    assert code == 0
    return root


# ---------------------------------------------------------------------------
# init-generator / make-bank


def test_init_generator_output(workdir, capsys, tmp_path):
    code, out, _ = run_cli(capsys, ["init-generator", "--seed", "0", "--resolution", "8",
                                    "--out", str(tmp_path / "g.misockpt")])
    assert code == 0
    doc = stdout_json(out)
    params = ckpt.load_checkpoint(tmp_path / "g.misockpt")
    assert doc["arch_hash"] == params.arch_hash
    assert doc["parameters"] == params.num_parameters()
    assert params.config.resolution == 8


def test_init_generator_deterministic_bytes(workdir, capsys, tmp_path):
    run_cli(capsys, ["init-generator", "--seed", "0", "--resolution", "8",
                     "--out", str(tmp_path / "again.misockpt")])
    assert (tmp_path / "again.misockpt").read_bytes() == \
        (workdir / "gen.misockpt").read_bytes()


def test_make_bank_output(workdir, capsys):
    bank = editing.load_bank(workdir / "bank.json")
    assert bank.names() == ["edit_00", "edit_01", "edit_02"]
    params = ckpt.load_checkpoint(workdir / "gen.misockpt")
    bank.check_compatible(params)


def test_make_bank_norm_flag(workdir, capsys, tmp_path):
    code, _, _ = run_cli(capsys, ["make-bank", "--checkpoint", str(workdir / "gen.misockpt"),
                                  "--directions", "1", "--norm", "2.5",
                                  "--out", str(tmp_path / "b.json")])
    assert code == 0
    d = editing.load_bank(tmp_path / "b.json").directions[0]
    assert np.allclose(np.linalg.norm(d.offsets, axis=1), 2.5, atol=1e-5)


# ---------------------------------------------------------------------------
# invert


def test_invert_result_dir_complete(workdir):
    loaded = runio.load_result_dir(workdir / "run")
    assert loaded.manifest["total_iters"] == 4
    assert loaded.manifest["ema_iterations"] == [2]
    assert loaded.config.seed == 3
    for name in ("manifest.json", "z.npy", "tuned.misockpt", "anchored_final.misockpt",
                 "losses.csv", "target.png", "reconstruction.png", "bank.json"):
        assert (workdir / "run" / name).is_file(), name


def test_invert_stdout_reports_final_metrics(workdir, capsys, tmp_path):
    code, out, _ = run_cli(capsys, [
        "invert", "--checkpoint", str(workdir / "gen.misockpt"),
        "--target", str(workdir / "target.png"), "--iters", "2", "--seed", "0",
        "--out", str(tmp_path / "r")])
    assert code == 0
    doc = stdout_json(out)
    assert set(doc["final"]) == {"eval_mse", "eval_perceptual"}
    assert doc["n_ema_updates"] == 0


def test_invert_same_seed_bit_identical(workdir, capsys, tmp_path):
    args = ["invert", "--checkpoint", str(workdir / "gen.misockpt"),
            "--target", str(workdir / "target.png"), "--bank", str(workdir / "bank.json"),
            "--iters", "4", "--ema-interval", "2", "--seed", "3"]
    code, _, _ = run_cli(capsys, args + ["--out", str(tmp_path / "rerun")])
    assert code == 0
    for name in ("z.npy", "tuned.misockpt", "anchored_final.misockpt"):
        assert (tmp_path / "rerun" / name).read_bytes() == \
            (workdir / "run" / name).read_bytes(), name


def test_invert_interval_defaults_track_preset():
    parser = build_parser()
    base = ["invert", "--checkpoint", "c", "--target", "t", "--out", "o"]
    assert _inversion_config(parser.parse_args(base)).ema_interval == 100
    args = parser.parse_args(base + ["--iters", "1000"])
    cfg = _inversion_config(args)
    assert cfg.ema_interval == 200 and cfg.total_iters == 1000
    args = parser.parse_args(base + ["--iters", "1000", "--ema-interval", "7"])
    assert _inversion_config(args).ema_interval == 7


def test_invert_flag_overrides_reach_config():
    parser = build_parser()
    args = parser.parse_args(["invert", "--checkpoint", "c", "--target", "t", "--out", "o",
                              "--beta", "0.5", "--replay-n", "2", "--seed", "9"])
    cfg = _inversion_config(args)
    assert cfg.ema_beta == 0.5 and cfg.replay_batch == 2 and cfg.seed == 9


# ---------------------------------------------------------------------------
# edit


def test_edit_strength_zero_equals_reconstruction(workdir, capsys, tmp_path):
    out_png = tmp_path / "e0.png"
    code, out, _ = run_cli(capsys, ["edit", "--result", str(workdir / "run"),
                                    "--direction", "edit_00", "--strength", "0",
                                    "--out", str(out_png)])
    assert code == 0
    assert out_png.read_bytes() == (workdir / "run" / "reconstruction.png").read_bytes()
    assert stdout_json(out)["strength"] == 0


def test_edit_default_strength_comes_from_direction(workdir, capsys, tmp_path):
    code, out, _ = run_cli(capsys, ["edit", "--result", str(workdir / "run"),
                                    "--direction", "edit_01",
                                    "--out", str(tmp_path / "e.png")])
    assert code == 0
    bank = editing.load_bank(workdir / "bank.json")
    assert stdout_json(out)["strength"] == bank.get("edit_01").default_strength


def test_edit_sweep_writes_opposite_strength(workdir, capsys, tmp_path):
    out_png = tmp_path / "s.png"
    code, out, _ = run_cli(capsys, ["edit", "--result", str(workdir / "run"),
                                    "--direction", "edit_00", "--strength", "1.5",
                                    "--sweep", "--out", str(out_png)])
    assert code == 0
    neg = tmp_path / "s.neg.png"
    assert stdout_json(out)["out"] == [str(out_png), str(neg)]
    assert neg.is_file()
    assert neg.read_bytes() != out_png.read_bytes()


def test_edit_sweep_skipped_at_zero(workdir, capsys, tmp_path):
    out_png = tmp_path / "z.png"
    code, out, _ = run_cli(capsys, ["edit", "--result", str(workdir / "run"),
                                    "--direction", "edit_00", "--strength", "0",
                                    "--sweep", "--out", str(out_png)])
    assert code == 0
    assert stdout_json(out)["out"] == [str(out_png)]
    assert not (tmp_path / "z.neg.png").exists()


def test_edit_unknown_direction(workdir, capsys, tmp_path):
    code, _, err = run_cli(capsys, ["edit", "--result", str(workdir / "run"),
                                    "--direction", "nope", "--out", str(tmp_path / "x.png")])
    assert code == EXIT_BAD_ARGS
    doc = stderr_json(err)
    assert doc["error"] == "bad_args"
    assert "edit_00" in doc["message"]


# ---------------------------------------------------------------------------
# evaluate / ablate


def test_evaluate_writes_loadable_report(workdir, capsys, tmp_path):
    out = tmp_path / "report.json"
    code, stdout, _ = run_cli(capsys, [
        "evaluate", "--checkpoint", str(workdir / "gen.misockpt"),
        "--bank", str(workdir / "bank.json"), "--methods", "identity",
        "--seeds", "0,1", "--targets", "2", "--edit-samples", "1", "--iters", "1",
        "--out", str(out)])
    assert code == 0
    report = harness.load_report(out)
    assert [r.method for r in report.rows] == ["identity"]
    assert report.spec["target_kind"] == "out_of_range"
    assert report.row("identity").edit_mse == 0.0
    assert stdout_json(stdout)["rows"] == 1


def test_evaluate_target_kind_flag(workdir, capsys, tmp_path):
    out = tmp_path / "report.json"
    code, _, _ = run_cli(capsys, [
        "evaluate", "--checkpoint", str(workdir / "gen.misockpt"),
        "--methods", "identity", "--seeds", "0", "--targets", "1",
        "--edit-samples", "1", "--iters", "1", "--target-kind", "in_range",
        "--out", str(out)])
    assert code == 0
    assert harness.load_report(out).spec["target_kind"] == "in_range"


def test_evaluate_csv_format(workdir, capsys, tmp_path):
    out = tmp_path / "report.csv"
    code, _, _ = run_cli(capsys, [
        "evaluate", "--checkpoint", str(workdir / "gen.misockpt"),
        "--methods", "identity", "--seeds", "0,1,2", "--targets", "3",
        "--edit-samples", "1", "--iters", "1", "--format", "csv", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 1 + 1 * 3


def test_preset_method_sets():
    parser = build_parser()
    base = ["--checkpoint", "c", "--out", "o"]
    from makeitso.cli import _benchmark_spec
    spec = _benchmark_spec(parser.parse_args(["ablate"] + base))
    assert spec.methods == harness.ABLATION_METHODS
    spec = _benchmark_spec(parser.parse_args(["evaluate", "--preset", "fig8-toy"] + base))
    assert spec.methods == harness.LATENT_SPACE_METHODS
    spec = _benchmark_spec(parser.parse_args(["evaluate"] + base))
    assert spec.methods == ("full", "pti")
    spec = _benchmark_spec(parser.parse_args(
        ["evaluate", "--preset", "fig8-toy", "--methods", "full,identity"] + base))
    assert spec.methods == ("full", "identity")


def test_evaluate_iters_1000_selects_interval_200():
    parser = build_parser()
    from makeitso.cli import _benchmark_spec
    args = parser.parse_args(["evaluate", "--checkpoint", "c", "--out", "o",
                              "--iters", "1000"])
    assert _benchmark_spec(args).ema_interval == 200


def test_evaluate_rejects_bad_seeds(workdir, capsys, tmp_path):
    code, _, err = run_cli(capsys, [
        "evaluate", "--checkpoint", str(workdir / "gen.misockpt"),
        "--seeds", "0,x", "--out", str(tmp_path / "r.json")])
    assert code == EXIT_BAD_ARGS
    assert "--seeds" in stderr_json(err)["message"]


def test_evaluate_rejects_unknown_method(workdir, capsys, tmp_path):
    code, _, err = run_cli(capsys, [
        "evaluate", "--checkpoint", str(workdir / "gen.misockpt"),
        "--methods", "warp_drive", "--out", str(tmp_path / "r.json")])
    assert code == EXIT_BAD_ARGS
    assert "warp_drive" in stderr_json(err)["message"]


# ---------------------------------------------------------------------------
# error contract


def test_missing_required_flag_names_it(capsys):
    code, _, err = run_cli(capsys, ["invert", "--checkpoint", "somewhere"])
    assert code == EXIT_BAD_ARGS
    doc = stderr_json(err)
    assert doc["error"] == "bad_args"
    assert "--target" in doc["message"]


def test_unknown_subcommand(capsys):
    code, _, err = run_cli(capsys, ["transmogrify"])
    assert code == EXIT_BAD_ARGS
    assert stderr_json(err)["error"] == "bad_args"


def test_missing_checkpoint_file(capsys, tmp_path):
    code, _, err = run_cli(capsys, ["make-bank", "--checkpoint", str(tmp_path / "no.ckpt"),
                                    "--out", str(tmp_path / "b.json")])
    assert code == EXIT_BAD_ARGS
    assert "no.ckpt" in stderr_json(err)["message"]


def test_undecodable_target(workdir, capsys, tmp_path):
    bad = tmp_path / "junk.png"
    bad.write_bytes(b"not an image at all")
    code, _, err = run_cli(capsys, ["invert", "--checkpoint", str(workdir / "gen.misockpt"),
                                    "--target", str(bad), "--iters", "1",
                                    "--out", str(tmp_path / "r")])
    assert code == EXIT_BAD_ARGS
    assert "decode" in stderr_json(err)["message"]


def test_incompatible_bank_is_runtime_error(workdir, capsys, tmp_path):
    # bank made for a different architecture: caught by the hash check
    main(["init-generator", "--seed", "0", "--resolution", "16",
          "--out", str(tmp_path / "g16.misockpt")])
    capsys.readouterr()
    code, _, err = run_cli(capsys, [
        "invert", "--checkpoint", str(tmp_path / "g16.misockpt"),
        "--target", str(workdir / "target.png"), "--bank", str(workdir / "bank.json"),
        "--iters", "1", "--out", str(tmp_path / "r")])
    assert code == EXIT_RUNTIME
    assert stderr_json(err)["error"] == "runtime"


def test_edit_on_non_result_dir(capsys, tmp_path):
    code, _, err = run_cli(capsys, ["edit", "--result", str(tmp_path),
                                    "--direction", "edit_00",
                                    "--out", str(tmp_path / "x.png")])
    assert code == EXIT_RUNTIME
    assert "manifest" in stderr_json(err)["message"]


# ---------------------------------------------------------------------------
# installed entry point


def test_console_script_help():
    proc = subprocess.run(["makeitso", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for name in ("init-generator", "invert", "edit", "evaluate", "serve"):
        assert name in proc.stdout


def test_module_main_matches(capsys, workdir, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-c",
         "import sys; from makeitso.cli import main; sys.exit(main(sys.argv[1:]))",
         "init-generator", "--seed", "0", "--resolution", "8",
         "--out", str(tmp_path / "g.misockpt")],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert (tmp_path / "g.misockpt").read_bytes() == (workdir / "gen.misockpt").read_bytes()
