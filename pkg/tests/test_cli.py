import json
import math

import pytest

from eprblab.cli import build_parser, main


def run_cli(*argv) -> int:
    return main(list(argv))


def _read_summary(path):
    out = {}
    for line in path.read_text().splitlines():
        key, _, value = line.partition(" = ")
        out[key] = value
    return out


# --- scan ----------------------------------------------------------------------

def test_scan_preset_writes_outputs(tmp_path):
    out = tmp_path / "scan"
    rc = run_cli("scan", "--preset", "figure8-left", "--steps", "5", "--pairs", "2000",
                 "--seed", "1", "--out", str(out))
    assert rc == 0
    csv = (out / "scan.csv").read_text()
    assert csv.startswith("b_angle_rad,")
    assert len(csv.strip().splitlines()) == 6
    summary = _read_summary(out / "summary.txt")
    assert float(summary["singles_ratio"]) == pytest.approx(2 / 3, abs=0.03)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "scan"
    assert manifest["config"]["tb"] == 0.75
    assert manifest["config_sha256"] == summary["config_sha256"]
    assert sorted(manifest["outputs"]) == ["scan.csv", "summary.txt"]


def test_scan_is_deterministic_and_replayable(tmp_path):
    argv = ["scan", "--preset", "figure6", "--steps", "4", "--pairs", "1500", "--seed", "9"]
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert run_cli(*argv, "--out", str(out1)) == 0
    assert run_cli(*argv, "--out", str(out2)) == 0
    assert (out1 / "scan.csv").read_bytes() == (out2 / "scan.csv").read_bytes()
    assert (out1 / "summary.txt").read_bytes() == (out2 / "summary.txt").read_bytes()

    # replay from the manifest's recorded argv into a fresh directory
    manifest = json.loads((out1 / "manifest.json").read_text())
    replay_argv = [a for a in manifest["argv"]]
    out3 = tmp_path / "r3"
    replay_argv += ["--out", str(out3)]
    assert main(replay_argv) == 0
    assert (out3 / "scan.csv").read_bytes() == (out1 / "scan.csv").read_bytes()


def test_scan_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "lab.cfg"
    cfg.write_text(
        "[station_a]\nthreshold = 0.5\n"
        "[station_b]\nthreshold = 0.75\n"
        "[run]\nseed = 3\npairs_per_step = 800\nsteps = 4\n"
    )
    out = tmp_path / "out"
    rc = run_cli("scan", "--config", str(cfg), "--tb", "0.92", "--out", str(out))
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["tb"] == 0.92  # flag beats file
    assert manifest["config"]["ta"] == 0.5
    assert manifest["config"]["pairs_per_step"] == 800
    assert manifest["seed"] == 3


def test_scan_missing_config_file_is_runtime_error(tmp_path):
    rc = run_cli("scan", "--config", str(tmp_path / "absent.cfg"), "--out", str(tmp_path / "o"))
    assert rc == 1


def test_usage_errors_exit_two():
    with pytest.raises(SystemExit) as err:
        run_cli("scan", "--bogus-flag")
    assert err.value.code == 2
    with pytest.raises(SystemExit) as err:
        run_cli("no-such-command")
    assert err.value.code == 2


def test_help_lists_calibration_knobs(capsys):
    for command in ("scan", "chsh", "pathology"):
        with pytest.raises(SystemExit) as err:
            run_cli(command, "--help")
        assert err.value.code == 0
        text = capsys.readouterr().out
        for flag in ("--ta", "--tb", "--noise-a", "--noise-b",
                     "--efficiency-a", "--efficiency-b", "--seed"):
            assert flag in text, (command, flag)
        assert "default" in text


def test_parser_covers_all_subcommands():
    parser = build_parser()
    for argv in (
        ["disk-demo", "--figure", "1"],
        ["scan"],
        ["chsh"],
        ["pathology"],
        ["events", "gen"],
        ["events", "match", "--a", "x", "--b", "y", "--window", "5"],
    ):
        assert parser.parse_args(argv).func is not None


# --- disk-demo -------------------------------------------------------------------

def test_disk_demo_figure2_small_tv(tmp_path):
    out = tmp_path / "d2"
    rc = run_cli("disk-demo", "--figure", "2", "--theta", "0.3927", "--n", "200000",
                 "--seed", "7", "--out", str(out))
    assert rc == 0
    summary = _read_summary(out / "summary.txt")
    assert float(summary["tv_distance"]) < 0.006
    assert (out / "disk_a.txt").exists() and (out / "disk_b.txt").exists()


def test_disk_demo_figure3_uniform_cells(tmp_path):
    out = tmp_path / "d3"
    assert run_cli("disk-demo", "--figure", "3", "--theta", "0.3927", "--n", "100000",
                   "--seed", "7", "--out", str(out)) == 0
    summary = _read_summary(out / "summary.txt")
    cells = [float(x) for x in summary["empirical_pmf"].split(",")]
    assert cells == pytest.approx([0.25] * 4, abs=0.01)


def test_disk_demo_figure5_policy_mismatch(tmp_path):
    out = tmp_path / "d5"
    rc = run_cli("disk-demo", "--figure", "5", "--alpha", "0.7854", "--beta", "0",
                 "--policy", "assume-zero", "--n", "50000", "--seed", "7", "--out", str(out))
    assert rc == 0
    summary = _read_summary(out / "summary.txt")
    assert float(summary["tv_distance"]) > 0.05


def test_disk_demo_figure4_shared_params(tmp_path):
    out = tmp_path / "d4"
    assert run_cli("disk-demo", "--figure", "4", "--alpha", "0.9", "--beta", "0.2",
                   "--n", "50000", "--seed", "2", "--out", str(out)) == 0
    summary = _read_summary(out / "summary.txt")
    assert float(summary["tv_distance"]) < 0.01


def test_disk_demo_special_exact_line(tmp_path):
    out = tmp_path / "ds"
    assert run_cli("disk-demo", "--figure", "special", "--alpha", "0.7854",
                   "--n", "20000", "--seed", "2", "--out", str(out)) == 0
    summary = _read_summary(out / "summary.txt")
    assert float(summary["exact_tv_distance"]) < 1e-12
    exact = [float(x) for x in summary["exact_pmf"].split(",")]
    assert exact[0] == pytest.approx(0.5 * math.sin(0.7854) ** 2, abs=1e-12)


def test_disk_demo_figure1_joint(tmp_path):
    out = tmp_path / "d1"
    assert run_cli("disk-demo", "--figure", "1", "--theta", "0.3927", "--n", "50000",
                   "--seed", "3", "--out", str(out)) == 0
    assert (out / "disk.txt").exists()
    summary = _read_summary(out / "summary.txt")
    assert float(summary["tv_distance"]) < 0.01


# --- chsh / pathology ----------------------------------------------------------------

def test_chsh_cli(tmp_path):
    out = tmp_path / "chsh"
    rc = run_cli("chsh", "--ta", "0.5", "--tb", "0.75", "--pairs", "20000",
                 "--seed", "3", "--out", str(out))
    assert rc == 0
    summary = _read_summary(out / "summary.txt")
    assert float(summary["abs_s"]) == pytest.approx(3.0, abs=0.06)
    lines = (out / "chsh.csv").read_text().strip().splitlines()
    assert lines[0].startswith("setting,") and len(lines) == 5


def test_pathology_cli(tmp_path):
    out = tmp_path / "path"
    rc = run_cli("pathology", "--basis", "0", "--alpha", "0.7853981633974483",
                 "--steps", "4", "--pairs", "1000", "--seed", "1", "--out", str(out))
    assert rc == 0
    summary = _read_summary(out / "summary.txt")
    assert float(summary["a_double_rate"]) == 1.0
    assert (out / "pathology.csv").exists()


# --- events ---------------------------------------------------------------------------

def test_events_gen_and_match_pipeline(tmp_path):
    gen_out = tmp_path / "gen"
    rc = run_cli("events", "gen", "--rate", "2000", "--jitter", "10e-9",
                 "--duration", "1.0", "--tb", "0.75", "--seed", "5", "--out", str(gen_out))
    assert rc == 0
    for name in ("events_a.csv", "events_b.csv", "truth.csv", "summary.txt", "manifest.json"):
        assert (gen_out / name).exists()

    match_out = tmp_path / "match"
    rc = run_cli("events", "match", "--a", str(gen_out / "events_a.csv"),
                 "--b", str(gen_out / "events_b.csv"), "--window", "100",
                 "--out", str(match_out))
    assert rc == 0
    summary = _read_summary(match_out / "summary.txt")
    truth_rows = (gen_out / "truth.csv").read_text().strip().splitlines()
    assert int(summary["n_matched"]) == len(truth_rows) - 1
    assert float(summary["abs_s"]) == pytest.approx(3.0, abs=0.25)


def test_events_gen_deterministic(tmp_path):
    argv = ["events", "gen", "--rate", "1000", "--duration", "0.5", "--seed", "11"]
    out1, out2 = tmp_path / "g1", tmp_path / "g2"
    assert run_cli(*argv, "--out", str(out1)) == 0
    assert run_cli(*argv, "--out", str(out2)) == 0
    for name in ("events_a.csv", "events_b.csv", "truth.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_events_match_missing_file_is_runtime_error(tmp_path):
    rc = run_cli("events", "match", "--a", str(tmp_path / "none_a.csv"),
                 "--b", str(tmp_path / "none_b.csv"), "--window", "10",
                 "--out", str(tmp_path / "m"))
    assert rc == 1
