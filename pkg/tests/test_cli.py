"""CLI verbs, config-file merging, exit codes, report round-trips."""

import numpy as np
import pytest

from cpcp import cli
from cpcp.errors import ValidationError


@pytest.fixture
def fixture_dir(tmp_path):
    """Small on-disk synthetic dataset shared by the CLI tests."""
    out = tmp_path / "dataset"
    rc = cli.main(
        [
            "synth",
            "--out", str(out),
            "--n", "60",
            "--clusters", "3",
            "--dims", "5,5",
            "--seed", "1",
        ]
    )
    assert rc == 0
    return out


def _run_args(fixture_dir, *extra):
    return [
        "run",
        "--views", f"{fixture_dir}/view_0.txt,{fixture_dir}/view_1.txt",
        "--labels", f"{fixture_dir}/labels.txt",
        "--clusters", "3",
        "--budget", "0.02",
        "--restarts", "2",
        "--seed", "3",
        *extra,
    ]


def test_synth_writes_expected_files(fixture_dir):
    assert (fixture_dir / "view_0.txt").exists()
    assert (fixture_dir / "view_1.txt").exists()
    assert (fixture_dir / "labels.txt").exists()


def test_synth_deterministic(tmp_path):
    args = ["synth", "--n", "30", "--clusters", "2", "--dims", "4", "--seed", "9"]
    cli.main(args + ["--out", str(tmp_path / "a")])
    cli.main(args + ["--out", str(tmp_path / "b")])
    a = (tmp_path / "a" / "view_0.txt").read_bytes()
    b = (tmp_path / "b" / "view_0.txt").read_bytes()
    assert a == b


def test_run_exit_zero(fixture_dir, capsys):
    rc = cli.main(_run_args(fixture_dir))
    assert rc == 0
    out = capsys.readouterr().out
    assert "method: cpcp" in out
    assert "nmi:" in out


def test_run_validation_exit_two(fixture_dir, capsys):
    # cluster count beyond n
    rc = cli.main(_run_args(fixture_dir, "--clusters", "99"))
    assert rc == 2
    assert "error:" in capsys.readouterr().err

    # missing view file
    rc = cli.main(
        [
            "run",
            "--views", f"{fixture_dir}/nope.txt",
            "--clusters", "3",
            "--budget", "0.02",
        ]
    )
    assert rc == 2

    # constraint-needing method without budget or file
    rc = cli.main(
        [
            "run",
            "--views", f"{fixture_dir}/view_0.txt",
            "--clusters", "3",
        ]
    )
    assert rc == 2


def test_run_numerical_exit_one(fixture_dir, capsys):
    # a budget that rounds to zero pairs leaves F identically zero
    rc = cli.main(_run_args(fixture_dir, "--budget", "0.0001"))
    assert rc == 1
    assert "numerical failure:" in capsys.readouterr().err


def test_run_report_byte_identical(fixture_dir, tmp_path, capsys):
    out_a, out_b = tmp_path / "ra", tmp_path / "rb"
    assert cli.main(_run_args(fixture_dir, "--out", str(out_a))) == 0
    assert cli.main(_run_args(fixture_dir, "--out", str(out_b))) == 0
    for name in ("assignments.txt", "marginals.txt", "report.json", "echo.ini"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name


def test_echo_ini_round_trip(fixture_dir, tmp_path, capsys):
    out_a = tmp_path / "orig"
    assert cli.main(_run_args(fixture_dir, "--out", str(out_a))) == 0
    out_b = tmp_path / "replay"
    rc = cli.main(["run", "--config", str(out_a / "echo.ini"), "--out", str(out_b)])
    assert rc == 0
    assert (out_a / "assignments.txt").read_bytes() == (out_b / "assignments.txt").read_bytes()
    assert (out_a / "report.json").read_bytes() == (out_b / "report.json").read_bytes()


def test_config_file_with_flag_override(fixture_dir, tmp_path, capsys):
    cfg = tmp_path / "cfg.ini"
    cfg.write_text(
        "[data]\n"
        f"views = {fixture_dir}/view_0.txt,{fixture_dir}/view_1.txt\n"
        f"labels = {fixture_dir}/labels.txt\n"
        "[run]\n"
        "clusters = 3\n"
        "budget = 0.02\n"
        "restarts = 2\n"
        "seed = 3\n"
    )
    rc = cli.main(["run", "--config", str(cfg)])
    assert rc == 0
    base_nmi = [l for l in capsys.readouterr().out.splitlines() if l.startswith("nmi")]

    # flag overrides the file's seed; the run still succeeds
    rc = cli.main(["run", "--config", str(cfg), "--seed", "4"])
    assert rc == 0


def test_config_file_errors(tmp_path):
    dup = tmp_path / "dup.ini"
    dup.write_text("[a]\nseed = 1\n[b]\nseed = 2\n")
    with pytest.raises(ValidationError, match="more than one section"):
        cli._read_config_file(str(dup))

    unknown = tmp_path / "unknown.ini"
    unknown.write_text("[a]\nbanana = 1\n")
    with pytest.raises(ValidationError, match="unknown config key"):
        cli._read_config_file(str(unknown))

    with pytest.raises(ValidationError, match="cannot read"):
        cli._read_config_file(str(tmp_path / "missing.ini"))

    bad = tmp_path / "bad.ini"
    bad.write_text("[a]\nseed = xyz\n")
    with pytest.raises(ValidationError, match="seed"):
        cli._read_config_file(str(bad))


def test_config_file_kebab_keys(tmp_path):
    cfg = tmp_path / "cfg.ini"
    cfg.write_text("[run]\nk-dense = 12\nsigma-nonzero = yes\n")
    merged = cli._read_config_file(str(cfg))
    assert merged == {"k_dense": 12, "sigma_nonzero": True}


def test_parse_bool():
    assert cli._parse_bool("Yes") is True
    assert cli._parse_bool("0") is False
    with pytest.raises(ValidationError):
        cli._parse_bool("maybe")


def test_sweep_verb(fixture_dir, capsys):
    rc = cli.main(
        [
            "sweep",
            "--views", f"{fixture_dir}/view_0.txt,{fixture_dir}/view_1.txt",
            "--labels", f"{fixture_dir}/labels.txt",
            "--clusters", "3",
            "--fractions", "0.01,0.05",
            "--repeats", "2",
            "--restarts", "2",
            "--seed", "0",
        ]
    )
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "fraction count mean best worst"
    assert len(lines) == 3


def test_sweep_needs_fractions(fixture_dir, capsys):
    rc = cli.main(
        [
            "sweep",
            "--views", f"{fixture_dir}/view_0.txt",
            "--labels", f"{fixture_dir}/labels.txt",
            "--clusters", "3",
        ]
    )
    assert rc == 2


def test_select_views_verb(fixture_dir, capsys):
    rc = cli.main(
        [
            "select-views",
            "--views", f"{fixture_dir}/view_0.txt,{fixture_dir}/view_1.txt",
            "--labels", f"{fixture_dir}/labels.txt",
            "--clusters", "3",
            "--budget", "0.02",
            "--restarts", "2",
            "--seed", "3",
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "step 1: dropped view" in out


def test_method_choices_rejected_by_argparse(fixture_dir, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(_run_args(fixture_dir, "--method", "dbscan"))
    assert exc.value.code == 2


def test_mmcp_via_cli_with_priors(fixture_dir, capsys):
    rc = cli.main(
        _run_args(fixture_dir, "--method", "mmcp", "--priors", "0.3,0.7")
    )
    assert rc == 0
    rc = cli.main(_run_args(fixture_dir, "--method", "mmcp"))
    assert rc == 2  # mmcp without priors is a config error
