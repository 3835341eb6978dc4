import json
import subprocess
import sys

import pytest

from polarkern.cli import main

F4_PDP_LINE = "1 2 2 4 2 4 4 8 2 4 4 8 4 8 8 16"


def run_cli(args):
    """Run in-process, capturing stdout/stderr and the exit code."""
    import contextlib
    import io

    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        try:
            code = main(args)
        except SystemExit as e:
            code = e.code
    return code, out.getvalue(), err.getvalue()


@pytest.fixture()
def f4_file(tmp_path):
    path = tmp_path / "f4.txt"
    code, _, _ = run_cli(["gen-kernel", "--arikan", "4", "--out", str(path)])
    assert code == 0
    return path


class TestKernelCommands:
    def test_gen_then_pdp(self, f4_file):
        code, out, _ = run_cli(["pdp", "--kernel", str(f4_file)])
        assert code == 0
        assert out.strip() == F4_PDP_LINE

    def test_exponent(self, f4_file, tmp_path):
        rep = tmp_path / "rep.json"
        code, out, _ = run_cli(
            ["exponent", "--kernel", str(f4_file), "--report", str(rep)]
        )
        assert code == 0
        assert out.startswith("E=0.5000")
        data = json.loads(rep.read_text())
        assert data["E"] == 0.5

    def test_mu_small_kernel(self, tmp_path):
        path = tmp_path / "f2.txt"
        run_cli(["gen-kernel", "--arikan", "1", "--out", str(path)])
        code, out, _ = run_cli(["mu", "--kernel", str(path)])
        assert code == 0
        assert abs(float(out.strip().split("=")[1]) - 3.627) < 0.01

    def test_search_prints_table_row(self, f4_file):
        code, out, _ = run_cli(["search", "--kernel", str(f4_file), "-t", "1"])
        assert code == 0
        first = out.splitlines()[0]
        assert first.startswith("E=0.478 P=")

    def test_search_mu_refinement_and_csv(self, f4_file, tmp_path):
        csv = tmp_path / "rows.csv"
        code, out, _ = run_cli(
            ["search", "--kernel", str(f4_file), "-t", "1", "--mu",
             "--csv", str(csv)]
        )
        assert code == 0
        assert any(line.startswith("mu=") for line in out.splitlines())
        lines = csv.read_text().splitlines()
        assert lines[0].startswith("l,t,")
        fields = lines[1].split(",")
        assert fields[0] == "16" and fields[1] == "1"
        assert abs(float(fields[3]) - 0.478) < 1e-3

    def test_search_sampled(self, f4_file):
        code, out, _ = run_cli(
            ["search", "--kernel", str(f4_file), "-t", "2",
             "--sampled", "20", "--seed", "4"]
        )
        assert code == 0
        assert "exhaustive=False" in out

    def test_shorten_roundtrip(self, f4_file, tmp_path):
        out_file = tmp_path / "s.txt"
        code, out, _ = run_cli(
            ["shorten", "--kernel", str(f4_file), "--pattern", "8000",
             "--out", str(out_file)]
        )
        assert code == 0
        assert "l'=15" in out
        code, out, _ = run_cli(["pdp", "--kernel", str(out_file)])
        assert code == 0
        assert out.strip() == F4_PDP_LINE.rsplit(" ", 1)[0]

    def test_probe_kernel(self, f4_file):
        code, out, _ = run_cli(
            ["probe-kernel", "--kernel", str(f4_file), "--pattern", "C000"]
        )
        assert code == 0
        assert "tau:" in out and "reduced_window_sizes:" in out


class TestExitCodes:
    def test_usage_error_is_1(self):
        code, _, err = run_cli(["search", "--kernel", "x.txt"])  # missing -t
        assert code == 1

    def test_unknown_command_is_1(self):
        code, _, _ = run_cli(["frobnicate"])
        assert code == 1

    def test_missing_file_is_2(self):
        code, _, err = run_cli(["pdp", "--kernel", "/nonexistent/k.txt"])
        assert code == 2
        assert "error:" in err

    def test_simulate_missing_spec_is_2(self, tmp_path):
        code, _, err = run_cli(
            ["simulate", "--spec", str(tmp_path / "no.spec"), "--snr", "1:2:1",
             "--out", str(tmp_path / "o.csv")]
        )
        assert code == 2

    def test_malformed_kernel_is_2(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("2\n10\n10\n")
        code, _, err = run_cli(["pdp", "--kernel", str(bad)])
        assert code == 2
        assert "singular" in err

    def test_probe_without_window_support_is_2(self, tmp_path):
        # a 3x3 kernel has no power-of-two transform to probe
        k = tmp_path / "k3.txt"
        k.write_text("3\n100\n110\n111\n")
        code, _, err = run_cli(["probe-kernel", "--kernel", str(k)])
        assert code == 2
        assert "error:" in err


class TestPipeline:
    def test_construct_and_simulate_with_config(self, tmp_path):
        spec_file = tmp_path / "code.spec"
        spec_file.write_text(
            "kernel = arikan:1\nkernel = arikan:1\nkernel = arikan:1\n"
            "k = 4\nfrozen = auto\ndesign_snr = 2.0\nconstruct_frames = 1000\n"
        )
        frozen_file = tmp_path / "frozen.txt"
        code, out, _ = run_cli(
            ["construct", "--spec", str(spec_file), "--out", str(frozen_file),
             "--budget", "1000"]
        )
        assert code == 0
        assert len(frozen_file.read_text().split()) == 4

        cfg = tmp_path / "run.cfg"
        out_csv = tmp_path / "res.csv"
        cfg.write_text(
            f"spec = {spec_file}\nsnr = 1:2:1\nlist = 2\nseed = 9\n"
            f"max_frames = 200\nmax_errors = 0\nout = {out_csv}\n"
        )
        code, out, _ = run_cli(["simulate", "--config", str(cfg)])
        assert code == 0
        lines = out_csv.read_text().splitlines()
        assert lines[0].startswith("snr_db,")
        assert len(lines) == 3

    def test_cli_flags_override_config(self, tmp_path):
        spec_file = tmp_path / "code.spec"
        spec_file.write_text(
            "kernel = arikan:1\nkernel = arikan:1\nk = 2\nfrozen = auto\n"
            "construct_frames = 1000\n"
        )
        cfg = tmp_path / "run.cfg"
        out_csv = tmp_path / "r.csv"
        cfg.write_text(
            f"spec = {spec_file}\nsnr = 0:0:1\nlist = 1\nseed = 2\n"
            f"max_frames = 50\nmax_errors = 0\nout = {out_csv}\n"
        )
        code, _, _ = run_cli(["simulate", "--config", str(cfg), "--max-frames", "75"])
        assert code == 0
        from polarkern.sim import read_results

        assert read_results(out_csv)[0].frames == 75


class TestEntryPoint:
    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "polarkern.cli", "gen-kernel", "--arikan", "2"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.splitlines()[0] == "4"
