import pytest

from discsim.cli import main
from discsim.sim import CSV_HEADER


def test_list_presets(capsys):
    assert main(["list-presets"]) == 0
    out = capsys.readouterr().out
    assert "fig5" in out and "fig12" in out


def test_run_preset_and_analyze(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("preset = fig5\nschemes = [DISC:5/7:opt, SIR]\nsweep = [0, 4, 2]\n")
    rc = main(["run", "--config", str(cfg), "--out", str(tmp_path), "--max-frames", "40",
               "--min-frame-errors", "0", "--seed", "3", "-q"])
    assert rc == 0
    csv = tmp_path / "fig5.csv"
    assert csv.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    capsys.readouterr()
    assert main(["analyze", "slope", str(csv), "--window", "1", "0.001"]) == 0
    assert "SIR" in capsys.readouterr().out
    assert main(["analyze", "gain", "--target-fer", "0.5", str(csv)]) == 0


def test_codes_commands(capsys):
    assert main(["codes", "mhd", "--generators", "5,7"]) == 0
    out = capsys.readouterr().out
    assert "exact MHD: 5" in out and "bound: 5" in out
    assert main(["codes", "pair", "--generators", "5,7", "--snrs", "6,3"]) == 0
    assert "code 7 (GSW 3) -> relay 0" in capsys.readouterr().out


def test_noise_pdf_command(tmp_path, capsys):
    assert main(["noise-pdf", "--snr-db", "6", "--frames", "20", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "noise_pdf.csv").exists()


@pytest.mark.parametrize("argv", [
    ["run", "--preset", "nope"],
    ["codes", "pair", "--generators", "5,7"],
    ["codes", "mhd", "--generators", "9"],
    ["analyze", "gain", "missing.csv", "--target-fer", "0.1"],
    ["analyze", "gain", "missing.csv"],
])
def test_errors_exit_nonzero(argv, capsys):
    assert main(argv) != 0
    assert "error" in capsys.readouterr().err


def test_usage_error_exits_nonzero():
    with pytest.raises(SystemExit) as exc:
        main(["run"])
    assert exc.value.code != 0
