import pytest

from mdisarg import cli, protocol


def test_study_to_file_and_figure(tmp_path):
    out, fig = tmp_path / "dark.tsv", tmp_path / "dark.png"
    code = cli.main(["--study", "dark", "--list", "8.5e-7,8.5e-8", "--L", "0:40:10", "--out", str(out), "--figure", str(fig)])
    assert code == 0
    text = out.read_text()
    assert text.startswith("# mdisarg study v1")
    assert "# scenario d=8.5e-07" in text and "# scenario d=8.5e-08" in text
    assert fig.stat().st_size > 0


def test_stdout(capsys):
    assert cli.main(["--L", "0:2:1", "--type", "2"]) == 0
    body = [ln for ln in capsys.readouterr().out.splitlines() if ln.startswith("baseline")]
    assert len(body) == 3 and all(ln.split("\t")[2] == "2" for ln in body)


@pytest.mark.parametrize(
    "argv",
    [
        ["--L", "0:10"],
        ["--L", "10:0:1"],
        ["--eta", "2"],
        ["--fe", "cubic"],
        ["--study", "dark"],
        ["--study", "eta", "--list", "a,b"],
        ["--type", "3"],
        ["--mu-opt", "0.1:0.5"],
        ["--mc-rounds", "10"],
    ],
)
def test_config_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        raise SystemExit(cli.main(argv))
    assert exc.value.code == 1


def test_validation_success(tmp_path):
    out = tmp_path / "mc.tsv"
    assert cli.main(["--mc-rounds", "20000", "--seed", "3", "--out", str(out)]) == 0
    assert "mdi\tsift_rate" in out.read_text()


def test_validation_failure(monkeypatch, tmp_path):
    monkeypatch.setattr(protocol, "analytic_mdi", lambda noise: (0.2, 0.0))
    assert cli.main(["--mc-rounds", "10000", "--out", str(tmp_path / "mc.tsv")]) == 2


def test_io_error(tmp_path):
    missing = tmp_path / "no" / "such" / "dir" / "out.tsv"
    assert cli.main(["--L", "0:1:1", "--out", str(missing)]) == 3


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "mdisarg", "--L", "0:0:1"], capture_output=True, text=True)
    assert res.returncode == 0 and "K_bps" in res.stdout
