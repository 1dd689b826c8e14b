import json

import pytest

from qtmxxz import cli


def run(capsys, *argv):
    rc = cli.main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_spectrum_json(capsys):
    rc, out, _ = run(capsys, "spectrum", "--N", "2", "-T", "10", "--J", "1")
    assert rc == cli.EXIT_OK
    d = json.loads(out)
    assert len(d["eigenvalues"]) == 16
    assert d["eigenvalues"][0]["abs"] >= d["eigenvalues"][-1]["abs"]


def test_output_is_deterministic(capsys):
    a = run(capsys, "roots", "--N", "3", "--M", "3", "-T", "20")[1]
    b = run(capsys, "roots", "--N", "3", "--M", "3", "-T", "20")[1]
    assert a == b


def test_out_directory_and_csv(tmp_path, capsys):
    rc, _, _ = run(capsys, "spectrum", "--N", "2", "-T", "10", "--out", str(tmp_path))
    assert rc == 0
    assert (tmp_path / "spectrum.json").exists() and (tmp_path / "spectrum.csv").exists()
    rc, out, _ = run(capsys, "spectrum", "--N", "2", "-T", "10", "--format", "csv")
    assert out.splitlines()[0].startswith("index") or "re" in out.splitlines()[0]


def test_nlie_against_matrix(capsys):
    rc, out, _ = run(capsys, "nlie", "--N", "3", "-T", "100", "--J", "0.5", "--trotter", "3")
    assert rc == 0
    assert json.loads(out)["relative_difference"] < 1e-10


def test_hlbae_command(capsys):
    rc, out, _ = run(capsys, "hlbae", "--X=-0.002979061;0.0007029353", "--seeds=0.58j;-0.58j",
                     "--h-ints", "0", "-1", "--J", "0.5")
    assert rc == 0
    d = json.loads(out)
    assert d["hlbae1"]["residual"] < 1e-10 and "hlbae2" in d
    assert "theorem2_value" in d


def test_bad_config_exit_code(tmp_path, capsys):
    bad = tmp_path / "c.json"
    bad.write_text("{not json")
    assert run(capsys, "spectrum", "--config", str(bad))[0] == cli.EXIT_CONFIG
    assert run(capsys, "spectrum", "--zeta", "banana")[0] == cli.EXIT_CONFIG
    assert run(capsys, "hlbae", "--seeds", "")[0] == cli.EXIT_CONFIG
    assert run(capsys, "nosuchcommand")[0] == cli.EXIT_CONFIG


def test_config_file_is_read(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(dict(N=2, T=10.0, zeta="pi/5")))
    rc, out, _ = run(capsys, "spectrum", "--config", str(cfg))
    assert rc == 0
    assert json.loads(out)["params"]["N"] == 2


@pytest.mark.slow
def test_table5_reproduced(capsys):
    rc, _, err = run(capsys, "table", "--table", "5")
    assert rc == cli.EXIT_OK, err


def test_solver_failure_exit_code(tmp_path, capsys):
    # a phantom hole makes the monodromy check fail
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(dict(X=[[0.01, 0.0]])))
    rc, _, err = run(capsys, "nlie", "--config", str(cfg), "--N", "4", "-T", "100", "--J", "0.5", "--trotter", "4")
    assert rc == cli.EXIT_SOLVER
    assert "solver" in err
