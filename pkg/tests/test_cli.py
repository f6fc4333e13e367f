import json

import numpy as np
import pytest

from fairbads.cli import main
from fairbads.particles import read_particles

SMALL = "n_samples=200\nn_test=100\nn_features=2\nmeta_fraction=0.05\nparticles=4\nepochs=2\n"


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL)
    return p


def test_run_writes_outputs(tmp_path, cfg_file):
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg_file), "--out", str(out)]) == 0
    lines = (out / "metrics.jsonl").read_text().splitlines()
    assert [json.loads(l)["epoch"] for l in lines] == [0, 1, 2]
    assert {p.name for p in (out / "particles_final").iterdir()} == {"0.csv", "1.csv", "central.csv"}
    report = json.loads((out / "report.json").read_text())
    assert set(report["bounds"]) == {"transfer", "disparity"}
    assert report["bounds"]["transfer"]["status"] == "PASS"
    # config_echo feeds back as a config and reproduces the run
    out2 = tmp_path / "out2"
    assert main(["run", "--config", str(out / "config_echo"), "--out", str(out2)]) == 0
    assert (out2 / "metrics.jsonl").read_bytes() == (out / "metrics.jsonl").read_bytes()


def test_run_epoch_zero(tmp_path, cfg_file):
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg_file), "--out", str(out), "--epochs", "0"]) == 0
    assert len((out / "metrics.jsonl").read_text().splitlines()) == 1


def test_run_bad_divergence(tmp_path, cfg_file, capsys):
    code = main(["run", "--config", str(cfg_file), "--out", str(tmp_path / "o"), "--divergence", "bogus"])
    assert code == 1
    assert "--divergence" in capsys.readouterr().err


def test_run_missing_config_is_io_error(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path / "o")]) == 3


def test_usage_error_exit_code():
    assert main(["run"]) == 1


def write_ps(path, rows):
    z = np.atleast_2d(rows)
    path.write_text(",".join(f"z{j}" for j in range(z.shape[1])) + "\n"
                    + "".join(",".join(repr(float(v)) for v in r) + "\n" for r in z))
    return str(path)


def test_barycenter_singletons(tmp_path, capsys):
    a, b = write_ps(tmp_path / "a.csv", [[0.0]]), write_ps(tmp_path / "b.csv", [[2.0]])
    out = tmp_path / "c.csv"
    assert main(["barycenter", "--inputs", f"{a},{b}", "--divergence", "w2", "--out", str(out)]) == 0
    np.testing.assert_allclose(read_particles(out).z, [[1.0]])
    assert float(capsys.readouterr().out.split()[1]) == pytest.approx(1.0)


def test_barycenter_single_input_is_identity(tmp_path):
    rows = np.random.default_rng(0).normal(size=(4, 3))
    a = write_ps(tmp_path / "a.csv", rows)
    out = tmp_path / "c.csv"
    assert main(["barycenter", "--inputs", a, "--out", str(out)]) == 0
    np.testing.assert_allclose(read_particles(out).z, rows, atol=1e-12)


def test_barycenter_objective_nonincreasing_in_iters(tmp_path, capsys):
    rng = np.random.default_rng(1)
    a = write_ps(tmp_path / "a.csv", rng.normal(size=(5, 2)))
    b = write_ps(tmp_path / "b.csv", rng.normal(size=(5, 3)) + 1)
    vals = []
    for k in (1, 2, 4):
        main(["barycenter", "--inputs", f"{a},{b}", "--divergence", "mmd", "--bandwidth", "1.0",
              "--out", str(tmp_path / "c.csv"), "--iters", str(k)])
        vals.append(float(capsys.readouterr().out.split()[1]))
    assert vals[0] >= vals[1] >= vals[2]


def test_barycenter_mismatched_sizes(tmp_path):
    a = write_ps(tmp_path / "a.csv", [[0.0], [1.0]])
    b = write_ps(tmp_path / "b.csv", [[2.0]])
    assert main(["barycenter", "--inputs", f"{a},{b}", "--out", str(tmp_path / "c.csv")]) == 1


def test_check_suites(capsys):
    assert main(["check", "--suite", "padding", "--trials", "10"]) == 0
    assert "padding: PASS 10 FAIL 0" in capsys.readouterr().out
    assert main(["check", "--suite", "bounds", "--trials", "5"]) == 0


def test_check_no_trials(capsys):
    assert main(["check", "--trials", "0"]) == 1
    assert "no trials" in capsys.readouterr().err
