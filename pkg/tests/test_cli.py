import json
import math

import numpy as np
import pytest

from ecdm import __version__
from ecdm.cli import main, read_matrix, write_matrix
from oracles import naive_estimates, naive_structure_stat, rel_err

DATA = "data/toy_4x2.csv"


@pytest.fixture
def toy_csv(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text("a,b\n1,4\n2,3\n3,2\n4,1\n")
    return path


def run_json(capsys, *argv):
    code = main([*argv, "--format", "json"])
    out = capsys.readouterr().out
    return code, json.loads(out) if code == 0 else out


def test_toy_report(capsys, toy_csv):
    code, rep = run_json(capsys, "test", "--data", str(toy_csv), "--p1", "1")
    assert code == 0
    assert rep["t_hat"] == pytest.approx(1.25, rel=1e-12)
    assert rep["w1"] == pytest.approx(1.25, rel=1e-12)
    assert rep["w2"] == pytest.approx(1.25, rel=1e-12)
    assert rep["delta_scale"] == pytest.approx(math.sqrt(2) * 1.25 / 4, rel=1e-12)
    assert rep["statistic"] == pytest.approx(2 * math.sqrt(2), rel=1e-12)
    assert rep["reject"] is True
    assert rep["rv"] == pytest.approx(1.0, rel=1e-12)
    assert rep["kappa"] == pytest.approx(1 / 16, rel=1e-12)


def test_text_report(capsys, toy_csv):
    assert main(["test", "--data", str(toy_csv), "--p1", "1"]) == 0
    out = capsys.readouterr().out
    assert "reject H0" in out and "yes" in out


def test_block_columns_by_name(capsys, tmp_path, rng):
    x = rng.normal(size=(12, 5))
    path = tmp_path / "x.csv"
    write_matrix(path, x, ["c1", "c2", "c3", "c4", "c5"])
    _, rep = run_json(capsys, "test", "--data", str(path), "--block1-cols", "c4,c2")
    ref = naive_estimates(x[:, [3, 1, 0, 2, 4]], 2)
    assert rel_err(rep["t_hat"], ref[0]) <= 1e-10
    assert rel_err(rep["w1"], ref[1]) <= 1e-10


def test_constant_column_exits_3(capsys, tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("a,b,flat\n1,4,7\n2,3,7\n3,2,7\n4,1,7\n5,0,7\n")
    code = main(["test", "--data", str(path), "--p1", "2"])
    err = capsys.readouterr().err
    assert code == 3
    assert "flat" in err


@pytest.mark.parametrize(
    "content, extra",
    [
        ("a,b\n1,2\n3\n", ["--p1", "1"]),
        ("a,b\n1,x\n3,4\n5,6\n7,8\n", ["--p1", "1"]),
        ("a,b\n1,nan\n3,4\n5,6\n7,8\n", ["--p1", "1"]),
        ("a,b\n1,2\n3,4\n5,6\n7,8\n", ["--p1", "2"]),
        ("a,b\n1,2\n3,4\n5,6\n", ["--p1", "1"]),
        ("a,b\n1,2\n3,4\n5,6\n7,8\n", ["--block1-cols", "zz"]),
        ("", ["--p1", "1"]),
    ],
)
def test_malformed_input_exits_2(capsys, tmp_path, content, extra):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    assert main(["test", "--data", str(path), *extra]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_missing_file_exits_2(capsys, tmp_path):
    assert main(["test", "--data", str(tmp_path / "none.csv"), "--p1", "1"]) == 2


def test_structure_with_zero_sigma0_matches_test(capsys, tmp_path, rng):
    x = rng.normal(size=(15, 7))
    data = tmp_path / "x.csv"
    write_matrix(data, x)
    s0 = tmp_path / "s0.csv"
    write_matrix(s0, np.zeros((3, 4)))
    _, t = run_json(capsys, "test", "--data", str(data), "--p1", "3")
    _, s = run_json(capsys, "structure", "--data", str(data), "--p1", "3", "--sigma0", str(s0))
    assert s["t0_hat"] == t["t_hat"]
    assert s["statistic"] == t["statistic"]


def test_structure_matches_oracle(capsys, tmp_path, rng):
    x = rng.normal(size=(11, 5))
    sigma0 = rng.normal(size=(2, 3))
    data, s0 = tmp_path / "x.csv", tmp_path / "s0.csv"
    write_matrix(data, x)
    write_matrix(s0, sigma0)
    _, s = run_json(capsys, "structure", "--data", str(data), "--p1", "2", "--sigma0", str(s0), "--two-sided")
    assert rel_err(s["t0_hat"], naive_structure_stat(x, 2, sigma0)) <= 1e-10
    assert s["two_sided"] is True


def test_structure_shape_mismatch_exits_2(capsys, tmp_path, rng):
    data, s0 = tmp_path / "x.csv", tmp_path / "s0.csv"
    write_matrix(data, rng.normal(size=(8, 5)))
    write_matrix(s0, np.zeros((3, 3)))
    assert main(["structure", "--data", str(data), "--p1", "2", "--sigma0", str(s0)]) == 2
    assert "shape" in capsys.readouterr().err


def _config(tmp_path, body):
    path = tmp_path / "sc.yaml"
    path.write_text(body)
    return path


SMALL = "p: 12\ncoupling: shared_coordinate_case_b\nreplications: 24\nseed: 5\n"


def test_simulate_workers_give_identical_files(tmp_path):
    cfg = _config(tmp_path, SMALL)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a"), "--workers", "1"]) == 0
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "b"), "--workers", "8"]) == 0
    for name in ("replications.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_outputs_have_no_nan(tmp_path):
    cfg = _config(tmp_path, SMALL)
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert "nan" not in (tmp_path / "o" / "replications.csv").read_text().lower()
    assert "NaN" not in (tmp_path / "o" / "summary.json").read_text()


def test_simulate_rejects_bad_case_b(capsys, tmp_path):
    cfg = _config(tmp_path, "cov: {p1: 2, p2: 8}\ncoupling: shared_coordinate_case_b\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "cov" in capsys.readouterr().err


def test_simulate_unknown_key_exits_2(capsys, tmp_path):
    cfg = _config(tmp_path, SMALL + "replicates: 3\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "replicates" in capsys.readouterr().err


def test_exported_sample_round_trip(capsys, tmp_path):
    cfg = _config(tmp_path, SMALL)
    out = tmp_path / "o"
    main(["simulate", "--config", str(cfg), "--out", str(out), "--export-samples", "3"])
    capsys.readouterr()
    rows = (out / "replications.csv").read_text().splitlines()
    header = rows[0].split(",")
    for rep in range(3):
        recorded = dict(zip(header, rows[rep + 1].split(",")))
        _, rep_json = run_json(capsys, "test", "--data", str(out / "samples" / f"rep_{rep:05d}.csv"), "--p1", "6")
        for key in ("t_hat", "w1", "w2", "statistic"):
            assert rel_err(rep_json[key], float(recorded[key])) <= 1e-12
    _, star = read_matrix(out / "samples" / "sigma_star.csv")
    assert star.shape == (6, 6)


def test_seed_override_changes_draws(tmp_path):
    cfg = _config(tmp_path, SMALL)
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a")])
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "6"])
    a = (tmp_path / "a" / "replications.csv").read_text()
    b = (tmp_path / "b" / "replications.csv").read_text()
    assert a != b


def test_version(capsys):
    assert main(["version"]) == 0
    assert capsys.readouterr().out.strip() == __version__


def test_log2_and_first_rows(capsys, tmp_path, rng):
    x = np.exp2(rng.normal(size=(20, 4)))
    path = tmp_path / "x.csv"
    write_matrix(path, x)
    _, rep = run_json(capsys, "test", "--data", str(path), "--p1", "2", "--log2", "--first-rows", "10")
    ref = naive_estimates(np.log2(x[:10]), 2)
    assert rep["n"] == 10
    assert rel_err(rep["t_hat"], ref[0]) <= 1e-10
