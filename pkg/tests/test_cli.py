import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from corrfilter.cli import main
from corrfilter.hce import alca_filter
from corrfilter.models import block_eigenvalues, build_population, paper_preset


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def matrix_from(path):
    rows = read_csv(path)
    return rows[0][1:], np.array([[float(x) for x in r[1:]] for r in rows[1:]])


def write_data(path, data, names=None):
    names = names or [f"s{i}" for i in range(data.shape[1])]
    np.savetxt(path, data, delimiter=",", header=",".join(names), comments="")


def test_benchmark_writes_reports(tmp_path):
    code = main(["benchmark", "--preset", "case1", "--p", "16", "--n", "40", "--m", "4", "--seed", "7",
                 "--out", str(tmp_path), "--format", "csv,json,text"])
    assert code == 0
    stem = tmp_path / "benchmark_case1_p16_n40_m4_seed7"
    for ext in ("csv", "json", "txt"):
        assert stem.with_suffix("." + ext).exists()
    report = json.loads(stem.with_suffix(".json").read_text())
    assert "bj" not in report["estimators"]


def test_case3_enables_autocorrelated_estimators(tmp_path):
    code = main(["benchmark", "--preset", "case3", "--p", "12", "--n", "30", "--m", "2", "--out", str(tmp_path),
                 "--format", "json"])
    assert code == 0
    report = json.loads(next(tmp_path.glob("*.json")).read_text())
    assert {"bj", "two-step-ii"} <= set(report["estimators"])


def test_m_below_two_is_usage_error(capsys):
    assert main(["benchmark", "--preset", "case1", "--m", "1"]) == 2
    assert "m must be >= 2" in capsys.readouterr().err


def test_bad_config_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"sample": {"p": 20, "colour": "red"}}))
    assert main(["benchmark", "--config", str(cfg)]) == 2
    assert "colour" in capsys.readouterr().err
    assert main(["benchmark", "--format", "pdf"]) == 2
    assert main(["nonsense"]) == 2


def test_curve_rows_and_determinism(tmp_path):
    args = ["curve", "--preset", "case2", "--p", "14", "--n", "30", "--m", "4", "--seed", "2"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "curve_case2_p14_n30_m4_seed2.csv").read_bytes()
    b = (tmp_path / "b" / "curve_case2_p14_n30_m4_seed2.csv").read_bytes()
    assert a == b
    rows = read_csv(tmp_path / "a" / "curve_case2_p14_n30_m4_seed2.csv")[1:]
    for loss in {r[0] for r in rows}:
        assert [int(r[1]) for r in rows if r[0] == loss] == list(range(1, 15))


def test_diagnose_profiles(tmp_path):
    assert main(["diagnose", "--preset", "case1", "--p", "24", "--n", "48", "--m", "4", "--out", str(tmp_path)]) == 0
    naive = read_csv(tmp_path / "profile_case1_p24_n48_m4_seed0_naive.csv")
    header, body = naive[0], np.array(naive[1:], dtype=float)
    col = {h: i for i, h in enumerate(header)}
    np.testing.assert_array_equal(body[:, col["xi_mean"]], body[:, col["lambda_mean"]])
    for path in tmp_path.glob("profile_*.csv"):
        data = np.array(read_csv(path)[1:], dtype=float)
        ipr = data[:, col["ipr_mean"]]
        assert np.all(ipr >= 1 / 24 - 1e-12) and np.all(ipr <= 1 + 1e-12)
    expected = []
    for b in paper_preset(1, 24).blocks:
        top, bulk = block_eigenvalues(0.09, b.size)
        expected += [top] + [bulk] * (b.size - 1)
    np.testing.assert_allclose(body[:, col["population_eigenvalue"]], sorted(expected), atol=1e-10)


def test_filter_perfect_correlation(tmp_path):
    x = np.arange(6.0)
    write_data(tmp_path / "d.csv", np.c_[x, 3 * x - 1], ["a", "b"])
    out = tmp_path / "o.csv"
    assert main(["filter", str(tmp_path / "d.csv"), "--estimator", "alca", "--out", str(out)]) == 0
    names, m = matrix_from(out)
    assert names == ["a", "b"]
    assert m[0, 1] == 1.0


def test_filter_naive_is_sample_correlation(tmp_path):
    data = np.random.default_rng(0).standard_normal((50, 5))
    write_data(tmp_path / "d.csv", data)
    out = tmp_path / "o.csv"
    assert main(["filter", str(tmp_path / "d.csv"), "--estimator", "naive", "--out", str(out)]) == 0
    np.testing.assert_allclose(matrix_from(out)[1], np.corrcoef(data, rowvar=False), atol=1e-12)


def test_filter_two_step_is_ultrametric(tmp_path):
    rng = np.random.default_rng(1)
    data = rng.standard_normal((90, 30)) @ rng.standard_normal((30, 30))
    write_data(tmp_path / "d.csv", data)
    out = tmp_path / "o.csv"
    assert main(["filter", str(tmp_path / "d.csv"), "--estimator", "two-step-iii", "--out", str(out)]) == 0
    _, m = matrix_from(out)
    np.testing.assert_array_equal(np.diag(m), 1.0)
    bound = np.minimum(m[:, :, None], m.T[None, :, :]).max(axis=1)
    assert np.all(m >= bound - 1e-12)
    np.testing.assert_allclose(alca_filter(m), m, atol=1e-12)


def test_filter_mwcv_windows(tmp_path, capsys):
    write_data(tmp_path / "d.csv", np.random.default_rng(2).standard_normal((100, 6)))
    assert main(["filter", str(tmp_path / "d.csv"), "--estimator", "mwcv"]) == 2
    assert main(["filter", str(tmp_path / "d.csv"), "--estimator", "mwcv", "--train", "40", "--test", "20"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 7


def test_filter_input_errors(tmp_path, capsys):
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n3,x\n")
    assert main(["filter", str(tmp_path / "bad.csv"), "--estimator", "naive"]) == 2
    assert "row 3, column 2" in capsys.readouterr().err
    (tmp_path / "const.csv").write_text("a,b\n1,2\n1,3\n1,5\n")
    assert main(["filter", str(tmp_path / "const.csv"), "--estimator", "naive"]) == 3
    assert main(["filter", str(tmp_path / "missing.csv"), "--estimator", "naive"]) == 2


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "corrfilter", "--version"], capture_output=True, text=True)
    assert done.returncode == 0 and "corrfilter" in done.stdout
