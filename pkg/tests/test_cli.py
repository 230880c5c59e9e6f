import csv
import io
import json

import numpy as np
import pytest

from lowdefault.cli import main


@pytest.fixture
def labelled(tmp_path):
    g = np.random.default_rng(0)
    path = tmp_path / "sample.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["score", "default"])
        for v in g.normal(6.8, 1.96, 25):
            w.writerow([f"{v:.6f}", 1])
        for v in g.normal(8.5, 2.0, 250):
            w.writerow([f"{v:.6f}", 0])
    return path


@pytest.fixture
def scores(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text("score\n" + "\n".join(str(v) for v in np.linspace(3, 12, 40)) + "\n")
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_power_json_and_csv(capsys, labelled):
    code, out, _ = run(capsys, "power", labelled, "--method", "empirical", "--method", "kernel")
    assert code == 0
    doc = json.loads(out)
    assert doc["n_d"] == 25 and doc["n_n"] == 250
    emp = doc["estimates"][0]
    assert emp["ar_star"] == pytest.approx(2 * emp["auc_star"] - 1)
    code, out, _ = run(capsys, "power", labelled, "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][0] == "method" and rows[1][0] == "empirical"


def test_ci_reports_order_statistics(capsys, labelled):
    code, out, _ = run(capsys, "ci", labelled, "--method", "normal", "--method", "bootstrap-empirical",
                       "--resamples", "199", "--level", "0.9", "--seed", "3")
    assert code == 0
    ivs = json.loads(out)["intervals"]
    assert ivs[1]["order_statistics"] == [190, 10]
    assert all(0 <= iv["lower"] <= iv["upper"] <= 1 for iv in ivs)
    again = run(capsys, "ci", labelled, "--method", "bootstrap-empirical", "--resamples", "199",
                "--level", "0.9", "--seed", "3")[1]
    assert json.loads(again)["intervals"][0] == ivs[1]


def test_ci_incompatible_resamples(capsys, labelled):
    code, _, err = run(capsys, "ci", labelled, "--method", "bootstrap-kernel", "--resamples", "100")
    assert code == 4 and "incompatible" in err


@pytest.mark.parametrize("model", ["vdb", "logit", "robustlogit", "nls"])
def test_fit_then_calibrate(capsys, tmp_path, labelled, scores, model):
    doc_path = tmp_path / f"{model}.json"
    code, out, _ = run(capsys, "fit", labelled, "--model", model, "--model-out", doc_path,
                       "--scores", scores)
    assert code == 0
    table = json.loads(out)["pd_table"]
    pds = [r[1] for r in table]
    assert all(0 <= p <= 1 for p in pds) and pds[0] > pds[-1]
    code, out, err = run(capsys, "calibrate", "--model", doc_path, "--scores", scores,
                         "--target-pd", "0.02", "--format", "csv")
    assert code == 0 and "q =" in err
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["score", "raw_pd", "calibrated_pd"]
    cal = np.array([float(r[2]) for r in rows[1:]])
    assert abs(cal.mean() - 0.02) < 1e-12


def test_fit_discrete_vdb(capsys, tmp_path):
    path = tmp_path / "grades.csv"
    rows = ["score,default"] + [f"{g},1" for g in (1, 1, 2, 3)] + [f"{g},0" for g in (2, 3, 3, 4, 4, 5, 5, 5)]
    path.write_text("\n".join(rows) + "\n")
    code, out, _ = run(capsys, "fit", path, "--model", "vdb", "--discrete")
    assert code == 0
    assert json.loads(out)["model"]["type"] == "vdb"


def test_calibrate_raw(capsys, tmp_path):
    raw = tmp_path / "raw.csv"
    raw.write_text("score,raw_pd\n1,0.3\n2,0.2\n3,0.1\n")
    code, out, _ = run(capsys, "calibrate", "--raw", raw, "--target-pd", "0.05", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and np.mean([r[2] for r in doc["rows"]]) == pytest.approx(0.05, abs=1e-12)
    code, _, err = run(capsys, "calibrate", "--target-pd", "0.05")
    assert code == 2


def test_qmm(capsys, tmp_path, scores):
    out_model = tmp_path / "qmm.json"
    code, out, _ = run(capsys, "qmm", scores, "--target-pd", "0.02", "--target-auc", "0.75",
                       "--what-if-auc", "0.8", "--model-out", out_model)
    assert code == 0
    doc = json.loads(out)
    assert [m["targets"]["A"] for m in doc["models"]] == [0.75, 0.8]
    assert abs(doc["models"][0]["provenance"]["residuals"]["q"]) < 1e-9
    assert json.loads(out_model.read_text())["type"] == "logit"


def test_curves_tsv(capsys, labelled):
    code, out, _ = run(capsys, "curves", "--scenario", "3", "--grid", "11")
    assert code == 0
    pts = [tuple(map(float, line.split("\t"))) for line in out.splitlines()]
    assert len(pts) == 11 and pts[0] == (0.0, 0.0) and pts[-1] == (1.0, 1.0)
    code, out, _ = run(capsys, "curves", labelled, "--kind", "cap", "--modified", "--grid", "5")
    assert code == 0 and len(out.splitlines()) == 5
    assert run(capsys, "curves", "--scenario", "1", "--grid", "1")[0] == 2


def test_simulate_combinatorics_and_output_dir(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--study", "bootstrap-combinatorics", "--max-n", "4",
                       "--runs", "2", "--iters", "30", "--output-dir", tmp_path / "rep")
    assert code == 0
    assert [r["max"] for r in json.loads(out)["rows"]] == [1, 3, 10, 35]
    assert (tmp_path / "rep" / "bootstrap_combinatorics.csv").exists()


def test_simulate_coverage_is_seed_deterministic(capsys):
    argv = ["simulate", "--study", "coverage", "--scenario", "3", "--nd", "8", "--nn", "40",
            "--experiments", "2", "--resamples", "199", "--fisher-draws", "200", "--threads", "1"]
    a = run(capsys, *argv, "--seed", "4")[1]
    b = run(capsys, *argv, "--seed", "4")[1]
    assert a == b and json.loads(a)["reports"][0]["completed"] == 2
    assert run(capsys, *argv[:-6], "--resamples", "99")[0] == 2
    assert run(capsys, "simulate", "--study", "coverage")[0] == 2


def test_config_file_and_flag_override(capsys, tmp_path, labelled):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nlevel = 0.9\nresamples = 199\nmethod = bootstrap-empirical\n")
    code, out, _ = run(capsys, "ci", labelled, "--config", cfg)
    assert code == 0
    iv = json.loads(out)["intervals"][0]
    assert iv["level"] == 0.9 and iv["method"] == "bootstrap_empirical"
    code, out, _ = run(capsys, "ci", labelled, "--config", cfg, "--level", "0.8")
    assert json.loads(out)["intervals"][0]["level"] == 0.8
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense_key = 1\n")
    assert run(capsys, "ci", labelled, "--config", bad)[0] == 2
    js = tmp_path / "run.json"
    js.write_text(json.dumps({"level": 0.9}))
    assert json.loads(run(capsys, "ci", labelled, "--config", js)[1])["intervals"][0]["level"] == 0.9


def test_input_errors(capsys, tmp_path):
    missing = run(capsys, "power", tmp_path / "nope.csv")
    assert missing[0] == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("score,default\n1.0,1\nabc,0\n")
    code, _, err = run(capsys, "power", bad)
    assert code == 2 and "line 3" in err
    flag = tmp_path / "flag.csv"
    flag.write_text("score,default\n1.0,2\n")
    assert run(capsys, "power", flag)[0] == 2
    header = tmp_path / "header.csv"
    header.write_text("x,y\n1,0\n")
    assert run(capsys, "power", header)[0] == 2


def test_missing_class(capsys, tmp_path):
    only = tmp_path / "only.csv"
    only.write_text("score,default\n1.0,0\n2.0,0\n")
    code, _, err = run(capsys, "power", only)
    assert code == 3 and "defaulters" in err
    only.write_text("score,default\n1.0,1\n2.0,1\n")
    assert run(capsys, "power", only)[0] == 3


def test_numerical_failure_exit_code(capsys, tmp_path):
    sep = tmp_path / "sep.csv"
    sep.write_text("score,default\n1,1\n2,1\n3,0\n4,0\n")
    code, _, err = run(capsys, "fit", sep, "--model", "logit")
    assert code == 4 and "diverge" in err


def test_output_file(capsys, tmp_path, labelled):
    target = tmp_path / "out.txt"
    code, out, _ = run(capsys, "power", labelled, "--format", "text", "--output", target)
    assert code == 0 and out == ""
    assert "auc" in target.read_text()


def test_config_list_replaced_by_flag(capsys, tmp_path, labelled):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("method = normal,bootstrap-empirical\nresamples = 199\n")
    ivs = json.loads(run(capsys, "ci", labelled, "--config", cfg)[1])["intervals"]
    assert [iv["method"] for iv in ivs] == ["normal", "bootstrap_empirical"]
    ivs = json.loads(run(capsys, "ci", labelled, "--config", cfg, "--method", "normal")[1])["intervals"]
    assert [iv["method"] for iv in ivs] == ["normal"]
