import json

import numpy as np
import pytest

from conftest import DATA
from synth import gaussian_mixture
from surprisal_knn import cli
from surprisal_knn.exceptions import DomainError

IRIS = ["--data", str(DATA / "iris.csv"), "--schema", str(DATA / "iris.schema.json")]


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_evaluate_thirty_seeds(tmp_path, capsys):
    out = tmp_path / "ev.json"
    code, _, _ = run(["evaluate", *IRIS, "--seeds", "30", "--out", str(out),
                      "--csv", str(tmp_path / "ev.csv")], capsys)
    assert code == 0
    doc = json.loads(out.read_text())
    assert len(doc["result"]["rows"]) == 30
    assert set(doc["result"]["means"]) == {"accuracy", "precision", "recall", "mcc"}
    assert (tmp_path / "ev_seeds.png").stat().st_size > 0
    lines = (tmp_path / "ev.csv").read_text().splitlines()
    assert lines[0].startswith("seed,") and len(lines) == 31


def test_evaluate_is_byte_identical(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert run(["evaluate", *IRIS, "--seeds", "3,5", "--out", str(p), "--no-figures"],
                   capsys)[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert not list(tmp_path.glob("*.png"))


def test_fit_single_iteration(capsys):
    code, out, _ = run(["fit", *IRIS, "--iters", "1"], capsys)
    assert code == 0
    model = json.loads(out)["result"]["model"]
    assert model["iterations_run"] == 1 and len(model["features"]) == 5


def test_fit_figures(tmp_path, capsys):
    assert run(["fit", *IRIS, "--out", str(tmp_path / "fit.json")], capsys)[0] == 0
    assert {p.name for p in tmp_path.glob("*.png")} == {"fit_convergence.png", "fit_weights.png"}


def test_predict_and_explain(tmp_path, capsys):
    q = tmp_path / "q.csv"
    rows = (DATA / "iris.csv").read_text().splitlines()
    q.write_text("\n".join([rows[0], rows[1], rows[80], rows[140]]) + "\n")
    code, out, _ = run(["predict", *IRIS, "--query", str(q)], capsys)
    assert code == 0
    res = json.loads(out)["result"]
    assert [p["prediction"] for p in res["predictions"]] == ["setosa", "versicolor", "virginica"]
    assert res["scores"]["accuracy"] == 1.0
    assert all(abs(sum(i["weight"] for i in p["influences"]) - 1) < 1e-9
               for p in res["predictions"])
    code, out, _ = run(["explain", *IRIS, "--query", str(q)], capsys)
    reports = json.loads(out)["result"]["reports"]
    assert code == 0 and len(reports) == 3
    assert all(r["pi_s"] == r["expected_phi"] / r["phi"] for r in reports)


def write_mixture(tmp_path, seed=0):
    ds, flags = gaussian_mixture(seed)
    X = ds.X
    rng = np.random.default_rng(seed)
    inl = rng.permutation(np.flatnonzero(~flags))
    train, test = inl[:225], np.r_[inl[225:], np.flatnonzero(flags)]
    (tmp_path / "schema.json").write_text(json.dumps({
        "x0": {"kind": "continuous"}, "x1": {"kind": "continuous"},
        "outlier": {"kind": "nominal", "target": True}}))
    for name, ids in (("train.csv", train), ("query.csv", test)):
        lines = ["x0,x1,outlier"] + [f"{float(X[i, 0])!r},{float(X[i, 1])!r},{int(flags[i])}" for i in ids]
        (tmp_path / name).write_text("\n".join(lines) + "\n")
    return flags[test]


def test_detect_end_to_end(tmp_path, capsys):
    truth = write_mixture(tmp_path)
    out = tmp_path / "det.json"
    code, _, _ = run(["detect", "--data", str(tmp_path / "train.csv"), "--schema",
                      str(tmp_path / "schema.json"), "--query", str(tmp_path / "query.csv"),
                      "--threshold", "0.7", "--out", str(out)], capsys)
    assert code == 0
    res = json.loads(out.read_text())["result"]
    verdicts = res["verdicts"]
    assert len(verdicts) == len(truth)
    assert [v["truth"] for v in verdicts] == truth.tolist()
    flagged = [v["is_anomaly"] for v in verdicts]
    tp = sum(a and b for a, b in zip(flagged, truth))
    prec, rec = tp / max(sum(flagged), 1), tp / truth.sum()
    assert res["f1"] == pytest.approx(2 * prec * rec / (prec + rec))
    assert res["f1"] >= 0.8
    assert (tmp_path / "det_scores.png").exists()


def test_config_error_exit_code(capsys):
    code, _, err = run(["evaluate", *IRIS, "--split", "1.5"], capsys)
    assert code == cli.EXIT_CONFIG and "split" in err
    with pytest.raises(SystemExit) as info:
        cli.main(["evaluate", *IRIS, "--seeds", "x"])
    assert info.value.code == cli.EXIT_CONFIG


def test_data_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("sepal_length,sepal_width,petal_length,petal_width,species\n"
                   "5.1,3.5,1.4,0.2,setosa\n5.0,wide,1.4,0.2,setosa\n")
    code, _, err = run(["fit", "--data", str(bad), "--schema", IRIS[3]], capsys)
    assert code == cli.EXIT_DATA and "row 2" in err and "sepal_width" in err
    code, _, err = run(["fit", "--data", str(tmp_path / "missing.csv"), "--schema", IRIS[3]], capsys)
    assert code == cli.EXIT_DATA


def test_runtime_error_exit_code(monkeypatch, capsys):
    def boom(cfg, dataset):
        raise DomainError("lk_laplace needs b > 0")

    monkeypatch.setitem(cli.COMMANDS, "fit", boom)
    code, _, err = run(["fit", *IRIS], capsys)
    assert code == cli.EXIT_RUNTIME and "runtime error" in err


@pytest.mark.parametrize("text, seeds", [("3", (0, 1, 2)), ("4,9", (4, 9)), ("7,", (7,))])
def test_parse_seeds(text, seeds):
    assert cli.parse_seeds(text) == seeds
