import json

import numpy as np
import pytest

from rfspp.cli import main
from rfspp.core import Dataset, PointPattern, read_jsonl, write_jsonl


@pytest.fixture(scope="module")
def sims(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--scenario", "classification3", "--seed", "7", "--out-dir", str(d)]) == 0
    assert main(["simulate", "--scenario", "novelty1", "--seed", "7", "--out-dir", str(d)]) == 0
    return d


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_simulate_outputs(sims):
    assert len(read_jsonl(sims / "classification3_train.jsonl")) == 900
    assert len(read_jsonl(sims / "classification3_test.jsonl")) == 1500
    assert len(read_jsonl(sims / "novelty1_train.jsonl")) == 500
    assert len(read_jsonl(sims / "novelty1_test.jsonl")) == 500
    meta = json.loads((sims / "novelty1_meta.json").read_text())
    assert meta["seed"] == 7 and meta["scenario"] == "novelty1" and "PCG64" in meta["rng"]


def test_simulate_unknown_scenario(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--scenario", "texture", "--seed", "1"])
    assert exc.value.code == 2


def test_simulate_requires_seed(capsys, tmp_path):
    code, _ = run(capsys, "simulate", "--scenario", "novelty1", "--out-dir", tmp_path)
    assert code == 2


def test_fit_class1_and_report(sims, tmp_path, capsys):
    model, report = tmp_path / "m1.json", tmp_path / "r1.json"
    code, _ = run(capsys, "fit", "--train", sims / "classification3_train.jsonl", "--label", 1,
                  "--out", model, "--report", report)
    assert code == 0
    m = json.loads(model.read_text())
    assert m["type"] == "iid_cluster" and m["cardinality"]["type"] == "poisson"
    assert abs(m["cardinality"]["rate"] - 6) <= 4 * np.sqrt(6 / 300)
    assert json.loads(report.read_text())["n_patterns"] == 300


def test_fit_categorical_support(tmp_path, capsys):
    pats = [PointPattern(np.arange(2 * c, dtype=float).reshape(c, 2), dim=2) for c in (3, 12, 5)]
    write_jsonl(Dataset.from_patterns(pats), tmp_path / "d.jsonl")
    code, _ = run(capsys, "fit", "--train", tmp_path / "d.jsonl", "--family", "categorical",
                  "--out", tmp_path / "m.json")
    assert code == 0
    assert len(json.loads((tmp_path / "m.json").read_text())["cardinality"]["probs"]) == 13


def test_fit_empty_file_fails(tmp_path, capsys):
    (tmp_path / "empty.jsonl").write_text("")
    code, out = run(capsys, "fit", "--train", tmp_path / "empty.jsonl", "--out", tmp_path / "m.json")
    assert code == 3 and "error" in out.err
    assert not (tmp_path / "m.json").exists()


def test_fit_singular_is_numeric_failure(tmp_path, capsys):
    (tmp_path / "d.jsonl").write_text('{"id": "a", "label": null, "points": [[1, 1], [1, 1]]}\n')
    code, _ = run(capsys, "fit", "--train", tmp_path / "d.jsonl", "--out", tmp_path / "m.json")
    assert code == 4


@pytest.fixture(scope="module")
def c3_models(sims, tmp_path_factory):
    d = tmp_path_factory.mktemp("models")
    paths = []
    for k in (1, 2, 3):
        p = d / f"m{k}.json"
        assert main(["fit", "--train", str(sims / "classification3_train.jsonl"), "--label", str(k),
                     "--out", str(p)]) == 0
        paths.append(p)
    return paths


def test_classify_rfs_and_nb(sims, c3_models, tmp_path, capsys):
    code, out = run(capsys, "classify", "--models", *c3_models, "--test", sims / "classification3_test.jsonl",
                    "--out", tmp_path / "pred.jsonl")
    assert code == 0
    rfs_acc = float(out.out.split()[-1])
    code, out = run(capsys, "classify", "--models", *c3_models, "--scorer", "nb",
                    "--test", sims / "classification3_test.jsonl", "--out", tmp_path / "nb.jsonl")
    nb_acc = float(out.out.split()[-1])
    assert rfs_acc > nb_acc
    recs = [json.loads(l) for l in (tmp_path / "pred.jsonl").read_text().splitlines()]
    assert len(recs) == 1500 and len(recs[0]["log_posteriors"]) == 3
    code, out = run(capsys, "eval", "--protocol", "accuracy", "--predictions", tmp_path / "pred.jsonl",
                    "--truth", sims / "classification3_test.jsonl", "--out-json", tmp_path / "acc.json")
    assert code == 0
    assert json.loads((tmp_path / "acc.json").read_text())["accuracy"] == pytest.approx(rfs_acc, abs=1e-6)


def test_classify_missing_model(sims, tmp_path, capsys):
    code, out = run(capsys, "classify", "--models", tmp_path / "nope.json", tmp_path / "nope2.json",
                    "--test", sims / "classification3_test.jsonl", "--out", tmp_path / "p.jsonl")
    assert code == 3


@pytest.fixture(scope="module")
def nov_model(sims, tmp_path_factory):
    p = tmp_path_factory.mktemp("nov") / "m.json"
    assert main(["fit", "--train", str(sims / "novelty1_train.jsonl"), "--out", str(p)]) == 0
    return p


def _detect_f1(capsys, sims, model, scorer, out):
    code, res = run(capsys, "detect", "--model", model, "--scorer", scorer, "--train", sims / "novelty1_train.jsonl",
                    "--test", sims / "novelty1_test.jsonl", "--out", out)
    assert code == 0
    return float(res.out.split()[-1])


def test_detect_ranking_beats_rfs_density(sims, nov_model, tmp_path, capsys):
    ranking = _detect_f1(capsys, sims, nov_model, "ranking", tmp_path / "v.jsonl")
    density = _detect_f1(capsys, sims, nov_model, "rfs", tmp_path / "v2.jsonl")
    assert ranking > density
    rec = json.loads((tmp_path / "v.jsonl").read_text().splitlines()[0])
    assert set(rec) == {"id", "score", "verdict"} and rec["verdict"] in ("normal", "anomaly")
    code, out = run(capsys, "eval", "--protocol", "f1", "--predictions", tmp_path / "v.jsonl",
                    "--truth", sims / "novelty1_test.jsonl")
    assert code == 0 and json.loads(out.out)["f1"] == pytest.approx(ranking, abs=1e-6)


def test_detect_saved_detector_reuse(sims, nov_model, tmp_path, capsys):
    run(capsys, "detect", "--model", nov_model, "--train", sims / "novelty1_train.jsonl",
        "--test", sims / "novelty1_test.jsonl", "--out", tmp_path / "a.jsonl", "--detector-out", tmp_path / "d.json")
    code, _ = run(capsys, "detect", "--detector", tmp_path / "d.json", "--test", sims / "novelty1_test.jsonl",
                  "--out", tmp_path / "b.jsonl")
    assert code == 0
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_detect_bad_quantile(sims, nov_model, tmp_path, capsys):
    code, out = run(capsys, "detect", "--model", nov_model, "--q", 0, "--train", sims / "novelty1_train.jsonl",
                    "--test", sims / "novelty1_test.jsonl", "--out", tmp_path / "v.jsonl")
    assert code == 2 and "1 <= q < Q" in out.err


def test_unit_flag_changes_rfs_but_not_ranking(sims, tmp_path, capsys):
    # same data, two invocations differing only in --unit
    for u in ("1", "100"):
        run(capsys, "fit", "--train", sims / "novelty1_train.jsonl", "--unit", u, "--out", tmp_path / f"m{u}.json")
        for scorer in ("rfs", "ranking"):
            run(capsys, "detect", "--model", tmp_path / f"m{u}.json", "--scorer", scorer,
                "--train", sims / "novelty1_train.jsonl", "--test", sims / "novelty1_test.jsonl",
                "--out", tmp_path / f"{scorer}{u}.jsonl")
    assert (tmp_path / "ranking1.jsonl").read_bytes() == (tmp_path / "ranking100.jsonl").read_bytes()
    assert (tmp_path / "rfs1.jsonl").read_bytes() != (tmp_path / "rfs100.jsonl").read_bytes()


def test_pca_command(tmp_path, capsys, rng):
    pats = [PointPattern(rng.normal(size=(n, 5)), dim=5) for n in (10, 0, 7)]
    write_jsonl(Dataset.from_patterns(pats, labels=[1, 2, 1]), tmp_path / "in.jsonl")
    code, out = run(capsys, "pca", "--input", tmp_path / "in.jsonl", "--out", tmp_path / "out.jsonl", "--dim", 2,
                    "--projection-out", tmp_path / "proj.json")
    assert code == 0 and "retained variance" in out.out
    ds = read_jsonl(tmp_path / "out.jsonl", dim=2)
    assert ds.dim == 2 and ds.labels == [1, 2, 1] and len(ds.items[1].pattern) == 0
    code, _ = run(capsys, "pca", "--input", tmp_path / "in.jsonl", "--out", tmp_path / "out2.jsonl",
                  "--projection", tmp_path / "proj.json")
    assert (tmp_path / "out.jsonl").read_bytes() == (tmp_path / "out2.jsonl").read_bytes()
    code, _ = run(capsys, "pca", "--input", tmp_path / "in.jsonl", "--out", tmp_path / "x.jsonl", "--dim", 6)
    assert code == 3


def test_config_file_supplies_flags(sims, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"train": str(sims / "novelty1_train.jsonl"), "family": "categorical",
                               "out": str(tmp_path / "cfg_model.json")}))
    code, _ = run(capsys, "fit", "--config", cfg)
    assert code == 0
    assert json.loads((tmp_path / "cfg_model.json").read_text())["cardinality"]["type"] == "categorical"
    # explicit flag overrides config
    code, _ = run(capsys, "fit", "--config", cfg, "--family", "poisson")
    assert json.loads((tmp_path / "cfg_model.json").read_text())["cardinality"]["type"] == "poisson"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nonsense": 1}))
    with pytest.raises(SystemExit) as exc:
        main(["fit", "--config", str(bad)])
    assert exc.value.code == 2


def test_eval_cv_and_experiment_protocols(sims, tmp_path, capsys):
    code, out = run(capsys, "eval", "--protocol", "cv", "--data", sims / "classification3_train.jsonl",
                    "--k", 4, "--seed", 0, "--out-json", tmp_path / "cv.json", "--out-csv", tmp_path / "cv.csv")
    assert code == 0
    assert len(json.loads((tmp_path / "cv.json").read_text())["folds"]) == 4
    assert (tmp_path / "cv.csv").read_text().splitlines()[0] == "fold,rfs_accuracy,nb_accuracy"
    code, out = run(capsys, "eval", "--protocol", "novelty1", "--seed", 3, "--trials", 1,
                    "--out-json", tmp_path / "n.json", "--boxplot-csv", tmp_path / "box.csv")
    assert code == 0 and "ranking_f1" in out.out
    header = (tmp_path / "box.csv").read_text().splitlines()[0].split(",")
    assert {"group", "scorer", "median", "threshold"} <= set(header)
