import csv
import io
import json

import numpy as np
import pytest

from rulesfirst import cli
from rulesfirst.core import DataError
from rulesfirst.datagen import SyntheticSpec, gen_synthetic
from rulesfirst.linear import train_penalized_logistic
from rulesfirst.core import accuracy
from rulesfirst.text import bundled_corpus

SMALL = SyntheticSpec(d_total=60, k=4)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_curve_row_contract():
    rows = cli.run_learning_curve(SMALL, {"l2"}, [300], trials=1)
    assert [r["row_type"] for r in rows] == ["record", "aggregate"]
    assert rows[1]["stderr"] == 0.0 and rows[0]["accuracy"] == rows[1]["accuracy"]


def test_curve_rejects_unknown_method():
    with pytest.raises(cli.ConfigError, match="valid methods: l1, l2, greedy_l1, greedy_l2"):
        cli.run_learning_curve(SMALL, ["l3"], [300], trials=1)
    with pytest.raises(cli.ConfigError):
        cli.run_learning_curve(SMALL, ["l2"], [300], trials=0)


def test_curve_methods_share_samples():
    rows = cli.run_learning_curve(SMALL, ["greedy_l2", "l2"], [90, 150], trials=2, seed=4)
    rec = [r for r in rows if r["row_type"] == "record"]
    assert len(rec) == 8
    # canonical ordering: method, m, records before aggregates
    assert [r["method"] for r in rows[:6]] == ["greedy_l2"] * 6
    s_train, s_test = cli._seed(4, 90, 1).spawn(2)
    train = gen_synthetic(SMALL, 90, seed=s_train)
    test = gen_synthetic(SMALL, cli.TEST_SIZE, seed=s_test)
    base = train_penalized_logistic(train, cli._penalty("l2", 90.0))
    want = [r["accuracy"] for r in rec if r["method"] == "l2" and r["m"] == 90 and r["trial"] == 1]
    assert want == [accuracy(base, test)]


def test_kappa_zero_budget_is_linear_baseline():
    rows = cli.run_kappa_sweep(SMALL, [0], 150, trials=2, seed=1)
    for t in range(2):
        s_train, s_test = cli._seed(1, 150, t).spawn(2)
        data = gen_synthetic(SMALL, 150, seed=s_train)
        test = gen_synthetic(SMALL, cli.TEST_SIZE, seed=s_test)
        base = train_penalized_logistic(data, cli._penalty("l2", 150.0))
        assert rows[t]["accuracy"] == accuracy(base, test) and rows[t]["n_rules"] == 0


def test_kappa_prefixes_are_nested():
    rows = cli.run_kappa_sweep(SMALL, [0, 1, 2, 3], 150, trials=1)
    rec = [r for r in rows if r["row_type"] == "record"]
    assert [r["n_rules"] for r in rec] == [0, 1, 2, 3]


def test_table1_row_count_and_sanity_floor():
    rows = cli.run_table1_comparison([1, 2], [1.0, 2.0], trials=2, methods=["greedy_rule", "convex"],
                                     epsilon=0.5, m_max=512, test_size=300)
    assert len(rows) == 2 * 2 * 2
    for r in rows:
        assert r["status"] == "REACHED" and r["m_needed"] <= 16
        assert r["test_error"] <= 0.5


def test_table1_unreached_is_marked():
    rows = cli.run_table1_comparison([5], [4.0], trials=1, methods=["greedy_rule"], epsilon=0.0,
                                     m_max=16, test_size=200)
    assert rows[0]["status"] == "UNREACHED" and rows[0]["m_needed"] is None


def test_threshold_empty_rule_set_equals_baseline():
    rows, _ = cli.run_threshold_sweep(bundled_corpus(), [1e9], ["l2", "greedy_l2"])
    rec = {r["method"]: r for r in rows if r["row_type"] == "record"}
    assert rec["greedy_l2"]["n_candidates"] == 0
    assert rec["greedy_l2"]["accuracy"] == rec["l2"]["accuracy"]


def test_threshold_bad_corpus_line(tmp_path):
    p = tmp_path / "c.tsv"
    p.write_text("+1\tfine\n" * 10 + "x\tbroken\n")
    with pytest.raises(DataError, match=":11:"):
        cli.run_threshold_sweep(p, [1.0], ["l2"])
    assert cli.main(["threshold", "--corpus", str(p), "--out", str(tmp_path / "o.csv")]) == 3


def test_parse_list_forms():
    assert cli._parse_list("0..3", int) == [0, 1, 2, 3]
    assert cli._parse_list("300, 600", int) == [300, 600]
    assert cli._parse_list([1, "2,3"], float) == [1.0, 2.0, 3.0]
    assert cli._parse_list(None) is None


# ---------------------------------------------------------------------------
# main(): exit codes, manifests, config files
# ---------------------------------------------------------------------------


def test_gen_train_eval_roundtrip(tmp_path):
    data = tmp_path / "d.txt"
    model = tmp_path / "m.json"
    out = tmp_path / "e.csv"
    assert cli.main(["gen", "synthetic", "--m", "300", "--k", "4", "--d", "60", "--format", "sparse",
                     "--out", str(data)]) == 0
    assert cli.main(["train", "--data", str(data), "--method", "greedy_rule", "--k", "4", "--B", "40",
                     "--out", str(model)]) == 0
    assert cli.main(["eval", "--model", str(model), "--data", str(data), "--out", str(out)]) == 0
    metrics = {r["metric"]: float(r["value"]) for r in _rows(out)}
    assert set(metrics) == {"mis", "ramp", "hinge", "margin", "accuracy", "m"}
    assert metrics["mis"] == pytest.approx(1 - metrics["accuracy"])
    manifest = json.loads((tmp_path / "m.json.manifest.json").read_text())
    assert manifest["command"] == "train" and "train_accuracy" in manifest


def test_gen_lowerbound_dense(tmp_path):
    out = tmp_path / "lb.csv"
    assert cli.main(["gen", "lowerbound", "--k", "2", "--B", "2", "--out", str(out)]) == 0
    assert _rows(out)[0].keys() >= {"f0", "label"}


def test_exit_codes(tmp_path, capsys):
    assert cli.main(["curve", "--method", "l9", "--trials", "1", "--m", "30"]) == 2
    assert "valid methods" in capsys.readouterr().err
    assert cli.main(["curve", "--seed", "-1", "--trials", "1", "--m", "30", "--method", "l2"]) == 2
    assert cli.main(["train", "--data", str(tmp_path / "missing.csv"), "--out", "x"]) == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("f0,label\n1,7\n")
    assert cli.main(["train", "--data", str(bad), "--method", "l2", "--out", str(tmp_path / "m")]) == 3
    assert cli.main(["nonsense"]) == 2
    assert cli.main(["gen", "synthetic", "--k", "5", "--d", "3", "--out", str(tmp_path / "z.csv")]) == 2


def test_manifest_and_config_precedence(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"m": [60], "trials": 1, "method": "l1", "k": 4, "d": 60, "seed": 9}))
    out = tmp_path / "curve.csv"
    assert cli.main(["curve", "--config", str(conf), "--method", "l2", "--out", str(out)]) == 0
    rows = _rows(out)
    assert list(rows[0].keys()) == cli.CURVE_COLUMNS
    assert {r["method"] for r in rows} == {"l2"}
    man = json.loads((tmp_path / "curve.csv.manifest.json").read_text())
    assert man["command"] == "curve"
    assert man["columns"] == cli.CURVE_COLUMNS and man["schema_version"] == cli.SCHEMA_VERSION
    assert man["config"]["seed"] == 9 and man["config"]["method"] == "l2"
    assert "wall_seconds" in man["timings"]


def test_config_unknown_key(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text('{"bogus": 1}')
    assert cli.main(["curve", "--config", str(conf)]) == 2


def test_csv_to_stdout(capsys):
    assert cli.main(["curve", "--m", "60", "--trials", "1", "--k", "4", "--d", "60", "--method", "l2"]) == 0
    text = capsys.readouterr().out
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 2 and rows[0]["accuracy"].count(".") == 1


def test_attribution_dump_format(tmp_path):
    attr = tmp_path / "a.tsv"
    out = tmp_path / "t.csv"
    assert cli.main(["threshold", "--threshold", "2", "--method", "greedy_l2", "--out", str(out),
                     "--attribution", str(attr)]) == 0
    with open(attr, newline="") as fh:
        rows = list(csv.DictReader(fh, delimiter="\t"))
    assert list(rows[0].keys()) == ["method"] + cli.ATTRIBUTION_COLUMNS
    fired = [r for r in rows if r["rule_token"]]
    assert fired
    from rulesfirst.text import tokenize
    for r in fired:
        assert r["rule_token"] in tokenize(r["text"], "suffix")


def test_experiment_record_validates():
    cli.ExperimentRecord("l2", {"m": 3}, 0.5)
    with pytest.raises(ValueError):
        cli.ExperimentRecord("l2", {}, 1.5)
