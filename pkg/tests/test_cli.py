import json

import numpy as np
import pytest

from protosarc.cli import main
from protosarc.data import write_dataset
from protosarc.model import load_checkpoint
from protosarc.synthetic import gaussian_clusters_dataset


@pytest.fixture
def train_file(tmp_path):
    ds = gaussian_clusters_dataset(60, seed=31)
    path = tmp_path / "train.jsonl"
    write_dataset(ds, path)
    return path


@pytest.fixture
def quick_config(tmp_path):
    cfg = {"max_epochs": 3, "patience": 3, "k_per_class": 2, "k_per_polarity": 2,
           "hidden": 8, "batch_size": 16}
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def run(args):
    return main([str(a) for a in args])


def test_train_writes_artifacts(tmp_path, train_file, quick_config):
    out = tmp_path / "run1"
    code = run(["train", "--config", quick_config, "--train", train_file,
                "--out", out, "--seed", 3])
    assert code == 0
    params, projection, extra = load_checkpoint(out / "checkpoint.json")
    assert projection is None
    assert params.bank.k_a == 4
    lines = (out / "history.jsonl").read_text().splitlines()
    epochs = [json.loads(l) for l in lines if "summary" not in json.loads(l)]
    assert len(epochs) >= 1 and "train" in epochs[0]
    effective = json.loads((out / "effective_config.json").read_text())
    assert effective["seed"] == 3
    assert effective["max_epochs"] == 3


def test_missing_train_file_exits_3(tmp_path, capsys):
    code = run(["train", "--train", tmp_path / "absent.jsonl", "--out", tmp_path / "o"])
    assert code == 3
    assert "absent.jsonl" in capsys.readouterr().err


def test_missing_required_path_exits_2(tmp_path):
    code = run(["train", "--out", tmp_path / "o"])
    assert code == 2


def test_unknown_config_key_exits_2(tmp_path, train_file):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"no_such_key": 1}))
    code = run(["train", "--config", bad, "--train", train_file, "--out", tmp_path / "o"])
    assert code == 2


def test_no_incongruity_recorded(tmp_path, train_file, quick_config):
    out = tmp_path / "run2"
    code = run(["train", "--config", quick_config, "--train", train_file,
                "--out", out, "--no-incongruity"])
    assert code == 0
    effective = json.loads((out / "effective_config.json").read_text())
    assert effective["lambda3"] == 0.0
    assert effective["no_incongruity"] is True
    summary = json.loads((out / "history.jsonl").read_text().splitlines()[-1])
    assert summary["summary"]["no_incongruity"] is True


def test_sep_sign_flag(tmp_path, train_file, quick_config):
    out = tmp_path / "run_sep"
    code = run(["train", "--config", quick_config, "--train", train_file,
                "--out", out, "--sep-sign", "-1"])
    assert code == 0
    assert json.loads((out / "effective_config.json").read_text())["sep_sign"] == -1
    out2 = tmp_path / "run_sep_pos"
    code = run(["train", "--config", quick_config, "--train", train_file,
                "--out", out2, "--sep-sign", "1"])
    assert code == 0
    assert json.loads((out2 / "effective_config.json").read_text())["sep_sign"] == 1


def test_paper_settings_flag(tmp_path, train_file, quick_config):
    out = tmp_path / "run3"
    # 60 records with batch 60 and accumulation 30: a single step per epoch
    code = run(["train", "--config", quick_config, "--train", train_file,
                "--out", out, "--paper-settings"])
    assert code == 0
    effective = json.loads((out / "effective_config.json").read_text())
    assert effective["batch_size"] == 60
    assert effective["accum_steps"] == 30
    assert effective["lr"] == 1e-4


def test_crossval_summary_and_reproducibility(tmp_path, train_file, quick_config):
    out_a, out_b = tmp_path / "cv_a", tmp_path / "cv_b"
    for out in (out_a, out_b):
        code = run(["crossval", "--config", quick_config, "--train", train_file,
                    "--out", out, "--folds", 5, "--seed", 11])
        assert code == 0
    summary = json.loads((out_a / "metrics_summary.json").read_text())
    assert len(summary["folds"]) == 5
    for key in ("accuracy", "precision", "recall", "f1"):
        want = np.mean([f["metrics"][key] for f in summary["folds"]])
        assert summary["mean"][key] == pytest.approx(want, rel=1e-12)

    def stripped(path):
        return [l for l in (path / "metrics_summary.json").read_text().splitlines()
                if "timestamp" not in l]

    assert stripped(out_a) == stripped(out_b)


def test_project_explain_evaluate_pipeline(tmp_path, train_file, quick_config):
    run_dir = tmp_path / "run4"
    assert run(["train", "--config", quick_config, "--train", train_file,
                "--out", run_dir, "--seed", 4]) == 0

    proj1 = tmp_path / "proj1"
    assert run(["project", "--checkpoint", run_dir / "checkpoint.json",
                "--train", train_file, "--out", proj1, "--seed", 4]) == 0
    params1, projection1, _ = load_checkpoint(proj1 / "checkpoint.json")
    assert projection1 is not None
    assert projection1["projection_count"] == 1
    assert projection1["sample_frac"] == 1.0

    # projecting again: idempotent vectors, incremented counter
    proj2 = tmp_path / "proj2"
    assert run(["project", "--checkpoint", proj1 / "checkpoint.json",
                "--train", train_file, "--out", proj2, "--seed", 4]) == 0
    params2, projection2, _ = load_checkpoint(proj2 / "checkpoint.json")
    assert projection2["projection_count"] == 2
    np.testing.assert_array_equal(params1.bank.semantic, params2.bank.semantic)
    assert ([p["record_id"] for p in projection1["semantic"]]
            == [p["record_id"] for p in projection2["semantic"]])

    # explanations: json and text renderings agree on distances
    expl_dir = tmp_path / "expl"
    assert run(["explain", "--checkpoint", proj1 / "checkpoint.json",
                "--test", train_file, "--record-id", "syn-00007",
                "--out", expl_dir, "--top-k", 3]) == 0
    obj = json.loads((expl_dir / "explanation_syn-00007.json").read_text())
    text = (expl_dir / "explanation_syn-00007.txt").read_text()
    for p in obj["prototypes"]:
        assert f"dist={p['distance']:.4f}" in text
    assert obj["record_id"] == "syn-00007"

    # unknown record id
    assert run(["explain", "--checkpoint", proj1 / "checkpoint.json",
                "--test", train_file, "--record-id", "nope",
                "--out", tmp_path / "e2"]) == 3

    # a records file explains every listed id
    ids_file = tmp_path / "ids.txt"
    ids_file.write_text("syn-00002\nsyn-00005\n")
    batch_dir = tmp_path / "expl_batch"
    assert run(["explain", "--checkpoint", proj1 / "checkpoint.json",
                "--test", train_file, "--records-file", ids_file,
                "--out", batch_dir]) == 0
    assert (batch_dir / "explanation_syn-00002.json").exists()
    assert (batch_dir / "explanation_syn-00005.txt").exists()

    # top_k clamp warns
    with pytest.warns(UserWarning, match="clamping"):
        assert run(["explain", "--checkpoint", proj1 / "checkpoint.json",
                    "--test", train_file, "--record-id", "syn-00007",
                    "--out", tmp_path / "e3", "--top-k", 99]) == 0

    # evaluate
    ev = tmp_path / "ev"
    assert run(["evaluate", "--checkpoint", run_dir / "checkpoint.json",
                "--test", train_file, "--out", ev]) == 0
    metrics = json.loads((ev / "metrics.json").read_text())
    assert set(metrics) >= {"accuracy", "precision", "recall", "f1", "confusion"}


def test_explain_requires_projection(tmp_path, train_file, quick_config):
    run_dir = tmp_path / "run5"
    assert run(["train", "--config", quick_config, "--train", train_file,
                "--out", run_dir]) == 0
    code = run(["explain", "--checkpoint", run_dir / "checkpoint.json",
                "--test", train_file, "--record-id", "syn-00001",
                "--out", tmp_path / "e"])
    assert code == 3


def test_gradcheck_pass_and_fail(tmp_path):
    out = tmp_path / "gc"
    assert run(["gradcheck", "--out", out, "--seed", 12]) == 0
    report = json.loads((out / "gradcheck.json").read_text())
    assert report["passed"] is True
    assert report["max_rel_err"] <= 1e-4
    assert report["worst_param"]

    # an absurd threshold forces the numerical-failure exit code
    assert run(["gradcheck", "--out", tmp_path / "gc2", "--seed", 12,
                "--threshold", 1e-18]) == 4
