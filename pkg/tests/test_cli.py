import csv
import json

import numpy as np
import pytest
from typer.testing import CliRunner

from milk.CLI.CLI import app

runner = CliRunner()

SMALL = ["--n-users", "40", "--n-items", "30", "--latent-dim", "3", "--feature-dim", "5", "--feature-dim", "4", "--interactions-per-user", "5"]
FAST = ["--epochs", "2", "--d", "4", "--batch-size", "64", "--lr", "0.01"]


def invoke(out, *args, seed=0):
    return runner.invoke(app, ["--out", str(out), "--seed", str(seed), *args])


@pytest.fixture
def generated(tmp_path):
    out = tmp_path / "run"
    result = invoke(out, "generate", *SMALL)
    assert result.exit_code == 0, result.output
    return out


@pytest.fixture
def trained(generated):
    assert invoke(generated, "split").exit_code == 0
    result = invoke(generated, "train", *FAST)
    assert result.exit_code == 0, result.output
    return generated


def test_generate_writes_dataset(generated):
    data = generated / "data"
    assert (data / "interactions.tsv").is_file()
    assert (data / "modality_0.mfea").is_file()
    assert (data / "modality_1.mfea").is_file()
    assert json.loads((data / "synthetic.json").read_text(encoding="utf-8"))["n_items"] == 30
    config = json.loads((generated / "config.json").read_text(encoding="utf-8"))
    assert config["feature_dims"] == [5, 4]
    assert config["seed"] == 0


def test_generate_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert invoke(a, "generate", *SMALL).exit_code == 0
    assert invoke(b, "generate", *SMALL).exit_code == 0
    for name in ("interactions.tsv", "modality_0.mfea", "modality_1.mfea"):
        assert (a / "data" / name).read_bytes() == (b / "data" / name).read_bytes()


def test_generate_default_feature_headers(tmp_path):
    out = tmp_path / "default"
    assert invoke(out, "generate").exit_code == 0
    for m in range(2):
        blob = (out / "data" / f"modality_{m}.mfea").read_bytes()
        assert np.frombuffer(blob, dtype="<u4", count=2, offset=8).tolist() == [300, 32]


def test_split_writes_manifest_and_masks(generated):
    result = invoke(generated, "split", "--protocol", "FTMT", "--new-ratio", "0.2")
    assert result.exit_code == 0, result.output
    manifest = json.loads((generated / "manifest.json").read_text(encoding="utf-8"))
    assert len(manifest["val_items"]) == 3
    assert len(manifest["test_items"]) == 3
    assert manifest["protocol"] == "FTMT"

    test_mask = np.loadtxt(generated / "test_mask.csv", delimiter=",", dtype=int)
    assert int((test_mask[manifest["test_items"]].sum(axis=1) == 1).sum()) == 1
    assert (np.loadtxt(generated / "train_mask.csv", delimiter=",", dtype=int) == 1).all()


def test_train_then_evaluate(trained):
    assert (trained / "ckpt" / "best.ckpt").is_file()
    history = (trained / "history.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(history) == 2

    result = invoke(trained, "evaluate", "--k", "5", "--k", "10")
    assert result.exit_code == 0, result.output
    report = json.loads((trained / "metrics" / "test.json").read_text(encoding="utf-8"))
    assert set(report["K"]) == {"5", "10"}
    assert set(report["groups"]) == {"full", "missing_one", "missing_two"}


def test_evaluate_is_deterministic(trained):
    assert invoke(trained, "evaluate").exit_code == 0
    first = (trained / "metrics" / "test.json").read_bytes()
    assert invoke(trained, "evaluate").exit_code == 0
    assert (trained / "metrics" / "test.json").read_bytes() == first


def test_train_variant_no_both(generated):
    result = invoke(generated, "train", "--variant", "no_both", *FAST)
    assert result.exit_code == 0, result.output
    config = json.loads((generated / "config.json").read_text(encoding="utf-8"))
    assert (config["beta"], config["lambda"], config["env_variant"]) == (0.0, 0.0, "single")
    assert (generated / "manifest.json").is_file()


def test_missing_checkpoint_exits_with_config_error(generated):
    result = invoke(generated, "evaluate")
    assert result.exit_code == 1


def test_gradcheck(tmp_path):
    result = invoke(tmp_path, "gradcheck")
    assert result.exit_code == 0, result.output
    assert "max_rel_err" in result.output
    report = json.loads((tmp_path / "metrics" / "gradcheck.json").read_text(encoding="utf-8"))
    assert set(report["per_group"]) == {"user_embeddings", "W", "b"}
    assert report["max_rel_err"] <= 1e-4


def test_gradcheck_detects_corruption(tmp_path):
    result = invoke(tmp_path, "gradcheck", "--corrupt-gradient")
    assert result.exit_code == 3


def test_ablate_modules_table(generated):
    config = generated / "fast.json"
    config.write_text(json.dumps({"max_epochs": 2, "d": 4, "batch_size": 64, "lr": 0.01, "ks": [10]}), encoding="utf-8")
    result = runner.invoke(app, ["--config", str(config), "--out", str(generated), "ablate", "--table", "modules"])
    assert result.exit_code == 0, result.output

    with open(generated / "metrics" / "ablation_modules.csv", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert [row["variant"] for row in rows] == ["full", "no_cmam", "no_ceim", "no_both"]
    assert (generated / "metrics" / "ablation_modules" / "no_both.json").is_file()


def test_unknown_config_key_exits_with_config_error(generated):
    config = generated / "bad.json"
    config.write_text(json.dumps({"learning_rate": 0.1}), encoding="utf-8")
    result = runner.invoke(app, ["--config", str(config), "--out", str(generated), "split"])
    assert result.exit_code == 1


def test_unknown_protocol(generated):
    assert invoke(generated, "split", "--protocol", "XTXT").exit_code == 1


def test_malformed_interactions_exit_with_data_error(generated):
    bad = generated / "bad.tsv"
    bad.write_text("0\t1\nnot a line\n", encoding="utf-8")
    result = invoke(generated, "split", "--interactions", str(bad))
    assert result.exit_code == 2


@pytest.mark.parametrize("args", [
    ("train", "--epochs", "abc"),
    ("train", "--bogus"),
    ("no-such-command",),
])
def test_usage_errors_exit_with_config_error(tmp_path, args):
    assert invoke(tmp_path, *args).exit_code == 1


def test_undecodable_interactions_exit_with_data_error(generated):
    bad = generated / "bad.tsv"
    bad.write_bytes(b"0\t1\n\xff\xfe\t2\n")
    result = invoke(generated, "split", "--interactions", str(bad))
    assert result.exit_code == 2


def run_pipeline(out, seed):
    for args in (("generate", *SMALL), ("split",), ("train", "--epochs", "20", "--d", "4", "--batch-size", "64", "--lr", "0.01"), ("evaluate",)):
        result = invoke(out, *args, seed=seed)
        assert result.exit_code == 0, result.output
    return json.loads((out / "metrics" / "test.json").read_text(encoding="utf-8"))


def flatten(report, prefix=""):
    values = {}
    for key, value in report.items():
        if isinstance(value, dict):
            values.update(flatten(value, f"{prefix}{key}/"))
        else:
            values[f"{prefix}{key}"] = value
    return values


def test_full_pipeline_is_deterministic(tmp_path):
    first = flatten(run_pipeline(tmp_path / "a", seed=5))
    second = flatten(run_pipeline(tmp_path / "b", seed=5))
    assert first.keys() == second.keys()
    for key, value in first.items():
        if isinstance(value, float):
            assert value == pytest.approx(second[key], abs=1e-9), key
        else:
            assert value == second[key], key

    run_pipeline(tmp_path / "c", seed=6)
    checkpoint = ("ckpt", "best.ckpt")
    assert (tmp_path / "a").joinpath(*checkpoint).read_bytes() != (tmp_path / "c").joinpath(*checkpoint).read_bytes()


def test_evaluate_reuses_stored_imputation(generated):
    assert invoke(generated, "split").exit_code == 0
    assert invoke(generated, "train", "--imputation", "zero", *FAST).exit_code == 0

    assert invoke(generated, "evaluate").exit_code == 0
    assert json.loads((generated / "config.json").read_text(encoding="utf-8"))["imputation"] == "zero"
    replayed = (generated / "metrics" / "test.json").read_bytes()

    assert invoke(generated, "evaluate", "--imputation", "zero").exit_code == 0
    assert (generated / "metrics" / "test.json").read_bytes() == replayed
    assert invoke(generated, "evaluate", "--imputation", "mean").exit_code == 0
    assert json.loads((generated / "config.json").read_text(encoding="utf-8"))["imputation"] == "mean"
