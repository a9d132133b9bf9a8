import json
import shutil

import pytest

from clozeclass.cli import (
    EXIT_DIVERGENCE,
    EXIT_OK,
    EXIT_TRANSPORT,
    EXIT_VALIDATION,
    main,
)
from clozeclass import synthetic


@pytest.fixture(scope="module")
def synth_template(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli-synth") / "data"
    assert main(["synth", "--out", str(root)]) == EXIT_OK
    return root


@pytest.fixture
def workspace(synth_template, tmp_path):
    target = tmp_path / "data"
    shutil.copytree(synth_template, target)
    return target


def test_synth_writes_expected_files(synth_template):
    for name in ("config.yaml", "classes.txt", "train.jsonl", "test.jsonl"):
        assert (synth_template / name).exists()
    assert (synth_template / "caches" / "mlm.jsonl").exists()
    assert (synth_template / "caches" / "embed.jsonl").exists()


def test_synth_refuses_overwrite(synth_template):
    assert main(["synth", "--out", str(synth_template)]) == EXIT_VALIDATION


def test_pipeline_offline_end_to_end(workspace):
    config = str(workspace / "config.yaml")
    assert main(["pipeline", "--config", config, "--offline"]) == EXIT_OK
    metrics = json.loads(
        (workspace / "artifacts" / "metrics.json").read_text()
    )
    assert metrics["macro_f1"] >= 0.9


def test_single_stage_then_dependent_stage(workspace):
    config = str(workspace / "config.yaml")
    assert main(["signals", "--config", config, "--offline"]) == EXIT_OK
    assert (workspace / "artifacts" / "signals.jsonl").exists()
    assert main(["embed", "--config", config, "--offline"]) == EXIT_OK
    assert (workspace / "artifacts" / "store.bin").exists()


def test_missing_prerequisite_exits_validation(workspace):
    config = str(workspace / "config.yaml")
    assert main(["train", "--config", config, "--offline"]) == EXIT_VALIDATION


def test_missing_config_exits_validation(tmp_path):
    missing = str(tmp_path / "no-such.yaml")
    assert main(["pipeline", "--config", missing, "--offline"]) == EXIT_VALIDATION


def test_offline_with_empty_caches_exits_transport(workspace):
    (workspace / "caches" / "mlm.jsonl").unlink()
    config = str(workspace / "config.yaml")
    assert main(["signals", "--config", config, "--offline"]) == EXIT_TRANSPORT


def test_unreachable_endpoint_exits_transport(workspace, monkeypatch):
    from clozeclass.config import ENDPOINT_ENV_VAR

    (workspace / "caches" / "mlm.jsonl").unlink()
    monkeypatch.setenv(ENDPOINT_ENV_VAR, "http://127.0.0.1:1")
    config = str(workspace / "config.yaml")
    assert main(["signals", "--config", config]) == EXIT_TRANSPORT


def test_divergent_training_exits_divergence(workspace):
    import numpy as np

    config_path = workspace / "config.yaml"
    text = config_path.read_text().replace(
        "learning_rate: 0.05", "learning_rate: 1.0e+200"
    )
    assert "1.0e+200" in text
    config_path.write_text(text)
    config = str(config_path)
    for stage in ("signals", "embed", "pseudo", "filter", "pretrain"):
        assert main([stage, "--config", config, "--offline"]) == EXIT_OK
    with np.errstate(all="ignore"):
        assert main(["train", "--config", config, "--offline"]) == EXIT_DIVERGENCE


def test_seed_flag_changes_model_bytes(workspace, tmp_path):
    other = tmp_path / "other"
    shutil.copytree(workspace, other)
    for root, seed_args in ((workspace, []), (other, ["--seed", "99"])):
        config = str(root / "config.yaml")
        args = ["pipeline", "--config", config, "--offline"] + seed_args
        assert main(args) == EXIT_OK
    a = (workspace / "artifacts" / "model.bin").read_bytes()
    b = (other / "artifacts" / "model.bin").read_bytes()
    assert a != b


def test_rerun_skips_and_force_runs(workspace, caplog):
    import logging

    config = str(workspace / "config.yaml")
    assert main(["signals", "--config", config, "--offline"]) == EXIT_OK
    with caplog.at_level(logging.INFO, logger="clozeclass.pipeline"):
        assert main(["signals", "--config", config, "--offline"]) == EXIT_OK
    assert any("skipping" in r.message for r in caplog.records)
    caplog.clear()
    with caplog.at_level(logging.INFO, logger="clozeclass.pipeline"):
        args = ["signals", "--config", config, "--offline", "--force"]
        assert main(args) == EXIT_OK
    assert not any("skipping" in r.message for r in caplog.records)


def test_unknown_command_is_argparse_error(capsys):
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2
