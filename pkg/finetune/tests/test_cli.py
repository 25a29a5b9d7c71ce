"""CLI behaviors: happy paths, config errors, exit codes."""

import json

import pytest

from codemix_finetune.cli import main
from codemix_finetune.data import read_messages

from conftest import make_messages, write_jsonl

FAST_FINETUNE = """
[finetune]
epochs = 1
learning_rate = 1e-3
batch_size = 16
max_length = 32
hidden_size = 16
num_layers = 2
num_heads = 2
intermediate_size = 32
max_vocab = 200
"""


def write_config(path, body):
    path.write_text(body, encoding="utf-8")
    return str(path)


@pytest.fixture()
def workspace(tmp_path):
    data = tmp_path / "messages.jsonl"
    write_jsonl(make_messages(n=40), data)
    out = tmp_path / "run"
    cfg = write_config(tmp_path / "ft.toml", f"""
seed = 7

[io]
input = "messages.jsonl"
output_dir = "run"
soft_labels = "run/soft_labels.tsv"
topics_output = "run/with_topics.jsonl"
{FAST_FINETUNE}
[topics]
svd_components = 4
min_cluster_size = 5
""")
    return {"cfg": cfg, "dir": tmp_path, "out": out, "data": data}


def train(workspace):
    rc = main(["train", "--config", workspace["cfg"]])
    assert rc == 0
    return workspace["out"] / "checkpoint"


class TestTrain:
    def test_writes_checkpoint_and_log(self, workspace, capsys):
        ckpt = train(workspace)
        assert ckpt.is_dir()
        assert (ckpt / "tokenizer.json").is_file()
        log = json.loads((workspace["out"] / "training_log.json").read_text())
        assert log["config"]["seed"] == 7
        assert log["selected_frozen_layers"] in log["grid"]
        out = capsys.readouterr().out
        assert "frozen_layers" in out
        assert "checkpoint" in out

    def test_seed_flag_overrides_config(self, workspace):
        rc = main(["train", "--config", workspace["cfg"], "--seed", "9"])
        assert rc == 0
        log = json.loads((workspace["out"] / "training_log.json").read_text())
        assert log["config"]["seed"] == 9

    def test_input_flag_overrides_config(self, workspace, tmp_path):
        other = tmp_path / "other.jsonl"
        write_jsonl(make_messages(n=24, seed=8), other)
        rc = main(["train", "--config", workspace["cfg"], "--input", str(other)])
        assert rc == 0
        log = json.loads((workspace["out"] / "training_log.json").read_text())
        assert log["n_train"] + log["n_dev"] == 24

    def test_unlabeled_corpus_is_a_data_error(self, workspace):
        write_jsonl(make_messages(n=10, labeled=False), workspace["data"])
        assert main(["train", "--config", workspace["cfg"]]) == 3

    def test_missing_input_file(self, workspace):
        workspace["data"].unlink()
        assert main(["train", "--config", workspace["cfg"]]) == 2

    def test_output_dir_collision_with_file(self, workspace):
        workspace["out"].write_text("in the way", encoding="utf-8")
        assert main(["train", "--config", workspace["cfg"]]) == 4


class TestExportSoftLabels:
    def test_writes_tsv(self, workspace, capsys):
        train(workspace)
        rc = main(["export-soft-labels", "--config", workspace["cfg"]])
        assert rc == 0
        lines = (workspace["out"] / "soft_labels.tsv").read_text().splitlines()
        assert len(lines) == 40
        assert all("\t" in ln for ln in lines)
        assert "wrote 40 soft labels" in capsys.readouterr().out

    def test_checkpoint_required(self, workspace):
        assert main(["export-soft-labels", "--config", workspace["cfg"]]) == 2

    def test_explicit_checkpoint_key(self, workspace, tmp_path):
        ckpt = train(workspace)
        cfg = write_config(tmp_path / "exp.toml", f"""
[io]
input = "{workspace['data']}"
checkpoint = "{ckpt}"
soft_labels = "{tmp_path / 'alt.tsv'}"
""")
        assert main(["export-soft-labels", "--config", cfg]) == 0
        assert (tmp_path / "alt.tsv").is_file()


class TestExportTopics:
    def test_writes_merged_jsonl(self, workspace, capsys):
        train(workspace)
        rc = main(["export-topics", "--config", workspace["cfg"]])
        assert rc == 0
        back = read_messages(workspace["out"] / "with_topics.jsonl")
        assert len(back) == 40
        assert all(m.topic_id is not None for m in back)
        out = capsys.readouterr().out
        assert "outliers:" in out
        assert "wrote 40 messages" in out

    def test_topics_output_key_required(self, workspace, tmp_path):
        train(workspace)
        cfg = write_config(tmp_path / "t.toml", f"""
[io]
input = "{workspace['data']}"
checkpoint = "{workspace['out'] / 'checkpoint'}"
""")
        assert main(["export-topics", "--config", cfg]) == 2


class TestConfigHandling:
    def test_missing_config_file(self, tmp_path):
        assert main(["train", "--config", str(tmp_path / "none.toml")]) == 2

    def test_invalid_toml(self, tmp_path):
        cfg = write_config(tmp_path / "bad.toml", "seed = [unclosed")
        assert main(["train", "--config", cfg]) == 2

    def test_missing_io_keys_named(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.toml", "[io]\n")
        assert main(["train", "--config", cfg]) == 2
        assert "input" in capsys.readouterr().err

    def test_bad_finetune_value_type(self, workspace, tmp_path):
        cfg = write_config(tmp_path / "c.toml", f"""
[io]
input = "{workspace['data']}"
output_dir = "{tmp_path / 'r'}"

[finetune]
epochs = "ten"
""")
        assert main(["train", "--config", cfg]) == 2

    def test_frozen_layers_out_of_range(self, workspace, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.toml", f"""
[io]
input = "{workspace['data']}"
output_dir = "{tmp_path / 'r'}"

[finetune]
frozen_layers = 30
""")
        assert main(["train", "--config", cfg]) == 2
        assert "[0, 24]" in capsys.readouterr().err

    def test_bad_grid_rejected(self, workspace, tmp_path):
        cfg = write_config(tmp_path / "c.toml", f"""
[io]
input = "{workspace['data']}"
output_dir = "{tmp_path / 'r'}"

[finetune]
grid = []
""")
        assert main(["train", "--config", cfg]) == 2

    def test_relative_paths_resolve_against_config_dir(self, workspace):
        rc = main(["train", "--config", workspace["cfg"]])
        assert rc == 0
        assert (workspace["dir"] / "run" / "checkpoint").is_dir()
