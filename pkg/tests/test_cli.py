import json
from pathlib import Path

import numpy as np
import pytest

from motionlm.cli import main, load_run_config, ConfigError
from motionlm.cli.ablate import run_ablation, AXES

MICRO_TOML = """
seed = 5
out = "{out}"

[data]
clips = 14
frames = 32
joints = 8
fps = 30.0
multi_agent_fraction = 0.25
val_fraction = 0.15
test_fraction = 0.15

[tokenizer]
channels = 16
blocks_per_layer = 1
batch_size = 4
max_train_frames = 32
stage1_steps = 25
stage2_steps = 10
flow_blocks = 2

[ar]
layers = 1
heads = 2
width = 32
ffn_width = 64
context = 512
batch_size = 2
pretrain_steps = 14
sft_steps = 10
specialist_steps = 8

[eval]
generate_samples = 2
flow_steps = 3
max_new = 72
diversity_n = 8
embed_dim = 8

[pipeline]
text_vocab = 300
"""


def write_micro_config(tmp_path, out_name="run"):
    cfg_path = tmp_path / "run.toml"
    cfg_path.write_text(MICRO_TOML.format(out=(tmp_path / out_name).as_posix()))
    return cfg_path


class TestRunConfig:
    def test_defaults_load(self):
        cfg = load_run_config(None)
        assert cfg.tokenizer.quantizer == "fsq"
        assert cfg.ar.width % cfg.ar.heads == 0

    def test_unknown_top_key_rejected(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("mystery = 1\n")
        with pytest.raises(ConfigError, match="unknown top-level"):
            load_run_config(p)

    def test_unknown_section_key_rejected(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("[tokenizer]\nturbo = true\n")
        with pytest.raises(ConfigError, match="unknown keys"):
            load_run_config(p)

    def test_invalid_value_rejected(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("[tokenizer]\ndownsample_total = 3\n")
        with pytest.raises(ConfigError, match="power of 2"):
            load_run_config(p)

    def test_micro_config_parses(self, tmp_path):
        cfg = load_run_config(write_micro_config(tmp_path))
        assert cfg.seed == 5
        assert cfg.data.clips == 14
        assert cfg.tokenizer.channels == 16


class TestCliExitCodes:
    def test_config_error_exit_2(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("nonsense = 3\n")
        assert main(["synth", "--config", str(bad)]) == 2

    def test_data_error_exit_3(self, tmp_path):
        cfg = write_micro_config(tmp_path)
        code = main(["tokenize", "--config", str(cfg),
                     "--clip", str(tmp_path / "missing.motc")])
        assert code == 3


@pytest.fixture(scope="module")
def pipeline_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("pipe")
    cfg_path = write_micro_config(tmp)
    assert main(["pipeline", "--config", str(cfg_path)]) == 0
    return tmp, cfg_path


class TestPipeline:
    def test_artifacts_exist(self, pipeline_run):
        tmp, _ = pipeline_run
        out = tmp / "run"
        assert (out / "config.json").exists()
        assert (out / "data" / "manifest.json").exists()
        assert (out / "tokenizer" / "flow" / "bundle" / "tokenizer.json").exists()
        assert (out / "corpus" / "vocab.txt").exists()
        assert (out / "ar" / "specialist_t2m" / "armodel.mprm").exists()
        assert (out / "eval" / "report.json").exists()

    def test_report_has_core_metrics(self, pipeline_run):
        tmp, _ = pipeline_run
        report = json.loads((tmp / "run" / "eval" / "report.json").read_text())
        for key in ("recon_plain.mpjpe_all", "recon_flow.mpjpe_all",
                    "retrieval.r_precision_top1", "l1div_real"):
            assert key in report["values"], key

    def test_resume_skips_fresh_stages(self, pipeline_run, capsys):
        tmp, cfg_path = pipeline_run
        assert main(["pipeline", "--config", str(cfg_path)]) == 0
        out = capsys.readouterr().out
        assert out.count("up to date, skipping") >= 7

    def test_stage_rerun_after_artifact_deleted(self, pipeline_run, capsys):
        tmp, cfg_path = pipeline_run
        stamp = tmp / "run" / "eval" / "stamp.json"
        stamp.unlink()
        assert main(["pipeline", "--config", str(cfg_path)]) == 0
        out = capsys.readouterr().out
        assert "eval: running" in out
        assert "train-vq: up to date, skipping" in out

    def test_tokenize_detokenize_cli(self, pipeline_run):
        tmp, cfg_path = pipeline_run
        clip_path = next((tmp / "run" / "data").glob("clip*.motc"))
        tokens = tmp / "toks.json"
        assert main(["tokenize", "--config", str(cfg_path),
                     "--clip", str(clip_path), "--tokens", str(tokens)]) == 0
        payload = json.loads(tokens.read_text())
        assert payload["frames"] == 32
        out_clip = tmp / "recon.motc"
        assert main(["detokenize", "--config", str(cfg_path),
                     "--tokens", str(tokens), "--clip", str(out_clip),
                     "--decoder", "plain"]) == 0
        from motionlm.data import read_clip
        recon = read_clip(out_clip)
        assert recon.frames == 32

    def test_generate_cli(self, pipeline_run, capsys):
        tmp, cfg_path = pipeline_run
        prefix = tmp / "prefix.json"
        prefix.write_text(json.dumps({"task": "t2m",
                                      "caption": "a person walks forward"}))
        result_path = tmp / "gen.json"
        assert main(["generate", "--config", str(cfg_path),
                     "--prefix", str(prefix), "--max-new", "64",
                     "--output", str(result_path)]) == 0
        result = json.loads(result_path.read_text())
        assert result["reply_kinds"] == ["motion"]

    def test_determinism_byte_identical_reports(self, pipeline_run, tmp_path):
        tmp, _ = pipeline_run
        cfg_path = write_micro_config(tmp_path, out_name="again")
        assert main(["pipeline", "--config", str(cfg_path)]) == 0
        a = (tmp / "run" / "eval" / "report.json").read_bytes()
        b = (tmp_path / "again" / "eval" / "report.json").read_bytes()
        assert a == b


class TestAblate:
    def test_axis_registry_covers_spec(self):
        expected = {"quantizer", "standardization", "dilation", "down_order",
                    "causal", "patchify", "norm_act", "depth", "clip_length",
                    "code_dim"}
        assert expected <= set(AXES)

    def test_quantizer_axis_table(self, tmp_path):
        cfg = load_run_config(write_micro_config(tmp_path))
        table = run_ablation(cfg, "quantizer", grid=["vq", "fsq", "lfq", "rvq3"],
                             steps=6, log=lambda *a: None)
        assert set(table["rows"]) == {"vq", "fsq", "lfq", "rvq3"}
        for row in table["rows"].values():
            assert "failed" not in row
            assert len(row) == 8
        out = tmp_path / "run" / "ablate" / "quantizer"
        assert (out / "table.json").exists()
        assert (out / "table.txt").exists()

    def test_unknown_axis_rejected(self, tmp_path):
        cfg = load_run_config(write_micro_config(tmp_path))
        with pytest.raises(ValueError, match="unknown ablation axis"):
            run_ablation(cfg, "florp")

    def test_standardization_axis_labels(self):
        assert AXES["standardization"] == ["none", "standard", "avg-std", "min-max"]
