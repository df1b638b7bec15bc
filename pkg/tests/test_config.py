"""Configuration grammar, presets, overrides, and the worker cap."""

import pytest

from crprobe import ConfigError
from crprobe.config import RunConfig, load_config, parse_config_text


def test_parse_basic_grammar():
    values = parse_config_text(
        """
        # a comment
        dataset.path = /data/x.tsv
        min_item_freq = 3
        split.ratios = 4,3,3
        model.bpr.lr = 0.1
        """
    )
    assert values["dataset_path"] == "/data/x.tsv"
    assert values["min_item_freq"] == 3
    assert values["ratios"] == (4.0, 3.0, 3.0)
    assert values["bpr_lr"] == 0.1


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown configuration key"):
        parse_config_text("min_item_frequency = 5")


def test_bad_value_rejected():
    with pytest.raises(ConfigError):
        parse_config_text("min_item_freq = lots")
    with pytest.raises(ConfigError):
        parse_config_text("split.ratios = 1,2")


def test_missing_equals_rejected():
    with pytest.raises(ConfigError, match="key = value"):
        parse_config_text("just some words")


def test_overrides_beat_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("min_item_freq = 5\nk = 10\n", encoding="utf-8")
    config = load_config(path, ["min_item_freq=2"])
    assert config.min_item_freq == 2
    assert config.k == 10


def test_preset_fills_grouping(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("dataset.preset = tmall\n", encoding="utf-8")
    config = load_config(path, [])
    assert config.grouping == "session-per-day"
    assert config.dataset_name == "tmall"


def test_explicit_grouping_beats_preset(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("dataset.preset = tmall\ngrouping = session\n", encoding="utf-8")
    assert load_config(path, []).grouping == "session"


def test_unknown_preset(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("dataset.preset = nope\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="unknown preset"):
        load_config(path, [])


def test_validation_catches_bad_ranges():
    with pytest.raises(ConfigError):
        load_config(None, ["hops=0"])
    with pytest.raises(ConfigError):
        load_config(None, ["grouping=weekly"])
    with pytest.raises(ConfigError):
        load_config(None, ["split.ratios=0,1,1"])


def test_workers_env_cap(monkeypatch):
    config = load_config(None, ["workers=8"])
    monkeypatch.delenv("CRPROBE_WORKERS", raising=False)
    assert config.effective_workers() == 8
    monkeypatch.setenv("CRPROBE_WORKERS", "2")
    assert config.effective_workers() == 2
    monkeypatch.setenv("CRPROBE_WORKERS", "16")
    assert config.effective_workers() == 8
    monkeypatch.setenv("CRPROBE_WORKERS", "zero")
    with pytest.raises(ConfigError):
        config.effective_workers()


def test_fingerprint_sensitive_to_preprocessing():
    base = RunConfig()
    other = RunConfig(min_item_freq=4)
    assert base.ingest_fingerprint("d" * 64) != other.ingest_fingerprint("d" * 64)
    assert base.ingest_fingerprint("d" * 64) == RunConfig().ingest_fingerprint("d" * 64)
    assert base.ingest_fingerprint("a" * 64) != base.ingest_fingerprint("b" * 64)
