"""Run configuration: a flat key-value file plus command-line overrides.

Grammar: one `key = value` pair per line; blank lines and lines starting
with '#' are ignored. Values are parsed per key (int, float, string, or a
comma list for ratios). Unknown keys are configuration errors so typos fail
fast. Dataset presets fill in column names and grouping for the six common
benchmarks; explicit keys always win over the preset.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .ingest import GROUP_SESSION, GROUP_SESSION_PER_DAY, GROUPINGS, ColumnMap

# Per-day grouping follows the conventions of the daily-activity benchmarks.
PRESETS: dict[str, dict] = {
    "grocery": {"grouping": GROUP_SESSION_PER_DAY},
    "cellphones": {"grouping": GROUP_SESSION_PER_DAY},
    "cosmetics": {"grouping": GROUP_SESSION},
    "diginetica": {"grouping": GROUP_SESSION},
    "yoochoose": {"grouping": GROUP_SESSION},
    "tmall": {"grouping": GROUP_SESSION_PER_DAY},
}

MODELS = ("item-knn", "sknn", "bpr-mf")


@dataclass
class RunConfig:
    dataset_path: str = ""
    dataset_name: str = "dataset"
    preset: str = ""
    column_session: str = "session_id"
    column_item: str = "item_id"
    column_time: str = "timestamp"
    grouping: str = GROUP_SESSION
    min_item_freq: int = 5
    min_len: int = 2
    ratios: tuple[float, float, float] = (7.0, 2.0, 1.0)
    hops: int = 4
    k: int = 10
    seed: int = 0
    out_dir: str = "out"
    workers: int = 1
    clique_cap: int = 500
    cr_denominator: str = "connected"  # or "all"
    prediction_mode: str = "per-pair"  # or "nearest-per-item"
    min_slice_size: int = 30
    item_knn_cap: int = 100
    sknn_k: int = 500
    sknn_recent: int = 5000
    bpr_dim: int = 128
    bpr_lr: float = 0.05
    bpr_l2: float = 1e-5
    bpr_epochs: int = 30
    bpr_negatives: int = 1
    bpr_batch: int = 256

    def columns(self) -> ColumnMap:
        return ColumnMap(session=self.column_session, item=self.column_item, time=self.column_time)

    def validate(self) -> None:
        if self.grouping not in GROUPINGS:
            raise ConfigError(f"grouping must be one of {GROUPINGS}, got {self.grouping!r}")
        if len(self.ratios) != 3 or any(r <= 0 for r in self.ratios):
            raise ConfigError(f"ratios must be three positive numbers, got {self.ratios!r}")
        if self.hops < 1:
            raise ConfigError("hops must be >= 1")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.min_item_freq < 1:
            raise ConfigError("min_item_freq must be >= 1")
        if self.min_len < 2:
            raise ConfigError("min_len must be >= 2")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.cr_denominator not in ("connected", "all"):
            raise ConfigError("cr_denominator must be 'connected' or 'all'")
        if self.prediction_mode not in ("per-pair", "nearest-per-item"):
            raise ConfigError("prediction_mode must be 'per-pair' or 'nearest-per-item'")

    def effective_workers(self) -> int:
        """Worker count, capped by the CRPROBE_WORKERS environment variable."""
        cap = os.environ.get("CRPROBE_WORKERS")
        if cap is None:
            return self.workers
        try:
            cap_value = int(cap)
        except ValueError:
            raise ConfigError(f"CRPROBE_WORKERS must be an integer, got {cap!r}") from None
        return max(1, min(self.workers, cap_value))

    def ingest_fingerprint(self, input_digest: str) -> str:
        """Content hash naming the cache directory for one (data, preprocessing) pair."""
        parts = [
            input_digest,
            self.grouping,
            str(self.min_item_freq),
            str(self.min_len),
            ",".join(f"{r:g}" for r in self.ratios),
            self.column_session,
            self.column_item,
            self.column_time,
        ]
        return hashlib.sha256("|".join(parts).encode("utf-8")).hexdigest()[:12]


_KEY_ALIASES = {
    "dataset.path": "dataset_path",
    "dataset.name": "dataset_name",
    "dataset.preset": "preset",
    "columns.session": "column_session",
    "columns.item": "column_item",
    "columns.time": "column_time",
    "split.ratios": "ratios",
    "model.item_knn.cap": "item_knn_cap",
    "model.sknn.k": "sknn_k",
    "model.sknn.recent": "sknn_recent",
    "model.bpr.dim": "bpr_dim",
    "model.bpr.lr": "bpr_lr",
    "model.bpr.l2": "bpr_l2",
    "model.bpr.epochs": "bpr_epochs",
    "model.bpr.negatives": "bpr_negatives",
    "model.bpr.batch": "bpr_batch",
}

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, raw: str):
    raw = raw.strip()
    if name == "ratios":
        parts = [p for p in raw.split(",") if p.strip()]
        if len(parts) != 3:
            raise ConfigError(f"ratios needs three comma-separated numbers, got {raw!r}")
        try:
            return tuple(float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"ratios needs numbers, got {raw!r}") from None
    ftype = _FIELD_TYPES[name]
    try:
        if ftype == "int":
            return int(raw)
        if ftype == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"key {name!r} needs a {ftype}, got {raw!r}") from None
    return raw


def _resolve_key(key: str) -> str:
    name = _KEY_ALIASES.get(key, key.replace(".", "_").replace("-", "_"))
    if name not in _FIELD_TYPES:
        raise ConfigError(f"unknown configuration key {key!r}")
    return name


def parse_config_text(text: str) -> dict:
    """Parse the key-value grammar into a {field: value} dict."""
    values: dict = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"config line {line_no}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        name = _resolve_key(key.strip())
        values[name] = _coerce(name, raw)
    return values


def load_config(
    path: str | Path | None, overrides: list[str] | None = None
) -> RunConfig:
    """Build a RunConfig from an optional file plus `key=value` overrides.

    The preset (if any) is applied first, then file keys, then overrides.
    """
    file_values = parse_config_text(Path(path).read_text(encoding="utf-8")) if path else {}
    override_values: dict = {}
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, _, raw = item.partition("=")
        name = _resolve_key(key.strip())
        override_values[name] = _coerce(name, raw)

    merged: dict = {}
    preset_name = override_values.get("preset", file_values.get("preset", ""))
    if preset_name:
        if preset_name not in PRESETS:
            raise ConfigError(
                f"unknown preset {preset_name!r}; available: {sorted(PRESETS)}"
            )
        merged.update(PRESETS[preset_name])
        merged.setdefault("dataset_name", preset_name)
    merged.update(file_values)
    merged.update(override_values)

    config = RunConfig(**merged)
    config.validate()
    return config
