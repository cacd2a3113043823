"""Run configuration: TOML file values merged with command-line overrides."""

from __future__ import annotations

import dataclasses
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from smh.boosting import TreeParams
from smh.experiment import DOWNSTREAM_PARAMS, FEATURE_K
from smh.reconstruct import AugmentationConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

# top-level keys, named like the command-line flags
TOP_LEVEL = {
    "dataset": str, "smiles_col": str, "target_col": str, "out": str,
    "folds": int, "threads": int,
    "k": int, "spectral_mode": str, "gamma": float, "fraction": float, "cutoff": float, "seed": int,
}
# short names that map onto AugmentationConfig fields
AUGMENT_ALIASES = {
    "fraction": "sampling_fraction", "cutoff": "binarization_cutoff", "seed": "master_seed",
    "k": "k", "spectral_mode": "spectral_mode", "gamma": "gamma", "threads": "threads",
}
DOWNSTREAM_KEYS = {"feature_k", "n_estimators", "learning_rate", "max_depth", "reg_lambda"}


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps this to exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    dataset: Optional[str] = None
    smiles_col: str = "smiles"
    target_col: str = "target"
    out: Optional[str] = None
    folds: int = 5
    threads: int = 1
    augmentation: AugmentationConfig = field(default_factory=AugmentationConfig)
    feature_k: int = FEATURE_K
    downstream: TreeParams = DOWNSTREAM_PARAMS

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError("folds must be at least 2")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.feature_k < 1:
            raise ConfigError("feature_k must be at least 1")

    @property
    def seed(self) -> int:
        return self.augmentation.master_seed

    def out_dir(self) -> Path:
        if self.out:
            return Path(self.out)
        stem = Path(self.dataset).stem if self.dataset else "data"
        return Path(f"run_{stem}")

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "smiles_col": self.smiles_col,
            "target_col": self.target_col,
            "folds": self.folds,
            "seed": self.seed,
            "augmentation": self.augmentation.to_dict(),
            "downstream": {"feature_k": self.feature_k, **dataclasses.asdict(self.downstream)},
        }


def read_toml(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"file not found: {p}")
    try:
        with open(p, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: {exc}") from exc


def _check_type(key, value, kind):
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigError(f"{key} must be of type {kind.__name__}")
    return value


def resolve(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge file values and overrides (overrides win; ``None`` means not given).

    The file may hold the flag-named keys at top level plus ``[augmentation]`` with any
    :class:`AugmentationConfig` field and ``[downstream]`` with tree hyperparameters.
    """
    file_values = dict(file_values or {})
    aug_section = dict(file_values.pop("augmentation", {}) or {})
    down_section = dict(file_values.pop("downstream", {}) or {})
    unknown = set(file_values) - set(TOP_LEVEL)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = {k: _check_type(k, v, TOP_LEVEL[k]) for k, v in file_values.items()}
    for k, v in (overrides or {}).items():
        if v is not None:
            merged[k] = v

    aug_fields = {f.name for f in dataclasses.fields(AugmentationConfig)}
    bad = set(aug_section) - aug_fields
    if bad:
        raise ConfigError(f"unknown augmentation keys: {sorted(bad)}")
    aug = dict(aug_section)
    for short, name in AUGMENT_ALIASES.items():
        if short in merged:
            aug[name] = merged[short]
    bad = set(down_section) - DOWNSTREAM_KEYS
    if bad:
        raise ConfigError(f"unknown downstream keys: {sorted(bad)}")
    feature_k = down_section.pop("feature_k", FEATURE_K)
    threads = merged.get("threads", os.cpu_count() or 1)
    aug.setdefault("threads", threads)
    try:
        augmentation = AugmentationConfig(**aug)
        downstream = dataclasses.replace(DOWNSTREAM_PARAMS, **down_section)
        return RunConfig(
            dataset=merged.get("dataset"),
            smiles_col=merged.get("smiles_col", "smiles"),
            target_col=merged.get("target_col", "target"),
            out=merged.get("out"),
            folds=merged.get("folds", 5),
            threads=threads,
            augmentation=augmentation,
            feature_k=feature_k,
            downstream=downstream,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
