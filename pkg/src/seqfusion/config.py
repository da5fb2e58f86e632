"""Experiment configuration: key-value files, flag overrides and per-dataset presets.

A config file is plain ``key = value`` lines; ``#`` starts a comment::

    synthetic = default
    models = all
    protocol = train-test
    seed = 0
    preset = synthetic
    lstm.epochs = 40
    hmm.states = 6
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .exceptions import ConfigError
from .lstm import TrainConfig
from .pipeline import ALL_IDS, HyperParams, as_model_id, parse_protocol

# LSTM size/dropout/batch/epochs, HMM states/iterations, RF trees per dataset.
UCR_PRESETS = {
    "ECoG": dict(n_units=2000, dropout=0.5, batch_size=32, epochs=50, hmm_states=6, hmm_iters=50, rf_trees=500),
    "FordA": dict(n_units=512, dropout=0.0, batch_size=1, epochs=20, hmm_states=2, hmm_iters=50, rf_trees=500),
    "FordB": dict(n_units=512, dropout=0.0, batch_size=1, epochs=20, hmm_states=2, hmm_iters=50, rf_trees=500),
    "Phalanges": dict(n_units=128, dropout=0.0, batch_size=1, epochs=10, hmm_states=2, hmm_iters=50, rf_trees=500),
    "Yoga": dict(n_units=256, dropout=0.0, batch_size=1, epochs=10, hmm_states=2, hmm_iters=50, rf_trees=500),
}

# Desk-scale settings for the four-block benchmark. HMM states follow the
# multivariate (ECoG) row; epochs sit where held-out MSE inside training_A
# stops improving.
PRESETS = dict(UCR_PRESETS)
PRESETS["synthetic"] = dict(n_units=32, dropout=0.0, batch_size=16, epochs=40, hmm_states=6, hmm_iters=50, rf_trees=500)

SYNTHETIC_DEFAULT = dict(n_samples=2000, n_s=10, n_d=5, l_d=100)
GRID_DEFAULT = dict(sizes=(1000,), lengths=(10, 50, 100), ratios=(0.2, 0.5, 0.8), total=10)

_LSTM_KEYS = {f.name for f in dataclasses.fields(TrainConfig)} - {"seed"}


def preset_hyperparams(name: str, seed: int = 0) -> HyperParams:
    try:
        p = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    lstm = TrainConfig(n_units=p["n_units"], dropout=p["dropout"], batch_size=p["batch_size"], epochs=p["epochs"])
    return HyperParams(lstm=lstm, hmm_states=p["hmm_states"], hmm_iters=p["hmm_iters"], rf_trees=p["rf_trees"], seed=seed)


def parse_kv(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def parse_models(spec) -> tuple[int, ...]:
    """``"all"``, ``"1,2,10"`` or ranges like ``"1-4,10"``."""
    if spec is None or str(spec).strip().lower() == "all":
        return tuple(int(m) for m in ALL_IDS)
    ids = []
    for part in str(spec).split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        if sep:
            try:
                ids.extend(range(int(lo), int(hi) + 1))
            except ValueError:
                raise ConfigError(f"bad model range {part!r}") from None
        else:
            ids.append(part)
    return tuple(int(as_model_id(m)) for m in ids)


def _parse_int_assignments(spec: str, allowed: dict) -> dict:
    out = dict(allowed)
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        key, sep, value = part.partition("=")
        key = key.strip()
        if not sep or key not in allowed:
            raise ConfigError(f"bad synthetic setting {part!r}; keys are {sorted(allowed)}")
        try:
            out[key] = int(value)
        except ValueError:
            raise ConfigError(f"synthetic setting {key} must be an integer") from None
    return out


def parse_synthetic(spec: str) -> dict:
    """``"default"`` or ``"n_samples=2000,n_s=10,n_d=5,l_d=100"`` (missing keys keep defaults)."""
    spec = (spec or "default").strip()
    params = dict(SYNTHETIC_DEFAULT) if spec == "default" else _parse_int_assignments(spec, SYNTHETIC_DEFAULT)
    if params["n_samples"] < 4:
        raise ConfigError("synthetic n_samples must be >= 4")
    if params["n_d"] < 1 or params["l_d"] < 2 or params["n_s"] < 0:
        raise ConfigError("synthetic needs n_d >= 1, l_d >= 2, n_s >= 0")
    return params


def parse_grid(spec: str | None) -> dict:
    """Grid axes from ``"sizes=500,1000;lengths=10,50,100;ratios=0.2,0.5,0.8;total=10"`` or a file."""
    if spec is None or spec.strip() in ("", "default"):
        return dict(GRID_DEFAULT)
    path = Path(spec)
    if path.exists():
        spec = ";".join(f"{k}={v}" for k, v in parse_kv(path.read_text()).items())
    grid = dict(GRID_DEFAULT)
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        key, sep, value = part.partition("=")
        key = key.strip()
        if not sep or key not in GRID_DEFAULT:
            raise ConfigError(f"bad grid axis {part!r}; axes are {sorted(GRID_DEFAULT)}")
        try:
            if key == "total":
                grid[key] = int(value)
            elif key == "ratios":
                grid[key] = tuple(float(v) for v in value.split(","))
            else:
                grid[key] = tuple(int(v) for v in value.split(","))
        except ValueError:
            raise ConfigError(f"grid axis {key} has a non-numeric value") from None
    if any(not 0 < r < 1 for r in grid["ratios"]):
        raise ConfigError("grid ratios must lie strictly between 0 and 1")
    if grid["total"] < 2:
        raise ConfigError("grid total must be >= 2")
    return grid


def _as_bool(value: str, key: str) -> bool:
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key} must be a boolean, got {value!r}")


@dataclass
class ExperimentConfig:
    data: str | None = None
    synthetic: str | None = None
    protocol: str = "train-test"
    models: tuple = tuple(int(m) for m in ALL_IDS)
    hp: HyperParams = field(default_factory=HyperParams)
    seed: int = 0
    out: str = "results"
    test_fraction: float = 0.5
    timing: bool = False
    grid: str | None = None
    preset: str | None = None

    def validate(self, need_source: bool = True) -> "ExperimentConfig":
        if need_source:
            if (self.data is None) == (self.synthetic is None):
                raise ConfigError("give exactly one of data or synthetic")
            if self.data is not None and not Path(self.data).exists():
                raise ConfigError(f"data file {self.data} does not exist")
            if self.synthetic is not None:
                parse_synthetic(self.synthetic)
        parse_protocol(self.protocol)
        for m in self.models:
            as_model_id(m)
        if not 0 < self.test_fraction < 1:
            raise ConfigError("test_fraction must be in (0, 1)")
        return self

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["models"] = list(self.models)
        return d


def build_config(file_values: dict | None = None, **flags) -> ExperimentConfig:
    """Merge config-file values and command-line flags (flags win, ``None`` means unset)."""
    values = dict(file_values or {})
    values.update({k: v for k, v in flags.items() if v is not None})
    seed = int(values.pop("seed", 0))
    preset = values.pop("preset", None)
    if preset is None:
        if values.get("synthetic") is not None:
            preset = "synthetic"
        elif values.get("data") is not None:
            stem = Path(str(values["data"])).stem.split("_")[0].split(".")[0]
            preset = next((name for name in UCR_PRESETS if name.lower() == stem.lower()), None)
    hp = preset_hyperparams(preset, seed) if preset else HyperParams(seed=seed)
    lstm_over, hp_over = {}, {}
    cfg = ExperimentConfig(seed=seed, preset=preset)
    for key, value in values.items():
        try:
            if key.startswith("lstm."):
                name = key[len("lstm."):]
                if name == "standardize":
                    hp_over["lstm_standardize"] = _as_bool(value, key)
                elif name in _LSTM_KEYS:
                    kind = type(getattr(TrainConfig(), name))
                    lstm_over[name] = kind(value)
                else:
                    raise ConfigError(f"unknown LSTM setting {key!r}")
            elif key == "hmm.states":
                hp_over["hmm_states"] = int(value)
            elif key == "hmm.iters":
                hp_over["hmm_iters"] = int(value)
            elif key == "hmm.standardize":
                hp_over["hmm_standardize"] = _as_bool(value, key)
            elif key == "rf.trees":
                hp_over["rf_trees"] = int(value)
            elif key == "activation_source":
                hp_over["activation_source"] = str(value)
            elif key == "models":
                cfg.models = parse_models(value) if isinstance(value, str) else tuple(int(as_model_id(m)) for m in value)
            elif key == "test_fraction":
                cfg.test_fraction = float(value)
            elif key == "timing":
                cfg.timing = value if isinstance(value, bool) else _as_bool(value, key)
            elif key in ("data", "synthetic", "protocol", "out", "grid"):
                setattr(cfg, key, str(value))
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key}: {value!r}") from None
    try:
        lstm = dataclasses.replace(hp.lstm, **lstm_over)
        cfg.hp = dataclasses.replace(hp, lstm=lstm, **hp_over)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    return cfg
