"""Run configuration: flat ``key=value`` files with command-line overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class RunConfig:
    seed: int = 0
    # topics
    n_topics: int = 32
    topic_iters: int = 200
    topic_tol: float = 1e-6
    foldin_iters: int = 10
    # clustering
    user_ratio: float = 1000.0
    job_ratio: float = 500.0
    kmeans_iters: int = 100
    # spectral / wavelet layer
    cheb_order: int = 3
    interp_degree: int = 50
    scales: int = 4
    kappa_cap: float = 4.0
    hidden: int = 128
    layers: int = 1
    activation: str = "relu"
    wavelet: bool = True
    # personalisation / training
    window: int = 20
    min_prefix: int = 2
    lr: float = 1e-3
    epochs: int = 100
    patience: int = 20
    batch_size: int = 64
    samples_per_session: int = 1
    test_frac: float = 0.2
    val_frac: float = 0.2
    # evaluation
    k: int = 10
    threads: int = 1

    def validate(self) -> "RunConfig":
        positive = [
            "n_topics", "topic_iters", "foldin_iters", "kmeans_iters", "cheb_order", "interp_degree",
            "scales", "hidden", "layers", "window", "epochs", "batch_size", "samples_per_session", "k", "threads",
        ]
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be >= 1")
        for name in ("user_ratio", "job_ratio", "kappa_cap", "topic_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be > 0")
        if self.lr < 0:
            raise ConfigError("lr", "must be >= 0")
        if self.patience < 0:
            raise ConfigError("patience", "must be >= 0")
        if self.min_prefix < 1:
            raise ConfigError("min_prefix", "must be >= 1")
        if self.cheb_order > self.interp_degree:
            raise ConfigError("cheb_order", "must not exceed interp_degree")
        if self.activation not in ("relu", "identity", "tanh"):
            raise ConfigError("activation", "must be relu, identity or tanh")
        for name in ("test_frac", "val_frac"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(name, "must lie in [0, 1)")
        return self

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def dumps(self) -> str:
        return "".join(f"{k}={format_value(v)}\n" for k, v in self.as_dict().items())


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def coerce(cls, name: str, raw: str):
    types = {f.name: f.type for f in fields(cls)}
    if name not in types:
        raise ConfigError(name, "unknown configuration key")
    t = types[name]
    t = t if isinstance(t, str) else t.__name__
    raw = raw.strip()
    try:
        if t == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if t == "int":
            return int(raw)
        if t == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(name, f"cannot parse {raw!r} as {t}") from None
    return raw


def parse_pairs(cls, lines, source: str = "<config>") -> dict:
    out = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}", "expected key=value")
        key, value = line.split("=", 1)
        key = key.strip()
        out[key] = coerce(cls, key, value)
    return out


def load(cls, path=None, overrides=()):
    """Instantiate ``cls`` from an optional file plus ``key=value`` overrides."""
    values = {}
    if path is not None:
        values.update(parse_pairs(cls, Path(path).read_text(encoding="utf-8").splitlines(), str(path)))
    values.update(parse_pairs(cls, overrides, "--set"))
    cfg = cls(**values)
    if hasattr(cfg, "validate"):
        cfg.validate()
    return cfg
