"""Run configuration: a flat key = value text file with validated fields.

Unknown keys are rejected outright so a typo cannot silently fall back to a
default.  All randomness in a run flows from the single `seed` through named
sub-seeds, one per consumer (generator, init, sampling), so changing the seed
changes everything and fixing it reproduces every artifact byte for byte.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields

ACTIVATIONS = ("relu", "tanh", "leaky_relu")
OPERATORS = ("normalized_laplacian", "unnormalized_laplacian", "adjacency")
FILTER_MODES = ("chi", "lowpass1")

DEFAULT_CANDIDATES = (1, 3, 5, 7, 9, 11, 13, 15, 17, 19, 2, 4, 8, 16, 32, 64, 128)


@dataclass
class SyntheticSpec:
    sizes: tuple[int, ...] = (300, 150, 150)
    feature_dims: tuple[int, ...] = (20, 12, 8)
    communities: int = 3
    anomaly_rate: float = 0.05
    shift: float = 1.5            # anomalous feature mean displacement
    rewire: float = 0.8           # fraction of anomaly edges rewired cross-community
    train_frac: float = 0.4
    val_frac: float = 0.2

    def validate(self) -> None:
        if len(self.sizes) < 2 or any(s < 4 for s in self.sizes):
            raise ValueError("need >= 2 node types with >= 4 nodes each")
        if len(self.feature_dims) != len(self.sizes):
            raise ValueError("feature_dims must match sizes in length")
        if any(d < 1 for d in self.feature_dims):
            raise ValueError("feature dims must be >= 1")
        if not (0.0 <= self.anomaly_rate < 0.5):
            raise ValueError("anomaly rate must lie in [0, 0.5)")
        if self.communities < 1:
            raise ValueError("need >= 1 community")
        if not (0.0 <= self.rewire <= 1.0):
            raise ValueError("rewire fraction must lie in [0, 1]")
        if self.shift < 0.0:
            raise ValueError("shift must be >= 0")
        if not (0.0 < self.train_frac and 0.0 < self.val_frac
                and self.train_frac + self.val_frac < 1.0):
            raise ValueError("train/val fractions must be positive and sum below 1")


# defaults follow the ACM column of the reference hyper-parameter table where
# one exists; the rest are documented package choices
@dataclass
class RunConfig:
    graph: str = ""
    candidates: tuple[int, ...] = DEFAULT_CANDIDATES
    bands: int = 10                      # K
    w_d: float = 0.1
    degree_budget: int = 3               # d
    aligned_dim: int = 512               # d_a
    path_min: int = 2
    path_max: int = 3
    learning_rate: float = 0.0001
    weight_decay: float = 0.0
    epochs: int = 200
    loss_h: float = 2.2                  # H
    loss_l: float = 1.9                  # L
    activation: str = "relu"
    mlp_layers: int = 4
    seed: int = 0
    operator: str = "normalized_laplacian"
    eig_cap: int = 3000
    filter_mode: str = "chi"             # lowpass1 = degree-1 low-pass ablation
    checkpoint: str = ""                 # consumed by eval
    synth: SyntheticSpec = field(default_factory=SyntheticSpec)

    def validate(self) -> None:
        if not self.candidates or any(int(i) != i or i < 1 for i in self.candidates):
            raise ValueError("candidates must be a nonempty list of integers >= 1")
        if self.bands < 1:
            raise ValueError("bands must be >= 1")
        if not (0.0 < self.w_d <= 1.0):
            raise ValueError("w_d must lie in (0, 1]")
        if self.degree_budget < 1:
            raise ValueError("degree_budget must be >= 1")
        if self.aligned_dim < 1:
            raise ValueError("aligned_dim must be >= 1")
        if not (1 <= self.path_min <= self.path_max):
            raise ValueError("need 1 <= path_min <= path_max")
        if self.learning_rate < 0.0:
            raise ValueError("learning_rate must be >= 0")
        if self.weight_decay < 0.0:
            raise ValueError("weight_decay must be >= 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not (self.loss_h >= self.loss_l >= 1.0):
            raise ValueError("loss weights must satisfy H >= L >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if self.mlp_layers < 1:
            raise ValueError("mlp_layers must be >= 1")
        if self.operator not in OPERATORS:
            raise ValueError(f"operator must be one of {OPERATORS}")
        if self.eig_cap < 10:
            raise ValueError("eig_cap must be >= 10")
        if self.filter_mode not in FILTER_MODES:
            raise ValueError(f"filter_mode must be one of {FILTER_MODES}")
        self.synth.validate()

    def arch_fingerprint(self) -> dict:
        """The architecture-determining fields a checkpoint must agree on."""
        return {
            "candidates": list(self.candidates),
            "bands": self.bands,
            "w_d": self.w_d,
            "degree_budget": self.degree_budget,
            "aligned_dim": self.aligned_dim,
            "path_min": self.path_min,
            "path_max": self.path_max,
            "activation": self.activation,
            "mlp_layers": self.mlp_layers,
            "operator": self.operator,
            "eig_cap": self.eig_cap,
            "filter_mode": self.filter_mode,
        }


def sub_seed(seed: int, name: str) -> int:
    """Stable named sub-stream of the master seed."""
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


_INT_KEYS = {"bands", "degree_budget", "aligned_dim", "path_min", "path_max",
             "epochs", "mlp_layers", "seed", "eig_cap"}
_FLOAT_KEYS = {"w_d", "learning_rate", "weight_decay", "loss_h", "loss_l"}
_STR_KEYS = {"graph", "activation", "operator", "filter_mode", "checkpoint"}
_SYNTH_INT = {"synth_communities": "communities"}
_SYNTH_FLOAT = {"synth_anomaly_rate": "anomaly_rate", "synth_shift": "shift",
                "synth_rewire": "rewire", "synth_train_frac": "train_frac",
                "synth_val_frac": "val_frac"}
_SYNTH_TUPLE = {"synth_sizes": "sizes", "synth_feature_dims": "feature_dims"}


def parse_config(text: str) -> RunConfig:
    """Parse `key = value` lines; '#' starts a comment; unknown keys error."""
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        try:
            if key in _INT_KEYS:
                setattr(cfg, key, int(value))
            elif key in _FLOAT_KEYS:
                setattr(cfg, key, float(value))
            elif key in _STR_KEYS:
                setattr(cfg, key, value)
            elif key == "candidates":
                cfg.candidates = tuple(int(v) for v in value.split(",") if v.strip())
            elif key in _SYNTH_INT:
                setattr(cfg.synth, _SYNTH_INT[key], int(value))
            elif key in _SYNTH_FLOAT:
                setattr(cfg.synth, _SYNTH_FLOAT[key], float(value))
            elif key in _SYNTH_TUPLE:
                setattr(cfg.synth, _SYNTH_TUPLE[key],
                        tuple(int(v) for v in value.split(",") if v.strip()))
            else:
                raise KeyError(key)
        except KeyError:
            raise ValueError(f"config line {lineno}: unknown key '{key}'") from None
        except ValueError as exc:
            raise ValueError(f"config line {lineno}: bad value for '{key}': {exc}") from None
    cfg.validate()
    return cfg


def load_config(path: str) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def config_to_dict(cfg: RunConfig) -> dict:
    out = {}
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if f.name == "synth":
            out["synth"] = {sf.name: list(getattr(v, sf.name))
                            if isinstance(getattr(v, sf.name), tuple)
                            else getattr(v, sf.name)
                            for sf in fields(v)}
        elif isinstance(v, tuple):
            out[f.name] = list(v)
        else:
            out[f.name] = v
    return out
