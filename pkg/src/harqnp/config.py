"""Campaign configuration: YAML files, defaults, validation and overrides."""

import copy
import os
from dataclasses import asdict, dataclass, field

import yaml

from .predictors import KINDS

ENV_PREFIX = "HARQNP_"

FAMILIES = ("ml", "bd", "sp")
CONVENTIONS = ("EsN0", "EbN0", "power")

DEFAULT_PREDICTORS = {
    "ml": ["np_exact", "llr_mean", "subcode", "mi_full", "mi_valid", "decode_based"],
    "bd": ["np_exact", "np_coset", "np_quant", "llr_mean", "subcode", "mi_full", "mi_valid",
           "decode_based"],
    "sp": ["np_kde", "llr_mean", "subcode", "mi_full", "mi_valid", "decode_based"],
}

# statistics that need a particular decoder family
FAMILY_ONLY = {"np_coset": ("bd",), "np_quant": ("bd",)}


class ConfigError(ValueError):
    """Invalid or inconsistent campaign configuration."""


@dataclass
class CodeConfig:
    n: int = None
    k_target: int = None
    col_weight: int = 3
    row_weight: int = 6
    seed: int = 1
    method: str = "auto"
    alist: str = None
    max_retries: int = 64


@dataclass
class ChannelConfig:
    snr_db: float = None
    convention: str = "EsN0"


@dataclass
class DecoderConfig:
    family: str = "ml"
    t: int = 1
    iterations: int = 20
    early_stop: bool = True
    clamp: float = 30.0


@dataclass
class OracleConfig:
    route: str = "auto"
    qmc_points: int = 1024
    qmc_shifts: int = 8
    max_dim: int = 64
    truncation_nats: float = 40.0
    p_success_samples: int = 20000
    inner_samples: int = 10000
    coset_max_patterns: int = 1 << 16
    weight_cap: int = None


@dataclass
class SubcodeConfig:
    iterations: int = 5
    full_rows: bool = False


@dataclass
class KdeConfig:
    mode: str = "regression"
    training_trials: int = 20000
    floor: float = 1e-3
    max_points: int = 20000


@dataclass
class CampaignConfig:
    code: CodeConfig = field(default_factory=CodeConfig)
    crc: str = "1+x^2+x^3+x^4"
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    decoder: DecoderConfig = field(default_factory=DecoderConfig)
    prediction_lengths: list = field(default_factory=list)
    predictors: list = None
    trial_count: int = 100000
    master_seed: int = 0
    oracle: OracleConfig = field(default_factory=OracleConfig)
    subcode: SubcodeConfig = field(default_factory=SubcodeConfig)
    kde: KdeConfig = field(default_factory=KdeConfig)
    chunk_size: int = 256
    threads: int = 1
    output_dir: str = "out"
    store_received: bool = False

    @property
    def predictor_list(self):
        return list(self.predictors) if self.predictors else list(DEFAULT_PREDICTORS[self.decoder.family])

    def to_dict(self):
        return asdict(self)

    def validate(self):
        c = self.code
        if c.alist is None and (c.n is None or c.n < 2):
            raise ConfigError("code.n is required (or code.alist)")
        if self.channel.snr_db is None:
            raise ConfigError("channel.snr_db is required")
        if self.channel.convention not in CONVENTIONS:
            raise ConfigError(f"unknown SNR convention {self.channel.convention!r}")
        if c.method not in ("auto", "peg", "gallager"):
            raise ConfigError(f"unknown construction method {c.method!r}")
        if self.decoder.family not in FAMILIES:
            raise ConfigError(f"decoder.family must be one of {FAMILIES}")
        if self.decoder.t < 0 or self.decoder.iterations < 1:
            raise ConfigError("decoder.t must be >= 0 and decoder.iterations >= 1")
        if not isinstance(self.trial_count, int) or self.trial_count < 1:
            raise ConfigError("trial_count must be a positive integer")
        if not self.prediction_lengths:
            raise ConfigError("prediction_lengths must list at least one p")
        n = c.n
        for p in self.prediction_lengths:
            if not isinstance(p, int) or p < 1 or (n is not None and p > n):
                raise ConfigError(f"prediction length {p} outside [1, n]")
        for kind in self.predictor_list:
            if kind not in KINDS:
                raise ConfigError(f"unknown predictor {kind!r}")
            allowed = FAMILY_ONLY.get(kind)
            if allowed and self.decoder.family not in allowed:
                raise ConfigError(f"predictor {kind} requires decoder family {allowed}")
        if self.oracle.route not in ("auto", "nested_mc"):
            raise ConfigError("oracle.route must be 'auto' or 'nested_mc'")
        if self.kde.mode not in ("regression", "density"):
            raise ConfigError("kde.mode must be 'regression' or 'density'")
        if self.chunk_size < 1 or self.threads < 1:
            raise ConfigError("chunk_size and threads must be positive")
        return self


def _merge(obj, data, path=""):
    for key, value in data.items():
        if not hasattr(obj, key):
            raise ConfigError(f"unknown config key {path + key!r}")
        current = getattr(obj, key)
        if hasattr(current, "__dataclass_fields__") and isinstance(value, dict):
            _merge(current, value, path + key + ".")
        else:
            setattr(obj, key, value)
    return obj


def from_dict(data):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    return _merge(CampaignConfig(), copy.deepcopy(data))


def load(path):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    return from_dict(data)


def dump(config, path):
    with open(path, "w") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=False)


def apply_overrides(config, seed=None, threads=None, out=None, environ=None):
    """Command-line values win over ``HARQNP_*`` variables, which win over the file."""
    env = os.environ if environ is None else environ
    seed = seed if seed is not None else env.get(ENV_PREFIX + "SEED")
    threads = threads if threads is not None else env.get(ENV_PREFIX + "THREADS")
    out = out if out is not None else env.get(ENV_PREFIX + "OUT")
    try:
        if seed is not None:
            config.master_seed = int(seed)
        if threads is not None:
            config.threads = int(threads)
    except ValueError as exc:
        raise ConfigError(f"invalid override: {exc}") from exc
    if out is not None:
        config.output_dir = str(out)
    return config
