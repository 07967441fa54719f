"""Training configuration: flat ``key = value`` text with ``#`` comments."""

import hashlib
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError

METHODS = ("lapo", "bc", "awac", "awac-gmm", "plas")


@dataclass(frozen=True)
class TrainConfig:
    method: str = "lapo"
    dataset: str = ""
    seed: int = 0
    steps: int = 50_000
    batch_size: int = 256
    lr_critic: float = 3e-4
    lr_cvae: float = 3e-4
    lr_latent: float = 1e-4
    lr_actor: float = 3e-4
    gamma: float = 0.99
    lam: float = 0.3
    beta: float = 0.5
    decoder_std: float = 0.2
    tau: float = 0.005
    z_max: float = 2.0
    omega_max: float = 100.0
    n_samples: int = 1
    latent_dim: int = 0
    hidden: tuple = (64, 64)
    activation: str = "relu"
    normalize_states: bool = True
    target_noise: float = 0.1
    target_noise_clip: float = 0.2
    latent_critic: str = "first"
    stochastic_latent: bool = False
    no_latent_policy: bool = False
    unbounded_z: bool = False
    gmm_components: int = 5
    eval_interval: int = 5000
    eval_episodes: int = 10

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        positive_ints = ("batch_size", "n_samples", "gmm_components", "eval_episodes")
        for name in positive_ints:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for name in ("steps", "eval_interval", "latent_dim", "seed"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        for name in ("lr_critic", "lr_cvae", "lr_latent", "lr_actor", "lam", "decoder_std",
                     "z_max", "omega_max"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [0, 1]")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError("tau must lie in (0, 1]")
        if self.beta < 0 or self.target_noise < 0 or self.target_noise_clip < 0:
            raise ConfigError("beta and target noise settings must be >= 0")
        if self.activation not in ("relu", "tanh"):
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.latent_critic not in ("first", "min"):
            raise ConfigError("latent_critic must be 'first' or 'min'")
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ConfigError("hidden sizes must be positive")
        if self.no_latent_policy and self.unbounded_z:
            raise ConfigError("set at most one ablation flag (no_latent_policy, unbounded_z)")
        if (self.no_latent_policy or self.unbounded_z) and self.method != "lapo":
            raise ConfigError("ablation flags apply to method = lapo only")

    def with_(self, **kw):
        return replace(self, **kw)

    @property
    def ablation(self):
        if self.no_latent_policy:
            return "no-latent-policy"
        if self.unbounded_z:
            return "unbounded-z"
        return None

    def to_text(self):
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, tuple):
                v = ",".join(str(h) for h in v)
            else:
                v = repr(v) if isinstance(v, float) else str(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def hash(self):
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    @classmethod
    def from_text(cls, text, source="<config>"):
        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = (p.strip() for p in line.split("=", 1))
            if key not in types:
                raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
            if key in kw:
                raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
            kw[key] = _parse(types[key], value, f"{source}:{lineno}: {key}")
        return cls(**kw)

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as e:
            raise ConfigError(f"{path}: cannot read config ({e.strerror})") from e
        return cls.from_text(text, str(path))


def _parse(typ, value, where):
    try:
        if typ in (bool, "bool"):
            low = value.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return low in ("true", "1", "yes")
        if typ in (int, "int"):
            return int(value.replace("_", ""))
        if typ in (float, "float"):
            return float(value)
        if typ in (tuple, "tuple"):
            return tuple(int(v) for v in value.split(",") if v.strip())
        return value
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {value!r}") from None
