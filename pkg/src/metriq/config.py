"""Run configuration: dataclasses, ``key = value`` files and overrides."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field


class ConfigError(ValueError):
    pass


@dataclass
class QuadratureConfig:
    L: float | None = None
    n_grid: int = 160


@dataclass
class PathConfig:
    T: float = 0.5
    nu: float = 50.0
    N: int | None = None
    n_samples: int = 200_000
    workers: int = 1
    sampler: str = "auto"
    grid_L: float = 6.0
    n_pq: int = 128
    n_x: int | None = None
    oracle_dim: int = 60


@dataclass
class TransformConfig:
    kind: str = "scaling"
    lam: float = 2.0
    coefficient: float = 0.1
    bound: float = 16.0
    mode: str = "mapped"

    def spec(self) -> dict:
        return {"kind": self.kind, "lambda": self.lam, "coefficient": self.coefficient, "bound": self.bound}


@dataclass
class ClassicalConfig:
    T: float = 10.0
    dt: float = 1e-2
    order: int = 2


@dataclass
class RunConfig:
    hbar: float = 1.0
    dim: int = 60
    seed: int = 0
    k: int = 5
    tol: float | None = None
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    path: PathConfig = field(default_factory=PathConfig)
    transform: TransformConfig = field(default_factory=TransformConfig)
    classical: ClassicalConfig = field(default_factory=ClassicalConfig)

    def validate(self) -> "RunConfig":
        if not self.hbar > 0:
            raise ConfigError("hbar must be positive")
        if self.dim < 2:
            raise ConfigError("dim must be >= 2")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.tol is not None and self.tol <= 0:
            raise ConfigError("tol must be positive")
        q, p, c = self.quadrature, self.path, self.classical
        if q.n_grid < 16 or (q.L is not None and q.L <= 0):
            raise ConfigError("quadrature needs n_grid >= 16 and L > 0")
        for name in ("T", "nu", "n_samples", "workers", "grid_L", "n_pq", "oracle_dim"):
            if not getattr(p, name) > 0:
                raise ConfigError(f"path.{name} must be positive")
        if p.N is not None and p.N < 1:
            raise ConfigError("path.N must be >= 1")
        if p.sampler not in ("auto", "bridge", "deformed"):
            raise ConfigError("path.sampler must be auto, bridge or deformed")
        if self.transform.kind not in ("identity", "scaling", "cubic"):
            raise ConfigError("transform.kind must be identity, scaling or cubic")
        if self.transform.mode not in ("mapped", "rs"):
            raise ConfigError("transform.mode must be mapped or rs")
        if not (c.T > 0 and c.dt > 0) or c.order not in (2, 4):
            raise ConfigError("classical needs T > 0, dt > 0, order in {2, 4}")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def set(self, key: str, raw: str):
        """Assign ``section.name`` or ``name`` from text, with type coercion; unknown keys raise."""
        obj, name = self, key.strip()
        if "." in name:
            section, name = name.split(".", 1)
            sub = getattr(self, section, None)
            if not dataclasses.is_dataclass(sub):
                raise ConfigError(f"unknown config section {section!r}")
            obj = sub
        fields = {f.name: f for f in dataclasses.fields(obj)}
        if name not in fields or dataclasses.is_dataclass(getattr(obj, name)):
            raise ConfigError(f"unknown config key {key!r}")
        setattr(obj, name, _coerce(fields[name].type, raw.strip(), key))


def _coerce(typ, raw: str, key: str):
    t = str(typ)
    if raw.lower() in ("none", "") and "None" in t:
        return None
    try:
        if t.startswith("int"):
            try:
                return int(raw)
            except ValueError:
                x = float(raw)
                if not x.is_integer():
                    raise
                return int(x)
        if t.startswith("float"):
            return float(raw)
        if t.startswith("str"):
            return raw
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {key}") from None
    raise ConfigError(f"cannot coerce {key} of type {t}")


def parse_config_text(text: str, cfg: RunConfig | None = None) -> RunConfig:
    cfg = RunConfig() if cfg is None else cfg
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        cfg.set(key, value)
    return cfg


def load_config(path: str, cfg: RunConfig | None = None) -> RunConfig:
    with open(path) as fh:
        return parse_config_text(fh.read(), cfg)
