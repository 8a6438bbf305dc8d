"""Run configuration: flat ``key = value`` files merged with command-line flags."""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import ConfigError
from .game import MODES, Instance
from .players import Schedule

KEYS = ("k", "m", "t", "p", "mode", "eps_scale", "t0_scale", "seeds", "master_seed", "out", "log_nodes")
_TWO_GROUP = re.compile(r"two-group(?:\s*[:\s]\s*(?:gap\s*=\s*)?([0-9.eE+-]+))?$")


def read_config_file(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, dashes in keys
    are read as underscores."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower().replace("-", "_")
        if key not in KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def resolve_p(spec: str, K: int | None, m: int) -> tuple[float, ...]:
    """Explicit comma list, ``uniform-spread`` or ``two-group gap=δ``.
    Generated instances put the better arms at the highest indices."""
    spec = spec.strip()
    if spec == "uniform-spread":
        if K is None:
            raise ConfigError("p=uniform-spread needs k")
        return tuple(i / (K + 1) for i in range(1, K + 1))
    match = _TWO_GROUP.match(spec)
    if match:
        if K is None:
            raise ConfigError("p=two-group needs k")
        gap = float(match.group(1)) if match.group(1) else 0.2
        if not 0.0 <= gap <= 1.0:
            raise ConfigError(f"two-group gap must lie in [0, 1], got {gap}")
        return (0.5 - gap / 2,) * (K - m) + (0.5 + gap / 2,) * m
    try:
        p = tuple(float(v) for v in spec.split(","))
    except ValueError:
        raise ConfigError(f"cannot read p={spec!r}") from None
    if K is not None and len(p) != K:
        raise ConfigError(f"p has {len(p)} entries but k={K}")
    return p


@dataclass(frozen=True)
class Config:
    p: tuple[float, ...]
    m: int
    T: int
    mode: str = "full"
    eps_scale: float = 1.0
    t0_scale: float = 1.0
    seeds: int = 1
    master_seed: int = 0
    out: str = "nocollide_out"
    log_nodes: bool = False
    p_spec: str = ""

    @property
    def K(self) -> int:
        return len(self.p)

    def instance(self, T: int | None = None) -> Instance:
        return Instance(self.p, self.m, self.T if T is None else T)

    def schedule(self, T: int | None = None) -> Schedule:
        return Schedule(self.T if T is None else T, self.eps_scale, self.t0_scale)

    def echo(self) -> dict:
        out = asdict(self)
        del out["out"]  # keeps summaries byte-identical across output directories
        return out


def _int(raw: dict, key: str, default=None) -> int | None:
    if raw.get(key) in (None, ""):
        if default is None:
            return None
        return default
    try:
        return int(float(raw[key]))
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {raw[key]!r}") from None


def _float(raw: dict, key: str, default: float) -> float:
    if raw.get(key) in (None, ""):
        return default
    try:
        return float(raw[key])
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {raw[key]!r}") from None


def build_config(raw: dict, out_default: str, need_t: bool = True) -> Config:
    """Validate merged settings (flags already override file values)."""
    for key in ("m", "p"):
        if raw.get(key) in (None, ""):
            raise ConfigError(f"missing required key {key!r}")
    if need_t and raw.get("t") in (None, ""):
        raise ConfigError("missing required key 't'")
    m = _int(raw, "m")
    K = _int(raw, "k")
    p = resolve_p(str(raw["p"]), K, m)
    mode = str(raw.get("mode") or "full")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    cfg = Config(
        p=p,
        m=m,
        T=_int(raw, "t", 1) if need_t else 1,
        mode=mode,
        eps_scale=_float(raw, "eps_scale", 1.0),
        t0_scale=_float(raw, "t0_scale", 1.0),
        seeds=_int(raw, "seeds", 1),
        master_seed=_int(raw, "master_seed", 0),
        out=str(raw.get("out") or out_default),
        log_nodes=str(raw.get("log_nodes", "")).lower() in ("1", "true", "yes", "on"),
        p_spec=str(raw["p"]),
    )
    if cfg.seeds < 1:
        raise ConfigError("seeds must be >= 1")
    try:
        cfg.instance()
        cfg.schedule()
    except (ConfigError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg
