"""Flat ``key=value`` configuration for simulations and streams.

Keys carry a section prefix (``scenario.n``, ``online.gamma``); the bare
field name is accepted too.  Every report echoes the fully resolved config
as ``# config: key=value`` lines, and :func:`parse_config_text` reads those
lines back, so an output file doubles as the config that reproduces it.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from typing import Optional

from .errors import ConfigError

SCENARIOS = ("splines", "highdim", "independence", "blockshift", "stream")
ECHO_PREFIX = "# config: "


def _f(default, section="scenario", **kw):
    return field(default=default, metadata={"section": section}, **kw)


@dataclass(frozen=True)
class SimConfig:
    scenario: str = _f("splines")
    seed: Optional[int] = _f(None)
    n: int = _f(500)
    B: int = _f(2000)
    alpha: float = _f(0.1)
    K: int = _f(20)
    family: str = _f("kernel-smoother")
    lam_min: float = _f(0.01)
    lam_max: float = _f(0.3)
    noise_sd: float = _f(0.5)
    p: int = _f(120)
    m_active: int = _f(10)
    beta_value: float = _f(1.0)
    # online / stream settings
    T: int = _f(5000, "online")
    gamma: float = _f(0.005, "online")
    eps: float = _f(0.1, "online")
    eta: Optional[float] = _f(None, "online")
    transform: str = _f("gamma-cdf:1,0.1", "online")
    randomize: bool = _f(False, "online")
    window: int = _f(100, "online")
    halfwidth: int = _f(100, "online")
    mode: str = _f("direct-aci", "online")
    source: str = _f("synthetic:shift", "online")
    experts: str = _f("x1|x2", "online")
    symmetric: bool = _f(False, "online")

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario: unknown scenario {self.scenario!r}")
        if self.B < 1:
            raise ConfigError("scenario.B: must be at least 1")
        if not 0 < self.alpha < 1:
            raise ConfigError("scenario.alpha: must lie in (0, 1)")
        if self.K < 1:
            raise ConfigError("scenario.K: must be at least 1")
        if not 0 < self.lam_min <= self.lam_max:
            raise ConfigError("scenario.lam_min/lam_max: need 0 < lam_min <= lam_max")
        if self.eta is not None and not self.eta > 0:
            raise ConfigError("online.eta: fixed learning rate must be positive")
        if self.gamma < 0:
            raise ConfigError("online.gamma: must be nonnegative")

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("scenario.seed: a seed is required (no wall-clock default)")
        return self.seed

    def lam_grid(self) -> list[float]:
        """``K`` values spaced geometrically from ``lam_min`` to ``lam_max``."""
        if self.K == 1:
            return [self.lam_min]
        ratio = (self.lam_max / self.lam_min) ** (1 / (self.K - 1))
        return [self.lam_min * ratio**i for i in range(self.K)]

    def items(self) -> list[tuple[str, str]]:
        out = []
        for f in fields(self):
            sec = f.metadata["section"]
            key = f.name if f.name == sec else f"{sec}.{f.name}"
            out.append((key, _fmt(getattr(self, f.name))))
        return out

    def echo(self) -> str:
        return "".join(f"{ECHO_PREFIX}{k}={v}\n" for k, v in self.items())


SCENARIO_DEFAULTS = {
    "splines": dict(n=500, B=2000, K=20, family="kernel-smoother", lam_min=0.01, lam_max=0.3),
    "highdim": dict(n=100, B=500, K=20, family="lasso", lam_min=0.02, lam_max=2.0, noise_sd=1.0),
    "independence": dict(K=10, B=5000),
    "blockshift": dict(B=200, T=1450, gamma=0.005, transform="gamma-cdf:1,0.1", window=100),
    "stream": dict(T=5000, gamma=0.005, transform="arctan"),
}


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


_FIELDS = {f.name: f for f in fields(SimConfig)}


def _coerce(name: str, raw: str):
    f = _FIELDS[name]
    tp = str(f.type)
    raw = raw.strip()
    try:
        if "Optional" in tp and raw.lower() in ("none", ""):
            return None
        if "bool" in tp:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if "int" in tp:
            return int(raw)
        if "float" in tp:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{f.metadata['section']}.{name}: cannot parse {raw!r} as {tp}") from None


def resolve_key(key: str) -> str:
    key = key.strip().replace("-", "_")
    section, _, name = key.rpartition(".")
    if name not in _FIELDS or (section and section != _FIELDS[name].metadata["section"]):
        raise ConfigError(f"unknown config key {key!r}")
    return name


def parse_config_text(text: str, origin: str = "<config>") -> dict[str, object]:
    """Parse ``key=value`` lines into field overrides.

    If the text contains echoed ``# config:`` lines (a previous report), only
    those are read and the report body is ignored.
    """
    out: dict[str, object] = {}
    echoed = any(line.startswith(ECHO_PREFIX) for line in text.splitlines())
    for lineno, line in enumerate(text.splitlines(), 1):
        if echoed:
            if not line.startswith(ECHO_PREFIX):
                continue
            line = line[len(ECHO_PREFIX):]
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        try:
            name = resolve_key(key)
        except ConfigError as e:
            raise ConfigError(f"{origin}:{lineno}: {e}") from None
        out[name] = _coerce(name, value)
    return out


def build_config(scenario: Optional[str] = None, **overrides) -> SimConfig:
    """Scenario defaults, then explicit overrides (already typed or raw strings)."""
    scenario = overrides.pop("scenario", None) or scenario or "splines"
    values = dict(SCENARIO_DEFAULTS.get(scenario, {}))
    for k, v in overrides.items():
        name = resolve_key(k)
        values[name] = _coerce(name, v) if isinstance(v, str) else v
    return SimConfig(scenario=scenario, **values)


def with_overrides(cfg: SimConfig, **overrides) -> SimConfig:
    return dataclasses.replace(cfg, **overrides)
