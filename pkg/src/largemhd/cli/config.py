"""Run configuration: TOML tables mirroring the domain/data/solver/checks/output split.

A config file only needs the keys it changes; everything else comes from
dimension-dependent defaults.  ``--set table.key=value`` overrides are applied
after the file, with the value parsed as a TOML literal (bare words fall back
to strings).
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import tomli
import tomli_w

from ..initial_data import DataSpec
from ..solver import SolverConfig
from ..spectral import DomainSpec

__all__ = [
    "CheckSettings",
    "RunConfig",
    "ConfigError",
    "default_tables",
    "parse_config",
    "load_config",
    "apply_overrides",
    "serialize_config",
    "config_hash",
]


class ConfigError(ValueError):
    """Parse or validation failure; ``problems`` lists every issue found."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


@dataclass(frozen=True)
class CheckSettings:
    """Envelopes and thresholds used by the verification checks.

    The bootstrap threshold is ``eta`` when given, otherwise
    ``eta_fraction * (||U0||_H3^2 + ||B0||_H3^2)``.
    """

    envelope: float = 10.0
    eta: float | None = None
    eta_fraction: float = 1e-2
    largeness_C: float = 1.0
    delta: float = 1.0
    moser_trials: int = 100
    snapshot_every: float = 0.0
    disabled: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.envelope > 0:
            raise ValueError(f"envelope must be positive, got {self.envelope}")
        if self.eta is not None and not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.eta_fraction > 0:
            raise ValueError(f"eta_fraction must be positive, got {self.eta_fraction}")
        if self.moser_trials < 1:
            raise ValueError(f"moser_trials must be >= 1, got {self.moser_trials}")
        if self.snapshot_every < 0:
            raise ValueError(f"snapshot_every must be nonnegative, got {self.snapshot_every}")
        object.__setattr__(self, "disabled", tuple(self.disabled))

    def enabled(self, name: str) -> bool:
        return name not in self.disabled


@dataclass(frozen=True)
class RunConfig:
    domain: DomainSpec
    data: DataSpec
    solver: SolverConfig
    checks: CheckSettings = field(default_factory=CheckSettings)
    output: str = "out"


_TABLES = {"domain": DomainSpec, "data": DataSpec, "solver": SolverConfig, "checks": CheckSettings}


def default_tables(dim: int = 2) -> dict:
    """Desk-scale defaults: 2D N=256, L=20, eps=0.1; 3D N=64, L=4, eps=0.25."""
    if dim == 3:
        domain, eps, t_end = {"dim": 3, "scale": 4.0, "points_per_axis": 64}, 0.25, 20.0
    else:
        domain, eps, t_end = {"dim": 2, "scale": 20.0, "points_per_axis": 256}, 0.1, 50.0
    return {
        "domain": domain,
        "data": {"epsilon": eps},
        "solver": {"t_end": t_end},
        "checks": {},
        "output": {"directory": "out"},
    }


def _merge(base: dict, extra: dict) -> dict:
    out = {k: dict(v) if isinstance(v, dict) else v for k, v in base.items()}
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = {**out[key], **val}
        else:
            out[key] = val
    return out


def _parse_value(text: str):
    try:
        return tomli.loads(f"v = {text}")["v"]
    except tomli.TOMLDecodeError:
        return text


def apply_overrides(tables: dict, overrides) -> dict:
    """Apply ``table.key=value`` strings on top of the raw tables."""
    problems = []
    out = _merge(tables, {})
    for item in overrides or ():
        key, sep, value = item.partition("=")
        table, dot, name = key.strip().partition(".")
        if not sep or not dot or not name:
            problems.append(f"override {item!r}: expected TABLE.KEY=VALUE")
            continue
        out.setdefault(table, {})
        if not isinstance(out[table], dict):
            problems.append(f"override {item!r}: {table} is not a table")
            continue
        out[table][name] = _parse_value(value.strip())
    if problems:
        raise ConfigError(problems)
    return out


def _build(cls, table: str, raw: dict, problems: list):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - names)
    for key in unknown:
        problems.append(f"{table}.{key}: unknown key")
    kwargs = {k: v for k, v in raw.items() if k in names}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as err:
        problems.append(f"{table}: {err}")
        return None


def validate(tables: dict) -> RunConfig:
    """Build a RunConfig, collecting every problem before raising."""
    problems = []
    unknown = sorted(set(tables) - set(_TABLES) - {"output"})
    problems.extend(f"{t}: unknown table" for t in unknown)
    built = {name: _build(cls, name, tables.get(name, {}), problems) for name, cls in _TABLES.items()}
    output = tables.get("output", {})
    for key in sorted(set(output) - {"directory"}):
        problems.append(f"output.{key}: unknown key")
    domain, data = built["domain"], built["data"]
    if domain is not None and data is not None:
        L, eps, N = domain.scale, data.epsilon, domain.N
        if 1.0 / L > eps:
            problems.append(
                f"domain.scale = {L} and data.epsilon = {eps}: lattice spacing 1/L = {1.0 / L:.6g} exceeds eps"
            )
        band = domain.dealias_fraction * N / (2.0 * L)
        if band < 2.0 * (1.0 + eps):
            problems.append(
                f"domain.points_per_axis = {N} and domain.scale = {L}: dealias band "
                f"{band:.6g} is below 2(1 + data.epsilon) = {2.0 * (1.0 + eps):.6g}"
            )
    if problems:
        raise ConfigError(problems)
    return RunConfig(domain, data, built["solver"], built["checks"], str(output.get("directory", "out")))


def load_config(path=None, overrides=(), dim: int | None = None) -> RunConfig:
    """Defaults (for the file's dimension, or ``dim``), then the file, then overrides."""
    raw = {}
    if path is not None:
        try:
            raw = tomli.loads(Path(path).read_text(encoding="utf-8"))
        except tomli.TOMLDecodeError as err:
            raise ConfigError([f"{path}: {err}"]) from None
    pending = apply_overrides(raw, overrides)
    chosen = pending.get("domain", {}).get("dim", dim if dim is not None else 2)
    if chosen not in (2, 3):
        raise ConfigError([f"domain.dim: must be 2 or 3, got {chosen!r}"])
    return validate(_merge(default_tables(chosen), pending))


def parse_config(path) -> RunConfig:
    return load_config(path)


def _table(obj) -> dict:
    out = {}
    for f in dataclasses.fields(obj):
        val = getattr(obj, f.name)
        if val is None:
            continue  # TOML has no null; absence means the default
        if isinstance(val, tuple):
            val = list(val)
        if isinstance(val, float) and not math.isfinite(val):
            continue
        out[f.name] = val
    return out


def to_tables(cfg: RunConfig) -> dict:
    return {
        "domain": _table(cfg.domain),
        "data": _table(cfg.data),
        "solver": _table(cfg.solver),
        "checks": _table(cfg.checks),
        "output": {"directory": cfg.output},
    }


def serialize_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(to_tables(cfg))


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 of the canonical serialization, first 16 hex digits."""
    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()[:16]
