"""Flat ``key = value`` run configuration shared by all subcommands."""
from __future__ import annotations

import dataclasses
import types
import typing
from dataclasses import dataclass, fields

from .errors import InvalidParameterError


class ConfigError(InvalidParameterError):
    pass


def _floats(s: str) -> tuple:
    return tuple(float(v) for v in s.split(",") if v.strip())


def _ints(s: str) -> tuple:
    return tuple(int(v) for v in s.split(",") if v.strip())


@dataclass(frozen=True)
class RunConfig:
    # device: a preset, or explicit kappa/chi (us^-1), n0 and t1_us
    preset: str = "kyoto"
    kappa: float | None = None
    chi: float | None = None
    n0: float | None = None
    t1_us: float | None = None
    mu: float = 2.5
    square_fidelity: float = 0.995
    # reward
    k1: float = 10.0
    k2: float = 2.0
    k3: float = 1.0
    k4: float = 100.0
    k5: float = 100.0
    k6: float = 100.0
    # PPO
    n_updates: int = 5000
    n_envs: int = 128
    n_epochs: int = 4
    n_minibatches: int = 4
    lr: float = 3e-4
    clip_eps: float = 0.2
    value_clip: float = 0.2
    value_coef: float = 0.5
    max_grad_norm: float = 0.5
    checkpoints: tuple = (80, 300)
    n_seeds: int = 1
    success_fidelity: float = 0.993
    success_duration_ns: float = 700.0
    # common
    seed: int = 0
    out: str = "runs"
    # square, zero, a4r, clear, or a waveform file path; empty picks the
    # subcommand default (square for simulate, a4r for robustness)
    waveform: str = ""
    # sweep-ratio
    ratios: tuple = (0.5, 2.0, 5.0, 10.0)
    # robustness
    grid_offset: float = 0.1
    grid_points: int = 11

    def __post_init__(self):
        if self.n_updates < 0 or self.n_seeds < 1 or self.grid_points < 1:
            raise ConfigError("n_updates must be >= 0; n_seeds and grid_points >= 1")
        if not 0 <= self.grid_offset < 1:
            raise ConfigError("grid_offset must lie in [0, 1)")
        explicit = [self.kappa, self.chi, self.n0, self.t1_us]
        if any(v is not None for v in explicit) and any(v is None for v in explicit):
            raise ConfigError("explicit device needs all of kappa, chi, n0, t1_us")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


_LIST_PARSERS = {"checkpoints": _ints, "ratios": _floats}


def _convert(name: str, tp, raw: str):
    if name in _LIST_PARSERS:
        return _LIST_PARSERS[name](raw)
    optional = type(None) in getattr(tp, "__args__", ())
    if optional and raw.lower() in ("", "none"):
        return None
    base = next(a for a in tp.__args__ if a is not type(None)) if isinstance(tp, types.UnionType) else tp
    if base is int:
        return int(raw)
    if base is float:
        return float(raw)
    return raw


def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment.  Unknown keys raise."""
    known = typing.get_type_hints(RunConfig)
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if key not in known:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _convert(key, known[key], val)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return out


def load_config(path=None, **overrides) -> RunConfig:
    values = {}
    if path is not None:
        try:
            with open(path) as fh:
                values = parse_config(fh.read(), str(path))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(map(str, v))
        lines.append(f"{f.name} = {'none' if v is None else v}")
    return "\n".join(lines) + "\n"


CONFIG_KEYS = tuple(f.name for f in fields(RunConfig))

__all__ = ["RunConfig", "ConfigError", "parse_config", "load_config", "dump_config", "CONFIG_KEYS"]
