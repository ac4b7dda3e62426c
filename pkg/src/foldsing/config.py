"""Run configuration: line-based ``key = value`` text, overridable per flag."""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import InputError

CONFIG_ENV = "FOLDSING_CONFIG"


@dataclass(frozen=True)
class Config:
    tol_zero: float = 1e-9
    tol_on_surface: float = 1e-8
    newton_tol: float = 1e-12
    jet_order: int = 7
    resonance_max_den: int = 12
    resonance_tol: float = 1e-6
    step_min: float = 1e-6
    step_max: float = 1e-1
    integrator_tol: float = 1e-10
    seed_grid: int = 32
    portrait_grid: int = 8

    def __post_init__(self):
        for f in fields(self):
            if f.type in ("float", float) and not getattr(self, f.name) > 0:
                raise InputError(f"config {f.name} must be positive")
        if self.jet_order < 1 or self.resonance_max_den < 1 or self.seed_grid < 2 or self.portrait_grid < 1:
            raise InputError("config integer fields out of range")
        if self.step_min >= self.step_max:
            raise InputError("step_min must be below step_max")

    def with_overrides(self, **values) -> "Config":
        values = {k: v for k, v in values.items() if v is not None}
        return replace(self, **values)

    def to_text(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)!r}\n" for f in fields(self))

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    @classmethod
    def from_text(cls, text: str) -> "Config":
        known = {f.name: f for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"config line {lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in known:
                raise InputError(f"config line {lineno}: unknown key {key!r}")
            kind = int if known[key].type in ("int", int) else float
            try:
                values[key] = kind(value)
            except ValueError as exc:
                raise InputError(f"config line {lineno}: bad value for {key}: {value!r}") from exc
        return cls(**values)

    @classmethod
    def load(cls, path: str | os.PathLike | None = None) -> "Config":
        """Read `path`, else the file named by $FOLDSING_CONFIG, else defaults."""
        path = path or os.environ.get(CONFIG_ENV)
        if not path:
            return cls()
        try:
            return cls.from_text(Path(path).read_text())
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc


DEFAULT = Config()
