"""Run configuration: YAML parsing, validation, and provenance hashing."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import yaml

from .objectives import CrraParams, RangeKind, TargetRange

__all__ = ["ConfigError", "DataConfig", "ObjectiveConfig", "RunConfig"]


class ConfigError(ValueError):
    """Invalid run configuration."""


_KINDS = {"strs", "ftrs", "relative_strs", "relative_ftrs", "crra"}
_MODES = {"two_stage_const_sigma", "two_stage_state_sigma", "classical_direct"}


@dataclass(frozen=True)
class DataConfig:
    """Market data source: a CSV file or the bundled synthetic generator."""

    csv_path: str | None = None
    price_columns: tuple[str, ...] = ()
    drop_gaps: bool = False
    synthetic_assets: int | None = None
    synthetic_rows: int = 360
    synthetic_seed: int = 0

    def validate(self):
        if (self.csv_path is None) == (self.synthetic_assets is None):
            raise ConfigError("data: specify exactly one of csv_path or synthetic_assets")
        if self.synthetic_assets is not None and self.synthetic_assets < 1:
            raise ConfigError("data: synthetic_assets must be >= 1")


@dataclass(frozen=True)
class ObjectiveConfig:
    """Objective selection: a target range or CRRA utility."""

    kind: str = "strs"
    lower: float = 1.0
    upper: float | None = 1.2  # None = unbounded above
    gamma: float | None = None
    benchmark: str | None = None

    def validate(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"objective: unknown kind {self.kind!r}")
        if self.kind == "crra":
            if self.gamma is None:
                raise ConfigError("objective: crra requires gamma")
            try:
                CrraParams(self.gamma)
            except ValueError as exc:
                raise ConfigError(f"objective: {exc}") from None
        else:
            try:
                self.build()
            except ValueError as exc:
                raise ConfigError(f"objective: {exc}") from None
            if self.kind.startswith("relative") and not self.benchmark:
                raise ConfigError("objective: relative kinds require a benchmark series name")

    def build(self) -> TargetRange | CrraParams:
        if self.kind == "crra":
            return CrraParams(self.gamma)
        upper = math.inf if self.upper is None else self.upper
        return TargetRange(lower=self.lower, upper=upper, kind=RangeKind(self.kind))


@dataclass(frozen=True)
class RunConfig:
    """Everything one solve-and-evaluate run needs; defaults mirror the
    standard experimental setup (M=10,000 paths, monthly steps for one year,
    0.2 control mesh, 0.1% costs, 2% annual cash rate, quadratic basis)."""

    data: DataConfig = field(default_factory=lambda: DataConfig(synthetic_assets=3))
    investable: tuple[str, ...] | None = None  # None = all non-predictor series
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    annual_rf: float = 0.02
    horizon: int = 12
    m_paths: int = 10_000
    mesh: float = 0.2
    cost_rate: float = 0.001
    mode: str = "two_stage_const_sigma"
    degree: int = 2
    stop_profit: bool = True
    seed: int = 0
    out_dir: str = "out"

    def validate(self):
        self.data.validate()
        self.objective.validate()
        if self.mode not in _MODES:
            raise ConfigError(f"unknown regression mode {self.mode!r}")
        if self.horizon < 1 or self.m_paths < 1:
            raise ConfigError("horizon and m_paths must be >= 1")
        if self.degree < 0:
            raise ConfigError("degree must be >= 0")
        if self.cost_rate < 0.0:
            raise ConfigError("cost_rate must be >= 0")
        if self.annual_rf <= -1.0:
            raise ConfigError("annual_rf must exceed -100%")
        k = round(1.0 / self.mesh) if self.mesh > 0 else 0
        if self.mesh <= 0 or abs(k * self.mesh - 1.0) > 1e-12:
            raise ConfigError(f"mesh {self.mesh} does not divide 1")
        return self

    def with_objective(self, **changes) -> "RunConfig":
        return replace(self, objective=replace(self.objective, **changes))

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        raw = dict(raw)
        try:
            data = DataConfig(**{**raw.pop("data", {})})
            objective = ObjectiveConfig(**{**raw.pop("objective", {})})
            cfg = cls(data=data, objective=objective, **raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        # YAML round-trips tuples as lists; normalize
        cfg = replace(
            cfg,
            data=replace(data, price_columns=tuple(data.price_columns)),
            investable=tuple(cfg.investable) if cfg.investable is not None else None,
        )
        return cfg

    @classmethod
    def from_yaml(cls, path) -> "RunConfig":
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        return cls.from_dict(raw)

    def to_yaml(self, path) -> None:
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=True)

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("out_dir")  # where results land does not change what they are
        canonical = json.dumps(d, sort_keys=True, default=list)
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]
