"""Run configuration shared by the CLI and the annotation service."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional

import yaml

from .correction import CorrectionConfig
from .detector import SyntheticConfig
from .loop import ALL_MODES, LoopConfig, ScheduleConfig
from .scoring import PerturbConfig
from .simagent import SimConfig


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    dataset: str = ""
    modes: List[str] = field(default_factory=lambda: ["olala-perturbation"])
    budget: int = 1000
    rounds: int = 5
    r_initial: float = 0.9
    r_last: float = 0.4
    decay: str = "linear"
    eta: float = 0.2
    xi: float = 0.25
    zeta: float = 0.05
    seed: int = 0
    seed_pages: int = 10
    grid_step: float = 16.0
    enable_dedup: bool = True
    enable_recovery: bool = True
    detector: Dict = field(default_factory=dict)
    image_root: Optional[str] = None
    sweep: Optional[Dict[str, List]] = None

    def __post_init__(self):
        for mode in self.modes:
            if mode not in ALL_MODES:
                raise ConfigError(f"unknown mode {mode!r}; expected one of {ALL_MODES}")

    @classmethod
    def from_dict(cls, raw: Dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            raw = yaml.safe_load(Path(path).read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a key-value mapping")
        return cls.from_dict(raw)

    def synthetic_config(self) -> SyntheticConfig:
        return SyntheticConfig(seed=self.seed, **self.detector)

    def loop_config(self, mode: str) -> LoopConfig:
        return LoopConfig(
            mode=mode,
            schedule=ScheduleConfig(
                r_initial=self.r_initial,
                r_last=self.r_last,
                total_rounds=self.rounds,
                decay=self.decay,
                budget_total=self.budget,
            ),
            correction=CorrectionConfig(xi=self.xi, zeta=self.zeta),
            sim=SimConfig(eta=self.eta),
            perturb=PerturbConfig(),
            eta=self.eta,
            seed=self.seed,
            enable_dedup=self.enable_dedup,
            enable_recovery=self.enable_recovery,
        )

    def sweep_grid(self) -> List["RunConfig"]:
        """Expand the optional sweep block over budget and rounds into
        concrete configs; without a sweep, returns [self]."""
        if not self.sweep:
            return [self]
        unknown = set(self.sweep) - {"budget", "rounds"}
        if unknown:
            raise ConfigError(f"sweep supports budget and rounds, got {sorted(unknown)}")
        budgets = self.sweep.get("budget", [self.budget])
        rounds = self.sweep.get("rounds", [self.rounds])
        return [
            replace(self, budget=int(m), rounds=int(t), sweep=None)
            for m in budgets
            for t in rounds
        ]
