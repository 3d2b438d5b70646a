"""Run configuration: one JSON document with instrument, cohort, grid and experiment sections.

``load_config("default")`` returns the built-in configuration. A file may
supply any subset of sections; missing sections keep their defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .experiment import ExperimentConfig
from .model_select import GridSpec
from .survey import InstrumentSpec, default_instruments
from .synth import CohortSpec


@dataclass
class RunConfig:
    instruments: list[InstrumentSpec] = field(default_factory=default_instruments)
    cohort: CohortSpec = field(default_factory=CohortSpec.sex_confounded)
    grid: GridSpec = field(default_factory=GridSpec)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)

    def to_dict(self) -> dict:
        exp = self.experiment.to_dict()
        exp.pop("grid")
        grid = {k: list(v) if isinstance(v, tuple) else v for k, v in self.grid.__dict__.items()}
        return {"instruments": [s.to_dict() for s in self.instruments],
                "cohort": self.cohort.to_dict(), "grid": grid, "experiment": exp}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def config_from_dict(d: dict) -> RunConfig:
    cfg = RunConfig()
    if "instruments" in d:
        cfg.instruments = [InstrumentSpec.from_dict(s) for s in d["instruments"]]
    if "cohort" in d:
        cfg.cohort = CohortSpec.from_dict(d["cohort"])
    if "grid" in d:
        cfg.grid = GridSpec.from_dict(d["grid"])
    exp = dict(d.get("experiment", {}))
    exp["grid"] = cfg.grid
    cfg.experiment = ExperimentConfig.from_dict(exp)
    return cfg


def load_config(source: str | Path | None) -> RunConfig:
    if source is None or str(source) == "default":
        return RunConfig()
    return config_from_dict(json.loads(Path(source).read_text(encoding="utf-8")))
