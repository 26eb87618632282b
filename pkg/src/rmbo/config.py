"""Experiment configuration files (YAML).

Every key is optional; defaults follow the benchmark protocol (10n initial
points, 30n evaluations, 10 GP restarts, 25 reference points, one run per
instance).  Unknown keys are rejected.
"""

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import yaml

from rmbo.errors import InvalidArgument
from rmbo.ga import GAConfig

CLI_METHODS = {"mono": "mono", "multi-gumbel": "multi_gumbel", "multi-laplace": "multi_laplace"}


def method_key(name):
    """Accept ``multi-gumbel`` or ``multi_gumbel`` spellings."""
    key = str(name).replace("_", "-")
    if key not in CLI_METHODS:
        raise InvalidArgument(f"unknown method {name!r}; choose from {sorted(CLI_METHODS)}")
    return CLI_METHODS[key]


@dataclass
class GASection:
    population_size: int = 50
    generations: int = 100
    crossover_prob: float = 0.9
    mutation_prob: Optional[float] = None
    sbx_eta: float = 15.0
    pm_eta: float = 20.0


@dataclass
class ExperimentConfig:
    problem: str = "DTLZ2"
    n_var: int = 5
    n_obj: int = 2
    reference_point: Optional[list] = None
    method: str = "multi-gumbel"
    seed: int = 0
    initial_size: Optional[int] = None
    budget: Optional[int] = None
    rho: float = 0.0
    bounds_mode: str = "analytic"
    ideal: Optional[list] = None
    nadir: Optional[list] = None
    gp_restarts: int = 10
    n_mc: int = 1000
    n_gumbel_fit: int = 1000
    ga: GASection = field(default_factory=GASection)
    out: str = "runs"
    label: Optional[str] = None
    grid_count: int = 25
    grid_lower: Optional[list] = None
    grid_upper: Optional[list] = None
    seeds: int = 1
    jobs: int = 1

    def __post_init__(self):
        if isinstance(self.ga, dict):
            self.ga = _from_mapping(GASection, self.ga, "ga")
        self.method = method_key(self.method).replace("_", "-")
        n = self.n_var
        init = self.initial_size if self.initial_size is not None else 10 * n
        budget = self.budget if self.budget is not None else 30 * n
        if budget <= init:
            raise InvalidArgument(f"budget ({budget}) must exceed initial_size ({init})")
        if self.seeds < 1 or self.jobs < 1 or self.grid_count < 1:
            raise InvalidArgument("seeds, jobs and grid_count must be >= 1")
        for name in ("reference_point", "ideal", "nadir", "grid_lower", "grid_upper"):
            v = getattr(self, name)
            if v is not None:
                if len(v) != self.n_obj:
                    raise InvalidArgument(f"{name} must have n_obj={self.n_obj} entries")
                setattr(self, name, [float(a) for a in v])

    @property
    def ga_config(self):
        return GAConfig(**asdict(self.ga))

    def to_dict(self):
        return asdict(self)

    def dump(self, path):
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False), encoding="utf-8")


def _from_mapping(cls, data, where):
    if not isinstance(data, dict):
        raise InvalidArgument(f"{where}: expected a mapping")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise InvalidArgument(f"{where}: unknown keys {unknown}")
    return cls(**data)


def from_dict(data):
    return _from_mapping(ExperimentConfig, dict(data or {}), "config")


def load(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidArgument(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InvalidArgument(f"config {path} is not valid YAML: {exc}") from exc
    try:
        return from_dict(data)
    except TypeError as exc:
        raise InvalidArgument(f"config {path}: {exc}") from exc
