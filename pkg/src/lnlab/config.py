"""Experiment configuration: a flat key-value text format with a schema.

Config files hold one ``key = value`` assignment per line; ``#`` starts a
comment.  Values are typed per the schema below (int, float, str, bool, or
comma-separated float/int lists).  Unknown keys are rejected, as are
schema violations, with the offending key named.

Example::

    experiment = contraction
    seed = 7
    n = 32
    ridge = 3.0
    eta = 0.05
    checkpoints = 0, 10, 20, 40, 80
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

EXPERIMENTS = ("audit", "bounds", "simulate", "contraction", "discretize",
               "stability", "scaling", "sgld-compare", "rate")


class ConfigError(ValueError):
    """Schema violation; message names the offending key(s)."""


@dataclass
class ExperimentConfig:
    # experiment selection and bookkeeping
    experiment: str = "simulate"
    seed: int = 1234
    out: str = "results"
    replicas: int = 1024   # envelope verdicts need >= 1000 replicas to count
    checkpoints: list = field(default_factory=list)   # step indices; [] = auto

    # problem
    n: int = 32
    p: int = 2
    model_family: str = "saturating_index"
    amplitude: float = 1.0
    ridge: float = 3.0
    x_max: float = 1.0
    y_max: float = 1.0
    teacher: list = field(default_factory=list)       # [] = alternating +-0.5
    label_sigma: float = 0.1

    # chain
    algorithm: str = "label_noise_sgd"
    eta: float = 0.05
    delta: float = 0.5
    beta_inv: float = 0.0
    k: int = 4
    horizon: int = 200
    substeps: int = 64

    # init law
    init_kind: str = "point"
    init_center: list = field(default_factory=list)   # [] = (1, 0, 0, ...)
    init_scale: float = 0.0

    # transport / selection
    eps: float = 0.01
    radius_R: float = 1.0
    phi: float = 1.0
    selection_mode: str = "search"

    # audit
    audit_count: int = 256
    audit_radius: float = 10.0

    # abstract bound inputs (bounds / scaling / rate studies)
    bound_alpha: float = 1.0
    bound_M: float = 0.1
    bound_ell_f: float = 1.0
    bound_delta: float = 1.0
    bound_sigma4: float = 1.0
    bound_d: int = 2
    bound_t: float = 1e6

    # sweeps
    eta_grid: list = field(default_factory=lambda: [0.02, 0.04, 0.08, 0.16])
    n_grid: list = field(default_factory=lambda: [1e3, 1e4, 1e5, 1e6])
    q: float = -2.0 / 3.0
    q_grid: list = field(default_factory=lambda: list(np.round(np.arange(-1.5, -0.04, 0.05), 4)))

    # stability
    stability_index: int = 0
    exclude_index: bool = False
    test_count: int = 512
    pairs: int = 1024

    def resolved_teacher(self) -> np.ndarray:
        if self.teacher:
            arr = np.asarray(self.teacher, dtype=float)
            if arr.shape != (self.p,):
                raise ConfigError(f"teacher: expected {self.p} entries, got {arr.size}")
            return arr
        signs = np.array([1.0 if j % 2 == 0 else -1.0 for j in range(self.p)])
        return 0.5 * signs

    def resolved_init_center(self) -> np.ndarray:
        if self.init_center:
            arr = np.asarray(self.init_center, dtype=float)
            if arr.shape != (self.p,):
                raise ConfigError(f"init_center: expected {self.p} entries, got {arr.size}")
            return arr
        center = np.zeros(self.p)
        center[0] = 1.0
        return center

    def resolved_checkpoints(self) -> list:
        if self.checkpoints:
            return [int(c) for c in self.checkpoints]
        step = max(1, self.horizon // 20)
        return list(range(0, self.horizon + 1, step))

    def validate(self) -> None:
        problems = []
        if self.experiment not in EXPERIMENTS:
            problems.append(f"experiment: unknown value {self.experiment!r}")
        if not 1 <= self.k <= self.n:
            problems.append(f"k: need 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.eta <= 0:
            problems.append("eta: must be positive")
        if self.delta < 0 or self.beta_inv < 0:
            problems.append("delta/beta_inv: must be nonnegative")
        if self.replicas < 2:
            problems.append("replicas: need at least 2")
        if self.horizon < 0:
            problems.append("horizon: must be nonnegative")
        if self.substeps < 1:
            problems.append("substeps: must be >= 1")
        if not 0 <= self.eps < 1:
            problems.append("eps: must lie in [0, 1)")
        if self.radius_R <= 0:
            problems.append("radius_R: must be positive")
        if self.x_max <= 0:
            problems.append("x_max: must be positive")
        if any(c < 0 or c > self.horizon for c in self.resolved_checkpoints()):
            problems.append("checkpoints: must lie in [0, horizon]")
        if not 0 <= self.stability_index < self.n:
            problems.append("stability_index: out of range")
        if problems:
            raise ConfigError("; ".join(problems))


_FLOAT_LIST_KEYS = {"checkpoints", "teacher", "init_center", "eta_grid",
                    "n_grid", "q_grid"}


def _parse_value(key: str, raw: str, target_type):
    raw = raw.strip()
    if key in _FLOAT_LIST_KEYS:
        if not raw:
            return []
        return [float(v) for v in raw.split(",") if v.strip()]
    if target_type is bool:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if target_type is int:
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from exc
    if target_type is float:
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from exc
    return raw


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Parse and validate a config file; raises ConfigError with key paths."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    known = {f.name: f.type for f in fields(ExperimentConfig)}
    type_of = {f.name: type(getattr(ExperimentConfig(), f.name)) for f in fields(ExperimentConfig)}
    values = {}
    errors = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            errors.append(f"line {lineno}: expected 'key = value', got {stripped!r}")
            continue
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in known:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        try:
            values[key] = _parse_value(key, raw, type_of[key])
        except ConfigError as exc:
            errors.append(f"line {lineno}: {exc}")
    if errors:
        raise ConfigError("; ".join(errors))
    if overrides:
        values.update(overrides)
    config = ExperimentConfig(**values)
    config.validate()
    return config


def write_config(config: ExperimentConfig, path) -> None:
    """Write a config in the same key-value format (round-trips exactly)."""
    lines = []
    for f in fields(ExperimentConfig):
        value = getattr(config, f.name)
        if isinstance(value, list):
            value = ", ".join(repr(float(v)) for v in value)
        lines.append(f"{f.name} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")
