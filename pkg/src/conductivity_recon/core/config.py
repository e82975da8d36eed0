"""Run configuration and sweep grid files.

Grid files are flat ``key = value`` text, one key per line, ``#`` starting a
comment. A comma-separated value makes that key a grid axis::

    example = 1
    k = 3
    eps = 1e-1, 1e-2, 1e-3

Files ending in .yaml/.yml hold the same mapping (scalar or list per key).

Public API:
    RunConfig: Parameters of one reconstruction
    parse_config_text: Parse key = value text into grid axes
    load_config_file: Parse a grid file (text or YAML)
    expand_grid: Cartesian product of grid axes over a base RunConfig
    default_workers: Worker count from CONDUCTIVITY_RECON_WORKERS
"""

from __future__ import annotations

import itertools
import logging
import math
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any

import yaml

from ..basis.lagrange import MAX_DEGREE
from ..data.measurement import NOISE_MODELS
from ..errors import InvalidArgumentError

logger = logging.getLogger(__name__)

WORKERS_ENV = "CONDUCTIVITY_RECON_WORKERS"
DATA_MODES = ("auto", "exact", "measured")
MAX_SUBDIVISIONS = 512
CLOSED_FORM_CASES = (1, 4)


@dataclass
class RunConfig:
    """Parameters of one reconstruction run."""

    example: int = 1
    n: int = 48
    data_n: int = 48
    k: int = 3
    k0: int = 3
    eps: float = 1e-3
    delta: float = 0.0
    seed: int = 42
    noise: str = "pointwise"  # pointwise | element
    penalty: float = 100.0
    tol: float = 1e-10
    output_dir: str = "/tmp/conductivity-recon"
    data_mode: str = "auto"  # auto | exact | measured
    measure_order: int = 0  # 0 = k0 (interpolation) for clean data, k0 + 2 (least squares) for noisy data
    workers: int = 1

    @property
    def h(self) -> float:
        return math.sqrt(2.0) / self.n

    @property
    def resolved_data_mode(self) -> str:
        if self.data_mode != "auto":
            return self.data_mode
        return "exact" if self.example == 1 and self.delta == 0.0 else "measured"

    @property
    def effective_measure_order(self) -> int:
        if self.measure_order:
            return self.measure_order
        return min(self.k0 + 2, MAX_DEGREE) if self.delta > 0.0 else self.k0

    def validate(self) -> list[str]:
        """Return a list of problems (empty = valid)."""
        errors: list[str] = []
        if self.example not in (1, 2, 3, 4):
            errors.append(f"example must be 1, 2, 3 or 4, got {self.example}")
        for name in ("n", "data_n"):
            value = getattr(self, name)
            if value < 1 or value > MAX_SUBDIVISIONS:
                errors.append(f"{name} must be in [1, {MAX_SUBDIVISIONS}], got {value}")
        for name in ("k", "k0"):
            value = getattr(self, name)
            if value < 0 or value > MAX_DEGREE:
                errors.append(f"{name} must be in [0, {MAX_DEGREE}], got {value}")
        if not 0.0 < self.eps < 1.0:
            errors.append(f"eps must be in (0, 1), got {self.eps}")
        if not 0.0 <= self.delta < 1.0:
            errors.append(f"delta must be in [0, 1), got {self.delta}")
        if self.penalty <= 0.0:
            errors.append(f"penalty must be > 0, got {self.penalty}")
        if self.tol <= 0.0:
            errors.append(f"tol must be > 0, got {self.tol}")
        if self.noise not in NOISE_MODELS:
            errors.append(f"noise must be one of {', '.join(NOISE_MODELS)}, got {self.noise!r}")
        if self.data_mode not in DATA_MODES:
            errors.append(f"data_mode must be one of {', '.join(DATA_MODES)}, got {self.data_mode!r}")
        elif self.data_mode == "exact":
            if self.example not in CLOSED_FORM_CASES:
                errors.append(f"data_mode 'exact' needs a closed-form u (examples 1, 4), got example {self.example}")
            if self.delta != 0.0:
                errors.append("data_mode 'exact' cannot be combined with noise (delta > 0)")
        if self.measure_order and not self.k0 <= self.measure_order <= MAX_DEGREE:
            errors.append(f"measure_order must be 0 or in [k0, {MAX_DEGREE}], got {self.measure_order}")
        if self.workers < 1:
            errors.append(f"workers must be >= 1, got {self.workers}")
        return errors

    def check(self) -> None:
        """Raise InvalidArgumentError listing every problem."""
        errors = self.validate()
        if errors:
            raise InvalidArgumentError("invalid configuration: " + "; ".join(errors))

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


_FIELD_TYPES: dict[str, type] = {f.name: type(f.default) for f in fields(RunConfig)}
FIELD_ORDER = [f.name for f in fields(RunConfig)]


def _coerce(key: str, raw: Any) -> Any:
    kind = _FIELD_TYPES[key]
    try:
        if kind is int and isinstance(raw, str):
            as_float = float(raw)
            if not as_float.is_integer():
                raise ValueError(f"{raw!r} is not an integer")
            return int(as_float)
        return kind(raw.strip() if isinstance(raw, str) else raw)
    except (TypeError, ValueError) as e:
        raise InvalidArgumentError(f"bad value for {key}: {raw!r} ({e})") from e


def _normalize_key(raw: str) -> str:
    key = raw.strip().replace("-", "_")
    if key not in _FIELD_TYPES:
        raise InvalidArgumentError(f"unknown config key {raw.strip()!r}; known keys: {', '.join(FIELD_ORDER)}")
    return key


def parse_config_text(text: str) -> dict[str, list[Any]]:
    """Parse ``key = value`` lines into {key: [values...]}.

    Raises:
        InvalidArgumentError: On unknown keys, duplicates, malformed lines or bad values.
    """
    axes: dict[str, list[Any]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise InvalidArgumentError(f"line {lineno}: expected 'key = value', got {content!r}")
        raw_key, _, raw_value = content.partition("=")
        key = _normalize_key(raw_key)
        if key in axes:
            raise InvalidArgumentError(f"line {lineno}: duplicate key {key!r}")
        values = [v for v in (part.strip() for part in raw_value.split(",")) if v]
        if not values:
            raise InvalidArgumentError(f"line {lineno}: key {key!r} has no value")
        axes[key] = [_coerce(key, v) for v in values]
    return axes


def _parse_yaml(text: str) -> dict[str, list[Any]]:
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise InvalidArgumentError("YAML config must be a mapping of key -> value or list")
    axes: dict[str, list[Any]] = {}
    for raw_key, raw_value in data.items():
        key = _normalize_key(str(raw_key))
        values = raw_value if isinstance(raw_value, list) else [raw_value]
        if not values:
            raise InvalidArgumentError(f"key {key!r} has an empty list")
        axes[key] = [_coerce(key, v) for v in values]
    return axes


def load_config_file(path: str | Path) -> dict[str, list[Any]]:
    """Load grid axes from a text or YAML file."""
    path = Path(path)
    if not path.exists():
        raise InvalidArgumentError(f"config file not found: {path}")
    text = path.read_text()
    axes = _parse_yaml(text) if path.suffix in (".yaml", ".yml") else parse_config_text(text)
    logger.debug("Loaded %d config keys from %s", len(axes), path)
    return axes


def expand_grid(axes: dict[str, list[Any]], base: RunConfig | None = None) -> list[RunConfig]:
    """Cartesian product of ``axes`` in RunConfig field order (last field varies fastest)."""
    base = base or RunConfig()
    keys = [k for k in FIELD_ORDER if k in axes]
    configs = []
    for combo in itertools.product(*(axes[k] for k in keys)):
        configs.append(replace(base, **dict(zip(keys, combo))))
    return configs


def grid_axes(axes: dict[str, list[Any]]) -> list[str]:
    """Keys with more than one value, in field order."""
    return [k for k in FIELD_ORDER if len(axes.get(k, [])) > 1]


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning("Ignoring non-integer %s=%r", WORKERS_ENV, raw)
        return 1


__all__ = [
    "RunConfig",
    "parse_config_text",
    "load_config_file",
    "expand_grid",
    "grid_axes",
    "default_workers",
    "DATA_MODES",
    "WORKERS_ENV",
    "FIELD_ORDER",
]
