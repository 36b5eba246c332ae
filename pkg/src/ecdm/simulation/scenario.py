"""Simulation scenarios and their YAML configuration files."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Optional, Union

import yaml

from ecdm.simulation.covariance import CovSpec


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class Coupling(str, Enum):
    NULL_CASE_A = "null_case_a"
    SHARED_COORDINATE_CASE_B = "shared_coordinate_case_b"


class Distribution(str, Enum):
    GAUSSIAN_I = "gaussian_I"
    CHISQ_II = "chisq_II"
    T10_III = "t10_III"


@dataclass(frozen=True)
class SimScenario:
    cov: CovSpec
    coupling: Coupling = Coupling.NULL_CASE_A
    distribution: Distribution = Distribution.GAUSSIAN_I
    n: Optional[int] = None  # None: n = 4 * ceil(sqrt(p1))
    replications: int = 2000
    seed: int = 0
    alpha: float = 0.05
    structure_truth: bool = False  # also compute T_n0 with Sigma0 = true Sigma_*

    def __post_init__(self):
        object.__setattr__(self, "coupling", Coupling(self.coupling))
        object.__setattr__(self, "distribution", Distribution(self.distribution))
        if self.coupling is Coupling.SHARED_COORDINATE_CASE_B and min(self.cov.p1, self.cov.p2) < 3:
            raise ConfigError("cov", "shared_coordinate_case_b needs p1 >= 3 and p2 >= 3")
        if self.n is not None and self.n < 4:
            raise ConfigError("n", f"need n >= 4, got {self.n}")
        if self.replications < 1:
            raise ConfigError("replications", "must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")
        if not 0.0 < self.alpha < 0.5:
            raise ConfigError("alpha", "must lie in (0, 0.5)")

    @property
    def p(self) -> int:
        return self.cov.p1 + self.cov.p2

    @property
    def sample_size(self) -> int:
        if self.n is not None:
            return self.n
        return 4 * math.ceil(math.sqrt(self.cov.p1))

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["coupling"] = self.coupling.value
        d["distribution"] = self.distribution.value
        d["n"] = "rule" if self.n is None else self.n
        d["p"] = self.p
        return d


_TOP_KEYS = {"cov", "coupling", "distribution", "n", "replications", "seed", "alpha",
             "structure_truth", "p"}
_COV_KEYS = {"p1", "p2", "base1", "base2", "scaled"}


def _int(value, field):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(field, f"expected an integer, got {value!r}")
    return value


def _float(value, field):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(field, f"expected a number, got {value!r}")
    return float(value)


def scenario_from_dict(raw: Mapping[str, Any]) -> SimScenario:
    """Build a scenario from nested key/value data, naming the failing field on error.

    ``cov.p1``/``cov.p2`` may be omitted when a top-level ``p`` is given;
    the blocks are then split evenly.
    """
    if not isinstance(raw, Mapping):
        raise ConfigError("<root>", "expected a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    cov_raw = raw.get("cov", {}) or {}
    if not isinstance(cov_raw, Mapping):
        raise ConfigError("cov", "expected a mapping")
    unknown = set(cov_raw) - _COV_KEYS
    if unknown:
        raise ConfigError("cov." + sorted(unknown)[0], "unknown key")

    p = raw.get("p")
    if p is not None:
        p = _int(p, "p")
    p1 = cov_raw.get("p1")
    p2 = cov_raw.get("p2")
    if p1 is None and p2 is None:
        if p is None:
            raise ConfigError("cov.p1", "give cov.p1/cov.p2 or a top-level p")
        p1 = p // 2
        p2 = p - p1
    elif p1 is None:
        p1 = _int(p, "p") - _int(p2, "cov.p2") if p is not None else None
    elif p2 is None:
        p2 = _int(p, "p") - _int(p1, "cov.p1") if p is not None else None
    if p1 is None:
        raise ConfigError("cov.p1", "missing")
    if p2 is None:
        raise ConfigError("cov.p2", "missing")
    p1, p2 = _int(p1, "cov.p1"), _int(p2, "cov.p2")
    if p is not None and p != p1 + p2:
        raise ConfigError("p", f"p = {p} but cov.p1 + cov.p2 = {p1 + p2}")
    try:
        cov = CovSpec(
            p1=p1,
            p2=p2,
            base1=_float(cov_raw.get("base1", 0.3), "cov.base1"),
            base2=_float(cov_raw.get("base2", 0.4), "cov.base2"),
            scaled=bool(cov_raw.get("scaled", True)),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("cov", str(exc)) from None

    n = raw.get("n", "rule")
    n = None if n == "rule" else _int(n, "n")
    coupling = raw.get("coupling", Coupling.NULL_CASE_A.value)
    try:
        coupling = Coupling(coupling)
    except ValueError:
        raise ConfigError("coupling", f"expected one of {[c.value for c in Coupling]}") from None
    dist = raw.get("distribution", Distribution.GAUSSIAN_I.value)
    try:
        dist = Distribution(dist)
    except ValueError:
        raise ConfigError("distribution", f"expected one of {[d.value for d in Distribution]}") from None

    return SimScenario(
        cov=cov,
        coupling=coupling,
        distribution=dist,
        n=n,
        replications=_int(raw.get("replications", 2000), "replications"),
        seed=_int(raw.get("seed", 0), "seed"),
        alpha=_float(raw.get("alpha", 0.05), "alpha"),
        structure_truth=bool(raw.get("structure_truth", False)),
    )


def load_scenario(path: Union[str, Path]) -> SimScenario:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML: {exc}") from None
    return scenario_from_dict(raw)
