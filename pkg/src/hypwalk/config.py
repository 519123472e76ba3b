"""Run configuration: TOML ingestion and the default walk measure.

All experiment knobs live in typed dataclasses with defaults matching the
shipped demonstration run.  TOML tables map onto them section by section;
unknown keys are rejected rather than ignored so typos fail loudly.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .group import GroupElement
from .measures import AtomicMeasure, symmetrize

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def default_measure(scale: float = 0.3) -> AtomicMeasure:
    """Four-atom measure exp(+-scale E), exp(+-scale F), weight 1/4 each.

    E is the rotation generator and F = diag(1, -1), so the atoms are the
    rotations by +-scale and the diagonal matrices diag(e^{+-scale}).  They
    generate a dense non-amenable subgroup for generic scale, so the walk
    has a spectral radius strictly below one and no invariant boundary
    measure supported on finitely many points.
    """
    if not 0.0 < scale <= 2.0:
        raise ConfigError("scale must lie in (0, 2]")
    return AtomicMeasure(
        (
            (GroupElement.rotation(scale), 0.25),
            (GroupElement.rotation(-scale), 0.25),
            (GroupElement.dilation(2.0 * scale), 0.25),
            (GroupElement.dilation(-2.0 * scale), 0.25),
        )
    )


_GENERATORS = {
    "R": GroupElement.rotation,
    "D": GroupElement.dilation,
    "U": GroupElement.shear,
}


def element_from_word(word: str, scale: float) -> GroupElement:
    """Parse a generator word like "R D' U" into a group element.

    Tokens R (rotation), D (dilation), U (shear) each advance by the common
    scale; a trailing apostrophe inverts the token.  Products apply left to
    right.
    """
    out = GroupElement.identity()
    for token in word.split():
        inverted = token.endswith("'")
        name = token[:-1] if inverted else token
        if name not in _GENERATORS:
            raise ConfigError(f"unknown generator token {token!r} in word {word!r}")
        step = _GENERATORS[name](-scale if inverted else scale)
        out = out @ step
    return out


def _reject_unknown(table: dict, allowed: set, section: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")


def measure_from_table(table: dict) -> AtomicMeasure:
    """Build a measure from a [measure] TOML table.

    Each atom entry carries a weight plus either an explicit 2x2 matrix or
    a generator word with a scale.  Omitted weights are uniform; explicit
    weights are normalized to total mass one.
    """
    _reject_unknown(table, {"atoms", "scale", "symmetrized"}, "measure")
    entries = table.get("atoms")
    if not entries:
        return default_measure(float(table.get("scale", 0.3)))
    default_scale = float(table.get("scale", 0.3))
    pairs = []
    weights = []
    for i, entry in enumerate(entries):
        _reject_unknown(entry, {"word", "matrix", "scale", "weight"}, f"measure.atoms[{i}]")
        if ("word" in entry) == ("matrix" in entry):
            raise ConfigError(f"atom {i}: give exactly one of 'word' or 'matrix'")
        if "word" in entry:
            g = element_from_word(entry["word"], float(entry.get("scale", default_scale)))
        else:
            g = GroupElement.from_matrix(entry["matrix"])
        pairs.append(g)
        weights.append(float(entry.get("weight", 1.0)))
    total = math.fsum(weights)
    if total <= 0.0:
        raise ConfigError("atom weights must have positive total")
    mu = AtomicMeasure(tuple((g, w / total) for g, w in zip(pairs, weights)))
    if table.get("symmetrized", False):
        mu = symmetrize(mu)
    return mu


@dataclass(frozen=True)
class OperatorSettings:
    """Discretization of the boundary transfer operators."""

    truncation: int = 64  # modes |m| <= truncation
    quadrature: int = 1024  # boundary nodes; must be >= 8 * truncation

    def __post_init__(self):
        if self.truncation < 2:
            raise ConfigError("truncation must be at least 2")
        if self.quadrature < 8 * self.truncation:
            raise ConfigError("quadrature must be at least 8 * truncation")


@dataclass(frozen=True)
class LLTSettings:
    """Local limit experiment knobs."""

    steps: tuple = (4, 6, 8)
    mc_samples: int = 100_000
    r_max: float = 20.0
    r_nodes: int = 128
    convergence_steps: tuple = (8, 16, 32, 64, 128, 256)
    seed: int = 20260822

    def __post_init__(self):
        if any(n < 1 for n in self.steps):
            raise ConfigError("steps must be positive")
        if self.mc_samples < 10**4:
            raise ConfigError("mc_samples must be at least 1e4")
        if self.r_max <= 0 or self.r_nodes < 8:
            raise ConfigError("need r_max > 0 and r_nodes >= 8")


@dataclass(frozen=True)
class FurstenbergSettings:
    """Stationary measure diagnostics knobs."""

    levels: int = 7  # dyadic smoothness levels probed
    draws: int = 1000  # random test functions for the inequality checks
    seed: int = 20260822

    def __post_init__(self):
        if self.levels < 3:
            raise ConfigError("levels must be at least 3")


@dataclass(frozen=True)
class OutputSettings:
    directory: str = "out"
    formats: tuple = ("csv", "json", "svg")

    def __post_init__(self):
        bad = set(self.formats) - {"csv", "json", "svg"}
        if bad:
            raise ConfigError(f"unknown output formats: {sorted(bad)}")


@dataclass(frozen=True)
class RunConfig:
    measure: AtomicMeasure = field(default_factory=default_measure)
    operator: OperatorSettings = field(default_factory=OperatorSettings)
    llt: LLTSettings = field(default_factory=LLTSettings)
    furstenberg: FurstenbergSettings = field(default_factory=FurstenbergSettings)
    output: OutputSettings = field(default_factory=OutputSettings)


def _settings_from(cls, table: dict, section: str):
    spec_fields = {f.name for f in fields(cls)}
    _reject_unknown(table, spec_fields, section)
    coerced = {}
    for f in fields(cls):
        if f.name in table:
            value = table[f.name]
            coerced[f.name] = tuple(value) if isinstance(value, list) else value
    return cls(**coerced)


def parse_config(raw: dict) -> RunConfig:
    _reject_unknown(raw, {"measure", "operator", "llt", "furstenberg", "output"}, "top level")
    return RunConfig(
        measure=measure_from_table(raw.get("measure", {})),
        operator=_settings_from(OperatorSettings, raw.get("operator", {}), "operator"),
        llt=_settings_from(LLTSettings, raw.get("llt", {}), "llt"),
        furstenberg=_settings_from(FurstenbergSettings, raw.get("furstenberg", {}), "furstenberg"),
        output=_settings_from(OutputSettings, raw.get("output", {}), "output"),
    )


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}")
    return parse_config(raw)
