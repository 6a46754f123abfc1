"""Experiment configuration and its plain-text form.

Grammar: ``key=value`` tokens separated by whitespace or newlines; ``#``
starts a comment running to end of line. Lists (``checkpoints``) are
comma-separated without spaces. Edge-step keys are ``family`` plus that
family's parameters (``c``, ``gamma``, ``p``, ``sv_delta``). ``delta`` is
the affine attachment offset. Unknown keys are rejected.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .edge_step import DomainError, EdgeStepSpec, FAMILIES, format_spec, spec_from_mapping

SPEC_KEYS = {"family", "c", "gamma", "p", "sv_delta"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    spec: EdgeStepSpec
    delta: float = 0.0
    checkpoints: tuple = (1000,)
    replicas: int = 100
    base_seed: int = 0
    d_max: int | None = None
    d_report: int = 20
    A: float = 3.0
    alpha: float = 0.5
    out: str = "out"
    threads: int = 1

    def __post_init__(self):
        if not self.delta >= 0:
            raise ConfigError(f"delta: must be >= 0, got {self.delta!r}")
        if not self.checkpoints or min(self.checkpoints) < 1:
            raise ConfigError("checkpoints: need at least one time >= 1")
        if tuple(sorted(set(self.checkpoints))) != tuple(self.checkpoints):
            raise ConfigError("checkpoints: must be strictly increasing")
        if self.replicas < 1:
            raise ConfigError("replicas: must be >= 1")
        if not 0 <= self.base_seed < 2**64:
            raise ConfigError("seed: must fit in an unsigned 64-bit integer")
        if self.d_max is not None and self.d_max < 2:
            raise ConfigError("d_max: must be >= 2")
        if self.d_report < 1:
            raise ConfigError("d_report: must be >= 1")
        if not self.A > 0:
            raise ConfigError("A: must be positive")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha: must lie in (0, 1)")
        if self.threads < 1:
            raise ConfigError("threads: must be >= 1")

    @property
    def t_max(self) -> int:
        return max(self.checkpoints)

    def resolved_d_max(self) -> int:
        from .theory import default_d_max

        d = default_d_max(self.t_max) if self.d_max is None else self.d_max
        return max(d, self.d_report)


def serialize(config: ExperimentConfig) -> str:
    lines = [
        format_spec(config.spec),
        f"delta={config.delta!r}",
        "checkpoints=" + ",".join(str(t) for t in config.checkpoints),
        f"replicas={config.replicas}",
        f"seed={config.base_seed}",
        f"d_max={'auto' if config.d_max is None else config.d_max}",
        f"d_report={config.d_report}",
        f"A={config.A!r}",
        f"alpha={config.alpha!r}",
        f"out={config.out}",
        f"threads={config.threads}",
    ]
    return "\n".join(lines) + "\n"


def tokenize(text: str) -> dict:
    values = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0]
        for token in line.split():
            key, sep, value = token.partition("=")
            if not sep or not key:
                raise ConfigError(f"expected key=value, got {token!r}")
            values[key] = value
    return values


def _int(values, key):
    try:
        return int(values[key])
    except ValueError:
        raise ConfigError(f"{key}: not an integer: {values[key]!r}") from None


def _float(values, key):
    try:
        return float(values[key])
    except ValueError:
        raise ConfigError(f"{key}: not a number: {values[key]!r}") from None


def from_mapping(values: dict) -> ExperimentConfig:
    known = SPEC_KEYS | {
        "delta", "checkpoints", "replicas", "seed", "d_max", "d_report", "A", "alpha", "out", "threads",
    }
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
    if "family" not in values:
        raise ConfigError("missing required key: family")
    family = values["family"]
    if family not in FAMILIES:
        raise ConfigError(f"family: unknown family {family!r}; expected one of {sorted(FAMILIES)}")
    allowed = set(FAMILIES[family]().params()) | {"family"}
    stray = sorted((set(values) & SPEC_KEYS) - allowed)
    if stray:
        raise ConfigError(f"key(s) {', '.join(stray)} do not apply to family {family}")
    try:
        spec = spec_from_mapping({k: v for k, v in values.items() if k in SPEC_KEYS})
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    kwargs = {"spec": spec}
    if "delta" in values:
        kwargs["delta"] = _float(values, "delta")
    if "checkpoints" in values:
        try:
            kwargs["checkpoints"] = tuple(int(x) for x in values["checkpoints"].split(",") if x)
        except ValueError:
            raise ConfigError(f"checkpoints: not a list of integers: {values['checkpoints']!r}") from None
    for key in ("replicas", "d_report", "threads"):
        if key in values:
            kwargs[key] = _int(values, key)
    if "seed" in values:
        kwargs["base_seed"] = _int(values, "seed")
    if "d_max" in values:
        kwargs["d_max"] = None if values["d_max"] == "auto" else _int(values, "d_max")
    for key in ("A", "alpha"):
        if key in values:
            kwargs[key] = _float(values, key)
    if "out" in values:
        kwargs["out"] = values["out"]
    return ExperimentConfig(**kwargs)


def parse(text: str) -> ExperimentConfig:
    return from_mapping(tokenize(text))


def with_overrides(config: ExperimentConfig, **changes) -> ExperimentConfig:
    return replace(config, **{k: v for k, v in changes.items() if v is not None})
