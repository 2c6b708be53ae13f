"""Flat ``key = value`` experiment configuration files.

Blank lines and everything after ``#`` are ignored.  Every physical key and
``n``, ``rate`` and ``delta`` must be present; the run-control keys fall back
to defaults.  Unknown or repeated keys are errors.  A bare name such as
``paper_20km`` refers to one of the configs shipped with the package.
"""

import math
from importlib import resources
from pathlib import Path

from .optics import SystemParams
from .simulate import CaseKind, ExperimentConfig, SamplingMode

BUILTIN_CONFIGS = ("paper_0km", "paper_10km", "paper_20km")


class ConfigError(ValueError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


def _int(text):
    text = text.strip()
    if text.lower().startswith("0x"):
        return int(text, 16)
    try:
        return int(text)
    except ValueError:
        value = float(text)
        if not value.is_integer():
            raise ValueError(f"{text!r} is not an integer") from None
        return int(value)


def _float(text):
    value = float(text)
    if math.isnan(value):
        raise ValueError("nan is not allowed")
    return value


PARAM_KEYS = tuple(SystemParams.field_names())
REQUIRED_KEYS = ("n", "rate", "delta") + PARAM_KEYS
OPTIONAL_KEYS = {
    "mu_rel_uncertainty": 0.0,
    "epsilon_target": 2.6e-5,
    "repetitions": 10,
    "master_seed": 0,
    "sampling_mode": SamplingMode.AGGREGATE,
    "case_kind": CaseKind.WORST_CASE,
}
_PARSERS = {
    "n": _int,
    "repetitions": _int,
    "master_seed": _int,
    "sampling_mode": SamplingMode,
    "case_kind": CaseKind,
}
ALL_KEYS = REQUIRED_KEYS + tuple(OPTIONAL_KEYS)


def parse_text(text, source="<config>"):
    """Raw string values keyed by name."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in ALL_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}", key)
        if key in values:
            raise ConfigError(f"{source}:{lineno}: key {key!r} given twice", key)
        values[key] = value
    return values


def read_text(name_or_path):
    if name_or_path in BUILTIN_CONFIGS:
        return resources.files(__package__).joinpath("configs", f"{name_or_path}.cfg").read_text(), name_or_path
    path = Path(name_or_path)
    try:
        return path.read_text(), str(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {name_or_path!r}: {exc.strerror or exc}") from None


def build(values, source="<config>", **extra):
    """Typed :class:`ExperimentConfig` from raw values, validated key by key."""
    for key in REQUIRED_KEYS:
        if key not in values:
            raise ConfigError(f"{source}: missing required key {key!r}", key)
    typed = dict(OPTIONAL_KEYS)
    for key, text in values.items():
        try:
            typed[key] = _PARSERS.get(key, _float)(text)
        except ValueError as exc:
            raise ConfigError(f"{source}: bad value for {key!r}: {exc}", key) from None
    try:
        params = SystemParams(**{k: typed.pop(k) for k in PARAM_KEYS})
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}", _blame(str(exc))) from None
    try:
        return ExperimentConfig(params=params, **typed, **extra)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}", _blame(str(exc))) from None


def _blame(message):
    for key in ALL_KEYS:
        if message.startswith(key):
            return key
    return None


def load(name_or_path, overrides=(), **extra):
    """Read, override and validate a config.

    ``overrides`` holds ``"key=value"`` strings applied on top of the file.
    """
    text, source = read_text(name_or_path)
    values = parse_text(text, source)
    for item in overrides:
        more = parse_text(item, "--set")
        values.update(more)
    return build(values, source, **extra)


def dump(config):
    """Config file text reproducing ``config`` (file paths excluded)."""
    lines = [f"n = {config.n}", f"rate = {config.rate!r}", f"delta = {config.delta!r}"]
    lines += [f"{k} = {getattr(config.params, k)!r}" for k in PARAM_KEYS]
    lines += [
        f"mu_rel_uncertainty = {config.mu_rel_uncertainty!r}",
        f"epsilon_target = {config.epsilon_target!r}",
        f"repetitions = {config.repetitions}",
        f"master_seed = {config.master_seed}",
        f"sampling_mode = {config.sampling_mode}",
        f"case_kind = {config.case_kind}",
    ]
    return "\n".join(lines) + "\n"
