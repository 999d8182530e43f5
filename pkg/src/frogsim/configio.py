"""Experiment configuration: a small key=value file format with an optional
[sweep] section, plus serialization helpers shared by the CSV emitters."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .distributions import parse_eta
from .engine import SimConfig, TieRule
from .rng import Site

COMMANDS = ("simulate", "shape", "coexist", "passage", "sweep", "oracle-check")
EMIT_CHOICES = ("csv", "json", "svg")
SWEEPABLE = ("p1", "p2", "horizon", "seed", "K", "eta")


class ConfigError(Exception):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass
class ExperimentSpec:
    """Validated experiment description: model config plus command knobs."""

    config: SimConfig
    command: Optional[str] = None  # sub-command for sweeps
    replicas: int = 1
    emit: tuple[str, ...] = ("csv", "json", "svg")
    K: int = 50
    checkpoints: tuple[int, ...] = ()
    targets: tuple[Site, ...] = ()
    p_values: tuple[float, ...] = ()
    n_values: tuple[int, ...] = ()
    mu_replicas: int = 20
    triples: int = 0
    norm_bound: int = 10
    rho: float = 0.9
    tv_threshold: float = 0.02
    oracle_seeds: int = 100_000
    sweep: dict = field(default_factory=dict)

    def with_overrides(self, seed=None, replicas=None, emit=None) -> "ExperimentSpec":
        out = self
        if seed is not None:
            out = replace(out, config=replace(out.config, seed=seed))
        if replicas is not None:
            out = replace(out, replicas=replicas)
        if emit is not None:
            out = replace(out, emit=tuple(emit))
        return out


def site_to_str(site: Site) -> str:
    return ":".join(str(c) for c in site)


def str_to_site(text: str) -> Site:
    try:
        return tuple(int(c) for c in text.split(":"))
    except ValueError:
        raise ValueError(f"malformed site {text!r}; expected colon-joined "
                         "integers like 1:0") from None


def _parse_site(value: str, d: Optional[int]) -> Site:
    parts = [p.strip() for p in value.replace(":", ",").split(",") if p.strip()]
    try:
        site = tuple(int(p) for p in parts)
    except ValueError:
        raise ValueError(f"malformed site {value!r}") from None
    if d is not None and len(site) != d:
        raise ValueError(f"site {value!r} has {len(site)} coordinates, "
                         f"expected {d}")
    return site


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def _parse_tie(value: str) -> TieRule:
    v = value.strip().lower()
    if v.startswith("biased"):
        inner = v[len("biased"):].strip()
        if not (inner.startswith("(") and inner.endswith(")")):
            raise ValueError("biased tie rule needs a coin, e.g. biased(0.7)")
        return TieRule("biased", float(inner[1:-1]))
    return TieRule(v)


_MODEL_KEYS = {
    "d", "eta", "p1", "p2", "start1", "start2", "tie", "laziness",
    "condition_start", "seed", "horizon",
}
_RUN_KEYS = {
    "command", "replicas", "emit", "K", "checkpoints", "targets", "p_values",
    "n_values", "mu_replicas", "triples", "norm_bound", "rho",
    "tv_threshold", "oracle_seeds",
}


def parse_config(text: str) -> ExperimentSpec:
    """Parse a key=value config with an optional [sweep] section.

    Unknown keys are errors; diagnostics carry line numbers.  Defaults:
    p1 = p2 = 1, d = 2, eta = degenerate(1), tie = faircoin,
    laziness = independent.
    """
    raw: dict[str, tuple[str, int]] = {}
    sweep_raw: dict[str, tuple[str, int]] = {}
    section = None
    for ln, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError("unterminated section header", ln)
            section = stripped[1:-1].strip().lower()
            if section != "sweep":
                raise ConfigError(f"unknown section [{section}]", ln)
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected key = value, got {stripped!r}", ln)
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        target = sweep_raw if section == "sweep" else raw
        if key in target:
            raise ConfigError(f"duplicate key {key!r}", ln)
        target[key] = (value, ln)

    for key, (_, ln) in raw.items():
        if key not in _MODEL_KEYS | _RUN_KEYS:
            raise ConfigError(f"unknown key {key!r}", ln)
    for key, (_, ln) in sweep_raw.items():
        if key not in SWEEPABLE:
            raise ConfigError(
                f"key {key!r} is not sweepable; choices: "
                + ", ".join(SWEEPABLE), ln)

    def take(key, parse, default):
        if key not in raw:
            return default
        value, ln = raw.pop(key)
        try:
            return parse(value)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", ln) from None

    d = take("d", int, 2)

    def parse_p(value: str) -> float:
        p = float(value)
        if not 0.0 < p <= 1.0:
            raise ValueError(f"{p} is outside (0, 1]")
        return p

    model = {
        "d": d,
        "eta": take("eta", parse_eta, parse_eta("degenerate(1)")),
        "p1": take("p1", parse_p, 1.0),
        "p2": take("p2", parse_p, 1.0),
        "start1": take("start1", lambda v: _parse_site(v, d), (0,) * d),
        "tie": take("tie", _parse_tie, TieRule("faircoin")),
        "laziness": take("laziness", _parse_laziness, "independent"),
        "condition_start_nonempty": take("condition_start", _parse_bool, False),
        "seed": take("seed", int, 0),
        "horizon": take("horizon", _parse_nonneg_int, 100),
    }
    start2_raw = take("start2", str, None)
    if start2_raw is not None and start2_raw.lower() not in ("none", ""):
        try:
            model["start2"] = _parse_site(start2_raw, d)
        except ValueError as exc:
            raise ConfigError(f"start2: {exc}") from None

    try:
        config = SimConfig(**model)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    spec_kw = {
        "command": take("command", _parse_command, None),
        "replicas": take("replicas", _parse_pos_int, 1),
        "emit": take("emit", _parse_emit, ("csv", "json", "svg")),
        "K": take("K", _parse_pos_int, 50),
        "checkpoints": take("checkpoints", _parse_int_list, ()),
        "targets": take("targets", lambda v: _parse_site_list(v, d), ()),
        "p_values": take("p_values", _parse_p_list, ()),
        "n_values": take("n_values", _parse_int_list, ()),
        "mu_replicas": take("mu_replicas", _parse_pos_int, 20),
        "triples": take("triples", _parse_nonneg_int, 0),
        "norm_bound": take("norm_bound", _parse_pos_int, 10),
        "rho": take("rho", _parse_rho, 0.9),
        "tv_threshold": take("tv_threshold", float, 0.02),
        "oracle_seeds": take("oracle_seeds", _parse_pos_int, 100_000),
    }
    sweep = {}
    for key, (value, ln) in sweep_raw.items():
        try:
            sweep[key] = _parse_sweep_values(key, value)
        except ValueError as exc:
            raise ConfigError(f"sweep {key}: {exc}", ln) from None
    return ExperimentSpec(config=config, sweep=sweep, **spec_kw)


def _parse_laziness(value: str) -> str:
    v = value.strip().lower()
    if v not in ("independent", "collective"):
        raise ValueError("laziness must be independent or collective")
    return v


def _parse_command(value: str) -> str:
    v = value.strip().lower()
    if v not in COMMANDS or v == "sweep":
        raise ValueError(f"command must be one of "
                         + ", ".join(c for c in COMMANDS if c != "sweep"))
    return v


def _parse_pos_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise ValueError(f"{n} must be >= 1")
    return n


def _parse_nonneg_int(value: str) -> int:
    n = int(value)
    if n < 0:
        raise ValueError(f"{n} must be >= 0")
    return n


def _parse_rho(value: str) -> float:
    r = float(value)
    if not 0.0 < r <= 1.0:
        raise ValueError(f"rho {r} is outside (0, 1]")
    return r


def _parse_emit(value: str) -> tuple[str, ...]:
    items = tuple(p.strip().lower() for p in value.split(",") if p.strip())
    for item in items:
        if item not in EMIT_CHOICES:
            raise ValueError(f"unknown emit kind {item!r}; choices: "
                             + ", ".join(EMIT_CHOICES))
    return items


def _parse_int_list(value: str) -> tuple[int, ...]:
    return tuple(int(p.strip()) for p in value.split(",") if p.strip())


def _parse_p_list(value: str) -> tuple[float, ...]:
    out = []
    for p in value.split(","):
        p = p.strip()
        if not p:
            continue
        f = float(p)
        if not 0.0 < f <= 1.0:
            raise ValueError(f"{f} is outside (0, 1]")
        out.append(f)
    return tuple(out)


def _parse_site_list(value: str, d: int) -> tuple[Site, ...]:
    return tuple(_parse_site(part, d) for part in value.split(";")
                 if part.strip())


def _parse_sweep_values(key: str, value: str):
    if key == "eta":
        return tuple(parse_eta(p.strip()) for p in value.split(";")
                     if p.strip())
    if key in ("p1", "p2"):
        return _parse_p_list(value)
    return _parse_int_list(value)
