"""Scenario configuration: flat sectioned TOML files mapping directly onto
TechParams, ConstraintSet, and an optional sweep specification.

Unknown keys are rejected; missing required model keys are reported by
name so a truncated config fails loudly.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .params import ConstraintSet, DomainError, QueueSpec, TechParams

__all__ = ["ScenarioConfig", "SweepSpec", "ConfigError", "load_config",
           "parse_config_text", "model_section_text", "config_sha256"]

SWEEP_VARIABLES = ("a_max", "p_max", "m_d_max", "m_s_max")

_MODEL_KEYS = (
    "tau", "alpha", "beta", "chi", "mu", "mu_n", "e_n", "n_cores", "rho",
    "d_d", "d_t_coeff",
    "noc_queue_form", "noc_queue_coeff", "noc_queue_sat",
    "dram_queue_form", "dram_queue_coeff", "dram_queue_sat",
)
_CONSTRAINT_KEYS = ("p_max", "m_d_max", "a_max", "m_s_max")
_SWEEP_KEYS = ("variable", "from", "to", "steps", "log_scale")
_OUTPUT_KEYS = ("csv",)


class ConfigError(ValueError):
    """Malformed or inconsistent configuration file."""


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float        # "from" in the file
    stop: float         # "to" in the file
    steps: int
    log_scale: bool = True

    def validate(self) -> None:
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(
                f"sweep.variable must be one of {SWEEP_VARIABLES}, got {self.variable!r}")
        if not (self.start > 0 and self.stop > 0):
            raise ConfigError("sweep range must be positive")
        if self.steps < 2:
            raise ConfigError(f"sweep.steps must be >= 2, got {self.steps}")

    def values(self):
        import numpy as np
        if self.log_scale:
            return np.logspace(np.log10(self.start), np.log10(self.stop), self.steps)
        return np.linspace(self.start, self.stop, self.steps)


@dataclass(frozen=True)
class ScenarioConfig:
    model: TechParams
    constraints: ConstraintSet
    sweep: Optional[SweepSpec] = None
    output_csv: Optional[str] = None
    source_text: str = ""

    def sha256(self) -> str:
        return hashlib.sha256(self.source_text.encode("utf-8")).hexdigest()


def _reject_unknown(section: str, data: dict, allowed) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")


def _num(section: str, data: dict, key: str, required: bool = True,
         default=None, integer: bool = False):
    if key not in data:
        if required:
            raise ConfigError(f"missing required key '{key}' in [{section}]")
        return default
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"[{section}] {key} must be a number, got {v!r}")
    return int(v) if integer else float(v)


def parse_config_text(text: str, require_model: bool = True) -> ScenarioConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from None
    _reject_unknown("<root>", raw, ("model", "constraints", "sweep", "output"))

    if "model" not in raw:
        if require_model:
            raise ConfigError("missing [model] section")
        model = TechParams()
    else:
        m = raw["model"]
        _reject_unknown("model", m, _MODEL_KEYS)
        model = TechParams(
            tau=_num("model", m, "tau"),
            alpha=_num("model", m, "alpha"),
            beta=_num("model", m, "beta"),
            chi=_num("model", m, "chi"),
            mu=_num("model", m, "mu"),
            mu_n=_num("model", m, "mu_n"),
            e_n=_num("model", m, "e_n"),
            n_cores=_num("model", m, "n_cores", integer=True),
            rho=_num("model", m, "rho"),
            d_d=_num("model", m, "d_d"),
            d_t_coeff=_num("model", m, "d_t_coeff"),
            noc_q=QueueSpec(
                form=str(m.get("noc_queue_form", "mm1")),
                coeff=_num("model", m, "noc_queue_coeff"),
                sat=_num("model", m, "noc_queue_sat", required=False, default=1.0),
            ),
            dram_q=QueueSpec(
                form=str(m.get("dram_queue_form", "mm1")),
                coeff=_num("model", m, "dram_queue_coeff"),
                sat=_num("model", m, "dram_queue_sat", required=False, default=1.0),
            ),
        )
        try:
            model.validate()
        except DomainError as exc:
            raise ConfigError(f"invalid [model]: {exc}") from None

    cdata = raw.get("constraints", {})
    _reject_unknown("constraints", cdata, _CONSTRAINT_KEYS)
    cons = ConstraintSet(
        p_max=_num("constraints", cdata, "p_max", required=False),
        m_d_max=_num("constraints", cdata, "m_d_max", required=False),
        a_max=_num("constraints", cdata, "a_max", required=False),
        m_s_max=_num("constraints", cdata, "m_s_max", required=False),
    )
    try:
        cons.validate()
    except DomainError as exc:
        raise ConfigError(f"invalid [constraints]: {exc}") from None

    sweep = None
    if "sweep" in raw:
        s = raw["sweep"]
        _reject_unknown("sweep", s, _SWEEP_KEYS)
        if "variable" not in s:
            raise ConfigError("missing required key 'variable' in [sweep]")
        sweep = SweepSpec(
            variable=str(s["variable"]),
            start=_num("sweep", s, "from"),
            stop=_num("sweep", s, "to"),
            steps=_num("sweep", s, "steps", integer=True),
            log_scale=bool(s.get("log_scale", True)),
        )
        sweep.validate()

    output_csv = None
    if "output" in raw:
        o = raw["output"]
        _reject_unknown("output", o, _OUTPUT_KEYS)
        if "csv" in o:
            output_csv = str(o["csv"])

    return ScenarioConfig(model=model, constraints=cons, sweep=sweep,
                          output_csv=output_csv, source_text=text)


def load_config(path) -> ScenarioConfig:
    text = Path(path).read_text(encoding="utf-8")
    return parse_config_text(text)


def model_section_text(p: TechParams) -> str:
    """Render a TechParams as a [model] TOML section. Floats use repr so
    the file round-trips bit-exactly."""
    lines = ["[model]"]
    for key, val in (
        ("tau", p.tau), ("alpha", p.alpha), ("beta", p.beta), ("chi", p.chi),
        ("mu", p.mu), ("mu_n", p.mu_n), ("e_n", p.e_n),
        ("n_cores", p.n_cores), ("rho", p.rho), ("d_d", p.d_d),
        ("d_t_coeff", p.d_t_coeff),
        ("noc_queue_form", p.noc_q.form), ("noc_queue_coeff", p.noc_q.coeff),
        ("noc_queue_sat", p.noc_q.sat),
        ("dram_queue_form", p.dram_q.form), ("dram_queue_coeff", p.dram_q.coeff),
        ("dram_queue_sat", p.dram_q.sat),
    ):
        if isinstance(val, str):
            lines.append(f'{key} = "{val}"')
        elif isinstance(val, int):
            lines.append(f"{key} = {val}")
        else:
            lines.append(f"{key} = {float(val)!r}")
    return "\n".join(lines) + "\n"


def config_sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
