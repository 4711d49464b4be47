"""
Scenario Loader Module
Reads YAML scenario files into ScenarioConfig, applying environment defaults and
command-line overrides (flag > file > environment > built-in default).
"""

import os
from dataclasses import fields, replace
from typing import Any, Dict, Optional, Tuple

import yaml
from dotenv import load_dotenv

from market_model import RESOURCES
from negotiation import DEFAULT_ROUND_INTERVAL
from server_dataset import DEFAULT_DATASET
from simulation import ConsumerRanges, ProviderRanges, ScenarioConfig
from taxation import (
    TAX_KINDS, VAT, Fee, GreenCloud, ResourceTax, Schedule, TaxConfigError, TaxPolicy, validate_policy,
)

load_dotenv()

PROJECT_ROOT = os.path.dirname(os.path.abspath(__file__))
SECTIONS = ("consumers", "providers", "tax", "simulation")

# Two-bracket example used when a progressive/regressive schedule is asked for without a table
DEFAULT_BRACKET_THRESHOLDS = {
    "price": 50.0,
    "storage": 512000.0,
    "ram": 4096.0,
    "processing_power": 15000.0,
}
PROGRESSIVE_STEP = 2.0
REGRESSIVE_STEP = 0.5


class ConfigError(ValueError):
    """Scenario file missing, unreadable or malformed."""


def read_scenario(path: str) -> Tuple[bytes, Dict[str, Any]]:
    """Raw bytes (for the manifest hash) and the parsed YAML mapping."""
    if not os.path.isfile(path):
        raise ConfigError(f"config not found: {path}")
    with open(path, "rb") as f:
        raw = f.read()
    try:
        data = yaml.safe_load(raw) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML in {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping of sections")
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"{path}: unknown section(s) {', '.join(unknown)} (expected {', '.join(SECTIONS)})")
    for section in SECTIONS:
        value = data.get(section) or {}
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: section '{section}' must be a mapping")
        data[section] = value
    return raw, data


TRUE_WORDS = ("true", "yes", "on", "1")
FALSE_WORDS = ("false", "no", "off", "0")


def parse_bool(value, key="value"):
    """YAML booleans, 0/1, or one of the words above (case-insensitive)."""
    if isinstance(value, bool):
        return value
    if isinstance(value, int) and value in (0, 1):
        return bool(value)
    if isinstance(value, str):
        word = value.strip().lower()
        if word in TRUE_WORDS:
            return True
        if word in FALSE_WORDS:
            return False
    raise ConfigError(f"{key}: expected a boolean (true/false, yes/no), got {value!r}")


def _build_section(cls, values: Dict[str, Any], section: str, skip=()):
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in values.items():
        if key in skip:
            continue
        if key not in known:
            raise ConfigError(f"[{section}] unknown key '{key}'")
        kind = known[key].type
        try:
            if kind is bool:
                kwargs[key] = parse_bool(value, f"[{section}] {key}")
            elif kind is int:
                if float(value) != int(float(value)):
                    raise ValueError(value)
                kwargs[key] = int(float(value))
            elif kind is float:
                kwargs[key] = float(value)
            else:
                kwargs[key] = value
        except (TypeError, ValueError) as e:
            raise ConfigError(f"[{section}] {key}: invalid value {value!r}") from e
    return cls(**kwargs)


def resolve_path(path: str, config_dir: Optional[str] = None) -> str:
    """First existing candidate among cwd, the config's directory and the project root."""
    if os.path.isabs(path):
        return path
    candidates = [path]
    if config_dir:
        candidates.append(os.path.join(config_dir, path))
    candidates.append(os.path.join(PROJECT_ROOT, path))
    for candidate in candidates:
        if os.path.exists(candidate):
            return candidate
    return path


def default_brackets(base: str, base_rate: float, schedule: Schedule):
    step = PROGRESSIVE_STEP if schedule is Schedule.PROGRESSIVE else REGRESSIVE_STEP
    return ((DEFAULT_BRACKET_THRESHOLDS[base], base_rate * step),)


def _parse_brackets(raw, section="tax"):
    try:
        return tuple((float(threshold), float(rate)) for threshold, rate in raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"[{section}] brackets must be a list of [threshold, rate] pairs") from e


def build_tax_policy(values: Dict[str, Any]) -> TaxPolicy:
    """
    TaxPolicy from a `tax` mapping.

    Keys: kind (vat|fee|resource|greencloud), rate, amount/fee_amount, eco_penalty,
    base, rate_per_unit, schedule, brackets.
    """
    kind = str(values.get("kind", "greencloud")).lower()
    if kind not in TAX_KINDS:
        raise ConfigError(f"[tax] kind must be one of {', '.join(TAX_KINDS)} (got {kind})")
    try:
        schedule = Schedule(str(values.get("schedule", "proportional")).lower())
    except ValueError:
        raise ConfigError(f"[tax] unknown schedule {values.get('schedule')!r}") from None
    brackets = _parse_brackets(values["brackets"]) if values.get("brackets") else ()

    try:
        if kind == "vat":
            rate = float(values.get("rate", 0.1))
            if schedule is not Schedule.PROPORTIONAL and not brackets:
                brackets = default_brackets("price", rate, schedule)
            policy = VAT(rate=rate, schedule=schedule, brackets=brackets)
        elif kind == "fee":
            policy = Fee(amount=float(values.get("amount", values.get("fee_amount", 1.0))))
        elif kind == "resource":
            base = str(values.get("base", "ram"))
            if base not in RESOURCES:
                raise ConfigError(f"[tax] base must be one of {', '.join(RESOURCES)} (got {base})")
            rate = float(values.get("rate_per_unit", values.get("rate", 0.001)))
            if schedule is not Schedule.PROPORTIONAL and not brackets:
                brackets = default_brackets(base, rate, schedule)
            policy = ResourceTax(base=base, rate_per_unit=rate, schedule=schedule, brackets=brackets)
        else:
            policy = GreenCloud(
                rate=float(values.get("rate", 0.1)),
                eco_penalty=float(values.get("eco_penalty", 1.0)),
                brackets=brackets,
            )
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"[tax] invalid value: {e}") from e

    try:
        return validate_policy(policy)
    except TaxConfigError as e:
        raise ConfigError(f"[tax] {e}") from e


def apply_overrides(values: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Command-line values (None = not given) layered over the file's tax section."""
    merged = dict(values)
    kind = overrides.get("tax")
    if kind is not None and str(kind).lower() != str(merged.get("kind", "greencloud")).lower():
        # a different model on the command line drops the file's model-specific keys
        merged = {"kind": kind}
    for flag, key in (("rate", "rate"), ("fee_amount", "amount"), ("eco_penalty", "eco_penalty")):
        if overrides.get(flag) is not None:
            merged[key] = overrides[flag]
    if merged.get("kind") == "resource" and overrides.get("rate") is not None:
        merged["rate_per_unit"] = overrides["rate"]
    return merged


def load_scenario_config(path: str, overrides: Optional[Dict[str, Any]] = None) -> ScenarioConfig:
    """
    Parse a scenario file.

    Args:
        path: YAML file with sections consumers, providers, tax, simulation
        overrides: command-line values: servers, tax, rate, fee_amount, eco_penalty,
            dt, traces, name (None entries are ignored)

    Raises:
        ConfigError: missing file, bad YAML, unknown key or invalid value
    """
    _, data = read_scenario(path)
    return config_from_mapping(data, overrides, config_dir=os.path.dirname(os.path.abspath(path)))


def config_from_mapping(data: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None,
                        config_dir: Optional[str] = None) -> ScenarioConfig:
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    data = {section: dict(data.get(section) or {}) for section in SECTIONS}

    consumers = _build_section(ConsumerRanges, data["consumers"], "consumers")
    providers = _build_section(ProviderRanges, data["providers"], "providers", skip=("servers",))

    servers = (
        overrides.get("servers")
        or data["providers"].get("servers")
        or os.getenv("GREENCLOUD_SERVERS")
        or DEFAULT_DATASET
    )
    providers = replace(providers, servers=resolve_path(str(servers), config_dir))

    tax = build_tax_policy(apply_overrides(data["tax"], overrides))

    simulation = data["simulation"]
    unknown = sorted(set(simulation) - {"name", "round_interval", "record_traces"})
    if unknown:
        raise ConfigError(f"[simulation] unknown key(s) {', '.join(unknown)}")
    dt = overrides.get("dt", simulation.get("round_interval", os.getenv("GREENCLOUD_DT", DEFAULT_ROUND_INTERVAL)))
    try:
        dt = int(dt)
    except (TypeError, ValueError):
        raise ConfigError(f"[simulation] round_interval must be an integer (got {dt!r})") from None

    return ScenarioConfig(
        consumers=consumers,
        providers=providers,
        tax=tax,
        round_interval=dt,
        name=str(overrides.get("name", simulation.get("name", "scenario"))),
        record_traces=parse_bool(overrides.get("traces", simulation.get("record_traces", False)),
                                 "[simulation] record_traces"),
    )
