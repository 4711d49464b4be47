"""
Taxation Module
Tax models for VM sales (VAT, fee, resource-based, GreenCloud), server efficiency
factors, the tax-revenue ledger and price elasticity.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from types import MappingProxyType
from typing import Callable, Iterable, Iterator, Mapping, Tuple, Union

from market_model import RESOURCES, Agreement, VmOffer


class TaxConfigError(ValueError):
    """Malformed tax policy or bracket table."""


class Schedule(str, Enum):
    PROPORTIONAL = "proportional"
    PROGRESSIVE = "progressive"
    REGRESSIVE = "regressive"


# (threshold, rate): the rate applies to the whole base once base >= threshold
Bracket = Tuple[float, float]


@dataclass(frozen=True)
class VAT:
    """Value-added tax on the net price, optionally bracketed on the price."""
    rate: float
    schedule: Schedule = Schedule.PROPORTIONAL
    brackets: Tuple[Bracket, ...] = ()
    kind = "vat"


@dataclass(frozen=True)
class Fee:
    """Flat amount per VM sold."""
    amount: float
    kind = "fee"


@dataclass(frozen=True)
class ResourceTax:
    """Tax per unit of one resource of the VM."""
    base: str
    rate_per_unit: float
    schedule: Schedule = Schedule.PROPORTIONAL
    brackets: Tuple[Bracket, ...] = ()
    kind = "resource"


@dataclass(frozen=True)
class GreenCloud:
    """Price-based tax scaled by the host's efficiency factor."""
    rate: float
    eco_penalty: float
    brackets: Tuple[Bracket, ...] = ()
    kind = "greencloud"


TaxPolicy = Union[VAT, Fee, ResourceTax, GreenCloud]
TaxEstimator = Callable[[float, VmOffer], float]

TAX_KINDS = ("vat", "fee", "resource", "greencloud")


def _check_brackets(base_rate, schedule, brackets):
    if schedule is Schedule.PROPORTIONAL:
        if brackets:
            raise TaxConfigError("a proportional schedule takes no brackets")
        return
    if not brackets:
        raise TaxConfigError(f"a {schedule.value} schedule needs at least one bracket")
    table = [(0.0, base_rate)] + [(float(t), float(r)) for t, r in brackets]
    for (t0, r0), (t1, r1) in zip(table, table[1:]):
        if not t1 > t0:
            raise TaxConfigError(f"bracket thresholds must be strictly increasing (got {t0} then {t1})")
        if r1 < 0:
            raise TaxConfigError(f"bracket rates must be >= 0 (got {r1})")
        if schedule is Schedule.PROGRESSIVE and not r1 > r0:
            raise TaxConfigError(f"progressive rates must be strictly increasing (got {r0} then {r1})")
        if schedule is Schedule.REGRESSIVE and not r1 < r0:
            raise TaxConfigError(f"regressive rates must be strictly decreasing (got {r0} then {r1})")


def validate_policy(policy: TaxPolicy) -> TaxPolicy:
    """Return the policy unchanged or raise TaxConfigError."""
    if isinstance(policy, VAT):
        if policy.rate < 0:
            raise TaxConfigError(f"VAT rate must be >= 0 (got {policy.rate})")
        _check_brackets(policy.rate, Schedule(policy.schedule), policy.brackets)
    elif isinstance(policy, Fee):
        if policy.amount < 0:
            raise TaxConfigError(f"fee amount must be >= 0 (got {policy.amount})")
    elif isinstance(policy, ResourceTax):
        if policy.base not in RESOURCES:
            raise TaxConfigError(f"resource tax base must be one of {', '.join(RESOURCES)} (got {policy.base})")
        if policy.rate_per_unit < 0:
            raise TaxConfigError(f"rate per unit must be >= 0 (got {policy.rate_per_unit})")
        _check_brackets(policy.rate_per_unit, Schedule(policy.schedule), policy.brackets)
    elif isinstance(policy, GreenCloud):
        if policy.rate < 0:
            raise TaxConfigError(f"GreenCloud rate must be >= 0 (got {policy.rate})")
        if policy.eco_penalty < 0:
            raise TaxConfigError(f"eco penalty must be >= 0 (got {policy.eco_penalty})")
        if policy.brackets:
            _check_brackets(policy.rate, Schedule.PROGRESSIVE, policy.brackets)
    else:
        raise TaxConfigError(f"unknown tax policy: {policy!r}")
    return policy


def bracket_rate(value: float, base_rate: float, brackets: Iterable[Bracket]) -> float:
    """Rate of the highest bracket whose threshold is <= value (base_rate below the first)."""
    rate = base_rate
    for threshold, bracket in brackets:
        if value >= threshold:
            rate = bracket
        else:
            break
    return rate


def interpolation_factor(ssj: float, ssj_min: float, ssj_max: float) -> float:
    """Min-max normalized ssj_ops/watt of a server within its fleet."""
    if not ssj_min < ssj_max:
        raise ValueError(f"degenerate fleet: ssj_min ({ssj_min}) must be < ssj_max ({ssj_max})")
    if not ssj_min <= ssj <= ssj_max:
        raise ValueError(f"ssj_ops/watt {ssj} outside fleet range [{ssj_min}, {ssj_max}]")
    return (ssj - ssj_min) / (ssj_max - ssj_min)


def efficiency_factor(interp: float, eco_penalty: float) -> float:
    if not 0.0 <= interp <= 1.0:
        raise ValueError(f"interpolation factor must be in [0, 1] (got {interp})")
    if eco_penalty < 0:
        raise ValueError(f"eco penalty must be >= 0 (got {eco_penalty})")
    return (1.0 - interp) * eco_penalty


@dataclass(frozen=True)
class EfficiencyEntry:
    ssj_ops_per_watt: float
    interpolation_factor: float
    efficiency_factor: float


class EfficiencyTable(Mapping):
    """Read-only map provider id -> EfficiencyEntry, in fleet order."""

    def __init__(self, entries: Mapping[str, EfficiencyEntry], eco_penalty: float = 0.0):
        self._entries = MappingProxyType(dict(entries))
        self.eco_penalty = eco_penalty

    def __getitem__(self, provider_id: str) -> EfficiencyEntry:
        return self._entries[provider_id]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __repr__(self):
        return f"EfficiencyTable({dict(self._entries)!r}, eco_penalty={self.eco_penalty!r})"

    def interpolation(self, provider_id: str) -> float:
        return self._entries[provider_id].interpolation_factor

    def factor(self, provider_id: str) -> float:
        return self._entries[provider_id].efficiency_factor

    @classmethod
    def uniform(cls, table: "EfficiencyTable", factor: float = 1.0) -> "EfficiencyTable":
        """Same servers, every efficiency factor forced to `factor`."""
        entries = {
            provider: replace(entry, efficiency_factor=factor)
            for provider, entry in table.items()
        }
        return cls(entries, eco_penalty=table.eco_penalty)


def compute_tax(policy: TaxPolicy, net_price: float, vm: VmOffer,
                host_efficiency_factor: float = 1.0) -> float:
    """
    Tax owed on one VM sale.

    Args:
        policy: the tax model in force
        net_price: negotiated price, excluding tax
        vm: the offer being sold (resource-based taxes read their base from it)
        host_efficiency_factor: efficiency factor of the selling provider (GreenCloud only)

    Returns:
        float: tax, never negative
    """
    if net_price < 0:
        raise ValueError(f"net price must be >= 0 (got {net_price})")

    if isinstance(policy, VAT):
        rate = bracket_rate(net_price, policy.rate, policy.brackets)
        tax = net_price * rate
    elif isinstance(policy, Fee):
        tax = policy.amount
    elif isinstance(policy, ResourceTax):
        quantity = vm.quantity(policy.base)
        tax = bracket_rate(quantity, policy.rate_per_unit, policy.brackets) * quantity
    elif isinstance(policy, GreenCloud):
        rate = bracket_rate(host_efficiency_factor, policy.rate, policy.brackets)
        tax = net_price * rate * host_efficiency_factor
    else:
        raise TaxConfigError(f"unknown tax policy: {policy!r}")
    return max(tax, 0.0)


def tax_estimator(policy: TaxPolicy, host_efficiency_factor: float = 1.0) -> TaxEstimator:
    """compute_tax bound to one policy and one host: (net_price, vm) -> tax."""
    def estimate(net_price, vm):
        return compute_tax(policy, net_price, vm, host_efficiency_factor)
    return estimate


def tax_revenue(agreements: Iterable[Agreement]) -> float:
    """Sum of tax over agreements."""
    return math.fsum(agreement.tax for agreement in agreements)


def price_elasticity(q: float, dq: float, p: float, dp: float) -> float:
    """|(dq/q) / (dp/p)|"""
    if dp == 0:
        raise ValueError("price change dp must be non-zero")
    if q <= 0 or p <= 0:
        raise ValueError(f"quantity and price must be > 0 (got q={q}, p={p})")
    return abs((dq / q) / (dp / p))


def policy_rate(policy: TaxPolicy) -> float:
    """The sweepable rate of a policy (fee amount, rate per unit, or rate)."""
    if isinstance(policy, Fee):
        return policy.amount
    if isinstance(policy, ResourceTax):
        return policy.rate_per_unit
    return policy.rate


def with_rate(policy: TaxPolicy, rate: float) -> TaxPolicy:
    """Copy of the policy with another rate; bracket rates scale with it."""
    old = policy_rate(policy)
    if isinstance(policy, Fee):
        return validate_policy(replace(policy, amount=rate))
    brackets = policy.brackets
    if brackets:
        if old == 0:
            raise TaxConfigError("cannot rescale brackets of a zero-rate policy")
        brackets = tuple((threshold, bracket * rate / old) for threshold, bracket in brackets)
    if isinstance(policy, ResourceTax):
        return validate_policy(replace(policy, rate_per_unit=rate, brackets=brackets))
    return validate_policy(replace(policy, rate=rate, brackets=brackets))


def describe_policy(policy: TaxPolicy) -> str:
    """Short one-line summary, e.g. greencloud(rate=0.1, eco_penalty=80)."""
    if isinstance(policy, VAT):
        text = f"vat(rate={policy.rate:g}"
    elif isinstance(policy, Fee):
        return f"fee(amount={policy.amount:g})"
    elif isinstance(policy, ResourceTax):
        text = f"resource(base={policy.base}, rate_per_unit={policy.rate_per_unit:g}"
    else:
        text = f"greencloud(rate={policy.rate:g}, eco_penalty={policy.eco_penalty:g}"
    schedule = getattr(policy, "schedule", Schedule.PROPORTIONAL)
    if policy.brackets:
        kind = Schedule(schedule).value if not isinstance(policy, GreenCloud) else Schedule.PROGRESSIVE.value
        steps = " ".join(f"{t:g}:{r:g}" for t, r in policy.brackets)
        text += f", {kind}=[{steps}]"
    return text + ")"

