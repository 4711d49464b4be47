"""
Market Model Module
Immutable domain types shared by the Bazaar market: VM offers, agents, agreements, servers.
"""

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

# VM characteristics negotiated between consumers and providers
STORAGE = "storage"
RAM = "ram"
PROCESSING_POWER = "processing_power"
PRICE = "price"

RESOURCES = (STORAGE, RAM, PROCESSING_POWER)
CHARACTERISTICS = RESOURCES + (PRICE,)

WEIGHT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class VmOffer:
    """One offer of the negotiated good: a VM configuration plus its net price."""
    storage: float
    ram: float
    processing_power: float
    price: float
    sender: str
    timestamp: int

    def __post_init__(self):
        for name in RESOURCES:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0 in an offer (got {getattr(self, name)})")
        if self.price < 0:
            raise ValueError(f"price must be >= 0 (got {self.price})")
        if self.timestamp < 0:
            raise ValueError(f"timestamp must be >= 0 (got {self.timestamp})")

    def quantity(self, characteristic: str) -> float:
        return getattr(self, characteristic)

    def with_price(self, price: float, sender: Optional[str] = None,
                   timestamp: Optional[int] = None) -> "VmOffer":
        """Same resources, another price (and optionally another sender/timestamp)."""
        return replace(
            self,
            price=price,
            sender=self.sender if sender is None else sender,
            timestamp=self.timestamp if timestamp is None else timestamp,
        )


@dataclass(frozen=True)
class ServerProfile:
    """Homogeneous server type run by one provider."""
    provider_label: str
    vendor_model: str
    ssj_ops_per_watt: float

    def __post_init__(self):
        if not self.ssj_ops_per_watt > 0:
            raise ValueError(f"ssj_ops_per_watt must be > 0 (got {self.ssj_ops_per_watt})")


@dataclass(frozen=True)
class ConsumerParams:
    """Negotiation parameters of one consumer (bounds, weights, concession curve)."""
    agent_id: str
    min_storage: float
    max_storage: float
    min_ram: float
    max_ram: float
    min_processing_power: float
    max_processing_power: float
    min_price: float
    max_price: float
    w_storage: float = 0.01
    w_ram: float = 0.01
    w_processing_power: float = 0.01
    w_price: float = 0.97
    k: float = 0.0
    beta: float = 2.0
    t_max: int = 7200

    def bounds(self, characteristic: str) -> Tuple[float, float]:
        return getattr(self, f"min_{characteristic}"), getattr(self, f"max_{characteristic}")

    def weight(self, characteristic: str) -> float:
        return getattr(self, f"w_{characteristic}")


@dataclass(frozen=True)
class ProviderParams:
    """Pricing parameters of one provider and the server it hosts VMs on."""
    agent_id: str
    min_rp_storage: float
    max_rp_storage: float
    min_rp_ram: float
    max_rp_ram: float
    min_rp_processing_power: float
    max_rp_processing_power: float
    server: ServerProfile
    availability_storage: float = 0.8
    availability_ram: float = 0.8
    availability_processing_power: float = 0.8
    w_storage: float = 0.25
    w_ram: float = 0.5
    w_processing_power: float = 0.25
    irp_fraction: float = 0.0
    t_max: int = 7200
    capacity: int = 10

    def price_bounds(self, resource: str) -> Tuple[float, float]:
        """(MinRP, MaxRP) per resource unit."""
        return getattr(self, f"min_rp_{resource}"), getattr(self, f"max_rp_{resource}")

    def availability(self, resource: str) -> float:
        return getattr(self, f"availability_{resource}")

    def weight(self, resource: str) -> float:
        return getattr(self, f"w_{resource}")

    def floor_price(self, offer: VmOffer) -> float:
        """Cheapest price this provider could ever ask for the offered VM."""
        return math.fsum(self.min_rp(resource) * offer.quantity(resource) for resource in RESOURCES)

    def min_rp(self, resource: str) -> float:
        return self.price_bounds(resource)[0]


@dataclass(frozen=True)
class Agreement:
    """Binding agreement passed to the tax ledger. gross_price = net_price + tax."""
    consumer_id: str
    provider_id: str
    vm: VmOffer
    net_price: float
    tax: float
    gross_price: float
    timestamp: int

    def __post_init__(self):
        if self.tax < 0:
            raise ValueError(f"tax must be >= 0 (got {self.tax})")
        if self.gross_price != self.net_price + self.tax:
            raise ValueError("gross_price must equal net_price + tax")

    @classmethod
    def settle(cls, consumer_id: str, provider_id: str, vm: VmOffer, tax: float,
               timestamp: int) -> "Agreement":
        """Record the accepted provider offer; the consumer pays net + tax."""
        return cls(
            consumer_id=consumer_id,
            provider_id=provider_id,
            vm=vm,
            net_price=vm.price,
            tax=tax,
            gross_price=vm.price + tax,
            timestamp=timestamp,
        )


@dataclass(frozen=True)
class Violation:
    """One broken invariant, located by agent and field."""
    agent_id: str
    field: str
    message: str

    def __str__(self):
        return f"{self.agent_id}.{self.field}: {self.message}"


class ScenarioValidationError(ValueError):
    """Raised with every violation found, not just the first one."""

    def __init__(self, violations: Sequence[Violation]):
        self.violations: List[Violation] = list(violations)
        lines = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"{len(self.violations)} invalid scenario parameter(s):\n{lines}")


@dataclass(frozen=True)
class MarketScenario:
    """Concrete agent lists of one market, ready to simulate."""
    consumers: Tuple[ConsumerParams, ...]
    providers: Tuple[ProviderParams, ...]
    round_interval: int = 60
    name: str = "scenario"
    interpolation: Tuple[Tuple[str, float], ...] = field(default=())

    def consumer(self, agent_id: str) -> ConsumerParams:
        for consumer in self.consumers:
            if consumer.agent_id == agent_id:
                return consumer
        raise KeyError(agent_id)


def _check_weights(agent_id, weights, violations):
    total = math.fsum(weights.values())
    for name, value in weights.items():
        if not 0.0 <= value <= 1.0:
            violations.append(Violation(agent_id, f"w_{name}", f"weight must be in [0, 1] (got {value})"))
    if abs(total - 1.0) > WEIGHT_TOLERANCE:
        violations.append(Violation(agent_id, "weights", f"weights sum ≠ 1 (got {total:.12g})"))


def consumer_violations(params: ConsumerParams) -> List[Violation]:
    violations = []
    for name in CHARACTERISTICS:
        low, high = params.bounds(name)
        if not low < high:
            violations.append(Violation(params.agent_id, name, f"min must be < max (got {low} >= {high})"))
        elif low < 0 or (name != PRICE and low <= 0):
            violations.append(Violation(params.agent_id, name, f"min must be > 0 (got {low})"))
    _check_weights(params.agent_id, {name: params.weight(name) for name in CHARACTERISTICS}, violations)
    if not 0.0 <= params.k <= 1.0:
        violations.append(Violation(params.agent_id, "k", f"k must be in [0, 1] (got {params.k})"))
    if not params.beta > 0:
        violations.append(Violation(params.agent_id, "beta", f"beta must be > 0 (got {params.beta})"))
    if not params.t_max > 0:
        violations.append(Violation(params.agent_id, "t_max", f"t_max must be > 0 (got {params.t_max})"))
    return violations


def provider_violations(params: ProviderParams) -> List[Violation]:
    violations = []
    for resource in RESOURCES:
        low, high = params.price_bounds(resource)
        if not 0 < low < high:
            violations.append(Violation(
                params.agent_id, f"rp_{resource}", f"need 0 < MinRP < MaxRP (got {low}, {high})"
            ))
        availability = params.availability(resource)
        if not 0.0 <= availability <= 1.0:
            violations.append(Violation(
                params.agent_id, f"availability_{resource}", f"availability must be in [0, 1] (got {availability})"
            ))
    _check_weights(params.agent_id, {name: params.weight(name) for name in RESOURCES}, violations)
    if not 0.0 <= params.irp_fraction <= 1.0:
        violations.append(Violation(
            params.agent_id, "irp_fraction", f"irp_fraction must be in [0, 1] (got {params.irp_fraction})"
        ))
    if params.capacity < 0:
        violations.append(Violation(params.agent_id, "capacity", f"capacity must be >= 0 (got {params.capacity})"))
    if not params.t_max > 0:
        violations.append(Violation(params.agent_id, "t_max", f"t_max must be > 0 (got {params.t_max})"))
    return violations


def validate_scenario(scenario: MarketScenario) -> MarketScenario:
    """
    Check every agent of a concrete scenario.

    Returns:
        MarketScenario: the same scenario when every invariant holds

    Raises:
        ScenarioValidationError: listing all violations with agent id and field
    """
    violations = []
    seen = set()
    for agent in list(scenario.consumers) + list(scenario.providers):
        if agent.agent_id in seen:
            violations.append(Violation(agent.agent_id, "agent_id", "duplicate agent id"))
        seen.add(agent.agent_id)
    for consumer in scenario.consumers:
        violations.extend(consumer_violations(consumer))
    for provider in scenario.providers:
        violations.extend(provider_violations(provider))
    if scenario.round_interval < 2:
        violations.append(Violation(
            "simulation", "round_interval", f"round interval must be >= 2 (got {scenario.round_interval})"
        ))
    if violations:
        raise ScenarioValidationError(violations)
    return scenario
