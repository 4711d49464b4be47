"""
Simulation Module
Builds the market from scenario ranges, drives the global tick loop of Bazaar
negotiations, enforces provider capacity and collects agreements and metrics.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from market_model import (
    RESOURCES, Agreement, ConsumerParams, MarketScenario, ProviderParams,
    ScenarioValidationError, Violation, validate_scenario,
)
from negotiation import (
    DEFAULT_ROUND_INTERVAL, RoundOutcome, consumer_counteroffer,
    consumer_utility, gross_offer, open_session, play_round, provider_surplus,
)
from server_dataset import DEFAULT_DATASET, ServerDatasetRow, build_efficiency_table, load_server_dataset
from taxation import (
    VAT, EfficiencyTable, Fee, GreenCloud, TaxPolicy, describe_policy, policy_rate,
    price_elasticity, tax_estimator, tax_revenue, validate_policy, with_rate,
)

# Penalties of the reference GreenCloud experiments
REFERENCE_PENALTIES = (0.9, 1.09, 1.1, 1.2, 2, 8, 16, 80)


@dataclass(frozen=True)
class ConsumerRanges:
    """Consumer population: shared bounds, max_price spread linearly over the population."""
    count: int = 60
    min_storage: float = 102400
    max_storage: float = 1024000
    min_ram: float = 3072
    max_ram: float = 7168
    min_processing_power: float = 5000
    max_processing_power: float = 30000
    min_price: float = 10
    max_price_low: float = 23
    max_price_high: float = 100
    w_storage: float = 0.01
    w_ram: float = 0.01
    w_processing_power: float = 0.01
    w_price: float = 0.97
    k: float = 0.0
    beta: float = 2.0
    t_max: int = 7200


@dataclass(frozen=True)
class ProviderRanges:
    """Provider population: resource price ranges spread by server efficiency."""
    count: int = 15
    min_rp_storage_low: float = 0.000002
    min_rp_storage_high: float = 0.0000022
    max_rp_storage_low: float = 0.00001
    max_rp_storage_high: float = 0.000011
    min_rp_ram_low: float = 0.002
    min_rp_ram_high: float = 0.0022
    max_rp_ram_low: float = 0.03
    max_rp_ram_high: float = 0.033
    min_rp_processing_power_low: float = 0.0002
    min_rp_processing_power_high: float = 0.00022
    max_rp_processing_power_low: float = 0.001
    max_rp_processing_power_high: float = 0.0011
    availability_storage: float = 0.8
    availability_ram: float = 0.8
    availability_processing_power: float = 0.8
    w_storage: float = 0.25
    w_ram: float = 0.5
    w_processing_power: float = 0.25
    irp_fraction: float = 0.0
    capacity: int = 10
    t_max: int = 7200
    servers: str = DEFAULT_DATASET

    def endpoints(self, bound: str, resource: str) -> Tuple[float, float]:
        """(low, high) of `min_rp` or `max_rp` for one resource."""
        return getattr(self, f"{bound}_{resource}_low"), getattr(self, f"{bound}_{resource}_high")


@dataclass(frozen=True)
class ScenarioConfig:
    consumers: ConsumerRanges = field(default_factory=ConsumerRanges)
    providers: ProviderRanges = field(default_factory=ProviderRanges)
    tax: TaxPolicy = field(default_factory=lambda: GreenCloud(rate=0.1, eco_penalty=1.2))
    round_interval: int = DEFAULT_ROUND_INTERVAL
    name: str = "scenario"
    record_traces: bool = False


@dataclass(frozen=True)
class SimulationReport:
    """Metrics of one run. `hosted` and `interpolation` follow fleet order."""
    scenario_id: str
    tax_policy: str
    eco_penalty: Optional[float]
    tax_rate: float
    hosted: Tuple[Tuple[str, int], ...]
    capacities: Tuple[Tuple[str, int], ...]
    interpolation: Tuple[Tuple[str, float], ...]
    agreements: Tuple[Agreement, ...]
    tax_revenue: float
    consumer_bazaar_score: float
    consumers_served: int
    consumer_count: int
    mean_interpolation_factor: float
    sessions: Tuple = ()
    traces: Tuple[dict, ...] = ()

    def hosted_counts(self) -> Dict[str, int]:
        return dict(self.hosted)

    def hosting_providers(self) -> List[str]:
        return [provider for provider, count in self.hosted if count > 0]

    def mean_gross_price(self) -> float:
        if not self.agreements:
            return 0.0
        return math.fsum(a.gross_price for a in self.agreements) / len(self.agreements)


def validate_config(config: ScenarioConfig) -> ScenarioConfig:
    """Population-level checks; agent-level checks run on the expanded scenario."""
    violations = []
    if config.consumers.count < 1:
        violations.append(Violation("consumers", "count", f"need at least 1 consumer (got {config.consumers.count})"))
    if config.providers.count < 2:
        violations.append(Violation("providers", "count", f"need at least 2 providers (got {config.providers.count})"))
    if not config.consumers.max_price_low <= config.consumers.max_price_high:
        violations.append(Violation("consumers", "max_price", "max_price_low must be <= max_price_high"))
    for resource in RESOURCES:
        for bound in ("min_rp", "max_rp"):
            low, high = config.providers.endpoints(bound, resource)
            if not low <= high:
                violations.append(Violation("providers", f"{bound}_{resource}", "low endpoint must be <= high endpoint"))
    if config.round_interval < 2:
        violations.append(Violation("simulation", "round_interval", f"round interval must be >= 2 (got {config.round_interval})"))
    if violations:
        raise ScenarioValidationError(violations)
    validate_policy(config.tax)
    return config


def _lerp(low: float, high: float, x: float) -> float:
    return low + x * (high - low)


def expand_scenario(config: ScenarioConfig, efficiency_table: EfficiencyTable,
                    servers: Sequence[ServerDatasetRow]) -> MarketScenario:
    """
    Concrete agents C1..CN and P1..PM.

    Consumer j gets max_price spread linearly from max_price_low to max_price_high;
    provider i gets every MinRP/MaxRP interpolated between the range endpoints by
    the interpolation factor of its server.
    """
    population = config.consumers
    consumers = []
    for j in range(population.count):
        x = j / (population.count - 1) if population.count > 1 else 0.0
        consumers.append(ConsumerParams(
            agent_id=f"C{j + 1}",
            min_storage=population.min_storage, max_storage=population.max_storage,
            min_ram=population.min_ram, max_ram=population.max_ram,
            min_processing_power=population.min_processing_power, max_processing_power=population.max_processing_power,
            min_price=population.min_price,
            max_price=_lerp(population.max_price_low, population.max_price_high, x),
            w_storage=population.w_storage, w_ram=population.w_ram,
            w_processing_power=population.w_processing_power, w_price=population.w_price,
            k=population.k, beta=population.beta, t_max=population.t_max,
        ))

    ranges = config.providers
    providers = []
    interpolation = []
    for server in servers[:ranges.count]:
        x = efficiency_table.interpolation(server.provider_label)
        prices = {}
        for resource in RESOURCES:
            for bound in ("min_rp", "max_rp"):
                prices[f"{bound}_{resource}"] = _lerp(*ranges.endpoints(bound, resource), x)
        providers.append(ProviderParams(
            agent_id=server.provider_label,
            server=server.profile(),
            availability_storage=ranges.availability_storage,
            availability_ram=ranges.availability_ram,
            availability_processing_power=ranges.availability_processing_power,
            w_storage=ranges.w_storage, w_ram=ranges.w_ram, w_processing_power=ranges.w_processing_power,
            irp_fraction=ranges.irp_fraction,
            t_max=ranges.t_max,
            capacity=ranges.capacity,
            **prices,
        ))
        interpolation.append((server.provider_label, x))

    return MarketScenario(
        consumers=tuple(consumers),
        providers=tuple(providers),
        round_interval=config.round_interval,
        name=config.name,
        interpolation=tuple(interpolation),
    )


def compute_bazaar_score(agreements: Sequence[Agreement], consumers) -> float:
    """Aggregate consumer surplus: sum of (max_price - gross_price) over agreements."""
    if not isinstance(consumers, dict):
        consumers = {c.agent_id: c for c in consumers}
    return math.fsum(consumers[a.consumer_id].max_price - a.gross_price for a in agreements)


def _trace_entry(scenario_id, session_id, offer, gross, **extra):
    entry = {
        "scenario_id": scenario_id,
        "session_id": session_id,
        "t": offer.timestamp,
        "sender": offer.sender,
        "storage": offer.storage,
        "ram": offer.ram,
        "processing_power": offer.processing_power,
        "net_price": offer.price,
        "gross_price": gross,
    }
    entry.update(extra)
    return entry


def _scenario_id(config: ScenarioConfig) -> str:
    policy = config.tax
    if isinstance(policy, GreenCloud):
        return f"{config.name}-ep{policy.eco_penalty:g}"
    if isinstance(policy, Fee):
        return f"{config.name}-fee{policy.amount:g}"
    return f"{config.name}-{policy.kind}{policy_rate(policy):g}"


def _default_table(config: ScenarioConfig, servers: Sequence[ServerDatasetRow]) -> EfficiencyTable:
    penalty = config.tax.eco_penalty if isinstance(config.tax, GreenCloud) else 0.0
    return build_efficiency_table(servers, penalty)


def run_simulation(config: ScenarioConfig, efficiency_table: Optional[EfficiencyTable] = None) -> SimulationReport:
    """
    Run one market to t_max.

    Every consumer negotiates with every provider in parallel sessions. At each tick
    the consumers are served in index order: each plays one round in all its active
    sessions, takes the cheapest acceptable offer (lowest gross, then lowest provider
    index) and the chosen provider loses one unit of capacity.

    Args:
        config: the scenario
        efficiency_table: replaces the table built from the server dataset (its
            providers must match the dataset labels)

    Returns:
        SimulationReport
    """
    validate_config(config)
    servers = load_server_dataset(config.providers.servers)
    if config.providers.count > len(servers):
        raise ScenarioValidationError([Violation(
            "providers", "count",
            f"{config.providers.count} providers but only {len(servers)} servers in {config.providers.servers}",
        )])
    servers = servers[:config.providers.count]
    table = efficiency_table if efficiency_table is not None else _default_table(config, servers)

    scenario = validate_scenario(expand_scenario(config, table, servers))
    scenario_id = _scenario_id(config)
    policy = config.tax
    dt = scenario.round_interval

    estimators = {p.agent_id: tax_estimator(policy, table.factor(p.agent_id)) for p in scenario.providers}
    capacity = {p.agent_id: p.capacity for p in scenario.providers}
    sessions = {
        (c.agent_id, p.agent_id): open_session(c, p)
        for c in scenario.consumers for p in scenario.providers
    }
    traces: List[dict] = []
    agreements: List[Agreement] = []

    def fail_provider(provider_id):
        for key, session in sessions.items():
            if key[1] == provider_id and session.is_active:
                sessions[key] = session.failed()

    for provider in scenario.providers:
        if capacity[provider.agent_id] <= 0:
            fail_provider(provider.agent_id)

    horizon = max(s.t_max for s in sessions.values())
    for t in range(0, horizon, dt):
        for consumer in scenario.consumers:
            candidates: List[Tuple[float, int, RoundOutcome]] = []
            offer = plan = None
            for index, provider in enumerate(scenario.providers):
                key = (consumer.agent_id, provider.agent_id)
                session = sessions[key]
                if not session.is_active:
                    continue
                if t >= session.t_max:
                    sessions[key] = session.failed()
                    continue
                if offer is None:
                    offer = consumer_counteroffer(t, consumer)
                    plan = consumer_counteroffer(t + dt, consumer)
                outcome = play_round(session, t, consumer, provider, estimators[provider.agent_id], dt,
                                     offer=offer, planned=plan)
                sessions[key] = outcome.session
                if config.record_traces:
                    estimator = estimators[provider.agent_id]
                    consumer_gross = gross_offer(offer, estimator)
                    traces.append(_trace_entry(
                        scenario_id, session.session_id, offer, consumer_gross.price,
                        consumer_utility=consumer_utility(consumer_gross, consumer),
                    ))
                    traces.append(_trace_entry(
                        scenario_id, session.session_id, outcome.provider_offer, outcome.gross_price,
                        tax=outcome.tax,
                        provider_surplus=provider_surplus(outcome.provider_offer, provider),
                        accepted=outcome.accepted,
                    ))
                if outcome.accepted:
                    candidates.append((outcome.gross_price, index, outcome))

            if not candidates:
                continue
            _, _, winner = min(candidates, key=lambda c: (c[0], c[1]))
            agreement = winner.settle()
            agreements.append(agreement)
            for key, session in sessions.items():
                if key[0] == consumer.agent_id and session.is_active:
                    if key[1] == agreement.provider_id:
                        sessions[key] = session.agreed(agreement)
                    else:
                        sessions[key] = session.failed()
            capacity[agreement.provider_id] -= 1
            if capacity[agreement.provider_id] == 0:
                fail_provider(agreement.provider_id)

    for key, session in sessions.items():
        if session.is_active:
            sessions[key] = session.failed()

    report = _build_report(config, scenario, scenario_id, agreements, sessions, traces)
    print(f"🔄 {report.scenario_id}: {report.consumers_served}/{report.consumer_count} consommateurs servis, "
          f"recette fiscale {report.tax_revenue:.4f}, Bazaar-Score {report.consumer_bazaar_score:.4f}")
    return report


def _build_report(config, scenario, scenario_id, agreements, sessions, traces) -> SimulationReport:
    hosted = {p.agent_id: 0 for p in scenario.providers}
    for agreement in agreements:
        hosted[agreement.provider_id] += 1
    interpolation = dict(scenario.interpolation)
    served = len(agreements)
    mean_interp = (
        math.fsum(interpolation[a.provider_id] for a in agreements) / served if served else 0.0
    )
    policy = config.tax
    return SimulationReport(
        scenario_id=scenario_id,
        tax_policy=describe_policy(policy),
        eco_penalty=policy.eco_penalty if isinstance(policy, GreenCloud) else None,
        tax_rate=policy_rate(policy),
        hosted=tuple(hosted.items()),
        capacities=tuple((p.agent_id, p.capacity) for p in scenario.providers),
        interpolation=scenario.interpolation,
        agreements=tuple(agreements),
        tax_revenue=tax_revenue(agreements),
        consumer_bazaar_score=compute_bazaar_score(agreements, scenario.consumers),
        consumers_served=served,
        consumer_count=len(scenario.consumers),
        mean_interpolation_factor=mean_interp,
        sessions=tuple(sessions.values()) if config.record_traces else (),
        traces=tuple(traces),
    )


def sweep_eco_penalty(config: ScenarioConfig, penalties: Sequence[float]) -> List[Tuple[float, SimulationReport]]:
    """One independent GreenCloud run per penalty, in input order."""
    if not penalties:
        raise ValueError("penalties must not be empty")
    if not isinstance(config.tax, GreenCloud):
        raise ValueError(f"an eco-penalty sweep needs a GreenCloud policy (got {config.tax.kind})")
    results = []
    for penalty in penalties:
        run_config = replace(config, tax=replace(config.tax, eco_penalty=float(penalty)))
        results.append((penalty, run_simulation(run_config)))
    return results


def sweep_tax_rate(config: ScenarioConfig, rates: Sequence[float]) -> List[Tuple[float, SimulationReport]]:
    """One independent run per tax rate (fee amount for a fee), in input order."""
    if not rates:
        raise ValueError("rates must not be empty")
    results = []
    for rate in rates:
        run_config = replace(config, tax=with_rate(config.tax, float(rate)))
        results.append((rate, run_simulation(run_config)))
    return results


def sweep_elasticities(points: Sequence[Tuple[float, SimulationReport]]) -> List[dict]:
    """
    Arc elasticity of consumers served w.r.t. mean gross price between consecutive
    sweep points. None where it is undefined (nobody served or no price change).
    """
    rows = []
    for (x0, r0), (x1, r1) in zip(points, points[1:]):
        q, p = r0.consumers_served, r0.mean_gross_price()
        dq, dp = r1.consumers_served - q, r1.mean_gross_price() - p
        elasticity = price_elasticity(q, dq, p, dp) if q > 0 and p > 0 and dp != 0 else None
        rows.append({
            "from": x0,
            "to": x1,
            "consumers_served": q,
            "delta_served": dq,
            "mean_gross_price": p,
            "delta_price": dp,
            "elasticity": elasticity,
        })
    return rows


def vat_equivalent(config: ScenarioConfig) -> Tuple[ScenarioConfig, EfficiencyTable]:
    """GreenCloud config plus a table with every factor at 1: taxes exactly like VAT at the same rate."""
    rate = config.tax.rate if isinstance(config.tax, (VAT, GreenCloud)) else 0.0
    servers = load_server_dataset(config.providers.servers)[:config.providers.count]
    table = EfficiencyTable.uniform(build_efficiency_table(servers, 1.0), 1.0)
    return replace(config, tax=GreenCloud(rate=rate, eco_penalty=1.0)), table
