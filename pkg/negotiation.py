"""
Negotiation Module
Time-dependent bilateral Bazaar negotiation: consumer counteroffers, utility and
acceptance, provider pricing, and the per-session alternating-offer state machine.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from types import MappingProxyType
from typing import Mapping, Optional, Tuple

from market_model import (
    PRICE, RESOURCES, Agreement, ConsumerParams, ProviderParams, VmOffer,
)
from taxation import TaxEstimator

DEFAULT_ROUND_INTERVAL = 60

# Utility of an offer the consumer can never take
UNACCEPTABLE = float("-inf")


# ---------------------------------------------------------------------------
# Consumer strategy
# ---------------------------------------------------------------------------

def consumer_alpha(t: int, params: ConsumerParams) -> float:
    """Concession level in [0, 1]: k at t=0, 1 from t_max on."""
    if t < 0:
        raise ValueError(f"t must be >= 0 (got {t})")
    progress = min(t, params.t_max) / params.t_max
    alpha = params.k + (1.0 - params.k) * progress ** (1.0 / params.beta)
    return min(max(alpha, 0.0), 1.0)


def consumer_counteroffer(t: int, params: ConsumerParams) -> VmOffer:
    """
    Offer the consumer sends at time t.

    Resources concede from max toward min, the price from min toward max.
    """
    alpha = consumer_alpha(t, params)
    values = {}
    for resource in RESOURCES:
        low, high = params.bounds(resource)
        values[resource] = low + (1.0 - alpha) * (high - low)
    low, high = params.bounds(PRICE)
    return VmOffer(price=low + alpha * (high - low), sender=params.agent_id, timestamp=t, **values)


def consumer_utility(offer: VmOffer, params: ConsumerParams) -> float:
    """
    Log utility of an offer whose price is already the gross (tax-inclusive) price.

    Returns:
        float: utility, or UNACCEPTABLE when the price reaches max_price or any
            log argument is not positive
    """
    arguments = [offer.quantity(resource) * params.weight(resource) for resource in RESOURCES]
    headroom = params.max_price - offer.price
    if headroom <= 0 or any(arg <= 0 for arg in arguments):
        return UNACCEPTABLE
    return math.fsum(math.log(arg) for arg in arguments) + math.log(headroom) * params.w_price


def gross_offer(offer: VmOffer, tax_estimator: TaxEstimator) -> VmOffer:
    return offer.with_price(offer.price + tax_estimator(offer.price, offer))


def consumer_accepts(received: VmOffer, t: int, params: ConsumerParams,
                     tax_estimator: TaxEstimator,
                     round_interval: int = DEFAULT_ROUND_INTERVAL,
                     planned: Optional[VmOffer] = None) -> bool:
    """
    True iff the received offer (gross) beats the consumer's own next counteroffer (gross).

    `planned` may carry the counteroffer for t + round_interval when the caller
    already computed it.
    """
    if planned is None:
        planned = consumer_counteroffer(t + round_interval, params)
    received_utility = consumer_utility(gross_offer(received, tax_estimator), params)
    planned_utility = consumer_utility(gross_offer(planned, tax_estimator), params)
    return received_utility > planned_utility


# ---------------------------------------------------------------------------
# Provider strategy
# ---------------------------------------------------------------------------

@lru_cache(maxsize=256)
def provider_betas(params: ProviderParams) -> Mapping[str, Tuple[float, float]]:
    """Per resource: (resource-aware beta, preference-based beta). Read-only, shared by the cache."""
    mean_availability = math.fsum(params.availability(r) for r in RESOURCES) / len(RESOURCES)
    share = 1.0 / len(RESOURCES)
    return MappingProxyType({
        resource: (
            math.exp(params.availability(resource) - mean_availability),
            math.exp(share - params.weight(resource)),
        )
        for resource in RESOURCES
    })


def provider_resource_price(t: int, resource: str, beta: float, params: ProviderParams) -> float:
    """Unit price of one resource at time t, between MinRP and MaxRP."""
    if t < 0:
        raise ValueError(f"t must be >= 0 (got {t})")
    if not beta > 0:
        raise ValueError(f"beta must be > 0 (got {beta})")
    progress = min(t, params.t_max) / params.t_max
    alpha = params.irp_fraction + (1.0 - params.irp_fraction) * progress ** (1.0 / beta)
    low, high = params.price_bounds(resource)
    return low + alpha * (high - low)


def provider_price_offer(incoming: VmOffer, t: int, params: ProviderParams,
                         timestamp: Optional[int] = None) -> VmOffer:
    """
    Price the incoming VM at time t.

    Each resource price averages the resource-aware and preference-based curves;
    the asking price is the sum over resources of unit price times quantity.
    The reply keeps the incoming resources and is stamped `timestamp` (default t).
    """
    betas = provider_betas(params)
    terms = []
    for resource in RESOURCES:
        beta_aware, beta_pref = betas[resource]
        unit_price = (0.5 * provider_resource_price(t, resource, beta_aware, params)
                      + 0.5 * provider_resource_price(t, resource, beta_pref, params))
        terms.append(unit_price * incoming.quantity(resource))
    return incoming.with_price(
        math.fsum(terms),
        sender=params.agent_id,
        timestamp=t if timestamp is None else timestamp,
    )


def provider_surplus(offer: VmOffer, params: ProviderParams) -> float:
    """Net price above the provider's floor (MinRP for every resource). Reporting only."""
    return offer.price - params.floor_price(offer)


# ---------------------------------------------------------------------------
# Sessions
# ---------------------------------------------------------------------------

class SessionState(str, Enum):
    ACTIVE = "active"
    AGREED = "agreed"
    FAILED = "failed"


@dataclass(frozen=True)
class NegotiationSession:
    """Offer history between one consumer and one provider."""
    consumer_id: str
    provider_id: str
    t_max: int
    history: Tuple[VmOffer, ...] = ()
    state: SessionState = SessionState.ACTIVE
    agreement: Optional[Agreement] = None

    @property
    def session_id(self) -> str:
        return f"{self.consumer_id}-{self.provider_id}"

    @property
    def is_active(self) -> bool:
        return self.state is SessionState.ACTIVE

    def _require_active(self):
        if not self.is_active:
            raise ValueError(f"session {self.session_id} is {self.state.value}, not active")

    def with_offers(self, *offers: VmOffer) -> "NegotiationSession":
        """Append offers, keeping senders alternating and timestamps increasing."""
        self._require_active()
        history = list(self.history)
        for offer in offers:
            expected = self.consumer_id if len(history) % 2 == 0 else self.provider_id
            if offer.sender != expected:
                raise ValueError(f"session {self.session_id}: expected an offer from {expected}, got {offer.sender}")
            if history and not offer.timestamp > history[-1].timestamp:
                raise ValueError(f"session {self.session_id}: timestamps must strictly increase")
            history.append(offer)
        return replace(self, history=tuple(history))

    def agreed(self, agreement: Agreement) -> "NegotiationSession":
        self._require_active()
        return replace(self, state=SessionState.AGREED, agreement=agreement)

    def failed(self) -> "NegotiationSession":
        self._require_active()
        return replace(self, state=SessionState.FAILED)


@dataclass(frozen=True)
class RoundOutcome:
    """Everything one round produced, before any state transition."""
    session: NegotiationSession
    consumer_offer: VmOffer
    provider_offer: VmOffer
    tax: float
    gross_price: float
    accepted: bool

    def settle(self) -> Agreement:
        return Agreement.settle(
            consumer_id=self.session.consumer_id,
            provider_id=self.session.provider_id,
            vm=self.provider_offer,
            tax=self.tax,
            timestamp=self.provider_offer.timestamp,
        )


def play_round(session: NegotiationSession, t: int, consumer: ConsumerParams,
               provider: ProviderParams, tax_estimator: TaxEstimator,
               round_interval: int = DEFAULT_ROUND_INTERVAL, *,
               offer: Optional[VmOffer] = None,
               planned: Optional[VmOffer] = None) -> RoundOutcome:
    """
    Consumer offers at t, provider prices it (reply stamped t + 1), consumer
    evaluates acceptance against its plan for t + round_interval.

    `offer` and `planned` let the engine reuse the consumer's offers across sessions.
    """
    if offer is None:
        offer = consumer_counteroffer(t, consumer)
    if planned is None:
        planned = consumer_counteroffer(t + round_interval, consumer)

    reply = provider_price_offer(offer, t, provider, timestamp=t + 1)
    tax = tax_estimator(reply.price, reply)
    accepted = consumer_accepts(reply, t, consumer, tax_estimator, round_interval, planned=planned)
    return RoundOutcome(
        session=session.with_offers(offer, reply),
        consumer_offer=offer,
        provider_offer=reply,
        tax=tax,
        gross_price=reply.price + tax,
        accepted=accepted,
    )


def run_session_round(session: NegotiationSession, t: int, consumer: ConsumerParams,
                      provider: ProviderParams, tax_estimator: TaxEstimator,
                      round_interval: int = DEFAULT_ROUND_INTERVAL) -> NegotiationSession:
    """
    One full round of a single session.

    Returns:
        NegotiationSession: agreed on acceptance, failed at the deadline, else still active
    """
    session._require_active()
    if t >= session.t_max:
        return session.failed()
    outcome = play_round(session, t, consumer, provider, tax_estimator, round_interval)
    if outcome.accepted:
        return outcome.session.agreed(outcome.settle())
    return outcome.session


def open_session(consumer: ConsumerParams, provider: ProviderParams) -> NegotiationSession:
    return NegotiationSession(
        consumer_id=consumer.agent_id,
        provider_id=provider.agent_id,
        t_max=min(consumer.t_max, provider.t_max),
    )
