"""Periodic-review inventory control primitives.

Implements the forecasting and replenishment rules used by every echelon:
simple exponential smoothing with mean initialization, lead time demand,
safety stock with lead time variability, reorder/target levels for the
order-up-to policy, the review period optimizer, and the cost/fill-rate
accounting helpers.

All functions are pure except ``ses_update``, which advances the forecast
state in place and returns the new estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence


class InventoryError(Exception):
    """Base class for inventory control errors."""


class NegativeObservation(InventoryError):
    """A demand observation was negative."""


class InsufficientHistory(InventoryError):
    """Not enough demand history to estimate variability."""


class ZeroDemand(InventoryError):
    """A forecast vector with zero total demand has no optimal review period."""


class NoOrders(InventoryError):
    """Fill rate is undefined before any order has been observed."""


@dataclass
class ForecastState:
    """Simple exponential smoothing state for one (node, item) stream.

    Until ``window`` observations have arrived the estimate is the running
    mean; afterwards the usual recursive update applies.
    """

    alpha: float
    window: int
    history: list[float] = field(default_factory=list)
    phi: float = 0.0

    @property
    def initialized(self) -> bool:
        return len(self.history) >= self.window


@dataclass
class FillRateCounter:
    """Counts fully satisfied orders against all orders received."""

    fully_satisfied: int = 0
    total: int = 0


@dataclass(frozen=True)
class CostParams:
    """Per-item cost coefficients for one node.

    The three order-event costs sum to the cost of one purchase order event;
    the four daily rates sum to the per-item per-day storage rate.
    """

    c_order: float
    c_transport: float
    c_reception: float
    c_storing: float
    c_worsening: float
    c_obsolescence: float
    c_interest: float
    price: float


@dataclass
class InventoryState:
    """Replenishment state for one (node, item).

    ``on_hand`` is physical stock, ``on_order`` is emitted but not yet
    received, ``to_ship`` is committed outbound but not yet shipped.
    """

    on_hand: float
    on_order: float = 0.0
    to_ship: float = 0.0
    lead_time: float = 1.0
    review_period: int = 1
    safety_stock: float = 0.0
    reorder_level: float = 0.0
    target_level: float = 0.0
    sigma_factor: float = 2.0
    sigma_lt: float = 0.5
    ss_window: int = 20


def ses_update(state: ForecastState, observation: float) -> float:
    """Advance the smoothing state with one demand observation.

    Raises NegativeObservation for negative demand. Returns the new phi.
    """
    if observation < 0:
        raise NegativeObservation(f"demand observation {observation} < 0")
    if not state.initialized:
        state.history.append(observation)
        state.phi = math.fsum(state.history) / len(state.history)
    else:
        state.phi = state.alpha * observation + (1.0 - state.alpha) * state.phi
    return state.phi


def lead_time_demand(forecasts: float | Sequence[float], lead_time: int) -> float:
    """Total forecast demand over the replenishment lead time.

    Accepts either a flat per-day forecast or a day-by-day sequence covering
    at least ``lead_time`` days.
    """
    if lead_time < 0:
        raise ValueError(f"lead time {lead_time} < 0")
    if isinstance(forecasts, (int, float)):
        return lead_time * float(forecasts)
    if len(forecasts) < lead_time:
        raise ValueError(f"need {lead_time} daily forecasts, got {len(forecasts)}")
    return math.fsum(forecasts[:lead_time])


def safety_stock(
    daily_history: Sequence[float],
    sigma_factor: float,
    sigma_lt: float,
    lead_time: float,
) -> float:
    """Buffer stock against demand and lead time variability.

    Uses the sample standard deviation and mean of the recent daily demand
    window: ss = k * sqrt(lt * sigma_d^2 + mean_d^2 * sigma_lt^2).
    """
    n = len(daily_history)
    if n < 2:
        raise InsufficientHistory(f"need at least 2 daily observations, got {n}")
    mean_d = math.fsum(daily_history) / n
    var_d = math.fsum((x - mean_d) ** 2 for x in daily_history) / (n - 1)
    return sigma_factor * math.sqrt(lead_time * var_d + mean_d * mean_d * sigma_lt * sigma_lt)


def inventory_position(on_hand: float, on_order: float, to_ship: float) -> float:
    """Stock on hand plus inbound on order plus committed outbound."""
    if on_hand < 0 or on_order < 0 or to_ship < 0:
        raise ValueError("inventory components must be non-negative")
    return on_hand + on_order + to_ship


def reorder_level(
    lead_time: float, review_demand: float, review_period: int, buffer_stock: float
) -> float:
    """Reorder point: lead time coverage at the review-period demand rate plus buffer."""
    if review_period < 1:
        raise ValueError(f"review period {review_period} < 1")
    return lead_time * review_demand / review_period + buffer_stock


def target_level(cycle_demand: float, reorder: float) -> float:
    """Order-up-to level: expected demand over the optimized cycle on top of the reorder point."""
    return cycle_demand + reorder


def should_order(position: float, reorder: float) -> bool:
    """An order is triggered only when the position drops strictly below the reorder level."""
    return position < reorder


def order_quantity(target: float, position: float) -> int:
    """Items to order to restore the target level, rounded up to whole items."""
    gap = target - position
    if gap <= 0:
        return 0
    return math.ceil(gap)


def poe_cost(params: CostParams) -> float:
    """Cost of one purchase order event: ordering, transport, reception."""
    return params.c_order + params.c_transport + params.c_reception


def storage_rate(params: CostParams) -> float:
    """Per-item per-day storage rate: storing, worsening, obsolescence, interest."""
    return params.c_storing + params.c_worsening + params.c_obsolescence + params.c_interest


def optimize_review_period(
    forecasts: Sequence[float], poe: float, storage: float
) -> int:
    """Review period minimizing average inventory cost per demanded item.

    For each candidate period the cost rate is the order event cost plus the
    storage cost of items waiting out the cycle, divided by the demand served:
    ic(p) = (poe + storage * sum_{j=1..p} (j-1)*phi_j) / sum_{j=1..p} phi_j.
    Ties resolve to the shorter period. Candidates whose demand prefix is zero
    are skipped; an all-zero forecast raises ZeroDemand.
    """
    horizon = len(forecasts)
    if horizon < 1:
        raise ZeroDemand("empty forecast vector")
    best_period = 0
    best_cost = math.inf
    demand_sum = 0.0
    waiting_sum = 0.0
    for idx, phi in enumerate(forecasts):
        if phi < 0:
            raise NegativeObservation(f"forecast {phi} < 0")
        demand_sum += phi
        waiting_sum += idx * phi
        if demand_sum <= 0.0:
            continue
        cost = (poe + storage * waiting_sum) / demand_sum
        if cost < best_cost:
            best_cost = cost
            best_period = idx + 1
    if best_period == 0:
        raise ZeroDemand("forecast vector has zero total demand")
    return best_period


def optimal_review_period_flat(
    flat_forecast: float, poe: float, storage: float, horizon: int
) -> int:
    """Closed form of the review period optimizer for a flat daily forecast.

    With constant phi the cost rate is poe/(p*phi) + storage*(p-1)/2, which is
    discretely convex; the optimum is the smallest p with p*(p+1) >= 2*poe /
    (storage*phi). Matches optimize_review_period on a constant vector.
    """
    if horizon < 1:
        raise ValueError(f"horizon {horizon} < 1")
    if flat_forecast <= 0:
        raise ZeroDemand(f"flat forecast {flat_forecast} <= 0")
    if storage <= 0:
        return horizon
    threshold = 2.0 * poe / (storage * flat_forecast)
    period = max(1, math.ceil((-1.0 + math.sqrt(1.0 + 4.0 * threshold)) / 2.0))
    # FP noise near the boundary: settle with the exact difference rule.
    while period > 1 and (period - 1) * period >= threshold:
        period -= 1
    while period * (period + 1) < threshold:
        period += 1
    return min(period, horizon)


def fill_rate(counter: FillRateCounter) -> float:
    """Fraction of orders satisfied in full."""
    if counter.total == 0:
        raise NoOrders("no orders observed")
    return counter.fully_satisfied / counter.total


def total_inventory_cost(
    poe: float,
    n_orders: int,
    storage: float,
    on_hand_integral: float,
    purchase_spend: float,
) -> float:
    """Order event costs plus storage of the on-hand profile plus purchase spend."""
    return poe * n_orders + storage * on_hand_integral + purchase_spend
