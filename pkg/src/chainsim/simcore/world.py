"""Two-echelon world model.

Retailers run stores that serve walk-in customers; wholesalers serve the
retailers' purchase orders from stock and replenish from a pooled
manufacturing source that delivers a uniform 90 to 100 percent of any order
a day later. One simulated day is: receipts at start of business, retailer
reviews (purchase orders out), wholesaler processing (fulfillment, forecast
update, review, manufacturer order), the 12-hour customer window, then
end-of-business accounting. In sharing mode each retailer certifies its
per-item lead-time demand through the connector at end of business and each
wholesaler folds the previous evening's verified records into its demand
estimate the next morning; with zero posted records the estimate falls back
to the wholesaler's own order-history smoothing, which makes the sharing
scenario reduce exactly to the baseline.

Stores of one retailer draw from a pooled per-item stock. With a single
store per retailer the compiled kernel serves the whole day; multiple
stores (or trace capture) merge per-store arrival lists by time and serve
them one customer at a time, consuming the same random draws either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, timedelta
from typing import TYPE_CHECKING, Any, Callable

from ..connector import Connector, VerificationStatus
from ..inventory import (
    ForecastState,
    inventory_position,
    optimal_review_period_flat,
    order_quantity,
    reorder_level,
    ses_update,
    should_order,
    target_level,
)
from ..ledger import Keypair
from .engine import DELIVERY, MINE_TICK, ORDER_ARRIVAL, EventQueue, derive_stream
from .kernels import (
    draw_store_day_arrivals,
    serve_store_day,
    truncated_exp_mean,
)

if TYPE_CHECKING:
    from ..experiments import ScenarioConfig

DAY_SECONDS = 86400.0

MODE_BASELINE = "no_is"
MODE_SHARING = "b_is"

TraceWriter = Callable[[dict], None]


# --------------------------------------------------------------------------
# Small pure operations, also exercised directly by tests.


def serve_customer(on_hand: int, qty: int) -> tuple[int, int, int, bool]:
    """All-or-nothing service of one customer order against store stock.

    Returns (new_on_hand, served_qty, lost_qty, served_in_full).
    """
    if on_hand >= qty:
        return on_hand - qty, qty, 0, True
    return on_hand, 0, qty, False


def supplier_select(quotes: list[tuple[float, float]], qty: int) -> int:
    """Pick a supplier index from (available, lead_time) quotes.

    Shortest lead time among suppliers that can cover the full quantity;
    when none can, the largest availability. Ties go to the lowest index.
    """
    if not quotes:
        raise ValueError("no supplier quotes")
    sufficient = [i for i, (avail, _) in enumerate(quotes) if avail >= qty]
    if sufficient:
        return min(sufficient, key=lambda i: (quotes[i][1], i))
    return max(range(len(quotes)), key=lambda i: (quotes[i][0], -i))


def allocate_shortage(available: int, requested: list[int]) -> list[int]:
    """Split scarce stock over orders in proportion to quantity.

    Integer largest-remainder rounding: exact shares floor first, leftover
    units go to the largest fractional remainders, ties to the lower index.
    Allocations never exceed the corresponding request.
    """
    total = sum(requested)
    if available < 0:
        raise ValueError("available must be non-negative")
    if total <= available:
        return list(requested)
    base = [available * q // total for q in requested]
    remainders = [(-(available * q % total), i) for i, q in enumerate(requested)]
    leftover = available - sum(base)
    for _, i in sorted(remainders):
        if leftover == 0:
            break
        if base[i] < requested[i]:
            base[i] += 1
            leftover -= 1
    return base


def manufacturer_fulfill(qty_ordered: int, gen: Any) -> int:
    """Quantity actually delivered from the pooled source: 90 to 100 percent."""
    fraction = 0.9 + 0.1 * gen.random()
    return int(math.floor(qty_ordered * fraction + 0.5))


# --------------------------------------------------------------------------
# Per-node state


class SSWindow:
    """Rolling daily-demand window with O(1) mean and sample variance."""

    def __init__(self, size: int, prefill: float):
        if size < 2:
            raise ValueError("window needs at least 2 slots")
        self._size = size
        self._buf = [float(prefill)] * size
        self._idx = 0
        self._sum = float(prefill) * size
        self._sumsq = float(prefill) * float(prefill) * size

    def push(self, value: float) -> None:
        old = self._buf[self._idx]
        self._buf[self._idx] = value
        self._idx = (self._idx + 1) % self._size
        self._sum += value - old
        self._sumsq += value * value - old * old

    def mean(self) -> float:
        return self._sum / self._size

    def variance(self) -> float:
        n = self._size
        m = self._sum / n
        var = (self._sumsq - n * m * m) / (n - 1)
        return var if var > 0.0 else 0.0

    def values(self) -> list[float]:
        return self._buf[self._idx:] + self._buf[: self._idx]


@dataclass
class NodeMetrics:
    """Raw per-node accumulators for one replication."""

    name: str
    kind: str
    revenue: float = 0.0
    missing_revenue: float = 0.0
    n_orders: int = 0
    on_hand_integral: float = 0.0
    purchase_spend: float = 0.0
    fso: int = 0
    to: int = 0
    ip_sum: float = 0.0
    tx_count: int = 0
    pending_total: float = 0.0
    fees_paid: float = 0.0


class _Echelon:
    """Shared per-item replenishment state for one node."""

    def __init__(self, name: str, kind: str, items: int, params, phi0: float,
                 poe: float, storage: float, horizon: int):
        self.name = name
        self.kind = kind
        self.items = items
        self.params = params
        self.poe = poe
        self.storage = storage
        self.horizon = horizon
        self.metrics = NodeMetrics(name=name, kind=kind)
        self.forecast = [
            ForecastState(alpha=params.ses_alpha, window=params.ses_window)
            for _ in range(items)
        ]
        self.ss_win = [SSWindow(params.ss_window, phi0) for _ in range(items)]
        stock0 = initial_stock_level(phi0, params, poe, storage, horizon)
        self.on_hand = [stock0] * items
        self.on_order = [0] * items

    def buffer_stock(self, item: int) -> float:
        win = self.ss_win[item]
        p = self.params
        mean = win.mean()
        return p.sigma_factor * math.sqrt(
            p.lead_time * win.variance() + mean * mean * p.sigma_lt * p.sigma_lt
        )

    def review_item(self, item: int, lt_demand: float | None = None) -> int:
        """One review of an item; returns the order quantity (0 for none).

        ``lt_demand`` overrides the reorder level's lead-time demand term
        with an externally supplied estimate; by default it comes from the
        node's own smoothed forecast.
        """
        p = self.params
        phi = self.forecast[item].phi
        ss = self.buffer_stock(item)
        if lt_demand is None:
            lam = reorder_level(p.lead_time, phi * p.review_period,
                                p.review_period, ss)
        else:
            lam = lt_demand + ss
        if phi > 0.0:
            rho = optimal_review_period_flat(phi, self.poe, self.storage, self.horizon)
        else:
            rho = p.review_period
        theta = target_level(phi * rho, lam)
        pi = inventory_position(self.on_hand[item], self.on_order[item], 0)
        if should_order(pi, lam):
            return order_quantity(theta, pi)
        return 0


def initial_stock_level(phi0: float, params, poe: float, storage: float,
                        horizon: int) -> int:
    """Starting stock at the target level implied by the seed demand rate."""
    ss0 = params.sigma_factor * math.sqrt(phi0 * phi0 * params.sigma_lt * params.sigma_lt)
    lam0 = reorder_level(params.lead_time, phi0 * params.review_period,
                         params.review_period, ss0)
    rho0 = optimal_review_period_flat(phi0, poe, storage, horizon)
    return math.ceil(target_level(phi0 * rho0, lam0))


class _Retailer(_Echelon):
    def __init__(self, index: int, items: int, stores: int, params, phi0: float,
                 poe: float, storage: float, horizon: int):
        super().__init__(f"R{index:02d}", "retailer", items, params, phi0,
                         poe, storage, horizon)
        self.index = index
        self.stores = stores
        self.day_demand = [0] * items
        self.arrival_streams: list[list[Any]] = []
        self.keypair: Keypair | None = None


class _Wholesaler(_Echelon):
    def __init__(self, index: int, items: int, params, phi0: float,
                 poe: float, storage: float, horizon: int):
        super().__init__(f"W{index}", "wholesaler", items, params, phi0,
                         poe, storage, horizon)
        self.index = index
        self.inbox: list[list[tuple[int, int]]] = [[] for _ in range(items)]
        self.inbox_qty = [0] * items
        self.cursor = 0
        self.mfr_stream: Any = None
        self.keypair: Keypair | None = None


@dataclass
class ReplicationOutput:
    """Everything one replication produced."""

    mode: str
    replication: int
    days: int
    items: int
    nodes: dict[str, NodeMetrics]
    ledger: Any = None
    connector: Connector | None = None


# --------------------------------------------------------------------------
# The world


def node_key_seed(master_seed: int, name: str) -> bytes:
    """Deterministic 32-byte signing seed for a node name."""
    import hashlib

    return hashlib.sha512(f"{master_seed}|keys|{name}".encode()).digest()[:32]


class World:
    def __init__(
        self,
        config: "ScenarioConfig",
        mode: str,
        replication: int,
        connector: Connector | None = None,
        keypairs: dict[str, Keypair] | None = None,
        trace: TraceWriter | None = None,
        kernel_impl: str = "auto",
    ):
        if mode not in (MODE_BASELINE, MODE_SHARING):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == MODE_SHARING and connector is None:
            raise ValueError("sharing mode needs a connector")
        self.config = config
        self.mode = mode
        self.replication = replication
        self.connector = connector
        self.keypairs = keypairs or {}
        self.trace = trace
        self.kernel_impl = kernel_impl
        self.queue = EventQueue()
        self.now = 0.0
        if connector is not None:
            # Certification timestamps follow simulated time.
            connector.clock = lambda: self.now

        cfg = config
        self.items = cfg.items
        self.days = cfg.days
        self.business_seconds = cfg.business_seconds
        self.start_date = date.fromisoformat(cfg.start_date)

        r = cfg.retailer
        w = cfg.wholesaler
        ia_mean_eff = truncated_exp_mean(
            r.interarrival_mean, r.interarrival_lower, r.interarrival_upper
        )
        arrivals_per_day = cfg.business_seconds / ia_mean_eff
        qty_mean = (r.qty_lower + r.qty_mode + r.qty_upper) / 3.0
        phi0_store = qty_mean * arrivals_per_day
        phi0_retail = phi0_store * cfg.stores_per_retailer
        phi0_whole = phi0_retail * cfg.retailers / cfg.wholesalers

        self.retailers = [
            _Retailer(i, cfg.items, cfg.stores_per_retailer, r, phi0_retail,
                      r.poe_cost, r.storage_rate, cfg.review_horizon_days)
            for i in range(cfg.retailers)
        ]
        self.wholesalers = [
            _Wholesaler(i, cfg.items, w, phi0_whole,
                        w.poe_cost, w.storage_rate, cfg.review_horizon_days)
            for i in range(cfg.wholesalers)
        ]

        # Historical order share of each retailer toward each wholesaler,
        # uniform until orders accumulate.
        self.cum_order_qty = [
            [0 for _ in range(cfg.wholesalers)] for _ in range(cfg.retailers)
        ]

        seed = cfg.master_seed
        for rt in self.retailers:
            rt.arrival_streams = [
                [
                    derive_stream(seed, "arr", replication, rt.name, store, item)
                    for item in range(cfg.items)
                ]
                for store in range(cfg.stores_per_retailer)
            ]
            rt.keypair = self.keypairs.get(rt.name)
        for wh in self.wholesalers:
            wh.mfr_stream = derive_stream(seed, "mfr", replication, wh.name)
            wh.keypair = self.keypairs.get(wh.name)

        prices = derive_stream(cfg.price_seed, "prices")
        lo, hi = cfg.wholesale_price_low, cfg.wholesale_price_high
        self.wholesale_price = [lo + (hi - lo) * prices.random() for _ in range(cfg.items)]
        self.retail_price = [p * cfg.retail_markup for p in self.wholesale_price]
        self.manufacturer_price = [p / cfg.retail_markup for p in self.wholesale_price]

        if self.trace:
            self.trace(
                {
                    "k": "prices",
                    "wholesale": list(self.wholesale_price),
                    "retail": list(self.retail_price),
                    "manufacturer": list(self.manufacturer_price),
                }
            )

    # -- helpers -------------------------------------------------------------

    def _emit(self, record: dict) -> None:
        if self.trace:
            self.trace(record)

    def _ref_date(self, day: int) -> date:
        return self.start_date + timedelta(days=day)

    def share_of(self, retailer_idx: int, wholesaler_idx: int) -> float:
        row = self.cum_order_qty[retailer_idx]
        total = sum(row)
        if total == 0:
            return 1.0 / len(self.wholesalers)
        return row[wholesaler_idx] / total

    # -- day phases ----------------------------------------------------------

    def _receipts(self, day: int, t0: float) -> None:
        for event in self.queue.pop_until(t0):
            if event.kind == DELIVERY:
                r_idx, item, qty_ordered, qty_delivered = event.payload
                rt = self.retailers[r_idx]
                rt.on_hand[item] += qty_delivered
                rt.on_order[item] -= qty_ordered
                price = self.wholesale_price[item]
                rt.metrics.purchase_spend += price * qty_delivered
                self._emit({"k": "del", "d": day, "n": rt.name, "i": item,
                            "qo": qty_ordered, "qd": qty_delivered, "p": price})
            elif event.kind == ORDER_ARRIVAL:
                w_idx, item, qty_ordered = event.payload
                wh = self.wholesalers[w_idx]
                delivered = manufacturer_fulfill(qty_ordered, wh.mfr_stream)
                wh.on_hand[item] += delivered
                wh.on_order[item] -= qty_ordered
                price = self.manufacturer_price[item]
                wh.metrics.purchase_spend += price * delivered
                self._emit({"k": "mfr_del", "d": day, "n": wh.name, "i": item,
                            "qo": qty_ordered, "qd": delivered, "p": price})

    def _retailer_reviews(self, day: int) -> None:
        for rt in self.retailers:
            for item in range(self.items):
                qty = rt.review_item(item)
                if qty <= 0:
                    continue
                quotes = [
                    (wh.on_hand[item] - wh.inbox_qty[item], rt.params.lead_time)
                    for wh in self.wholesalers
                ]
                w_idx = supplier_select(quotes, qty)
                wh = self.wholesalers[w_idx]
                wh.inbox[item].append((rt.index, qty))
                wh.inbox_qty[item] += qty
                rt.on_order[item] += qty
                rt.metrics.n_orders += 1
                self.cum_order_qty[rt.index][w_idx] += qty
                self._emit({"k": "po", "d": day, "n": rt.name, "sup": wh.name,
                            "i": item, "q": qty})

    def _fetch_shared_records(self, wh: _Wholesaler) -> dict[int, list[float]]:
        """Verified shared lead-time demand by retailer index.

        Polls since the wholesaler's cursor, re-verifies every record
        against the chain, and drops anything tampered, malformed, or not
        from a known retailer.
        """
        assert self.connector is not None
        requester = wh.keypair.address.id if wh.keypair else wh.name
        wh.cursor, info_ids = self.connector.poll_new_info(requester, wh.cursor)
        by_retailer: dict[int, list[float]] = {}
        if not info_ids:
            return by_retailer
        owner_to_idx = {
            rt.keypair.address.id: rt.index
            for rt in self.retailers
            if rt.keypair is not None
        }
        for info_id in info_ids:
            record = self.connector.get_shared_info(requester, info_id)
            if self.connector.verify_shared_info(record) is not VerificationStatus.AUTHENTIC:
                continue
            r_idx = owner_to_idx.get(record.owner_id)
            if r_idx is None:
                continue
            payload = record.payload
            if not isinstance(payload, dict):
                continue
            shared = payload.get("lead_time_demand")
            if not isinstance(shared, dict):
                continue
            values = [0.0] * self.items
            ok = True
            for item in range(self.items):
                value = shared.get(str(item))
                if not isinstance(value, (int, float)) or value < 0:
                    ok = False
                    break
                values[item] = float(value)
            if ok:
                by_retailer[r_idx] = values
        return by_retailer

    def _shared_lt_demand(
        self, wh: _Wholesaler, verified: dict[int, list[float]], item: int
    ) -> float:
        """Lead-time demand estimate from shared records plus fallback.

        Each verified retailer contributes its shared lead-time demand
        weighted by its historical order share with this wholesaler;
        retailers with missing or rejected records contribute the
        wholesaler's own order-history estimate, scaled by their portion of
        the total share mass. With nothing verified this reduces exactly to
        the own estimate.
        """
        p = wh.params
        shares = [self.share_of(r, wh.index) for r in range(len(self.retailers))]
        total_share = sum(shares)
        estimate = 0.0
        missing_share = 0.0
        for r_idx, share in enumerate(shares):
            values = verified.get(r_idx)
            if values is None:
                missing_share += share
            else:
                estimate += values[item] * share
        if total_share > 0.0 and missing_share > 0.0:
            phi = wh.forecast[item].phi
            own = p.lead_time * (phi * p.review_period) / p.review_period
            estimate += own * (missing_share / total_share)
        return estimate

    def _wholesaler_day(self, day: int) -> None:
        sharing = self.mode == MODE_SHARING
        for wh in self.wholesalers:
            verified: dict[int, list[float]] = {}
            if sharing and self.connector is not None:
                verified = self._fetch_shared_records(wh)
            for item in range(self.items):
                orders = wh.inbox[item]
                total = wh.inbox_qty[item]
                # Fulfillment before anything else; one attempt per order.
                if orders:
                    if wh.on_hand[item] >= total:
                        allocations = [qty for _, qty in orders]
                    else:
                        allocations = allocate_shortage(
                            wh.on_hand[item], [qty for _, qty in orders]
                        )
                    shipped = 0
                    price = self.wholesale_price[item]
                    for (r_idx, qty), granted in zip(orders, allocations):
                        shipped += granted
                        wh.metrics.revenue += price * granted
                        wh.metrics.missing_revenue += price * (qty - granted)
                        wh.metrics.to += 1
                        if granted == qty:
                            wh.metrics.fso += 1
                        due = (day + self.config.retailer.lead_time) * DAY_SECONDS
                        self.queue.push(due, DELIVERY, (r_idx, item, qty, granted))
                        self._emit({"k": "fulfill", "d": day, "n": wh.name,
                                    "r": self.retailers[r_idx].name, "i": item,
                                    "qo": qty, "qd": granted})
                    wh.on_hand[item] -= shipped
                # Today's received orders are the demand observation.
                ses_update(wh.forecast[item], float(total))
                wh.ss_win[item].push(float(total))
                wh.inbox[item] = []
                wh.inbox_qty[item] = 0
                # Review with the mode's lead-time demand estimate.
                if sharing:
                    qty = wh.review_item(
                        item, self._shared_lt_demand(wh, verified, item)
                    )
                else:
                    qty = wh.review_item(item)
                if qty > 0:
                    wh.on_order[item] += qty
                    wh.metrics.n_orders += 1
                    due = (day + wh.params.lead_time) * DAY_SECONDS
                    self.queue.push(due, ORDER_ARRIVAL, (wh.index, item, qty))
                    self._emit({"k": "mfr", "d": day, "n": wh.name, "i": item,
                                "q": qty})

    def _business_window(self, day: int, t0: float) -> None:
        close_t = t0 + self.business_seconds
        r_cfg = self.config.retailer
        for rt in self.retailers:
            for item in range(self.items):
                rt.day_demand[item] = 0
            if rt.stores == 1 and self.trace is None:
                for item in range(self.items):
                    gen = rt.arrival_streams[0][item]
                    on_hand, served_qty, lost_qty, fso, to, demand = serve_store_day(
                        gen, t0, close_t,
                        r_cfg.interarrival_mean, r_cfg.interarrival_lower,
                        r_cfg.interarrival_upper,
                        r_cfg.qty_lower, r_cfg.qty_mode, r_cfg.qty_upper,
                        rt.on_hand[item], impl=self.kernel_impl,
                    )
                    rt.on_hand[item] = on_hand
                    rt.day_demand[item] = demand
                    price = self.retail_price[item]
                    rt.metrics.revenue += price * served_qty
                    rt.metrics.missing_revenue += price * lost_qty
                    rt.metrics.fso += fso
                    rt.metrics.to += to
            else:
                self._serve_merged(rt, day, t0, close_t)

    def _serve_merged(self, rt: _Retailer, day: int, t0: float, close_t: float) -> None:
        """Time-merged service across the retailer's stores, shared stock."""
        r_cfg = self.config.retailer
        for item in range(self.items):
            arrivals: list[tuple[float, int, int]] = []
            for store in range(rt.stores):
                gen = rt.arrival_streams[store][item]
                for t, qty in draw_store_day_arrivals(
                    gen, t0, close_t,
                    r_cfg.interarrival_mean, r_cfg.interarrival_lower,
                    r_cfg.interarrival_upper,
                    r_cfg.qty_lower, r_cfg.qty_mode, r_cfg.qty_upper,
                ):
                    arrivals.append((t, store, qty))
            arrivals.sort(key=lambda a: (a[0], a[1]))
            served_total = 0
            lost_total = 0
            for t, store, qty in arrivals:
                on_hand, served_qty, lost_qty, full = serve_customer(
                    rt.on_hand[item], qty
                )
                rt.on_hand[item] = on_hand
                rt.day_demand[item] += qty
                served_total += served_qty
                lost_total += lost_qty
                rt.metrics.to += 1
                if full:
                    rt.metrics.fso += 1
                self._emit({"k": "arr", "d": day, "n": rt.name, "s": store,
                            "i": item, "t": round(t, 6), "q": qty,
                            "ok": 1 if full else 0})
            # One revenue addend per item and day, same as the kernel path.
            price = self.retail_price[item]
            rt.metrics.revenue += price * served_total
            rt.metrics.missing_revenue += price * lost_total

    def _end_of_business(self, day: int, t0: float) -> None:
        close_t = t0 + self.business_seconds
        for rt in self.retailers:
            for item in range(self.items):
                ses_update(rt.forecast[item], float(rt.day_demand[item]))
                rt.ss_win[item].push(float(rt.day_demand[item]))
            self._accumulate_eob(rt, day)
        for wh in self.wholesalers:
            self._accumulate_eob(wh, day)
        if self.mode == MODE_SHARING and self.config.posting_enabled:
            self._post_shared(day, close_t)

    def _accumulate_eob(self, node: _Echelon, day: int) -> None:
        on_hand_total = 0
        positions = []
        for item in range(self.items):
            on_hand_total += node.on_hand[item]
            positions.append(node.on_hand[item] + node.on_order[item])
        node.metrics.on_hand_integral += on_hand_total
        node.metrics.ip_sum += sum(positions)
        self._emit({"k": "eob", "d": day, "n": node.name,
                    "oh": list(node.on_hand), "pos": positions})

    def _post_shared(self, day: int, close_t: float) -> None:
        assert self.connector is not None
        visibility = [
            wh.keypair.address.id for wh in self.wholesalers if wh.keypair is not None
        ]
        ref = self._ref_date(day)
        for rt in self.retailers:
            if rt.keypair is None:
                continue
            factor = self.config.distortion.get(rt.index, 1.0)
            lt = rt.params.lead_time
            shared = {
                str(item): rt.forecast[item].phi * lt * factor
                for item in range(self.items)
            }
            document = {
                "company": rt.name,
                "reference_date": ref.isoformat(),
                "lead_time_demand": shared,
            }
            record = self.connector.post_shared_info(
                rt.keypair, document, ref, visibility
            )
            verification = record.verification
            assert verification is not None
            rt.metrics.tx_count += 1
            rt.metrics.pending_total += verification.pending_seconds
            rt.metrics.fees_paid += verification.fee_paid
            self._emit({"k": "post", "d": day, "n": rt.name,
                        "id": record.info_id,
                        "delay": round(verification.pending_seconds, 9)})
            self._emit({"k": MINE_TICK, "d": day,
                        "t": round(verification.mined_at, 9),
                        "b": verification.block_index})
        if self.config.wholesaler_posting:
            for wh in self.wholesalers:
                if wh.keypair is None:
                    continue
                lt = wh.params.lead_time
                document = {
                    "company": wh.name,
                    "reference_date": ref.isoformat(),
                    "lead_time_demand": {
                        str(item): wh.forecast[item].phi * lt
                        for item in range(self.items)
                    },
                }
                record = self.connector.post_shared_info(
                    wh.keypair, document, ref, []
                )
                verification = record.verification
                assert verification is not None
                wh.metrics.tx_count += 1
                wh.metrics.pending_total += verification.pending_seconds
                wh.metrics.fees_paid += verification.fee_paid

    # -- main loop -----------------------------------------------------------

    def run(self) -> ReplicationOutput:
        for day in range(self.days):
            t0 = day * DAY_SECONDS
            self.now = t0
            self._receipts(day, t0)
            self._retailer_reviews(day)
            self._wholesaler_day(day)
            self._business_window(day, t0)
            self.now = t0 + self.business_seconds
            self._end_of_business(day, t0)
        nodes: dict[str, NodeMetrics] = {}
        for rt in self.retailers:
            nodes[rt.name] = rt.metrics
        for wh in self.wholesalers:
            nodes[wh.name] = wh.metrics
        return ReplicationOutput(
            mode=self.mode,
            replication=self.replication,
            days=self.days,
            items=self.items,
            nodes=nodes,
            ledger=self.connector.ledger if self.connector else None,
            connector=self.connector,
        )
