"""Scenario configuration, experiment execution, and report emission.

A scenario couples the two-echelon world with an optional certification
backend. The baseline scenario runs without any information sharing; the
sharing scenario gives every node a signing identity on a fresh ledger per
replication, authorizes them through the voting flow, and lets retailers
certify their daily lead-time demand for the wholesalers to consume.

Paired scenarios share every random stream that does not depend on sharing
itself, so a comparison isolates the effect of the information channel.
Reports render the per-node economics, inventory performance, rank-sum
comparisons, and the blockchain cost table as stable CSV plus one JSON
summary; regenerating from the same results is byte-identical.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

from .connector import Connector, OffChainStore
from .inventory import total_inventory_cost
from .ledger import (
    POST_GAS,
    AuthorizationStatus,
    DEFAULT_PENDING_TIME,
    Keypair,
    Ledger,
    PendingTimeParams,
)
from .simcore.engine import derive_stream
from .simcore.world import (
    MODE_BASELINE,
    MODE_SHARING,
    NodeMetrics,
    ReplicationOutput,
    World,
    node_key_seed,
)
from .stats import MannWhitneyResult, mann_whitney

__all__ = [
    "ConfigError",
    "EchelonParams",
    "RetailerParams",
    "ScenarioConfig",
    "NodeResult",
    "ScenarioResults",
    "PER_TX_COST_EUR",
    "DEFAULT_CONFIG",
    "load_config",
    "config_from_dict",
    "config_to_dict",
    "run_replication",
    "run_experiment",
    "run_paired",
    "mann_whitney",
    "comparison_panels",
    "blockchain_cost_summary",
    "emit_report",
    "replay_trace",
]


class ConfigError(Exception):
    """Invalid scenario configuration; message lists every problem found."""


# Per-transaction fiat cost of one certification at the three gas price
# tiers observed on the reference network.
PER_TX_COST_EUR = {"min": 0.01, "avg": 0.93, "max": 19.40}

# Back-solved per-run transaction counts behind the published cost table;
# reports reproduce those rows alongside the measured counts.
TABLE_COUNT_PER_RETAILER = 90
TABLE_COUNT_PER_WHOLESALER = 600
TABLE_COUNT_TOTAL = 3600
TABLE_POSTS_PER_NODE_DAY = 60


@dataclass(frozen=True)
class EchelonParams:
    """Replenishment and cost parameters for one echelon."""

    lead_time: int
    review_period: int
    ses_alpha: float
    ses_window: int
    ss_window: int
    sigma_factor: float
    sigma_lt: float
    c_order: float
    c_transport: float
    c_reception: float
    c_storing: float
    c_worsening: float
    c_obsolescence: float
    c_interest: float

    @property
    def poe_cost(self) -> float:
        return self.c_order + self.c_transport + self.c_reception

    @property
    def storage_rate(self) -> float:
        return self.c_storing + self.c_worsening + self.c_obsolescence + self.c_interest


@dataclass(frozen=True)
class RetailerParams(EchelonParams):
    """Echelon parameters plus store-level customer demand."""

    interarrival_mean: float = 5000.0
    interarrival_lower: float = 3600.0
    interarrival_upper: float = 7200.0
    qty_lower: float = 18.0
    qty_mode: float = 30.0
    qty_upper: float = 44.0


DEFAULT_RETAILER = RetailerParams(
    lead_time=5,
    review_period=3,
    ses_alpha=0.7,
    ses_window=10,
    ss_window=20,
    sigma_factor=2.0,
    sigma_lt=0.5,
    c_order=15.0,
    c_transport=60.0,
    c_reception=25.0,
    c_storing=0.65,
    c_worsening=0.15,
    c_obsolescence=0.15,
    c_interest=0.05,
)

DEFAULT_WHOLESALER = EchelonParams(
    lead_time=1,
    review_period=2,
    ses_alpha=0.6,
    ses_window=15,
    ss_window=20,
    sigma_factor=2.0,
    sigma_lt=0.5,
    c_order=20.0,
    c_transport=100.0,
    c_reception=40.0,
    c_storing=0.4,
    c_worsening=0.15,
    c_obsolescence=0.15,
    c_interest=0.05,
)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "baseline-vs-sharing"
    mode: str = "both"
    days: int = 60
    replications: int = 3
    master_seed: int = 2019
    price_seed: int = 101
    wholesalers: int = 3
    retailers: int = 20
    items: int = 60
    stores_per_retailer: int = 1
    business_seconds: float = 43200.0
    start_date: str = "2019-06-01"
    review_horizon_days: int = 30
    gas_price_tier: str = "max"
    per_tx_cost_eur: Mapping[str, float] = field(
        default_factory=lambda: dict(PER_TX_COST_EUR)
    )
    distortion: Mapping[int, float] = field(default_factory=dict)
    posting_enabled: bool = True
    wholesaler_posting: bool = False
    wholesale_price_low: float = 8.0
    wholesale_price_high: float = 12.0
    retail_markup: float = 1.3
    pending: PendingTimeParams = DEFAULT_PENDING_TIME
    retailer: RetailerParams = DEFAULT_RETAILER
    wholesaler: EchelonParams = DEFAULT_WHOLESALER

    def tier_cost(self) -> float:
        return self.per_tx_cost_eur[self.gas_price_tier]


DEFAULT_CONFIG = ScenarioConfig()

_MODES = (MODE_BASELINE, MODE_SHARING, "both")


def validate_config(config: ScenarioConfig) -> None:
    """Raise ConfigError listing every violated constraint."""
    errors: list[str] = []

    def check(ok: bool, message: str) -> None:
        if not ok:
            errors.append(message)

    check(config.mode in _MODES, f"mode must be one of {_MODES}, got {config.mode!r}")
    check(config.days >= 1, f"days must be >= 1, got {config.days}")
    check(config.replications >= 1,
          f"replications must be >= 1, got {config.replications}")
    check(config.retailers >= 1, f"retailers must be >= 1, got {config.retailers}")
    check(config.wholesalers >= 1,
          f"wholesalers must be >= 1, got {config.wholesalers}")
    check(config.items >= 1, f"items must be >= 1, got {config.items}")
    check(config.stores_per_retailer >= 1,
          f"stores_per_retailer must be >= 1, got {config.stores_per_retailer}")
    check(0.0 < config.business_seconds <= 86400.0,
          f"business_seconds must be in (0, 86400], got {config.business_seconds}")
    check(config.review_horizon_days >= 1,
          f"review_horizon_days must be >= 1, got {config.review_horizon_days}")
    check(config.gas_price_tier in config.per_tx_cost_eur,
          f"gas_price_tier {config.gas_price_tier!r} not in per_tx_cost_eur")
    for tier, cost in config.per_tx_cost_eur.items():
        check(cost >= 0, f"per_tx_cost_eur[{tier!r}] must be >= 0, got {cost}")
    for idx, factor in config.distortion.items():
        check(isinstance(idx, int) and 0 <= idx < config.retailers,
              f"distortion retailer {idx!r} out of range")
        check(factor > 0, f"distortion factor for retailer {idx} must be > 0")
    check(config.wholesale_price_low > 0,
          "wholesale_price_low must be > 0")
    check(config.wholesale_price_low <= config.wholesale_price_high,
          "wholesale price bounds inverted")
    check(config.retail_markup > 0, "retail_markup must be > 0")
    try:
        date.fromisoformat(config.start_date)
    except ValueError:
        errors.append(f"start_date {config.start_date!r} is not an ISO date")

    r = config.retailer
    check(r.interarrival_mean > 0, "retailer interarrival mean must be > 0")
    check(0 < r.interarrival_lower <= r.interarrival_upper,
          "retailer interarrival bounds inverted")
    check(r.qty_lower <= r.qty_mode <= r.qty_upper,
          "retailer quantity triangle out of order")
    check(r.qty_lower >= 1, "retailer minimum quantity must be >= 1")
    for label, p in (("retailer", r), ("wholesaler", config.wholesaler)):
        check(p.lead_time >= 1, f"{label} lead_time must be >= 1")
        check(p.review_period >= 1, f"{label} review_period must be >= 1")
        check(0 < p.ses_alpha <= 1, f"{label} ses_alpha must be in (0, 1]")
        check(p.ses_window >= 1, f"{label} ses_window must be >= 1")
        check(p.ss_window >= 2, f"{label} ss_window must be >= 2")
        check(p.sigma_factor >= 0, f"{label} sigma_factor must be >= 0")
        check(p.sigma_lt >= 0, f"{label} sigma_lt must be >= 0")
        check(p.poe_cost > 0, f"{label} order event cost must be > 0")
        check(p.storage_rate >= 0, f"{label} storage rate must be >= 0")

    if errors:
        raise ConfigError("; ".join(errors))


# --------------------------------------------------------------------------
# Config file round-trip. External keys follow the parameter tables' row
# labels; internal field names stay short.

_RETAILER_KEYS = {
    "average_order_interarrival_time_sec": "interarrival_mean",
    "interarrival_lower_bound_sec": "interarrival_lower",
    "interarrival_upper_bound_sec": "interarrival_upper",
    "lead_time_days": "lead_time",
    "ses_history_days": "ses_window",
    "ses_alpha": "ses_alpha",
    "stddev_factor": "sigma_factor",
    "lead_time_stddev": "sigma_lt",
    "safety_stock_days": "ss_window",
    "review_period_days": "review_period",
    "triangular_minimum": "qty_lower",
    "triangular_mode": "qty_mode",
    "triangular_maximum": "qty_upper",
    "ordering_cost": "c_order",
    "transportation_cost": "c_transport",
    "reception_cost": "c_reception",
    "storing_cost": "c_storing",
    "obsolescence_cost": "c_obsolescence",
    "deterioration_cost": "c_worsening",
    "interest_cost": "c_interest",
}

_WHOLESALER_KEYS = {
    key: name
    for key, name in _RETAILER_KEYS.items()
    if not key.startswith(("triangular_", "average_order", "interarrival_"))
}

_PENDING_KEYS = {
    "log_mean": "mu",
    "log_sigma": "sigma",
    "lower_bound_sec": "lower",
    "upper_bound_sec": "upper",
}

_TOP_LEVEL_KEYS = (
    "name", "mode", "days", "replications", "master_seed", "price_seed",
    "wholesalers", "retailers", "items", "stores_per_retailer",
    "business_seconds", "start_date", "review_horizon_days",
    "gas_price_tier", "posting_enabled", "wholesaler_posting",
    "wholesale_price_low", "wholesale_price_high", "retail_markup",
)


def _section(raw: Mapping[str, Any], keys: Mapping[str, str], base: Any,
             label: str, errors: list[str]) -> Any:
    updates = {}
    for key, value in raw.items():
        name = keys.get(key)
        if name is None:
            errors.append(f"unknown {label} key {key!r}")
            continue
        updates[name] = value
    try:
        return dataclasses.replace(base, **updates)
    except (TypeError, ValueError) as exc:
        errors.append(f"bad {label} section: {exc}")
        return base


def config_from_dict(raw: Mapping[str, Any]) -> ScenarioConfig:
    """Build a validated config from parsed JSON, defaulting absent fields."""
    errors: list[str] = []
    updates: dict[str, Any] = {}
    for key, value in raw.items():
        if key in _TOP_LEVEL_KEYS:
            updates[key] = value
        elif key == "per_tx_cost_eur":
            if isinstance(value, Mapping):
                updates[key] = {str(k): float(v) for k, v in value.items()}
            else:
                errors.append("per_tx_cost_eur must be an object")
        elif key == "distortion":
            if isinstance(value, Mapping):
                try:
                    updates[key] = {int(k): float(v) for k, v in value.items()}
                except (TypeError, ValueError):
                    errors.append("distortion keys must be retailer indices")
            else:
                errors.append("distortion must be an object")
        elif key == "retailer":
            updates[key] = _section(value, _RETAILER_KEYS, DEFAULT_RETAILER,
                                    "retailer", errors)
        elif key == "wholesaler":
            updates[key] = _section(value, _WHOLESALER_KEYS, DEFAULT_WHOLESALER,
                                    "wholesaler", errors)
        elif key == "pending_time":
            updates["pending"] = _section(value, _PENDING_KEYS,
                                          DEFAULT_PENDING_TIME, "pending_time",
                                          errors)
        else:
            errors.append(f"unknown config key {key!r}")
    if errors:
        raise ConfigError("; ".join(errors))
    try:
        config = dataclasses.replace(DEFAULT_CONFIG, **updates)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    validate_config(config)
    return config


def _section_to_dict(params: Any, keys: Mapping[str, str]) -> dict[str, Any]:
    return {key: getattr(params, name) for key, name in keys.items()}


def config_to_dict(config: ScenarioConfig) -> dict[str, Any]:
    """External-key view of a config, as written to scenario files."""
    out: dict[str, Any] = {key: getattr(config, key) for key in _TOP_LEVEL_KEYS}
    out["per_tx_cost_eur"] = dict(config.per_tx_cost_eur)
    out["distortion"] = {str(k): v for k, v in sorted(config.distortion.items())}
    out["retailer"] = _section_to_dict(config.retailer, _RETAILER_KEYS)
    out["wholesaler"] = _section_to_dict(config.wholesaler, _WHOLESALER_KEYS)
    out["pending_time"] = _section_to_dict(config.pending, _PENDING_KEYS)
    return out


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return config_from_dict(raw)


# --------------------------------------------------------------------------
# Execution


def node_names(config: ScenarioConfig) -> list[str]:
    return [f"R{i:02d}" for i in range(config.retailers)] + [
        f"W{i}" for i in range(config.wholesalers)
    ]


def _build_sharing_backend(
    config: ScenarioConfig, replication: int
) -> tuple[Connector, dict[str, Keypair]]:
    """Fresh ledger, store, and authorized identities for one replication."""
    deployer = Keypair.generate(node_key_seed(config.master_seed, "deployer"))
    ledger = Ledger(deployer)
    store = OffChainStore()
    pending_rng = derive_stream(config.master_seed, "pending", replication)
    connector = Connector(
        ledger,
        store,
        clock=lambda: 0.0,
        pending_rng=pending_rng,
        gas_price=config.tier_cost() / POST_GAS,
        pending_params=config.pending,
    )
    keypairs: dict[str, Keypair] = {}
    members = [deployer]
    for name in node_names(config):
        keypair = Keypair.generate(node_key_seed(config.master_seed, name))
        status = connector.register_company(keypair, members)
        if status is not AuthorizationStatus.AUTHORIZED:
            raise RuntimeError(f"{name} failed authorization: {status}")
        keypairs[name] = keypair
        members.append(keypair)
    return connector, keypairs


def run_replication(
    config: ScenarioConfig,
    mode: str,
    replication: int,
    trace: Callable[[dict], None] | None = None,
    kernel_impl: str = "auto",
) -> ReplicationOutput:
    """One world under one mode; sharing mode gets its own fresh backend."""
    if mode == MODE_SHARING:
        connector, keypairs = _build_sharing_backend(config, replication)
    else:
        connector, keypairs = None, {}
    world = World(
        config,
        mode,
        replication,
        connector=connector,
        keypairs=keypairs,
        trace=trace,
        kernel_impl=kernel_impl,
    )
    return world.run()


@dataclass(frozen=True)
class NodeResult:
    """Economic and service outcome of one node in one replication.

    Monetary fields are rounded to cents; the accounting identities
    total = inventory + blockchain and profit = revenue - total hold at
    that precision.
    """

    replication: int
    node: str
    kind: str
    revenue: float
    missing_revenue: float
    inventory_cost: float
    blockchain_cost: float
    total_cost: float
    profit_margin: float
    fill_rate: float
    avg_inventory_position: float
    avg_daily_item_cost: float
    tx_count: int
    pending_total: float


@dataclass(frozen=True)
class ScenarioResults:
    name: str
    mode: str
    days: int
    items: int
    rows: tuple[NodeResult, ...]

    def nodes(self, kind: str | None = None) -> list[str]:
        seen: dict[str, None] = {}
        for row in self.rows:
            if kind is None or row.kind == kind:
                seen.setdefault(row.node, None)
        return sorted(seen)

    def node_rows(self, node: str) -> list[NodeResult]:
        return [row for row in self.rows if row.node == node]

    def node_mean(self, node: str, attr: str) -> float:
        rows = self.node_rows(node)
        return math.fsum(getattr(row, attr) for row in rows) / len(rows)

    def sample(self, kind: str, attr: str) -> list[float]:
        """Per-node replication means, ordered by node name."""
        return [self.node_mean(node, attr) for node in self.nodes(kind)]


def _node_result(
    config: ScenarioConfig, replication: int, metrics: NodeMetrics
) -> NodeResult:
    params = config.retailer if metrics.kind == "retailer" else config.wholesaler
    inventory_cost = total_inventory_cost(
        params.poe_cost,
        metrics.n_orders,
        params.storage_rate,
        metrics.on_hand_integral,
        metrics.purchase_spend,
    )
    revenue = round(metrics.revenue, 2)
    missing = round(metrics.missing_revenue, 2)
    tic = round(inventory_cost, 2)
    blockchain = round(metrics.tx_count * config.tier_cost(), 2)
    total = round(tic + blockchain, 2)
    profit = round(revenue - total, 2)
    denominator = config.days * config.items
    return NodeResult(
        replication=replication,
        node=metrics.name,
        kind=metrics.kind,
        revenue=revenue,
        missing_revenue=missing,
        inventory_cost=tic,
        blockchain_cost=blockchain,
        total_cost=total,
        profit_margin=profit,
        fill_rate=metrics.fso / metrics.to if metrics.to else 1.0,
        avg_inventory_position=metrics.ip_sum / denominator,
        avg_daily_item_cost=inventory_cost / denominator,
        tx_count=metrics.tx_count,
        pending_total=metrics.pending_total,
    )


def run_experiment(
    config: ScenarioConfig,
    mode: str | None = None,
    trace_factory: Callable[[str, int], Callable[[dict], None] | None] | None = None,
) -> ScenarioResults:
    """Run every replication of one scenario and collect node results.

    ``mode`` overrides the config's mode; "both" is not a runnable mode
    here, use run_paired. ``trace_factory(mode, replication)`` may supply a
    per-replication trace writer.
    """
    validate_config(config)
    resolved = mode or config.mode
    if resolved not in (MODE_BASELINE, MODE_SHARING):
        raise ConfigError(
            f"run_experiment needs a single runnable mode, got {resolved!r}"
        )
    rows: list[NodeResult] = []
    for replication in range(config.replications):
        trace = trace_factory(resolved, replication) if trace_factory else None
        output = run_replication(config, resolved, replication, trace=trace)
        for name in sorted(output.nodes):
            rows.append(_node_result(config, replication, output.nodes[name]))
    return ScenarioResults(
        name=config.name,
        mode=resolved,
        days=config.days,
        items=config.items,
        rows=tuple(rows),
    )


def run_paired(
    config: ScenarioConfig,
    trace_factory: Callable[[str, int], Callable[[dict], None] | None] | None = None,
) -> tuple[ScenarioResults, ScenarioResults]:
    """Baseline and sharing runs under the same seeds."""
    baseline = run_experiment(config, mode=MODE_BASELINE, trace_factory=trace_factory)
    sharing = run_experiment(config, mode=MODE_SHARING, trace_factory=trace_factory)
    return baseline, sharing


# --------------------------------------------------------------------------
# Statistics panels and cost table


@dataclass(frozen=True)
class PanelRow:
    panel: str
    result: MannWhitneyResult

    @property
    def reject_at_05(self) -> bool:
        return self.result.p_value < 0.05


def comparison_panels(
    baseline: ScenarioResults, sharing: ScenarioResults
) -> list[PanelRow]:
    """Rank-sum comparisons with the sharing scenario as the first sample."""
    specs = [
        ("retailer_fill_rate", "retailer", "fill_rate"),
        ("retailer_profit", "retailer", "profit_margin"),
        ("wholesaler_profit", "wholesaler", "profit_margin"),
    ]
    panels = []
    for panel, kind, attr in specs:
        a = sharing.sample(kind, attr)
        b = baseline.sample(kind, attr)
        panels.append(PanelRow(panel=panel, result=mann_whitney(a, b, "greater")))
    return panels


def blockchain_cost_summary(
    results: ScenarioResults,
    per_tx_costs: Mapping[str, float] | None = None,
) -> list[dict[str, Any]]:
    """Measured cost rows plus the published table's reproduction rows.

    Every cost cell is count x per-transaction cost at that tier, rounded
    to cents, so the table is linear in the counts.
    """
    costs = dict(per_tx_costs if per_tx_costs is not None else PER_TX_COST_EUR)
    rows: list[dict[str, Any]] = []

    def cost_row(row: str, basis: str, count: float) -> dict[str, Any]:
        return {
            "row": row,
            "basis": basis,
            "unit": "eur",
            "count": round(count, 4),
            "min_value": round(count * costs["min"], 2),
            "avg_value": round(count * costs["avg"], 2),
            "max_value": round(count * costs["max"], 2),
        }

    replications = max((row.replication for row in results.rows), default=-1) + 1
    for kind, label in (("retailer", "retailer_cost"), ("wholesaler", "wholesaler_cost")):
        nodes = results.nodes(kind)
        total_tx = sum(
            row.tx_count for row in results.rows if row.kind == kind
        )
        per_node_run = total_tx / (len(nodes) * replications) if nodes else 0.0
        rows.append(cost_row(label, "measured", per_node_run))
    total_per_run = sum(row.tx_count for row in results.rows) / max(replications, 1)
    rows.append(cost_row("total_cost", "measured", total_per_run))

    total_pending = math.fsum(row.pending_total for row in results.rows)
    total_tx_all = sum(row.tx_count for row in results.rows)
    posting_nodes = len({row.node for row in results.rows if row.tx_count > 0})
    posts_per_node_day = (
        total_tx_all / (posting_nodes * replications * results.days)
        if posting_nodes
        else 0.0
    )
    pending_per_node_day = (
        total_pending / (posting_nodes * replications * results.days)
        if posting_nodes
        else 0.0
    )
    rows.append(
        {
            "row": "pending_time_per_node_day",
            "basis": "measured",
            "unit": "sec",
            "count": round(posts_per_node_day, 4),
            "min_value": round(posts_per_node_day * 2.0, 2),
            "avg_value": round(pending_per_node_day, 2),
            "max_value": round(posts_per_node_day * 146.0, 2),
        }
    )

    rows.append(cost_row("retailer_cost", "table_reproduction", TABLE_COUNT_PER_RETAILER))
    rows.append(cost_row("wholesaler_cost", "table_reproduction", TABLE_COUNT_PER_WHOLESALER))
    rows.append(cost_row("total_cost", "table_reproduction", TABLE_COUNT_TOTAL))
    rows.append(
        {
            "row": "pending_time_per_node_day",
            "basis": "table_reproduction",
            "unit": "sec",
            "count": TABLE_POSTS_PER_NODE_DAY,
            "min_value": round(TABLE_POSTS_PER_NODE_DAY * 2.0, 2),
            "avg_value": round(TABLE_POSTS_PER_NODE_DAY * 16.3, 2),
            "max_value": round(TABLE_POSTS_PER_NODE_DAY * 146.0, 2),
        }
    )
    return rows


# --------------------------------------------------------------------------
# Report emission


def _fmt_money(value: float) -> str:
    return f"{value:.2f}"


def _fmt_pct(value: float) -> str:
    return f"{100.0 * value:.2f}"


def _write_csv(path: Path, header: list[str], rows: Iterable[list[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _economics_rows(results: ScenarioResults, kind: str) -> list[list[str]]:
    rows: list[list[str]] = []
    for node in results.nodes(kind):
        node_rows = results.node_rows(node)
        for row in node_rows:
            rows.append([
                results.mode, node, str(row.replication),
                _fmt_money(row.revenue), _fmt_money(row.missing_revenue),
                _fmt_money(row.inventory_cost), _fmt_money(row.blockchain_cost),
                _fmt_money(row.total_cost), _fmt_money(row.profit_margin),
            ])
        rows.append([
            results.mode, node, "mean",
            _fmt_money(results.node_mean(node, "revenue")),
            _fmt_money(results.node_mean(node, "missing_revenue")),
            _fmt_money(results.node_mean(node, "inventory_cost")),
            _fmt_money(results.node_mean(node, "blockchain_cost")),
            _fmt_money(results.node_mean(node, "total_cost")),
            _fmt_money(results.node_mean(node, "profit_margin")),
        ])
    return rows


def _inventory_rows(results: ScenarioResults, kind: str) -> list[list[str]]:
    rows: list[list[str]] = []
    for node in results.nodes(kind):
        for row in results.node_rows(node):
            rows.append([
                results.mode, node, str(row.replication),
                _fmt_pct(row.fill_rate),
                f"{row.avg_inventory_position:.2f}",
                _fmt_money(row.inventory_cost),
                _fmt_money(row.avg_daily_item_cost),
            ])
        rows.append([
            results.mode, node, "mean",
            _fmt_pct(results.node_mean(node, "fill_rate")),
            f"{results.node_mean(node, 'avg_inventory_position'):.2f}",
            _fmt_money(results.node_mean(node, "inventory_cost")),
            _fmt_money(results.node_mean(node, "avg_daily_item_cost")),
        ])
    return rows


def _fill_rate_rows(results: ScenarioResults) -> list[list[str]]:
    rows: list[list[str]] = []
    for kind in ("retailer", "wholesaler"):
        for node in results.nodes(kind):
            for row in results.node_rows(node):
                rows.append([
                    results.mode, kind, node, str(row.replication),
                    _fmt_pct(row.fill_rate),
                ])
            rows.append([
                results.mode, kind, node, "mean",
                _fmt_pct(results.node_mean(node, "fill_rate")),
            ])
    return rows


def _results_to_json(results: ScenarioResults) -> dict[str, Any]:
    return {
        "name": results.name,
        "mode": results.mode,
        "days": results.days,
        "items": results.items,
        "rows": [dataclasses.asdict(row) for row in results.rows],
    }


def _results_from_json(raw: Mapping[str, Any]) -> ScenarioResults:
    rows = tuple(NodeResult(**row) for row in raw["rows"])
    return ScenarioResults(
        name=raw["name"], mode=raw["mode"], days=raw["days"],
        items=raw["items"], rows=rows,
    )


def read_summary(path: str | Path) -> dict[str, Any]:
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def results_from_summary(raw: Mapping[str, Any]) -> dict[str, ScenarioResults]:
    return {
        mode: _results_from_json(entry)
        for mode, entry in raw["scenarios"].items()
    }


def emit_report(
    baseline: ScenarioResults,
    sharing: ScenarioResults,
    out_dir: str | Path,
    config: ScenarioConfig | None = None,
    distorted: ScenarioResults | None = None,
) -> list[Path]:
    """Write the CSV report set and the JSON summary; returns the paths.

    Output depends only on the inputs: regenerating from equal results
    produces byte-identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name: str, header: list[str], rows: list[list[str]]) -> None:
        path = out / name
        _write_csv(path, header, rows)
        written.append(path)

    econ_header = [
        "scenario", "node", "replication", "revenue_eur", "missing_revenue_eur",
        "inventory_cost_eur", "blockchain_cost_eur", "total_cost_eur",
        "profit_margin_eur",
    ]
    emit(
        "wholesaler_economics.csv", econ_header,
        _economics_rows(baseline, "wholesaler") + _economics_rows(sharing, "wholesaler"),
    )
    emit(
        "retailer_economics.csv", econ_header,
        _economics_rows(baseline, "retailer") + _economics_rows(sharing, "retailer"),
    )
    inv_header = [
        "scenario", "node", "replication", "fill_rate_pct",
        "avg_inventory_position", "inventory_cost_eur",
        "avg_daily_item_cost_eur",
    ]
    emit(
        "wholesaler_inventory.csv", inv_header,
        _inventory_rows(baseline, "wholesaler") + _inventory_rows(sharing, "wholesaler"),
    )
    emit(
        "retailer_inventory.csv", inv_header,
        _inventory_rows(baseline, "retailer") + _inventory_rows(sharing, "retailer"),
    )
    emit(
        "fill_rates.csv",
        ["scenario", "kind", "node", "replication", "fill_rate_pct"],
        _fill_rate_rows(baseline) + _fill_rate_rows(sharing),
    )

    panels = comparison_panels(baseline, sharing)
    panel_rows = []
    for panel in panels:
        res = panel.result
        is_pct = "fill_rate" in panel.panel
        fmt = _fmt_pct if is_pct else _fmt_money
        panel_rows.append([
            panel.panel, str(res.n1), str(res.n2),
            fmt(res.median_a), fmt(res.median_b),
            fmt(res.median_a - res.median_b),
            f"{res.rank_sum:.2f}", f"{res.u_stat:.2f}",
            f"{res.p_value:.6f}",
            "yes" if panel.reject_at_05 else "no",
        ])
    emit(
        "mann_whitney.csv",
        [
            "panel", "n_sharing", "n_baseline", "median_sharing",
            "median_baseline", "median_difference", "w_value", "u_value",
            "p_value", "reject_at_0_05",
        ],
        panel_rows,
    )

    per_tx = dict(config.per_tx_cost_eur) if config else dict(PER_TX_COST_EUR)
    cost_rows = blockchain_cost_summary(sharing, per_tx)
    emit(
        "blockchain_costs.csv",
        ["row", "basis", "unit", "count", "min_value", "avg_value", "max_value"],
        [
            [
                row["row"], row["basis"], row["unit"], f"{row['count']:.4f}",
                _fmt_money(row["min_value"]), _fmt_money(row["avg_value"]),
                _fmt_money(row["max_value"]),
            ]
            for row in cost_rows
        ],
    )

    if distorted is not None:
        dist_rows = []
        for node in sharing.nodes("retailer"):
            honest_rows = sharing.node_rows(node)
            distorted_rows = distorted.node_rows(node)
            for h, d in zip(honest_rows, distorted_rows):
                dist_rows.append([
                    node, str(h.replication), _fmt_pct(h.fill_rate),
                    _fmt_pct(d.fill_rate),
                    f"{100.0 * (d.fill_rate - h.fill_rate):.2f}",
                ])
            mean_h = sharing.node_mean(node, "fill_rate")
            mean_d = distorted.node_mean(node, "fill_rate")
            dist_rows.append([
                node, "mean", _fmt_pct(mean_h), _fmt_pct(mean_d),
                f"{100.0 * (mean_d - mean_h):.2f}",
            ])
        emit(
            "distortion_comparison.csv",
            [
                "node", "replication", "fill_rate_honest_pct",
                "fill_rate_distorted_pct", "change_pp",
            ],
            dist_rows,
        )

    summary: dict[str, Any] = {
        "scenarios": {
            baseline.mode: _results_to_json(baseline),
            sharing.mode: _results_to_json(sharing),
        },
        "mann_whitney": [
            {
                "panel": panel.panel,
                "n1": panel.result.n1,
                "n2": panel.result.n2,
                "median_sharing": panel.result.median_a,
                "median_baseline": panel.result.median_b,
                "w_value": panel.result.rank_sum,
                "u_value": panel.result.u_stat,
                "p_value": panel.result.p_value,
                "method": panel.result.method,
                "reject_at_0_05": panel.reject_at_05,
            }
            for panel in panels
        ],
        "blockchain_costs": cost_rows,
    }
    if config is not None:
        summary["config"] = config_to_dict(config)
    if distorted is not None:
        summary["scenarios"]["b_is_distorted"] = _results_to_json(distorted)
    summary_path = out / "summary.json"
    with open(summary_path, "w", encoding="utf-8", newline="") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)
        handle.write("\n")
    written.append(summary_path)
    return written


def report_from_summary(summary: Mapping[str, Any], out_dir: str | Path) -> list[Path]:
    """Regenerate the CSV report set from a previously written summary."""
    scenarios = results_from_summary(summary)
    try:
        baseline = scenarios[MODE_BASELINE]
        sharing = scenarios[MODE_SHARING]
    except KeyError as exc:
        raise ConfigError(f"summary lacks scenario {exc}") from exc
    config = None
    if "config" in summary:
        config = config_from_dict(summary["config"])
    distorted = scenarios.get("b_is_distorted")
    return emit_report(baseline, sharing, out_dir, config=config, distorted=distorted)


# --------------------------------------------------------------------------
# Trace replay


@dataclass
class ReplayNode:
    """Accumulators rebuilt from a replication's event trace."""

    fso: int = 0
    to: int = 0
    n_orders: int = 0
    on_hand_integral: float = 0.0
    purchase_spend: float = 0.0
    ip_sum: float = 0.0

    def inventory_cost(self, params: EchelonParams) -> float:
        return total_inventory_cost(
            params.poe_cost, self.n_orders, params.storage_rate,
            self.on_hand_integral, self.purchase_spend,
        )


def replay_trace(path: str | Path, config: ScenarioConfig) -> dict[str, ReplayNode]:
    """Rebuild per-node service and cost accumulators from a trace file.

    The trace carries one JSON event per line in emission order, so the
    floating point accumulation here reproduces the simulation's own
    accumulators bit for bit.
    """
    nodes: dict[str, ReplayNode] = {}

    def node(name: str) -> ReplayNode:
        entry = nodes.get(name)
        if entry is None:
            entry = nodes[name] = ReplayNode()
        return entry

    with open(path, encoding="utf-8") as handle:
        for line in handle:
            event = json.loads(line)
            kind = event["k"]
            if kind == "arr":
                entry = node(event["n"])
                entry.to += 1
                entry.fso += event["ok"]
            elif kind == "fulfill":
                entry = node(event["n"])
                entry.to += 1
                if event["qd"] == event["qo"]:
                    entry.fso += 1
            elif kind == "po":
                node(event["n"]).n_orders += 1
            elif kind == "mfr":
                node(event["n"]).n_orders += 1
            elif kind == "del":
                node(event["n"]).purchase_spend += event["p"] * event["qd"]
            elif kind == "mfr_del":
                node(event["n"]).purchase_spend += event["p"] * event["qd"]
            elif kind == "eob":
                entry = node(event["n"])
                entry.on_hand_integral += sum(event["oh"])
                entry.ip_sum += sum(event["pos"])
    return nodes
