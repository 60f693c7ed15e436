"""Customer arrival sampling and the store-day service loop.

The service loop is the simulation hot path; it exists twice, here in pure
Python and as a compiled twin in ``_arrivals``. Both consume the exact same
underlying bit stream with the same floating-point expressions, so switching
implementations never changes a result. Selection happens at import; callers
can force a path with ``impl=``.

Interarrival times are exponential, inverse-CDF sampled and rejected outside
the configured window. Order quantities are triangular by inverse CDF,
rounded to the nearest whole item (floor of x + 0.5 in both twins).
"""

from __future__ import annotations

from math import floor, log1p, sqrt
from typing import Any

try:
    from . import _arrivals as _compiled
except ImportError:  # build without the extension: pure Python only
    _compiled = None

HAVE_COMPILED = _compiled is not None


def draw_interarrival(gen: Any, mean: float, lower: float, upper: float) -> float:
    """One truncated-exponential gap, by rejection."""
    while True:
        x = -mean * log1p(-gen.random())
        if lower <= x <= upper:
            return x


def draw_quantity(gen: Any, lower: float, mode: float, upper: float) -> int:
    """One triangular order quantity, rounded to the nearest whole item."""
    u = gen.random()
    span = upper - lower
    left = mode - lower
    right = upper - mode
    if u * span < left:
        x = lower + sqrt(u * span * left)
    else:
        x = upper - sqrt((1.0 - u) * span * right)
    return int(floor(x + 0.5))


def truncated_exp_mean(mean: float, lower: float, upper: float) -> float:
    """Analytic mean of the rejection-sampled interarrival distribution."""
    from math import exp

    ea = exp(-lower / mean)
    eb = exp(-upper / mean)
    return ((lower + mean) * ea - (upper + mean) * eb) / (ea - eb)


def _serve_store_day_py(
    gen: Any,
    open_t: float,
    close_t: float,
    ia_mean: float,
    ia_lo: float,
    ia_hi: float,
    q_lo: float,
    q_mode: float,
    q_hi: float,
    on_hand: int,
) -> tuple[int, int, int, int, int, int]:
    rnd = gen.random
    span = q_hi - q_lo
    left = q_mode - q_lo
    right = q_hi - q_mode
    t = open_t
    served_qty = 0
    lost_qty = 0
    fso = 0
    to = 0
    demand = 0
    while True:
        while True:
            x = -ia_mean * log1p(-rnd())
            if ia_lo <= x <= ia_hi:
                break
        t = t + x
        if t >= close_t:
            break
        u = rnd()
        if u * span < left:
            xx = q_lo + sqrt(u * span * left)
        else:
            xx = q_hi - sqrt((1.0 - u) * span * right)
        q = int(floor(xx + 0.5))
        to += 1
        demand += q
        if on_hand >= q:
            on_hand -= q
            served_qty += q
            fso += 1
        else:
            lost_qty += q
    return on_hand, served_qty, lost_qty, fso, to, demand


def serve_store_day(
    gen: Any,
    open_t: float,
    close_t: float,
    ia_mean: float,
    ia_lo: float,
    ia_hi: float,
    q_lo: float,
    q_mode: float,
    q_hi: float,
    on_hand: int,
    impl: str = "auto",
) -> tuple[int, int, int, int, int, int]:
    """Serve one (store, item) business day against the given stock.

    Returns (new_on_hand, served_qty, lost_qty, full_orders, total_orders,
    demand_qty). All-or-nothing per customer order.
    """
    if impl == "auto":
        impl = "compiled" if HAVE_COMPILED else "pure"
    if impl == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available in this build")
        return _compiled.serve_store_day(
            gen.bit_generator, open_t, close_t, ia_mean, ia_lo, ia_hi,
            q_lo, q_mode, q_hi, on_hand,
        )
    if impl == "pure":
        return _serve_store_day_py(
            gen, open_t, close_t, ia_mean, ia_lo, ia_hi, q_lo, q_mode, q_hi, on_hand
        )
    raise ValueError(f"unknown kernel impl {impl!r}")


def draw_store_day_arrivals(
    gen: Any,
    open_t: float,
    close_t: float,
    ia_mean: float,
    ia_lo: float,
    ia_hi: float,
    q_lo: float,
    q_mode: float,
    q_hi: float,
) -> list[tuple[float, int]]:
    """All (time, quantity) arrivals of one store-day, stock left aside.

    Consumes the stream exactly like the service loop, so a traced or merged
    run stays draw-for-draw aligned with the kernel path.
    """
    rnd = gen.random
    span = q_hi - q_lo
    left = q_mode - q_lo
    right = q_hi - q_mode
    t = open_t
    arrivals: list[tuple[float, int]] = []
    while True:
        while True:
            x = -ia_mean * log1p(-rnd())
            if ia_lo <= x <= ia_hi:
                break
        t = t + x
        if t >= close_t:
            break
        u = rnd()
        if u * span < left:
            xx = q_lo + sqrt(u * span * left)
        else:
            xx = q_hi - sqrt((1.0 - u) * span * right)
        arrivals.append((t, int(floor(xx + 0.5))))
    return arrivals
