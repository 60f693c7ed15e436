"""Event queue and named random streams for the simulation core.

Events dispatch in (time, seq) order, seq being the global insertion count,
so simultaneous events replay in exactly the order they were scheduled.
Random streams are derived by hashing a label path under the master seed;
any (replication, node, purpose) combination always yields the same
generator, which is what makes paired scenario runs share their randomness.
"""

from __future__ import annotations

import hashlib
import heapq
from dataclasses import dataclass, field
from typing import Any, Iterator

import numpy as np

# Event kinds understood by the world model.
CUSTOMER_ARRIVAL = "customer_arrival"
START_OF_BUSINESS = "start_of_business"
END_OF_BUSINESS = "end_of_business"
ORDER_ARRIVAL = "order_arrival"
DELIVERY = "delivery"
MINE_TICK = "mine_tick"


@dataclass(frozen=True, order=True)
class SimEvent:
    time: float
    seq: int
    kind: str = field(compare=False)
    payload: Any = field(compare=False, default=None)


class EventQueue:
    """Min-heap of events keyed by (time, seq)."""

    def __init__(self) -> None:
        self._heap: list[SimEvent] = []
        self._seq = 0

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, time: float, kind: str, payload: Any = None) -> SimEvent:
        event = SimEvent(time=time, seq=self._seq, kind=kind, payload=payload)
        self._seq += 1
        heapq.heappush(self._heap, event)
        return event

    def peek(self) -> SimEvent | None:
        return self._heap[0] if self._heap else None

    def pop(self) -> SimEvent:
        return heapq.heappop(self._heap)

    def pop_until(self, time: float) -> Iterator[SimEvent]:
        """Drain every event with event.time <= time, in dispatch order."""
        while self._heap and self._heap[0].time <= time:
            yield heapq.heappop(self._heap)


def derive_stream(master_seed: int, *labels: object) -> np.random.Generator:
    """Independent generator for a named purpose under the master seed.

    The label path is hashed so that stream identity depends only on the
    (seed, labels) value, never on creation order.
    """
    key = "|".join([str(master_seed)] + [str(label) for label in labels])
    digest = hashlib.sha512(key.encode("utf-8")).digest()
    entropy = int.from_bytes(digest[:16], "big")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
