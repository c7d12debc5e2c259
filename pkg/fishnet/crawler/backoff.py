"""
Per-host politeness: adaptive delay between consecutive requests.

The base delay is twice the last response time, clamped to [min, max]. A 429
or any 5xx doubles the previous delay instead.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

logger = logging.getLogger(__name__)

MIN_DELAY = 0.05
MAX_DELAY = 10.0
RESPONSE_FACTOR = 2.0


@dataclass
class HostState:
    last_delay: float | None = None
    last_response_time: float | None = None
    last_status: int | None = None


def is_throttle_status(status: int) -> bool:
    return status == 429 or 500 <= status <= 599


def next_fetch_delay(
    state: HostState,
    min_delay: float = MIN_DELAY,
    max_delay: float = MAX_DELAY,
    factor: float = RESPONSE_FACTOR,
) -> float:
    if state.last_status is None or state.last_response_time is None:
        return min_delay
    if is_throttle_status(state.last_status):
        previous = state.last_delay if state.last_delay is not None else min_delay
        return min(2 * previous, max_delay)
    return min(max(factor * state.last_response_time, min_delay), max_delay)


@dataclass
class HostPacer:
    """Sequential pacing for one host. The clock and sleep are injectable for tests."""

    min_delay: float = MIN_DELAY
    max_delay: float = MAX_DELAY
    clock: Callable[[], float] = time.monotonic
    sleep: Callable[[float], None] = time.sleep
    state: HostState = field(default_factory=HostState)
    ready_at: float = 0.0
    delays: list[float] = field(default_factory=list)

    def wait(self) -> None:
        remaining = self.ready_at - self.clock()
        if remaining > 0:
            self.sleep(remaining)

    def record(self, response_time: float, status: int) -> float:
        self.state.last_response_time = response_time
        self.state.last_status = status
        delay = next_fetch_delay(self.state, self.min_delay, self.max_delay)
        self.state.last_delay = delay
        self.ready_at = self.clock() + delay
        self.delays.append(delay)
        if is_throttle_status(status):
            logger.info(f"Backing off to {delay:.3f}s after status {status}")
        return delay
