import pytest

from fishnet.crawler.backoff import MAX_DELAY, MIN_DELAY, HostPacer, HostState, next_fetch_delay


def test_first_request_uses_minimum():
    assert next_fetch_delay(HostState()) == MIN_DELAY


@pytest.mark.parametrize(
    "response_time,expected",
    [(0.001, MIN_DELAY), (0.1, 0.2), (1.0, 2.0), (30.0, MAX_DELAY)],
)
def test_delay_tracks_response_time(response_time, expected):
    state = HostState(last_response_time=response_time, last_status=200)
    assert next_fetch_delay(state) == pytest.approx(expected)


@pytest.mark.parametrize("status", [429, 500, 503])
def test_throttling_doubles_previous_delay(status):
    state = HostState(last_delay=0.4, last_response_time=0.01, last_status=status)
    assert next_fetch_delay(state) == pytest.approx(0.8)
    state.last_delay = 8.0
    assert next_fetch_delay(state) == MAX_DELAY


class FakeClock:
    def __init__(self):
        self.now = 100.0
        self.slept = []

    def __call__(self):
        return self.now

    def sleep(self, seconds):
        self.slept.append(seconds)
        self.now += seconds


def test_pacer_waits_out_the_computed_delay():
    clock = FakeClock()
    pacer = HostPacer(clock=clock, sleep=clock.sleep)
    pacer.wait()
    assert clock.slept == []

    assert pacer.record(0.3, 200) == pytest.approx(0.6)
    clock.now += 0.1
    pacer.wait()
    assert clock.slept == [pytest.approx(0.5)]

    pacer.record(0.01, 503)
    assert pacer.delays == [pytest.approx(0.6), pytest.approx(1.2)]
