"""Exact packet-level simulation of work-conserving servers.

Times are rational throughout, so departure instants, backlogs and delays
are exact. The servers transmit packets one at a time at a constant rate c
and never idle while work is queued; a packet departs when its last bit
does.

FIFO constant-rate link: d(n) = max(a(n), d(n-1)) + l(n) / c with
d(0) = 0, packets taken in arrival order (trace order breaking ties).

Strict priority: non-preemptive, one FIFO queue per class, class 0
highest. The server picks a new packet at service completions and at
arrivals into an idle system; arrivals at exactly the decision instant
are enqueued before the pick, and a transmission once started always
completes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .checker import find_backlogged_periods
from .errors import InstabilityError, ParameterError
from .rationals import RationalLike, frac_str, to_fraction
from .traffic import CumulativeProcess, PacketRecord, PacketTrace, cumulative_arrivals

_ZERO = Fraction(0)


@dataclass(frozen=True)
class ServerConfig:
    """A single work-conserving server: rate plus scheduling discipline."""

    rate: Fraction
    discipline: str = "fifo"  # "fifo" | "strict_priority"

    def __init__(self, rate: RationalLike, discipline: str = "fifo"):
        object.__setattr__(self, "rate", to_fraction(rate, "rate"))
        object.__setattr__(self, "discipline", discipline)
        if self.rate <= 0:
            raise ParameterError("server rate must be > 0")
        if discipline not in ("fifo", "strict_priority"):
            raise ParameterError("discipline must be 'fifo' or 'strict_priority'")


@dataclass(frozen=True)
class DepartureRecord:
    """A packet paired with its departure instant (last bit served)."""

    packet: PacketRecord
    departure: Fraction

    @property
    def delay(self) -> Fraction:
        return self.departure - self.packet.arrival


@dataclass(frozen=True)
class DepartureTrace:
    """Departures in service order; FIFO per flow, nondecreasing instants."""

    records: tuple[DepartureRecord, ...]

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def max_delay(self) -> Fraction:
        return max((r.delay for r in self.records), default=_ZERO)

    def by_priority(self, priority: int) -> "DepartureTrace":
        return DepartureTrace(
            tuple(r for r in self.records if r.packet.priority == priority)
        )

    def departure_of(self, packet: PacketRecord) -> Fraction:
        for rec in self.records:
            if rec.packet == packet:
                return rec.departure
        raise ParameterError("packet not present in the departure trace")

    def as_arrival_trace(self) -> PacketTrace:
        """Reinterpret departures as the arrival trace of the next hop.

        Under the last-bit convention a packet reaches the next server
        exactly when it fully leaves this one, keeping flow ids, indices,
        lengths and priorities.
        """
        return PacketTrace(
            PacketRecord(r.packet.flow_id, r.packet.index, r.departure,
                         r.packet.length, r.packet.priority)
            for r in self.records
        )

    def cumulative(self) -> CumulativeProcess:
        """A*(t): jump of l(n) at each departure instant."""
        return CumulativeProcess(
            (r.departure, Fraction(r.packet.length)) for r in self.records
        )


@dataclass(frozen=True)
class SimResult:
    """Everything a simulation run yields.

    arrivals and output are the cumulative processes A and A*; the
    backlog B(t) = A(t) - A*(t) is available through `backlog`, its
    supremum (a left-limit supremum, attained just before departures)
    through max_backlog. busy_periods lists the maximal intervals
    (start, end] during which B stays positive. For strict-priority runs
    per_class maps each priority to the same view restricted to that
    class; for tandems hops holds the per-hop results and the top-level
    fields describe the end-to-end system.
    """

    trace: PacketTrace
    departures: DepartureTrace
    arrivals: CumulativeProcess
    output: CumulativeProcess
    max_backlog: Fraction
    max_delay: Fraction
    busy_periods: tuple[tuple[Fraction, Fraction], ...]
    per_class: Mapping[int, "SimResult"] | None = None
    hops: tuple["SimResult", ...] | None = None

    def backlog(self, t: RationalLike) -> Fraction:
        return self.arrivals.value(t) - self.output.value(t)

    def backlog_left(self, t: RationalLike) -> Fraction:
        return self.arrivals.left(t) - self.output.left(t)


def _max_backlog(arrivals: CumulativeProcess, output: CumulativeProcess) -> Fraction:
    best = _ZERO
    for t in sorted(set(arrivals.jump_times) | set(output.jump_times)):
        best = max(best, arrivals.value(t) - output.value(t))
        if t > 0:
            best = max(best, arrivals.left(t) - output.left(t))
    return best


def _result(trace: PacketTrace, departures: DepartureTrace, **extra) -> SimResult:
    arrivals = cumulative_arrivals(trace)
    output = departures.cumulative()
    return SimResult(
        trace=trace,
        departures=departures,
        arrivals=arrivals,
        output=output,
        max_backlog=_max_backlog(arrivals, output),
        max_delay=departures.max_delay,
        busy_periods=find_backlogged_periods(arrivals, output),
        **extra,
    )


def simulate_cbr(trace: PacketTrace, rate: RationalLike) -> SimResult:
    """Serve the whole trace through one FIFO constant-rate link."""
    rate = to_fraction(rate, "rate")
    if rate <= 0:
        raise ParameterError("server rate must be > 0")
    last = _ZERO
    records = []
    for packet in trace.in_arrival_order():
        depart = max(packet.arrival, last) + Fraction(packet.length) / rate
        records.append(DepartureRecord(packet, depart))
        last = depart
    return _result(trace, DepartureTrace(tuple(records)))


def simulate_strict_priority(trace: PacketTrace, rate: RationalLike) -> SimResult:
    """Serve the trace with non-preemptive strict priority between classes.

    Class 0 preempts nobody but is always picked first when the server
    chooses its next packet. The result carries per-class sub-results
    (restricted A, A*, delays, backlog) beside the aggregate.
    """
    rate = to_fraction(rate, "rate")
    if rate <= 0:
        raise ParameterError("server rate must be > 0")
    pending = list(trace.in_arrival_order())
    classes = trace.priorities
    queues: dict[int, list[PacketRecord]] = {p: [] for p in classes}
    heads: dict[int, int] = {p: 0 for p in classes}
    i = 0
    now = _ZERO
    records = []

    def enqueue_until(t: Fraction) -> None:
        nonlocal i
        while i < len(pending) and pending[i].arrival <= t:
            queues[pending[i].priority].append(pending[i])
            i += 1

    while i < len(pending) or any(heads[p] < len(queues[p]) for p in classes):
        enqueue_until(now)
        chosen = None
        for p in classes:
            if heads[p] < len(queues[p]):
                chosen = queues[p][heads[p]]
                heads[p] += 1
                break
        if chosen is None:
            now = max(now, pending[i].arrival)
            continue
        now = now + Fraction(chosen.length) / rate
        records.append(DepartureRecord(chosen, now))

    departures = DepartureTrace(tuple(records))
    per_class = {}
    for p in classes:
        sub_trace = trace.by_priority(p)
        sub_departures = departures.by_priority(p)
        per_class[p] = _result(sub_trace, sub_departures)
    return _result(trace, departures, per_class=per_class)


def simulate(trace: PacketTrace, config: ServerConfig) -> SimResult:
    if config.discipline == "fifo":
        return simulate_cbr(trace, config.rate)
    return simulate_strict_priority(trace, config.rate)


def simulate_tandem(trace: PacketTrace, rates) -> SimResult:
    """Feed the trace through FIFO links in series.

    Each hop's departures become the next hop's arrivals (last-bit
    convention). The top-level result is the end-to-end view: departures
    aligned with the original arrivals, so max_delay is the end-to-end
    delay; per-hop results are kept under `hops`.
    """
    rate_list = [to_fraction(r, "rate") for r in rates]
    if not rate_list:
        raise ParameterError("a tandem needs at least one hop")
    hop_results = []
    hop_trace = trace
    for rate in rate_list:
        result = simulate_cbr(hop_trace, rate)
        hop_results.append(result)
        hop_trace = result.departures.as_arrival_trace()
    final = hop_results[-1].departures
    exit_time = {(r.packet.flow_id, r.packet.index): r.departure for r in final}
    end_to_end = DepartureTrace(tuple(
        DepartureRecord(packet, exit_time[(packet.flow_id, packet.index)])
        for packet in trace.in_arrival_order()
    ))
    return _result(trace, end_to_end, hops=tuple(hop_results))


# -- virtual delay ----------------------------------------------------------


def virtual_delay(arrivals: CumulativeProcess, output: CumulativeProcess,
                  t: RationalLike) -> Fraction:
    """D(t) = inf {tau >= 0 : A(t) <= A*(t + tau)}.

    The earliest instant at which the output has caught up with what had
    arrived by t. Raises InstabilityError when the output never reaches
    that level (the simulation did not drain).
    """
    t = to_fraction(t, "t")
    level = arrivals.value(t)
    if level == 0:
        return _ZERO
    reach = output.first_reach(level)
    if reach is None:
        raise InstabilityError(
            f"output never reaches level {frac_str(level)}; virtual delay is unbounded"
        )
    return max(_ZERO, reach - t)


def max_virtual_delay(arrivals: CumulativeProcess,
                      output: CumulativeProcess) -> Fraction:
    """sup_t D(t), attained at arrival instants for step processes.

    Between arrivals A is flat while the catch-up instant stays put, so
    the supremum over all t equals the maximum over jump instants of A.
    For a FIFO server this coincides with the largest per-packet delay.
    """
    best = _ZERO
    for t in arrivals.jump_times:
        best = max(best, virtual_delay(arrivals, output, t))
    return best
