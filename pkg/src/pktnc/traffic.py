"""Packetized traffic: traces, cumulative processes, generators, conformance.

The packet convention used throughout the toolkit: a packet counts as
arrived only once its last bit has arrived, and as departed only once its
last bit has been served. Flows are marked point processes (a(n), l(n))
with 1-based contiguous indices per flow; the virtual packet 0 with
a(0) = l(0) = 0 exists only in recursions and is never stored.

Cumulative processes adopt one fixed boundary convention: F(t) sums every
jump at instants <= t (right-inclusive, so the process is right-continuous
and a packet is visible at its own arrival instant), and the explicit left
evaluator F(t-) sums instants < t. Both are exposed because conformance
and service checks need to look at both sides of a jump.
"""

from __future__ import annotations

import bisect
import csv
import io
from dataclasses import dataclass
from fractions import Fraction

from .errors import ParameterError, TraceFormatError
from .minplus import Curve, TokenBucketParams
from .rationals import RationalLike, frac_json, frac_str, to_fraction

_ZERO = Fraction(0)


@dataclass(frozen=True)
class PacketRecord:
    """One packet: flow it belongs to, index within the flow, arrival, length.

    Lengths are positive integers (bits); arrivals are exact rationals.
    Priority 0 is the highest class.
    """

    flow_id: str
    index: int
    arrival: Fraction
    length: int
    priority: int = 0

    def __post_init__(self):
        if not isinstance(self.index, int) or self.index < 1:
            raise ParameterError("packet index must be a positive integer")
        if not isinstance(self.length, int) or self.length < 1:
            raise ParameterError("packet length must be a positive integer")
        if not isinstance(self.priority, int) or self.priority < 0:
            raise ParameterError("priority must be a nonnegative integer (0 = highest)")
        object.__setattr__(self, "arrival", to_fraction(self.arrival, "arrival"))
        if self.arrival < 0:
            raise ParameterError("arrival times must be >= 0")


@dataclass(frozen=True)
class PacketTrace:
    """An ordered collection of packets, possibly spanning several flows."""

    records: tuple[PacketRecord, ...]

    def __init__(self, records):
        object.__setattr__(self, "records", tuple(records))
        per_flow: dict[str, list[PacketRecord]] = {}
        for rec in self.records:
            per_flow.setdefault(rec.flow_id, []).append(rec)
        for flow_id, recs in per_flow.items():
            for pos, rec in enumerate(recs, start=1):
                if rec.index != pos:
                    raise ParameterError(
                        f"flow {flow_id!r}: packet indices must run 1, 2, ... "
                        f"in order (saw {rec.index} at position {pos})"
                    )
            for prev, rec in zip(recs, recs[1:]):
                if rec.arrival < prev.arrival:
                    raise ParameterError(
                        f"flow {flow_id!r}: arrivals must be nondecreasing"
                    )
                if rec.priority != prev.priority:
                    raise ParameterError(
                        f"flow {flow_id!r}: a flow must keep one priority"
                    )

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def total_bits(self) -> int:
        return sum(r.length for r in self.records)

    @property
    def max_length(self) -> int:
        """Largest packet length in the trace, 0 when empty."""
        return max((r.length for r in self.records), default=0)

    @property
    def priorities(self) -> tuple[int, ...]:
        return tuple(sorted({r.priority for r in self.records}))

    def in_arrival_order(self) -> tuple[PacketRecord, ...]:
        """Records sorted by arrival time, trace order breaking ties."""
        return tuple(sorted(self.records, key=lambda r: r.arrival))

    def by_priority(self, priority: int) -> "PacketTrace":
        return PacketTrace([r for r in self.records if r.priority == priority])

    def merge(self, other: "PacketTrace") -> "PacketTrace":
        mine = {r.flow_id for r in self.records}
        theirs = {r.flow_id for r in other.records}
        clash = mine & theirs
        if clash:
            raise ParameterError(f"flow ids appear in both traces: {sorted(clash)}")
        return PacketTrace(self.records + other.records)


@dataclass(frozen=True)
class CumulativeProcess:
    """Right-continuous step function built from (instant, amount) jumps.

    value(t) includes every jump at instants <= t; left(t) stops strictly
    before t, so value(0-) is 0 by convention even when a jump sits at 0.
    """

    times: tuple[Fraction, ...]
    totals: tuple[Fraction, ...]

    def __init__(self, events):
        merged: dict[Fraction, Fraction] = {}
        for t, amount in events:
            t = to_fraction(t, "instant")
            amount = to_fraction(amount, "amount")
            if t < 0:
                raise ParameterError("jump instants must be >= 0")
            if amount < 0:
                raise ParameterError("jump amounts must be >= 0")
            if amount == 0:
                continue
            merged[t] = merged.get(t, _ZERO) + amount
        times = sorted(merged)
        totals = []
        running = _ZERO
        for t in times:
            running += merged[t]
            totals.append(running)
        object.__setattr__(self, "times", tuple(times))
        object.__setattr__(self, "totals", tuple(totals))

    def value(self, t: RationalLike) -> Fraction:
        """F(t): all jumps at instants <= t."""
        t = to_fraction(t, "t")
        if t < 0:
            raise ParameterError("cumulative processes are defined on t >= 0")
        idx = bisect.bisect_right(self.times, t) - 1
        return self.totals[idx] if idx >= 0 else _ZERO

    def left(self, t: RationalLike) -> Fraction:
        """F(t-): all jumps strictly before t; 0 at t = 0."""
        t = to_fraction(t, "t")
        if t < 0:
            raise ParameterError("cumulative processes are defined on t >= 0")
        idx = bisect.bisect_left(self.times, t) - 1
        return self.totals[idx] if idx >= 0 else _ZERO

    def window(self, s: RationalLike, t: RationalLike) -> Fraction:
        """F(t) - F(s): the jumps inside the half-open interval (s, t]."""
        s = to_fraction(s, "s")
        t = to_fraction(t, "t")
        if s > t:
            raise ParameterError("window needs s <= t")
        return self.value(t) - self.value(s)

    @property
    def total(self) -> Fraction:
        return self.totals[-1] if self.totals else _ZERO

    @property
    def jump_times(self) -> tuple[Fraction, ...]:
        return self.times

    def first_reach(self, level: Fraction) -> Fraction | None:
        """Earliest instant at which F(t) >= level, None if never."""
        if level <= 0:
            return _ZERO
        idx = bisect.bisect_left(self.totals, level)
        if idx == len(self.totals):
            return None
        return self.times[idx]


def cumulative_arrivals(trace: PacketTrace) -> CumulativeProcess:
    """A(t) of a trace: jump of l(n) at each a(n)."""
    return CumulativeProcess((r.arrival, Fraction(r.length)) for r in trace)


# -- flow builders ----------------------------------------------------------


def periodic_flow(
    tau: RationalLike,
    length: int,
    sigma_first: int,
    start: RationalLike = 0,
    count: int = 1,
    flow_id: str = "periodic",
    priority: int = 0,
) -> PacketTrace:
    """Periodic flow whose first packet carries the whole burst allowance.

    Packet 1 has length sigma_first and arrives at `start`; packets
    2..count have length `length` and arrive at start + (n - 1) * tau.
    Conformant to the token bucket (length / tau, sigma_first) by
    construction, with sigma_first > length required so that the first
    packet is the long one.
    """
    tau = to_fraction(tau, "tau")
    start = to_fraction(start, "start")
    if tau <= 0:
        raise ParameterError("period tau must be > 0")
    if not isinstance(length, int) or length < 1:
        raise ParameterError("packet length must be a positive integer")
    if not isinstance(sigma_first, int) or sigma_first <= length:
        raise ParameterError("the first packet must be strictly longer: sigma_first > length")
    if count < 1:
        raise ParameterError("count must be >= 1")
    records = [PacketRecord(flow_id, 1, start, sigma_first, priority)]
    for n in range(2, count + 1):
        records.append(PacketRecord(flow_id, n, start + (n - 1) * tau, length, priority))
    return PacketTrace(records)


def constant_rate_flow(
    tau: RationalLike,
    length: int,
    start: RationalLike = 0,
    count: int = 1,
    flow_id: str = "uniform",
    priority: int = 0,
) -> PacketTrace:
    """Evenly spaced packets of one length; packet n arrives at start + (n-1)*tau."""
    tau = to_fraction(tau, "tau")
    start = to_fraction(start, "start")
    if tau <= 0:
        raise ParameterError("period tau must be > 0")
    if not isinstance(length, int) or length < 1:
        raise ParameterError("packet length must be a positive integer")
    if count < 1:
        raise ParameterError("count must be >= 1")
    return PacketTrace(
        PacketRecord(flow_id, n, start + (n - 1) * tau, length, priority)
        for n in range(1, count + 1)
    )


class SplitMix64:
    """Counter-style 64-bit generator (splitmix64), documented so a port in
    any language reproduces the same draws from the same seed.

    state_{k+1} = state_k + 0x9E3779B97F4A7C15 (mod 2^64); the output is
    state xor-shift-multiplied twice (constants below). Range draws use
    plain modulo, whose bias is irrelevant for validation traffic.
    """

    _MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self._state = seed & self._MASK

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & self._MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self._MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self._MASK
        return z ^ (z >> 31)

    def next_int(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], both inclusive."""
        if hi < lo:
            raise ParameterError("empty range")
        return lo + self.next_u64() % (hi - lo + 1)


def random_conformant_flow(
    params: TokenBucketParams,
    l_min: int,
    l_max: int,
    horizon: RationalLike,
    seed: int,
    flow_id: str = "rand",
    priority: int = 0,
) -> PacketTrace:
    """Random trace that conforms to the token bucket (rho, sigma) by construction.

    A bucket starts full at sigma and refills at rho. For each packet a
    length is drawn uniformly from [l_min, l_max] and a random idle gap in
    eighths of a second is added; if the bucket cannot cover the length
    yet, the arrival is pushed to the earliest conformant instant, which
    exercises exact-equality windows in conformance checks. Deterministic
    for a given seed (see SplitMix64). With rho = 0 the flow stops once
    the bucket is spent.
    """
    horizon = to_fraction(horizon, "horizon")
    if horizon <= 0:
        raise ParameterError("horizon must be > 0")
    if not isinstance(l_min, int) or not isinstance(l_max, int):
        raise ParameterError("length bounds must be integers")
    if l_min < 1 or l_max < l_min:
        raise ParameterError("need 1 <= l_min <= l_max")
    if Fraction(l_max) > params.sigma:
        raise ParameterError("l_max must not exceed the burst sigma, "
                             "otherwise no conformant arrival exists")
    rng = SplitMix64(seed)
    records = []
    now = _ZERO
    level = params.sigma
    index = 1
    while True:
        length = rng.next_int(l_min, l_max)
        gap = Fraction(rng.next_int(0, 40), 8)
        arrive = now + gap
        level = min(params.sigma, level + params.rho * (arrive - now))
        if level < length:
            if params.rho == 0:
                break
            wait = (Fraction(length) - level) / params.rho
            arrive += wait
            level = Fraction(length)
        if arrive > horizon:
            break
        records.append(PacketRecord(flow_id, index, arrive, length, priority))
        level -= length
        now = arrive
        index += 1
    return PacketTrace(records)


# -- conformance ------------------------------------------------------------


@dataclass(frozen=True)
class ArrivalViolation:
    """A window of packets that overflows the arrival curve.

    Packets first..last (1-based positions in arrival order) carry
    `amount` bits inside [window_start, window_end], which the curve only
    allows `allowance` for.
    """

    first: int
    last: int
    window_start: Fraction
    window_end: Fraction
    amount: Fraction
    allowance: Fraction

    def __post_init__(self):
        if not self.amount > self.allowance:
            raise ParameterError("not a violation: amount must exceed allowance")

    def to_json(self) -> dict:
        return {
            "first": self.first,
            "last": self.last,
            "window_start": frac_json(self.window_start),
            "window_end": frac_json(self.window_end),
            "amount": frac_json(self.amount),
            "allowance": frac_json(self.allowance),
        }


def check_arrival_curve(trace: PacketTrace, alpha: Curve) -> ArrivalViolation | None:
    """Test every closed packet window against the arrival curve.

    The trace conforms to alpha iff for all pairs i <= j (in arrival
    order) the bits of packets i..j fit into alpha evaluated at the
    window width a(j) - a(i). Zero-width windows count: simultaneous
    arrivals must fit into alpha(0). Requires alpha continuous except
    possibly at 0, which makes this pairwise test equivalent to the
    sliding-window definition. Returns the first violating pair in
    (i, j) order, or None.
    """
    if alpha.has_interior_jump():
        raise ParameterError("arrival curves must be continuous except at 0")
    ordered = trace.in_arrival_order()
    prefix = [_ZERO]
    for rec in ordered:
        prefix.append(prefix[-1] + rec.length)
    for i in range(1, len(ordered) + 1):
        for j in range(i, len(ordered) + 1):
            amount = prefix[j] - prefix[i - 1]
            width = ordered[j - 1].arrival - ordered[i - 1].arrival
            allowance = alpha.value(width)
            if amount > allowance:
                return ArrivalViolation(
                    first=i,
                    last=j,
                    window_start=ordered[i - 1].arrival,
                    window_end=ordered[j - 1].arrival,
                    amount=amount,
                    allowance=allowance,
                )
    return None


# -- CSV input/output -------------------------------------------------------

_TRACE_HEADER = ["flow_id", "priority", "arrival", "length"]


def write_trace_csv(trace: PacketTrace, path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_TRACE_HEADER)
        for rec in trace:
            writer.writerow([rec.flow_id, rec.priority, frac_str(rec.arrival), rec.length])


def read_trace_csv(source) -> PacketTrace:
    """Parse a trace CSV; `source` is a path or an open text stream.

    Arrival times accept exact fractions ('3/2') or decimals ('1.5'),
    both converted exactly. Errors carry the 1-based line number.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="") as handle:
            return _parse_trace(handle)
    return _parse_trace(source)


def _parse_trace(handle) -> PacketTrace:
    reader = csv.reader(handle)
    try:
        header = next(reader)
    except StopIteration:
        raise TraceFormatError("empty file, expected a header row", 1) from None
    if [h.strip() for h in header] != _TRACE_HEADER:
        raise TraceFormatError(
            f"expected header {','.join(_TRACE_HEADER)!r}, got {','.join(header)!r}", 1
        )
    counters: dict[str, int] = {}
    records = []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 4:
            raise TraceFormatError(f"expected 4 fields, got {len(row)}", line_no)
        flow_id, priority_s, arrival_s, length_s = (cell.strip() for cell in row)
        try:
            priority = int(priority_s)
        except ValueError:
            raise TraceFormatError(f"priority must be an integer, got {priority_s!r}",
                                   line_no) from None
        try:
            arrival = Fraction(arrival_s)
        except (ValueError, ZeroDivisionError):
            raise TraceFormatError(f"arrival must be a rational, got {arrival_s!r}",
                                   line_no) from None
        try:
            length = int(length_s)
        except ValueError:
            raise TraceFormatError(f"length must be an integer, got {length_s!r}",
                                   line_no) from None
        if length < 1:
            raise TraceFormatError(f"length must be positive, got {length}", line_no)
        counters[flow_id] = counters.get(flow_id, 0) + 1
        try:
            records.append(PacketRecord(flow_id, counters[flow_id], arrival, length, priority))
        except ParameterError as exc:
            raise TraceFormatError(str(exc), line_no) from None
    try:
        return PacketTrace(records)
    except ParameterError as exc:
        raise TraceFormatError(str(exc)) from None


def trace_to_csv_text(trace: PacketTrace) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(_TRACE_HEADER)
    for rec in trace:
        writer.writerow([rec.flow_id, rec.priority, frac_str(rec.arrival), rec.length])
    return buffer.getvalue()
