"""Exact service-curve conformance checks on simulated processes.

Verdicts here are exact, never sampled: both A and A* are step functions
and the candidate curve is piecewise-linear, so every infimum, supremum
and crossing that the definitions quantify over is attained at (or
approached from) a finite set of critical points, all of which are
enumerated with rational arithmetic.

Two properties are checked. The plain service-curve property requires
A*(t) >= (A conv beta)(t) for all t. The strict variant requires
A*(s, t] >= beta(t - s) for every sub-interval (s, t] of every maximal
backlogged period; it implies the plain property, never the other way
round.

The min-plus convolution with the input treats A as its lower envelope:
at every jump instant the infimum may be approached from the left, so
jump instants contribute both their value and their left limit. In
particular a jump at time 0 contributes A(0-) = 0. With a single packet
of length l arriving at a(1) against beta(t) = c * t this yields
(A conv beta)(t) = min {c * (t - a(1)), l}, which is the quantity a
constant-rate server's output must be measured against.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ParameterError
from .minplus import Curve
from .rationals import RationalLike, frac_json, to_fraction
from .traffic import CumulativeProcess

_ZERO = Fraction(0)
_TWO = Fraction(2)


@dataclass(frozen=True)
class ServiceViolation:
    """A witness that a candidate curve is not a (strict) service curve.

    For kind "service" the witness is a single instant `time` with
    required = (A conv beta)(time) exceeding provided = A*(time). For
    kind "strict" the witness is the interval (start, time] inside the
    backlogged period `period`, with required = beta(time - start)
    exceeding provided = A*(start, time]. Inequalities are strict and
    all values exact.
    """

    kind: str
    time: Fraction
    required: Fraction
    provided: Fraction
    start: Fraction | None = None
    period: tuple[Fraction, Fraction] | None = None

    def __post_init__(self):
        if self.kind not in ("service", "strict"):
            raise ParameterError("violation kind must be 'service' or 'strict'")
        if not self.required > self.provided:
            raise ParameterError("not a violation: required must exceed provided")
        if self.kind == "strict" and self.start is None:
            raise ParameterError("strict violations carry the interval start")

    def to_json(self) -> dict:
        data = {
            "kind": self.kind,
            "s": frac_json(self.start) if self.start is not None else None,
            "t": frac_json(self.time),
            "required": frac_json(self.required),
            "provided": frac_json(self.provided),
        }
        if self.period is not None:
            data["period"] = [frac_json(self.period[0]), frac_json(self.period[1])]
        return data


def min_plus_conv_process(arrivals: CumulativeProcess, beta: Curve,
                          t: RationalLike) -> Fraction:
    """(A conv beta)(t) = inf_{0<=s<=t} A(s) + beta(t - s), exact.

    A is a right-continuous step function, so the infimum is attained
    with s at a jump instant (value or left limit, the envelope reading)
    or at s = t. The left limit at a jump sitting at time 0 is 0.
    """
    t = to_fraction(t, "t")
    if t < 0:
        raise ParameterError("the convolution is evaluated at t >= 0")
    best = arrivals.value(t) + beta.value(_ZERO)
    for u in arrivals.jump_times:
        if u > t:
            break
        shifted = beta.value(t - u)
        cand = arrivals.left(u) + shifted
        if cand < best:
            best = cand
        cand = arrivals.value(u) + shifted
        if cand < best:
            best = cand
    return best


def _conv_left_limit(arrivals: CumulativeProcess, beta: Curve, t: Fraction) -> Fraction:
    """lim_{x -> t-} (A conv beta)(x), for t > 0."""
    best = arrivals.left(t) + beta.value(_ZERO)
    for u in arrivals.jump_times:
        if u >= t:
            break
        shifted = beta.value_left(t - u)
        cand = arrivals.left(u) + shifted
        if cand < best:
            best = cand
        cand = arrivals.value(u) + shifted
        if cand < best:
            best = cand
    return best


def _require_drained(arrivals: CumulativeProcess, output: CumulativeProcess) -> None:
    if arrivals.total != output.total:
        raise ParameterError(
            "checks expect a drained simulation: arrival and output totals differ"
        )


def check_service_curve(arrivals: CumulativeProcess, output: CumulativeProcess,
                        beta: Curve) -> ServiceViolation | None:
    """Earliest instant at which A* drops below A conv beta, if any.

    Sweeps the intervals between consecutive event instants: A* is
    constant on each while the required envelope is nondecreasing, so it
    suffices to compare the envelope's left limit at the interval end
    against the plateau, and to locate the exact crossing when it is
    exceeded. The witness instant is exact and recomputed from scratch
    before being reported.
    """
    if not beta.is_f0():
        raise ParameterError("a service curve must satisfy beta(0) = 0")
    _require_drained(arrivals, output)
    events = sorted({_ZERO} | set(arrivals.jump_times) | set(output.jump_times))
    for k, start in enumerate(events):
        if k + 1 == len(events):
            break  # beyond the last event A* = A total >= envelope
        end = events[k + 1]
        plateau = output.value(start)
        if _conv_left_limit(arrivals, beta, end) <= plateau:
            continue
        witness = _locate_crossing(arrivals, beta, plateau, start, end)
        if witness is None:
            continue
        required = min_plus_conv_process(arrivals, beta, witness)
        provided = output.value(witness)
        return ServiceViolation(
            kind="service", time=witness, required=required, provided=provided,
        )
    return None


def _locate_crossing(arrivals: CumulativeProcess, beta: Curve, plateau: Fraction,
                     start: Fraction, end: Fraction) -> Fraction | None:
    """Exact t in [start, end) from which the envelope exceeds the plateau.

    The envelope on this interval is the minimum of the constant term
    A(start) and the jump terms v + beta(t - u). Each jump term stays
    <= plateau up to u + sup {x : beta(x) <= plateau - v}; past the
    largest such bound every term, hence the envelope, exceeds the
    plateau. Returns `start` when that happens before the interval, a
    midpoint between the bound and the interval end otherwise, and None
    when some term never exceeds the plateau (no crossing here; the
    caller only asks after seeing the left limit exceed, so this is a
    guard, not an expected path).
    """
    if arrivals.value(start) <= plateau:
        return None  # the s = t term keeps the envelope down
    bound = None  # latest instant at which some term is still <= plateau
    for u in arrivals.jump_times:
        if u > start:
            break
        for v in (arrivals.left(u), arrivals.value(u)):
            room = plateau - v
            if room < 0:
                continue  # this term exceeds the plateau everywhere
            x = beta.inverse_sup(room)
            if x is None:
                return None  # term never exceeds: no crossing in this interval
            cand = u + x
            if bound is None or cand > bound:
                bound = cand
    if bound is None or bound < start:
        return start
    if bound >= end:
        return None
    return (bound + end) / _TWO


def find_backlogged_periods(arrivals: CumulativeProcess,
                            output: CumulativeProcess
                            ) -> tuple[tuple[Fraction, Fraction], ...]:
    """Maximal intervals (start, end] on which B(t) = A(t) - A*(t) > 0.

    B is right-continuous and changes only at event instants, so a period
    opens at an arrival into an empty system (B jumps positive, open left
    end: the system was still empty just before) and closes at the
    departure that drains it (closed right end: still backlogged just
    before). Requires a drained simulation.
    """
    _require_drained(arrivals, output)
    events = sorted(set(arrivals.jump_times) | set(output.jump_times))
    periods = []
    open_start = None
    for t in events:
        backlog = arrivals.value(t) - output.value(t)
        if backlog < 0:
            raise ParameterError("output exceeds arrivals: not a causal system")
        if open_start is None and backlog > 0:
            open_start = t
        elif open_start is not None and backlog == 0:
            periods.append((open_start, t))
            open_start = None
    if open_start is not None:
        raise ParameterError("backlog never drains; not a completed simulation")
    return tuple(periods)


def check_strict_service_curve(arrivals: CumulativeProcess,
                               output: CumulativeProcess,
                               beta: Curve) -> ServiceViolation | None:
    """Check A*(s, t] >= beta(t - s) on every backlogged sub-interval.

    Within a period it suffices to let s range over the period start and
    the departure instants (output in (s, t] is unchanged by moving s up
    to the next departure while the requirement only grows), and t over
    the left limits at departures plus the period end (output is
    unchanged up to the next departure while the requirement grows).
    When a left-limit comparison fails, an exact interior witness is
    reported: the midpoint between the last instant at which beta was
    still covered and the departure the limit leaned on.
    """
    if not beta.is_f0():
        raise ParameterError("a service curve must satisfy beta(0) = 0")
    for period_start, period_end in find_backlogged_periods(arrivals, output):
        departures = [d for d in output.jump_times
                      if period_start < d <= period_end]
        s_candidates = [period_start] + [d for d in departures if d < period_end]
        for s in s_candidates:
            base = output.value(s)
            for d in departures:
                if d <= s:
                    continue
                provided = output.left(d) - base
                required_limit = beta.value_left(d - s)
                if required_limit > provided:
                    witness = _strict_witness(beta, s, d, provided)
                    return ServiceViolation(
                        kind="strict",
                        start=s,
                        time=witness,
                        required=beta.value(witness - s),
                        provided=output.value(witness) - base,
                        period=(period_start, period_end),
                    )
            provided = output.value(period_end) - base
            required = beta.value(period_end - s)
            if required > provided:
                return ServiceViolation(
                    kind="strict",
                    start=s,
                    time=period_end,
                    required=required,
                    provided=provided,
                    period=(period_start, period_end),
                )
    return None


def _strict_witness(beta: Curve, s: Fraction, d: Fraction,
                    provided: Fraction) -> Fraction:
    """Exact t in (s, d) with beta(t - s) > provided.

    beta's left limit at d - s exceeds `provided`, so the last width
    still covered, sup {x : beta(x) <= provided}, lies strictly below
    d - s; halfway between the two the requirement is strictly above
    while the output window can only have shrunk.
    """
    covered = beta.inverse_sup(provided)
    if covered is None or covered >= d - s:
        raise ParameterError("no crossing below the left limit; not a violation")
    return s + (covered + (d - s)) / _TWO
