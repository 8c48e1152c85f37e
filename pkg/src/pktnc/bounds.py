"""Performance bounds for token-bucket traffic through packetized servers.

A constant-rate link of rate c that releases a packet only when its last
bit has been served is not the fluid server beta(t) = c * t: during a
backlogged interval no bits appear at the output until a whole packet has
left. The curves here account for that:

* corrected, constant rate:      beta(t) = c * (t - l_max / c)+
* corrected, strict priority:    beta(t) = c * (t - (l_max_hi + l_max_lo) / c)+
  for the highest class, where l_max_lo caps the lower classes' packets
  (non-preemption can strand one such packet ahead of the class)
* fluid (faulty) counterparts:   c * t and c * (t - l_max_lo / c)+,
  kept so their failure is reproducible
* packetizer route: the fluid system followed by a packetizer, which
  leaves the service curve unchanged but adds l_max to output and
  backlog bounds while leaving the fluid delay bound untouched

Every entry of a report is obtained by running the generic three bounds
(output envelope by deconvolution, backlog by vertical deviation, delay
by horizontal deviation) through the min-plus core against the stated
curve; nothing is transcribed as an independent formula, so the report
cannot disagree with the algebra. For token-bucket input (rho, sigma)
with rho <= c the corrected constant-rate entries come out as

    output   rho * t + sigma + rho * l_max / c
    backlog  sigma + rho * l_max / c
    delay    (sigma + l_max) / c

while the packetizer route yields sigma + l_max for backlog and the
smaller sigma / c for delay: tighter output and backlog on the corrected
side, tighter delay on the packetizer side. Both delay bounds are valid;
reports carry both.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InstabilityError, ParameterError
from .minplus import (
    Curve,
    RateLatencyParams,
    TokenBucketParams,
    add_constant,
    convolve,
    curve_json,
    deconvolve,
    horizontal_deviation,
    make_rate_latency,
    make_token_bucket,
    vertical_deviation,
)
from .rationals import RationalLike, frac_json, to_fraction

_ZERO = Fraction(0)


# -- service curves ---------------------------------------------------------


def cbr_corrected_curve(rate: RationalLike, l_max: int) -> Curve:
    """Packet-aware strict service curve of a constant-rate link."""
    rate = to_fraction(rate, "rate")
    _check_rate_and_length(rate, l_max, "l_max")
    return make_rate_latency(RateLatencyParams(rate, Fraction(l_max) / rate))


def faulty_cbr_curve(rate: RationalLike) -> Curve:
    """The fluid curve c * t; not a service curve of a packetized link."""
    rate = to_fraction(rate, "rate")
    if rate <= 0:
        raise ParameterError("rate must be > 0")
    return make_rate_latency(RateLatencyParams(rate, _ZERO))


def sp_corrected_curve(rate: RationalLike, l_max_hi: int, l_max_lo: int) -> Curve:
    """Packet-aware strict service curve of the highest priority class.

    Latency (l_max_hi + l_max_lo) / c: one stranded lower-class packet
    plus the class's own packetization.
    """
    rate = to_fraction(rate, "rate")
    _check_rate_and_length(rate, l_max_hi, "l_max_hi")
    _check_length(l_max_lo, "l_max_lo", allow_zero=True)
    return make_rate_latency(
        RateLatencyParams(rate, Fraction(l_max_hi + l_max_lo) / rate)
    )


def faulty_sp_curve(rate: RationalLike, l_max_lo: int) -> Curve:
    """c * (t - l_max_lo / c)+: accounts for the stranded packet only."""
    rate = to_fraction(rate, "rate")
    if rate <= 0:
        raise ParameterError("rate must be > 0")
    _check_length(l_max_lo, "l_max_lo", allow_zero=True)
    return make_rate_latency(RateLatencyParams(rate, Fraction(l_max_lo) / rate))


def tandem_corrected_curve(rates, l_max: int, l_max_lo: int | None = None) -> Curve:
    """End-to-end curve of corrected links in series, by convolution.

    Rate-latency curves compose in closed form: rate min over hops,
    latencies added, here min(c_i) and sum of per-hop packetization
    latencies. Pass l_max_lo to build the strict-priority variant on
    every hop.
    """
    rate_list = [to_fraction(r, "rate") for r in rates]
    if not rate_list:
        raise ParameterError("a tandem needs at least one hop")
    curves = [
        cbr_corrected_curve(r, l_max) if l_max_lo is None
        else sp_corrected_curve(r, l_max, l_max_lo)
        for r in rate_list
    ]
    result = curves[0]
    for curve in curves[1:]:
        result = convolve(result, curve)
    return result


def _check_rate_and_length(rate: Fraction, l_max: int, name: str) -> None:
    if rate <= 0:
        raise ParameterError("rate must be > 0")
    _check_length(l_max, name, allow_zero=True)


def _check_length(value: int, name: str, allow_zero: bool = False) -> None:
    floor = 0 if allow_zero else 1
    if not isinstance(value, int) or value < floor:
        raise ParameterError(f"{name} must be an integer >= {floor}")


# -- reports ----------------------------------------------------------------


@dataclass(frozen=True)
class BoundEntry:
    """Bounds one modeling route yields: curve, output envelope, backlog, delay."""

    service_curve: Curve
    output_curve: Curve
    backlog_bound: Fraction
    delay_bound: Fraction

    def to_json(self) -> dict:
        return {
            "service_curve": curve_json(self.service_curve),
            "output_curve": curve_json(self.output_curve),
            "backlog_bound": frac_json(self.backlog_bound),
            "delay_bound": frac_json(self.delay_bound),
        }


@dataclass(frozen=True)
class BoundsReport:
    """Corrected, fluid-faulty and packetizer bounds side by side.

    comparisons names, per bound, the route giving the tighter valid
    value among corrected and packetizer ("tie" on equality); the faulty
    entry is reported for reproduction only and never competes.
    """

    setting: str
    params: dict
    corrected: BoundEntry
    faulty: BoundEntry
    packetizer: BoundEntry | None
    comparisons: dict

    def to_json(self) -> dict:
        return {
            "setting": self.setting,
            "params": self.params,
            "corrected": self.corrected.to_json(),
            "faulty": self.faulty.to_json(),
            "packetizer": self.packetizer.to_json() if self.packetizer else None,
            "comparisons": self.comparisons,
        }


def three_bounds_entry(alpha: Curve, beta: Curve) -> BoundEntry:
    """The three generic bounds of a flow alpha through a server beta."""
    return BoundEntry(
        service_curve=beta,
        output_curve=deconvolve(alpha, beta),
        backlog_bound=vertical_deviation(alpha, beta),
        delay_bound=horizontal_deviation(alpha, beta),
    )


def _packetizer_entry(alpha: Curve, fluid: Curve, combined: Curve,
                      l_max: int) -> BoundEntry:
    """Fluid system bounds with the packetizer adjustment applied.

    The packetizer leaves the combined service curve as it is, adds one
    maximum packet to the output envelope and the backlog bound, and adds
    nothing to the fluid delay bound (a packet is released the instant
    its last bit clears the fluid system).
    """
    fluid_entry = three_bounds_entry(alpha, fluid)
    return BoundEntry(
        service_curve=combined,
        output_curve=add_constant(fluid_entry.output_curve, l_max),
        backlog_bound=fluid_entry.backlog_bound + l_max,
        delay_bound=fluid_entry.delay_bound,
    )


def _compare(corrected: BoundEntry, packetizer: BoundEntry) -> dict:
    def verdict(a: Fraction, b: Fraction) -> str:
        if a < b:
            return "corrected"
        if b < a:
            return "packetizer"
        return "tie"

    return {
        "output_burst": verdict(corrected.output_curve.value(_ZERO),
                                packetizer.output_curve.value(_ZERO)),
        "backlog": verdict(corrected.backlog_bound, packetizer.backlog_bound),
        "delay": verdict(corrected.delay_bound, packetizer.delay_bound),
    }


def _check_stability(params: TokenBucketParams, rate: Fraction) -> None:
    if params.rho > rate:
        raise InstabilityError(
            "token bucket rate exceeds the service rate; no finite bounds exist"
        )


def cbr_bounds(params: TokenBucketParams, rate: RationalLike, l_max: int) -> BoundsReport:
    """Bounds report for token-bucket traffic through one constant-rate link.

    l_max is the largest packet length the input can carry (the maximum
    over the whole trace when derived from one).
    """
    rate = to_fraction(rate, "rate")
    _check_rate_and_length(rate, l_max, "l_max")
    _check_stability(params, rate)
    alpha = make_token_bucket(params)
    corrected = three_bounds_entry(alpha, cbr_corrected_curve(rate, l_max))
    faulty = three_bounds_entry(alpha, faulty_cbr_curve(rate))
    packetizer = _packetizer_entry(alpha, faulty_cbr_curve(rate),
                                   cbr_corrected_curve(rate, l_max), l_max)
    return BoundsReport(
        setting="cbr",
        params={
            "rho": frac_json(params.rho),
            "sigma": frac_json(params.sigma),
            "rate": frac_json(rate),
            "l_max": l_max,
        },
        corrected=corrected,
        faulty=faulty,
        packetizer=packetizer,
        comparisons=_compare(corrected, packetizer),
    )


def sp_bounds(params: TokenBucketParams, rate: RationalLike,
              l_max_hi: int, l_max_lo: int) -> BoundsReport:
    """Bounds report for the highest class of a strict-priority server."""
    rate = to_fraction(rate, "rate")
    _check_rate_and_length(rate, l_max_hi, "l_max_hi")
    _check_length(l_max_lo, "l_max_lo", allow_zero=True)
    _check_stability(params, rate)
    alpha = make_token_bucket(params)
    corrected = three_bounds_entry(alpha, sp_corrected_curve(rate, l_max_hi, l_max_lo))
    faulty = three_bounds_entry(alpha, faulty_sp_curve(rate, l_max_lo))
    packetizer = _packetizer_entry(alpha, faulty_sp_curve(rate, l_max_lo),
                                   sp_corrected_curve(rate, l_max_hi, l_max_lo),
                                   l_max_hi)
    return BoundsReport(
        setting="sp",
        params={
            "rho": frac_json(params.rho),
            "sigma": frac_json(params.sigma),
            "rate": frac_json(rate),
            "l_max_hi": l_max_hi,
            "l_max_lo": l_max_lo,
        },
        corrected=corrected,
        faulty=faulty,
        packetizer=packetizer,
        comparisons=_compare(corrected, packetizer),
    )


def tandem_bounds(params: TokenBucketParams, rates, l_max: int) -> BoundsReport:
    """End-to-end bounds for constant-rate links in series.

    The packetizer comparison is a single-hop notion, so the report
    carries the corrected and fluid routes only.
    """
    rate_list = [to_fraction(r, "rate") for r in rates]
    if not rate_list:
        raise ParameterError("a tandem needs at least one hop")
    for rate in rate_list:
        _check_rate_and_length(rate, l_max, "l_max")
        _check_stability(params, rate)
    alpha = make_token_bucket(params)
    corrected = three_bounds_entry(alpha, tandem_corrected_curve(rate_list, l_max))
    fluid = faulty_cbr_curve(rate_list[0])
    for rate in rate_list[1:]:
        fluid = convolve(fluid, faulty_cbr_curve(rate))
    faulty = three_bounds_entry(alpha, fluid)
    return BoundsReport(
        setting="tandem",
        params={
            "rho": frac_json(params.rho),
            "sigma": frac_json(params.sigma),
            "rates": [frac_json(r) for r in rate_list],
            "l_max": l_max,
        },
        corrected=corrected,
        faulty=faulty,
        packetizer=None,
        comparisons={},
    )
