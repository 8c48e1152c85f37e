"""Packet-level network calculus toolkit.

Exact min-plus algebra over piecewise-linear curves, packet-granularity
simulation of constant-rate and strict-priority servers, sample-path
checkers for (strict) service curves, and the corrected performance
bounds that account for packetization, next to the fluid curves they
replace and the counterexamples that break them.

All arithmetic is over `fractions.Fraction`; floats are rejected at the
boundary so every reported witness and bound is exact.
"""

from .bounds import (
    BoundEntry,
    BoundsReport,
    cbr_bounds,
    cbr_corrected_curve,
    faulty_cbr_curve,
    faulty_sp_curve,
    sp_bounds,
    sp_corrected_curve,
    tandem_bounds,
    tandem_corrected_curve,
    three_bounds_entry,
)
from .checker import (
    ServiceViolation,
    check_service_curve,
    check_strict_service_curve,
    find_backlogged_periods,
    min_plus_conv_process,
)
from .errors import (
    InstabilityError,
    ParameterError,
    TraceFormatError,
    UnsupportedCurveError,
)
from .minplus import (
    Curve,
    RateLatencyParams,
    Segment,
    TokenBucketParams,
    add_constant,
    convolve,
    convolve_sampled,
    curve_from_text,
    curve_json,
    curve_to_text,
    deconvolve,
    deconvolve_at,
    evaluate,
    evaluate_left,
    horizontal_deviation,
    make_rate_latency,
    make_token_bucket,
    pointwise_le,
    vertical_deviation,
    zero_curve,
)
from .rationals import RationalLike, frac_json, frac_str, to_fraction
from .simulator import (
    DepartureRecord,
    DepartureTrace,
    ServerConfig,
    SimResult,
    max_virtual_delay,
    simulate,
    simulate_cbr,
    simulate_strict_priority,
    simulate_tandem,
    virtual_delay,
)
from .traffic import (
    ArrivalViolation,
    CumulativeProcess,
    PacketRecord,
    PacketTrace,
    SplitMix64,
    check_arrival_curve,
    constant_rate_flow,
    cumulative_arrivals,
    periodic_flow,
    random_conformant_flow,
    read_trace_csv,
    trace_to_csv_text,
    write_trace_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ArrivalViolation",
    "BoundEntry",
    "BoundsReport",
    "CumulativeProcess",
    "Curve",
    "DepartureRecord",
    "DepartureTrace",
    "InstabilityError",
    "PacketRecord",
    "PacketTrace",
    "ParameterError",
    "RateLatencyParams",
    "RationalLike",
    "Segment",
    "ServerConfig",
    "ServiceViolation",
    "SimResult",
    "SplitMix64",
    "TokenBucketParams",
    "TraceFormatError",
    "UnsupportedCurveError",
    "add_constant",
    "cbr_bounds",
    "cbr_corrected_curve",
    "check_arrival_curve",
    "check_service_curve",
    "check_strict_service_curve",
    "constant_rate_flow",
    "convolve",
    "convolve_sampled",
    "cumulative_arrivals",
    "curve_from_text",
    "curve_json",
    "curve_to_text",
    "deconvolve",
    "deconvolve_at",
    "evaluate",
    "evaluate_left",
    "faulty_cbr_curve",
    "faulty_sp_curve",
    "find_backlogged_periods",
    "frac_json",
    "frac_str",
    "horizontal_deviation",
    "make_rate_latency",
    "make_token_bucket",
    "max_virtual_delay",
    "min_plus_conv_process",
    "periodic_flow",
    "pointwise_le",
    "random_conformant_flow",
    "read_trace_csv",
    "simulate",
    "simulate_cbr",
    "simulate_strict_priority",
    "simulate_tandem",
    "sp_bounds",
    "sp_corrected_curve",
    "tandem_bounds",
    "tandem_corrected_curve",
    "three_bounds_entry",
    "to_fraction",
    "trace_to_csv_text",
    "vertical_deviation",
    "virtual_delay",
    "write_trace_csv",
    "zero_curve",
]
