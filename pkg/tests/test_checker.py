"""Service-curve conformance checks against simulated departures.

Each canned scenario is small enough that the expected witness can be read
off the cumulative curves directly; the randomized blocks then confirm the
checker accepts everything a correct server produces and that its witnesses
are sound when recomputed from scratch.
"""

from fractions import Fraction as F

import pytest

from pktnc import (
    PacketRecord,
    PacketTrace,
    RateLatencyParams,
    TokenBucketParams,
    check_service_curve,
    check_strict_service_curve,
    cumulative_arrivals,
    faulty_cbr_curve,
    faulty_sp_curve,
    cbr_corrected_curve,
    sp_corrected_curve,
    find_backlogged_periods,
    make_rate_latency,
    min_plus_conv_process,
    periodic_flow,
    random_conformant_flow,
    simulate_cbr,
    simulate_strict_priority,
)


def rl(rate, latency):
    return make_rate_latency(RateLatencyParams(F(rate), F(latency)))


def single_packet_sim(length=2, rate=1):
    trace = PacketTrace([PacketRecord("f", 1, F(0), length)])
    res = simulate_cbr(trace, rate)
    return cumulative_arrivals(trace), res.output


class TestConvolutionLowerBound:
    def test_single_packet_against_line(self):
        arrivals, _ = single_packet_sim()
        line = rl(1, 0)
        assert min_plus_conv_process(arrivals, line, F(1)) == 1
        assert min_plus_conv_process(arrivals, line, F(1, 2)) == F(1, 2)
        assert min_plus_conv_process(arrivals, line, F(3)) == 2

    def test_zero_curve_gives_zero(self):
        arrivals, _ = single_packet_sim()
        from pktnc.minplus import zero_curve
        assert min_plus_conv_process(arrivals, zero_curve(), F(5)) == 0

    def test_latency_defers_requirement(self):
        arrivals = cumulative_arrivals(periodic_flow(F(3, 2), 1, 2, count=5))
        assert min_plus_conv_process(arrivals, rl(1, 2), F(2)) == 0
        assert min_plus_conv_process(arrivals, rl(1, 2), F(3)) == 1


class TestPlainCheck:
    def test_single_packet_violates_full_rate_line(self):
        arrivals, output = single_packet_sim()
        hit = check_service_curve(arrivals, output, rl(1, 0))
        assert hit is not None
        assert hit.kind == "service"
        assert hit.time == 1
        assert hit.required == 1
        assert hit.provided == 0

    def test_corrected_latency_passes(self):
        arrivals, output = single_packet_sim()
        assert check_service_curve(arrivals, output, rl(1, 2)) is None

    def test_empty_system_passes(self):
        empty = cumulative_arrivals(PacketTrace([]))
        assert check_service_curve(empty, empty, rl(1, 0)) is None

    def test_periodic_trace_full_rate_line_fails(self):
        trace = periodic_flow(F(3, 2), 1, 2, count=5)
        res = simulate_cbr(trace, 1)
        arrivals = cumulative_arrivals(trace)
        hit = check_service_curve(arrivals, res.output, rl(1, 0))
        assert hit is not None
        assert hit.required > hit.provided


class TestBackloggedPeriods:
    def test_single_packet(self):
        arrivals, output = single_packet_sim()
        assert find_backlogged_periods(arrivals, output) == ((0, 2),)

    def test_empty(self):
        empty = cumulative_arrivals(PacketTrace([]))
        assert find_backlogged_periods(empty, empty) == ()

    def test_periodic_three_packets_fuse(self):
        trace = periodic_flow(F(3, 2), 1, 2, count=3)
        res = simulate_cbr(trace, 1)
        arrivals = cumulative_arrivals(trace)
        assert find_backlogged_periods(arrivals, res.output) == ((0, 4),)

    def test_matches_simulator_busy_periods(self):
        trace = periodic_flow(F(3, 2), 1, 2, count=5)
        res = simulate_cbr(trace, 1)
        arrivals = cumulative_arrivals(trace)
        assert find_backlogged_periods(arrivals, res.output) == \
            res.busy_periods


class TestStrictCheck:
    def test_single_packet_violates_full_rate_line(self):
        arrivals, output = single_packet_sim()
        hit = check_strict_service_curve(arrivals, output, rl(1, 0))
        assert hit is not None
        assert hit.kind == "strict"
        assert hit.period == (0, 2)
        assert hit.required > hit.provided

    def test_corrected_latency_passes(self):
        arrivals, output = single_packet_sim()
        assert check_strict_service_curve(arrivals, output, rl(1, 2)) is None

    def test_priority_residual_naive_curve_fails(self):
        hi = PacketTrace([PacketRecord("hi", 1, F(0), 2, 0)])
        res = simulate_strict_priority(hi, 1)
        arrivals = cumulative_arrivals(hi)
        output = res.per_class[0].output
        naive = faulty_sp_curve(1, 1)
        hit = check_strict_service_curve(arrivals, output, naive)
        assert hit is not None
        assert hit.period[0] == 0
        corrected = sp_corrected_curve(1, 2, 1)
        assert check_strict_service_curve(arrivals, output, corrected) is None

    def test_strict_pass_implies_plain_pass(self):
        params = TokenBucketParams(F(1, 2), F(4))
        beta = cbr_corrected_curve(1, 4)
        for seed in range(1, 16):
            trace = random_conformant_flow(params, 1, 4, 40, seed=seed)
            res = simulate_cbr(trace, 1)
            arrivals = cumulative_arrivals(trace)
            assert check_strict_service_curve(
                arrivals, res.output, beta) is None
            assert check_service_curve(arrivals, res.output, beta) is None


class TestCorrectedCurvesOnRandomTraces:
    def test_cbr_corrected_passes_everywhere(self):
        params = TokenBucketParams(F(2, 3), F(5))
        beta = cbr_corrected_curve(1, 5)
        for seed in range(1, 26):
            trace = random_conformant_flow(params, 1, 5, 40, seed=seed)
            res = simulate_cbr(trace, 1)
            arrivals = cumulative_arrivals(trace)
            assert check_service_curve(arrivals, res.output, beta) is None
            assert check_strict_service_curve(
                arrivals, res.output, beta) is None

    def test_faulty_curve_eventually_caught(self):
        # a lone maximum-length packet defeats the zero-latency curve
        trace = PacketTrace([PacketRecord("f", 1, F(0), 5)])
        res = simulate_cbr(trace, 1)
        arrivals = cumulative_arrivals(trace)
        assert check_service_curve(
            arrivals, res.output, faulty_cbr_curve(1)) is not None


class TestWitnessSoundness:
    @staticmethod
    def recompute_plain(arrivals, output, beta, t):
        best = None
        points = sorted({s for s in arrivals.jump_times if s <= t} | {F(0), t})
        for s in points:
            cand = arrivals.value(s) + beta.value(t - s)
            best = cand if best is None else min(best, cand)
            cand = arrivals.left(s) + beta.value(t - s)
            best = min(best, cand)
        return best

    def test_plain_witness_recomputed(self):
        arrivals, output = single_packet_sim()
        hit = check_service_curve(arrivals, output, rl(1, 0))
        required = self.recompute_plain(arrivals, output, rl(1, 0), hit.time)
        assert hit.required == required
        assert hit.provided == output.value(hit.time)
        assert hit.provided < required

    def test_strict_witness_recomputed(self):
        arrivals, output = single_packet_sim()
        beta = rl(1, 0)
        hit = check_strict_service_curve(arrivals, output, beta)
        s, _ = hit.period
        assert hit.provided == output.value(hit.time) - output.value(s)
        assert hit.required == beta.value(hit.time - s)
        assert hit.provided < hit.required

    def test_monotonicity_of_guarantees(self):
        # if the stronger curve passes, any pointwise smaller one passes
        from pktnc.minplus import pointwise_le
        params = TokenBucketParams(F(1, 2), F(3))
        weak = rl(1, 3)
        strong = cbr_corrected_curve(1, 3)
        assert pointwise_le(weak, strong)
        for seed in range(1, 11):
            trace = random_conformant_flow(params, 1, 3, 30, seed=seed)
            res = simulate_cbr(trace, 1)
            arrivals = cumulative_arrivals(trace)
            if check_service_curve(arrivals, res.output, strong) is None:
                assert check_service_curve(
                    arrivals, res.output, weak) is None

    def test_violation_json_shape(self):
        arrivals, output = single_packet_sim()
        hit = check_service_curve(arrivals, output, rl(1, 0))
        blob = hit.to_json()
        assert blob["kind"] == "service"
        assert blob["t"]["exact"] == "1"
        assert blob["required"]["exact"] == "1"
        assert blob["provided"]["exact"] == "0"
        assert blob["s"] is None
