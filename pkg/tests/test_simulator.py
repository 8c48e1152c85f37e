"""Event simulators: FIFO, static priority, tandem, virtual delay.

The FIFO recursion d(n) = max(a(n), d(n-1)) + l(n)/c is simple enough to
check by hand on small traces; the random-trace tests then pin the
cross-discipline identities (one class under SP behaves exactly like FIFO,
per-packet delays match the virtual-delay functional, and so on).
"""

from fractions import Fraction as F

import pytest

from pktnc import (
    InstabilityError,
    PacketRecord,
    PacketTrace,
    ParameterError,
    SplitMix64,
    TokenBucketParams,
    constant_rate_flow,
    cumulative_arrivals,
    max_virtual_delay,
    periodic_flow,
    random_conformant_flow,
    simulate_cbr,
    simulate_strict_priority,
    simulate_tandem,
    virtual_delay,
)


def single_packet_trace(length=2, at=F(0)):
    return PacketTrace([PacketRecord("f", 1, at, length)])


class TestCbr:
    def test_single_packet(self):
        res = simulate_cbr(single_packet_trace(), 1)
        assert [d.departure for d in res.departures.records] == [2]
        assert res.max_delay == 2
        assert res.max_backlog == 2

    def test_periodic_hand_computed(self):
        res = simulate_cbr(periodic_flow(F(3, 2), 1, 2, count=5), 1)
        assert [d.departure for d in res.departures.records] == [
            2, 3, 4, F(11, 2), 7,
        ]
        assert res.max_backlog == 3
        assert res.busy_periods == ((0, 4), (F(9, 2), F(11, 2)), (6, 7))

    def test_work_conservation_within_busy_period(self):
        rng = SplitMix64(11)
        params = TokenBucketParams(F(1), F(6))
        for seed in range(5):
            trace = random_conformant_flow(params, 1, 5, 40, seed=seed + 1)
            res = simulate_cbr(trace, F(3, 2))
            recs = res.departures.records
            for prev, cur in zip(recs, recs[1:]):
                service = F(cur.packet.length, 1) / F(3, 2)
                if cur.packet.arrival <= prev.departure:
                    assert cur.departure == prev.departure + service
                else:
                    assert cur.departure == cur.packet.arrival + service
        del rng

    def test_output_counts_whole_packets_only(self):
        res = simulate_cbr(single_packet_trace(), 1)
        assert res.output.value(F(3, 2)) == 0
        assert res.output.value(2) == 2
        assert res.output.left(2) == 0

    def test_conservation(self):
        trace = periodic_flow(F(3, 2), 1, 2, count=5)
        res = simulate_cbr(trace, 1)
        assert res.output.total == trace.total_bits

    def test_rate_must_be_positive(self):
        with pytest.raises(ParameterError):
            simulate_cbr(single_packet_trace(), 0)

    def test_empty_trace(self):
        res = simulate_cbr(PacketTrace([]), 1)
        assert res.max_delay == 0
        assert res.busy_periods == ()


class TestStrictPriority:
    def test_low_packet_blocks_high(self):
        lo = PacketTrace([PacketRecord("lo", 1, F(0), 10, 1)])
        hi = PacketTrace([PacketRecord("hi", 1, F(1), 2, 0)])
        res = simulate_strict_priority(lo.merge(hi), 1)
        by_flow = {d.packet.flow_id: d for d in res.departures.records}
        assert by_flow["lo"].departure == 10
        assert by_flow["hi"].departure == 12
        assert by_flow["hi"].delay == 11
        assert res.per_class[0].max_delay == 11

    def test_high_class_alone_matches_cbr(self):
        trace = periodic_flow(F(3, 2), 1, 2, count=5)
        sp = simulate_strict_priority(trace, 1)
        fifo = simulate_cbr(trace, 1)
        assert sp.departures.records == fifo.departures.records
        assert sp.per_class[0].max_backlog == fifo.max_backlog

    def test_single_class_random_equals_cbr(self):
        params = TokenBucketParams(F(1, 2), F(5))
        for seed in range(1, 21):
            trace = random_conformant_flow(params, 1, 4, 50, seed=seed)
            sp = simulate_strict_priority(trace, 1)
            fifo = simulate_cbr(trace, 1)
            assert sp.departures.records == fifo.departures.records

    def test_high_preempts_queue_not_service(self):
        # once a low packet starts it finishes: non-preemptive service
        lo = PacketTrace([PacketRecord("lo", k, F(3 * (k - 1)), 3, 1)
                          for k in (1, 2, 3)])
        hi = PacketTrace([PacketRecord("hi", 1, F(1, 2), 1, 0)])
        res = simulate_strict_priority(lo.merge(hi), 1)
        by = {(d.packet.flow_id, d.packet.index): d.departure
              for d in res.departures.records}
        assert by[("lo", 1)] == 3
        assert by[("hi", 1)] == 4
        assert by[("lo", 2)] == 7
        recs = sorted(res.departures.records, key=lambda d: d.departure)
        for prev, cur in zip(recs, recs[1:]):
            assert cur.departure - cur.packet.length >= prev.departure

    def test_per_class_totals(self):
        lo = PacketTrace([PacketRecord("lo", 1, F(0), 10, 1)])
        hi = PacketTrace([PacketRecord("hi", 1, F(1), 2, 0)])
        res = simulate_strict_priority(lo.merge(hi), 1)
        assert res.per_class[0].output.total == 2
        assert res.per_class[1].output.total == 10
        assert res.output.total == 12


class TestTandem:
    def test_single_packet_two_hops(self):
        res = simulate_tandem(single_packet_trace(length=1), (1, 1))
        assert [d.departure for d in res.departures.records] == [2]
        assert len(res.hops) == 2

    def test_one_hop_equals_cbr(self):
        trace = periodic_flow(F(3, 2), 1, 2, count=5)
        tandem = simulate_tandem(trace, (1,))
        fifo = simulate_cbr(trace, 1)
        assert tandem.departures.records == fifo.departures.records

    def test_constant_rate_flow_delays(self):
        trace = constant_rate_flow(2, 1, count=4)
        res = simulate_tandem(trace, (1, 1))
        assert [d.delay for d in res.departures.records] == [2, 2, 2, 2]

    def test_hop_outputs_chain(self):
        trace = periodic_flow(F(3, 2), 1, 2, count=4)
        res = simulate_tandem(trace, (1, F(1, 2)))
        first, second = res.hops
        assert second.arrivals.total == first.output.total
        # end to end records keep the original arrival stamps but leave
        # the last hop at the same instants
        assert [d.departure for d in res.departures.records] == \
            [d.departure for d in second.departures.records]
        assert [d.packet.arrival for d in res.departures.records] == \
            [r.arrival for r in trace.in_arrival_order()]

    def test_empty_rates_rejected(self):
        with pytest.raises(ParameterError):
            simulate_tandem(single_packet_trace(), ())


class TestVirtualDelay:
    def test_single_packet_profile(self):
        trace = single_packet_trace()
        res = simulate_cbr(trace, 1)
        arr = cumulative_arrivals(trace)
        assert virtual_delay(arr, res.output, F(0)) == 2
        assert virtual_delay(arr, res.output, F(1, 2)) == F(3, 2)
        assert virtual_delay(arr, res.output, F(17, 4)) == 0

    def test_before_any_arrival(self):
        trace = single_packet_trace(at=F(1))
        res = simulate_cbr(trace, 1)
        arr = cumulative_arrivals(trace)
        assert virtual_delay(arr, res.output, F(1, 2)) == 0

    def test_unbounded_raises(self):
        arr = cumulative_arrivals(single_packet_trace())
        empty = cumulative_arrivals(PacketTrace([]))
        with pytest.raises(InstabilityError):
            virtual_delay(arr, empty, F(0))

    def test_max_matches_hand_value(self):
        trace = single_packet_trace()
        res = simulate_cbr(trace, 1)
        arr = cumulative_arrivals(trace)
        assert max_virtual_delay(arr, res.output) == 2

    def test_max_equals_fifo_packet_delay_on_random_traces(self):
        params = TokenBucketParams(F(2, 3), F(5))
        for seed in range(1, 21):
            trace = random_conformant_flow(params, 1, 5, 40, seed=seed)
            if not trace.records:
                continue
            res = simulate_cbr(trace, 1)
            arr = cumulative_arrivals(trace)
            assert max_virtual_delay(arr, res.output) == res.max_delay
