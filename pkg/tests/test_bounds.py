"""Closed-form bound reports for the CBR, priority, and tandem settings.

The frozen numbers in TestCbrReport come from working the token-bucket /
rate-latency formulas by hand: with alpha = rho t + sigma and
beta = R (t - T)+ the deconvolution is rho t + sigma + rho T, the backlog
bound is sigma + rho T and the delay bound sigma / R + T. The randomized
sweep at the bottom re-derives every report entry from those formulas
independently of the library code.
"""

import json
from fractions import Fraction as F

import pytest

from pktnc import (
    BoundEntry,
    BoundsReport,
    InstabilityError,
    SplitMix64,
    TokenBucketParams,
    cbr_bounds,
    cbr_corrected_curve,
    faulty_cbr_curve,
    faulty_sp_curve,
    make_token_bucket,
    sp_bounds,
    sp_corrected_curve,
    tandem_bounds,
    tandem_corrected_curve,
)
from pktnc.minplus import Curve, convolve, make_rate_latency
from pktnc import RateLatencyParams


def rl(rate, latency):
    return make_rate_latency(RateLatencyParams(F(rate), F(latency)))


class TestCurveConstructors:
    def test_cbr_corrected_shape(self):
        beta = cbr_corrected_curve(1, 2)
        assert beta == rl(1, 2)
        assert beta.value(2) == 0
        assert beta.value(3) == 1

    def test_zero_length_is_fluid(self):
        assert cbr_corrected_curve(1, 0) == faulty_cbr_curve(1)

    def test_faulty_cbr_is_full_rate_line(self):
        assert faulty_cbr_curve(F(3, 2)) == rl(F(3, 2), 0)

    def test_sp_corrected_combines_both_lengths(self):
        assert sp_corrected_curve(1, 2, 1) == rl(1, 3)
        assert sp_corrected_curve(2, 4, 2) == rl(2, 3)

    def test_sp_without_low_class_reduces_to_cbr(self):
        assert sp_corrected_curve(1, 2, 0) == cbr_corrected_curve(1, 2)

    def test_faulty_sp_ignores_own_length(self):
        assert faulty_sp_curve(1, 1) == rl(1, 1)
        assert faulty_sp_curve(F(5, 2), 0) == faulty_cbr_curve(F(5, 2))

    def test_rates_and_lengths_validated(self):
        from pktnc import ParameterError
        with pytest.raises(ParameterError):
            cbr_corrected_curve(0, 2)
        with pytest.raises(ParameterError):
            cbr_corrected_curve(1, -1)
        # zero lengths are the fluid limit, not an error
        assert sp_corrected_curve(1, 0, 1) == faulty_sp_curve(1, 1)


class TestTandemCurve:
    def test_two_equal_hops(self):
        assert tandem_corrected_curve((1, 1), 1) == rl(1, 2)

    def test_single_hop_matches_cbr(self):
        assert tandem_corrected_curve((F(3, 2),), 2) == \
            cbr_corrected_curve(F(3, 2), 2)

    def test_matches_explicit_convolution(self):
        direct = tandem_corrected_curve((1, 2), 2)
        by_hand = convolve(cbr_corrected_curve(1, 2),
                           cbr_corrected_curve(2, 2))
        assert direct == by_hand == rl(1, 3)
        assert direct.segments == rl(1, 3).segments

    def test_empty_rates_rejected(self):
        from pktnc import ParameterError
        with pytest.raises(ParameterError):
            tandem_corrected_curve((), 1)


class TestCbrReport:
    def setup_method(self):
        self.report = cbr_bounds(TokenBucketParams(F(2, 3), F(2)), 1, 2)

    def test_setting_and_params(self):
        assert self.report.setting == "cbr"
        assert self.report.params["l_max"] == 2
        assert self.report.params["sigma"]["exact"] == "2"

    def test_corrected_entry(self):
        entry = self.report.corrected
        assert entry.service_curve == cbr_corrected_curve(1, 2)
        assert entry.output_curve.value(0) == F(10, 3)
        assert entry.backlog_bound == F(10, 3)
        assert entry.delay_bound == 4

    def test_faulty_entry(self):
        entry = self.report.faulty
        assert entry.output_curve.value(0) == 2
        assert entry.backlog_bound == 2
        assert entry.delay_bound == 2

    def test_packetizer_entry(self):
        entry = self.report.packetizer
        assert entry.output_curve.value(0) == 4
        assert entry.backlog_bound == 4
        assert entry.delay_bound == 2
        assert entry.service_curve == cbr_corrected_curve(1, 2)

    def test_comparisons(self):
        assert self.report.comparisons == {
            "output_burst": "corrected",
            "backlog": "corrected",
            "delay": "packetizer",
        }

    def test_zero_rate_source(self):
        report = cbr_bounds(TokenBucketParams(F(0), F(2)), 1, 2)
        assert report.corrected.backlog_bound == 2
        assert report.corrected.delay_bound == 4
        assert report.packetizer.delay_bound == 2

    def test_instability_raises(self):
        with pytest.raises(InstabilityError):
            cbr_bounds(TokenBucketParams(F(3, 2), F(1)), 1, 1)

    def test_json_serializable(self):
        text = json.dumps(self.report.to_json(), sort_keys=True)
        blob = json.loads(text)
        assert blob["setting"] == "cbr"
        assert blob["corrected"]["delay_bound"]["exact"] == "4"
        assert blob["comparisons"]["delay"] == "packetizer"


class TestSpReport:
    def test_hand_computed_entries(self):
        report = sp_bounds(TokenBucketParams(F(1, 2), F(2)), 1, 2, 1)
        assert report.setting == "sp"
        assert report.corrected.service_curve == sp_corrected_curve(1, 2, 1)
        assert report.corrected.delay_bound == 5
        assert report.corrected.backlog_bound == F(7, 2)
        assert report.faulty.service_curve == faulty_sp_curve(1, 1)
        assert report.faulty.delay_bound == 3

    def test_packetizer_route(self):
        # fluid high-class curve RL(c, l_lo / c), then + l_max_hi
        report = sp_bounds(TokenBucketParams(F(1, 2), F(2)), 1, 2, 1)
        assert report.packetizer.backlog_bound == F(2) + F(1, 2) + F(2)
        assert report.packetizer.delay_bound == 3

    def test_no_low_class_matches_cbr(self):
        sp = sp_bounds(TokenBucketParams(F(1, 2), F(2)), 1, 2, 0)
        cbr = cbr_bounds(TokenBucketParams(F(1, 2), F(2)), 1, 2)
        assert sp.corrected.service_curve == cbr.corrected.service_curve
        assert sp.corrected.delay_bound == cbr.corrected.delay_bound
        assert sp.packetizer.backlog_bound == cbr.packetizer.backlog_bound

    def test_instability_raises(self):
        with pytest.raises(InstabilityError):
            sp_bounds(TokenBucketParams(F(2), F(1)), 1, 2, 1)


class TestTandemReport:
    def test_two_hop_delay(self):
        report = tandem_bounds(TokenBucketParams(F(1), F(1)), (1, 1), 1)
        assert report.setting == "tandem"
        assert report.corrected.service_curve == rl(1, 2)
        assert report.corrected.delay_bound == 3
        assert report.packetizer is None
        assert report.comparisons == {}

    def test_json_omits_packetizer(self):
        report = tandem_bounds(TokenBucketParams(F(1), F(1)), (1, 1), 1)
        blob = report.to_json()
        assert blob["packetizer"] is None


class TestRandomizedClosedForms:
    """Re-derive every entry of 120 random reports from first principles."""

    @staticmethod
    def draw(rng):
        rate = F(rng.next_int(1, 8), rng.next_int(1, 4))
        rho = rate * F(rng.next_int(0, 8), 8)
        sigma = F(rng.next_int(1, 40), rng.next_int(1, 4))
        l_max = rng.next_int(1, 6)
        return TokenBucketParams(rho, sigma), rate, l_max

    def test_cbr_reports(self):
        rng = SplitMix64(515)
        for _ in range(120):
            params, rate, l_max = self.draw(rng)
            report = cbr_bounds(params, rate, l_max)
            rho, sigma = params.rho, params.sigma
            latency = F(l_max, 1) / rate

            corrected = report.corrected
            assert corrected.output_curve == make_token_bucket(
                TokenBucketParams(rho, sigma + rho * latency))
            assert corrected.backlog_bound == sigma + rho * latency
            assert corrected.delay_bound == sigma / rate + latency

            faulty = report.faulty
            assert faulty.backlog_bound == sigma
            assert faulty.delay_bound == sigma / rate

            packetizer = report.packetizer
            assert packetizer.output_curve.value(0) == sigma + l_max
            assert packetizer.backlog_bound == sigma + l_max
            assert packetizer.delay_bound == sigma / rate

            # the corrected route wins on backlog and burst, the
            # packetizer route on delay, with ties where they coincide
            assert corrected.backlog_bound <= packetizer.backlog_bound
            assert corrected.output_curve.value(0) <= \
                packetizer.output_curve.value(0)
            assert packetizer.delay_bound <= corrected.delay_bound

    def test_sp_reports(self):
        rng = SplitMix64(516)
        for _ in range(120):
            params, rate, l_hi = self.draw(rng)
            l_lo = rng.next_int(0, 5)
            report = sp_bounds(params, rate, l_hi, l_lo)
            rho, sigma = params.rho, params.sigma
            latency = F(l_hi + l_lo, 1) / rate
            fluid_latency = F(l_lo, 1) / rate

            assert report.corrected.backlog_bound == sigma + rho * latency
            assert report.corrected.delay_bound == sigma / rate + latency

            assert report.faulty.backlog_bound == sigma + rho * fluid_latency
            assert report.faulty.delay_bound == sigma / rate + fluid_latency

            pk = report.packetizer
            assert pk.backlog_bound == sigma + rho * fluid_latency + l_hi
            assert pk.delay_bound == sigma / rate + fluid_latency

            assert report.corrected.backlog_bound <= \
                pk.backlog_bound + rho * latency  # loose sanity only
            assert pk.delay_bound <= report.corrected.delay_bound

    def test_comparison_labels_are_consistent(self):
        rng = SplitMix64(517)
        for _ in range(60):
            params, rate, l_max = self.draw(rng)
            report = cbr_bounds(params, rate, l_max)
            for key, (a, b) in {
                "output_burst": (report.corrected.output_curve.value(0),
                                 report.packetizer.output_curve.value(0)),
                "backlog": (report.corrected.backlog_bound,
                            report.packetizer.backlog_bound),
                "delay": (report.corrected.delay_bound,
                          report.packetizer.delay_bound),
            }.items():
                label = report.comparisons[key]
                if a < b:
                    assert label == "corrected"
                elif b < a:
                    assert label == "packetizer"
                else:
                    assert label == "tie"
