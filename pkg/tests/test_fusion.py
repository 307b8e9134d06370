import random

import pytest

from netra.errors import CalibrationIncompleteError, ConfigError
from netra.fusion import (
    FusionConfig,
    FusionMode,
    RejectReason,
    activation_pipeline,
    camera_decision,
    distance_change,
    distance_probability,
    fuse,
)
from netra.sensing import (
    CalibrationState,
    GroundTruth,
    SensorSample,
    SPEED_OF_SOUND_MS,
    Truth,
)

CALIB = CalibrationState(d_bg=13.0)
QUIET = Truth(GroundTruth.QUIET)


def _sample(pir, d_current=None, t=0):
    echo = None if d_current is None else 2.0 * d_current / SPEED_OF_SOUND_MS
    return SensorSample(t, pir, echo, QUIET)


class TestDistanceChange:
    def test_no_change(self):
        assert distance_change(13.0, 13.0) == 0.0

    def test_hand_value(self):
        assert distance_change(13.0, 12.25) == 0.75

    def test_negative_passthrough(self):
        # the sign survives; the activation gates reject it later
        assert distance_change(13.0, 14.0) == -1.0


class TestDistanceProbability:
    def test_hand_value(self):
        assert distance_probability(0.75, 1.5) == 0.5

    def test_clamp_high(self):
        assert distance_probability(3.0, 1.5) == 1.0

    def test_zero(self):
        assert distance_probability(0.0, 1.5) == 0.0

    def test_negative_clamps_to_zero(self):
        assert distance_probability(-0.5, 1.5) == 0.0

    def test_bad_scale(self):
        with pytest.raises(ConfigError):
            distance_probability(0.5, 0.0)

    def test_bounds_property(self):
        rng = random.Random(5)
        for _ in range(1000):
            p = distance_probability(rng.uniform(-5, 5), rng.uniform(0.1, 3))
            assert 0.0 <= p <= 1.0


class TestFuse:
    def test_both_maximal(self):
        assert fuse(1, 1.0) == 1.0

    def test_hand_value(self):
        # 0.4 * 1 + 0.6 * 0.5, exact in doubles
        assert fuse(1, 0.5) == 0.7

    def test_no_motion_scales_distance_only(self):
        assert fuse(0, 0.5) == 0.3
        assert fuse(0, 1.0) == 0.6

    def test_custom_weights(self):
        assert fuse(1, 0.0, w_pir=1.0, w_dist=0.0) == 1.0


class TestCameraDecision:
    def test_boundary_inclusive(self):
        assert camera_decision(0.65, 0.65) == 1

    def test_just_below(self):
        assert camera_decision(0.649, 0.65) == 0

    def test_above(self):
        assert camera_decision(0.7, 0.65) == 1


class TestConfigValidation:
    def test_defaults_valid(self):
        cfg = FusionConfig().validate()
        assert (cfg.w_pir, cfg.w_dist) == (0.4, 0.6)
        assert cfg.d_max == 1.5
        assert cfg.tau_c == 0.65
        assert (cfg.gate_min, cfg.gate_max) == (4.0, 15.0)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ConfigError, match="w_pir"):
            FusionConfig(w_pir=0.5, w_dist=0.6).validate()

    def test_tau_bounds(self):
        with pytest.raises(ConfigError, match="tau_c"):
            FusionConfig(tau_c=1.01).validate()

    def test_gate_order(self):
        with pytest.raises(ConfigError):
            FusionConfig(gate_min=15.0, gate_max=4.0).validate()

    def test_d_max_positive(self):
        with pytest.raises(ConfigError):
            FusionConfig(d_max=0.0).validate()


class TestActivationPipeline:
    CFG = FusionConfig()

    def test_requires_calibration(self):
        incomplete = CalibrationState(d_bg=13.0, sample_count=3)
        with pytest.raises(CalibrationIncompleteError):
            activation_pipeline(_sample(1, 11.0), incomplete, self.CFG)

    def test_no_motion_short_circuits(self):
        d = activation_pipeline(_sample(0, 11.0), CALIB, self.CFG)
        assert d.camera == 0
        assert d.reject_reason is RejectReason.NO_MOTION

    def test_out_of_range_near(self):
        d = activation_pipeline(_sample(1, 3.0), CALIB, self.CFG)
        assert d.camera == 0
        assert d.reject_reason is RejectReason.OUT_OF_RANGE

    def test_negative_delta(self):
        d = activation_pipeline(_sample(1, 14.0), CALIB, self.CFG)
        assert d.camera == 0
        assert d.delta_d == pytest.approx(-1.0)
        assert d.reject_reason is RejectReason.NON_POSITIVE_DELTA

    def test_negative_delta_checked_before_range(self):
        # 16 m fails both gates; the delta gate reports first
        d = activation_pipeline(_sample(1, 16.0), CALIB, self.CFG)
        assert d.reject_reason is RejectReason.NON_POSITIVE_DELTA

    def test_missing_echo_counts_as_no_change(self):
        d = activation_pipeline(_sample(1, None), CALIB, self.CFG)
        assert d.camera == 0
        assert d.delta_d == 0.0
        assert d.reject_reason is RejectReason.NON_POSITIVE_DELTA

    def test_hand_composed_activation(self):
        # delta 0.75 -> p_dist 0.5 -> fused 0.7 >= 0.65
        d = activation_pipeline(_sample(1, 12.25), CALIB, self.CFG)
        assert d.p_intrusion == 0.7
        assert d.camera == 1
        assert d.reject_reason is RejectReason.NONE

    def test_below_threshold(self):
        # delta 0.3 -> p = 0.4 + 0.6 * 0.2 = 0.52
        d = activation_pipeline(_sample(1, 12.7), CALIB, self.CFG)
        assert d.camera == 0
        assert d.reject_reason is RejectReason.BELOW_THRESHOLD

    def test_d_current_recorded(self):
        d = activation_pipeline(_sample(1, 12.25), CALIB, self.CFG)
        assert d.d_current == pytest.approx(12.25)


class TestBinaryMode:
    CFG = FusionConfig(mode=FusionMode.BINARY)

    def test_full_scale_activates(self):
        d = activation_pipeline(_sample(1, 11.5), CALIB, self.CFG)
        assert d.camera == 1
        assert d.p_intrusion == 1.0

    def test_boundary_inclusive(self):
        d = activation_pipeline(_sample(1, 13.0 - 1.5), CALIB, self.CFG)
        assert d.camera == 1

    def test_partial_change_rejected(self):
        d = activation_pipeline(_sample(1, 12.0), CALIB, self.CFG)
        assert d.camera == 0
        assert d.reject_reason is RejectReason.BELOW_THRESHOLD

    def test_probabilistic_dominates_binary(self):
        # any event the strict mode accepts, the probabilistic mode accepts
        # too, at every threshold up to 1
        rng = random.Random(11)
        checked = 0
        for _ in range(10000):
            d_current = rng.uniform(2.0, 16.0)
            tau = rng.uniform(0.0, 1.0)
            prob_cfg = FusionConfig(tau_c=tau)
            bin_cfg = FusionConfig(tau_c=tau, mode=FusionMode.BINARY)
            s = _sample(1, d_current)
            b = activation_pipeline(s, CALIB, bin_cfg)
            p = activation_pipeline(s, CALIB, prob_cfg)
            if b.camera:
                checked += 1
                assert p.camera == 1
        assert checked > 100


class TestActivationProperties:
    def test_activation_implies_all_gates(self):
        rng = random.Random(23)
        activated = 0
        for _ in range(10000):
            pir = rng.randrange(2)
            d_current = rng.uniform(0.5, 18.0)
            tau = rng.uniform(0.0, 1.0)
            cfg = FusionConfig(tau_c=tau)
            d = activation_pipeline(_sample(pir, d_current), CALIB, cfg)
            if d.camera:
                activated += 1
                assert pir == 1
                assert d.delta_d > 0
                assert cfg.gate_min <= d.d_current <= cfg.gate_max
                assert d.p_intrusion >= tau
        assert activated > 500

    def test_threshold_monotonicity(self):
        rng = random.Random(31)
        samples = [_sample(1, rng.uniform(3.0, 16.0)) for _ in range(300)]
        taus = sorted(rng.uniform(0.0, 1.0) for _ in range(12))
        counts = []
        for tau in taus:
            cfg = FusionConfig(tau_c=tau)
            counts.append(sum(
                activation_pipeline(s, CALIB, cfg).camera for s in samples))
        assert counts == sorted(counts, reverse=True)

    def test_delta_monotonicity(self):
        # a larger distance change never lowers the fused probability
        cfg = FusionConfig()
        rng = random.Random(37)
        for _ in range(2000):
            d1 = rng.uniform(0.0, 3.0)
            d2 = d1 + rng.uniform(0.0, 2.0)
            p1 = fuse(1, distance_probability(d1, cfg.d_max))
            p2 = fuse(1, distance_probability(d2, cfg.d_max))
            assert p2 >= p1
