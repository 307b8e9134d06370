import dataclasses
import random

import pytest

from netra.alerting import LinkModel
from netra.classify import DetectorLabel, Label, TrueClass
from netra.energy import PI_ZERO
from netra.errors import ConfigError
from netra.fixtures import end_to_end_trace, fusion_validation_trace
from netra.sensing import (
    EventTrace,
    GroundTruth,
    SensorSample,
    SPEED_OF_SOUND_MS,
    TraceSpec,
    Truth,
    generate_trace,
)
from netra.sim import (
    PipelineMode,
    Scenario,
    parse_scenario,
    run,
    sweep,
    synth_frame,
)


def _echo(d):
    return 2.0 * d / SPEED_OF_SOUND_MS


def _quiet_burst(n=5, d=13.0, start=0):
    return [SensorSample(start + k * 1000, 0, _echo(d),
                         Truth(GroundTruth.QUIET)) for k in range(n)]


def _event(t, d, truth):
    return SensorSample(t, 1, _echo(d), truth)


class TestSynthFrame:
    def test_clear_human(self):
        frame = synth_frame(Truth(GroundTruth.TRUE_INTRUSION, "human"))
        assert len(frame.objects) == 1
        obj = frame.objects[0]
        assert obj.true_class is TrueClass.HUMAN
        assert obj.detector_label is DetectorLabel.PERSON
        assert obj.confidence == 0.92

    def test_faint_drops_confidence(self):
        frame = synth_frame(
            Truth(GroundTruth.TRUE_INTRUSION, "human", "faint"))
        assert frame.objects[0].confidence == 0.45

    def test_hidden_is_empty(self):
        frame = synth_frame(
            Truth(GroundTruth.TRUE_INTRUSION, "human", "hidden"))
        assert frame.objects == ()

    def test_false_trigger_is_empty(self):
        assert synth_frame(
            Truth(GroundTruth.FALSE_TRIGGER, "vehicle")).objects == ()

    def test_elephant_fills_quarter_frame(self):
        frame = synth_frame(Truth(GroundTruth.TRUE_INTRUSION, "elephant"))
        x1, y1, x2, y2 = frame.objects[0].bbox
        assert (x2 - x1) * (y2 - y1) / (300.0 * 300.0) == 0.25

    def test_cow_stays_small(self):
        frame = synth_frame(Truth(GroundTruth.TRUE_INTRUSION, "cow"))
        x1, y1, x2, y2 = frame.objects[0].bbox
        assert (x2 - x1) * (y2 - y1) / (300.0 * 300.0) < 0.25


class TestScenarioValidation:
    def test_needs_a_source(self):
        with pytest.raises(ConfigError, match="trace"):
            Scenario(name="x").validate()

    def test_rejects_two_sources(self):
        trace = generate_trace(TraceSpec(n_true=1, n_false=1), 1)
        with pytest.raises(ConfigError):
            Scenario(name="x", trace=trace,
                     generator=TraceSpec()).validate()

    def test_bad_classifier(self):
        trace = generate_trace(TraceSpec(n_true=1, n_false=1), 1)
        with pytest.raises(ConfigError, match="classifier"):
            Scenario(trace=trace, classifier="cnn").validate()

    def test_bad_sweep_tau(self):
        trace = generate_trace(TraceSpec(n_true=1, n_false=1), 1)
        with pytest.raises(ConfigError, match="sweep.tau"):
            Scenario(trace=trace, sweep_taus=[0.5, 1.01]).validate()

    def test_bad_coordinates(self):
        trace = generate_trace(TraceSpec(n_true=1, n_false=1), 1)
        with pytest.raises(ConfigError, match="node.lat"):
            Scenario(trace=trace, node_lat=91.0).validate()


class TestRunBasics:
    def test_quiet_trace_all_zeros(self):
        trace = EventTrace(_quiet_burst(8))
        rep = run(Scenario(name="quiet", trace=trace))
        assert rep.funnel.as_list() == [0, 0, 0, 0, 0]
        assert rep.camera_activations == 0
        assert rep.transmitted == 0
        assert rep.pdr_pct == 0.0
        assert rep.mean_latency_ms == 0.0
        assert rep.detection_rate_pct is None
        assert rep.suppression_pct is None

    def test_calibration_required(self):
        samples = [_event(0, 11.0, Truth(GroundTruth.TRUE_INTRUSION,
                                         "human"))]
        with pytest.raises(ConfigError, match="calibration"):
            run(Scenario(name="x", trace=EventTrace(samples)))

    def test_d_bg_override_skips_burst(self):
        samples = [_event(0, 11.0,
                          Truth(GroundTruth.TRUE_INTRUSION, "human"))]
        rep = run(Scenario(name="x", trace=EventTrace(samples), d_bg=13.0))
        assert rep.camera_activations == 1

    def test_pir_only_counts_every_trigger(self):
        samples = _quiet_burst() + [
            _event(5000 + k * 1000, 14.0,
                   Truth(GroundTruth.FALSE_TRIGGER, "wind"))
            for k in range(6)]
        rep = run(Scenario(name="x", trace=EventTrace(samples),
                           mode=PipelineMode.PIR_ONLY))
        assert rep.camera_activations == rep.pir_triggers == 6
        assert rep.false_activations == 6

    def test_funnel_monotone_and_conserved(self):
        trace = generate_trace(TraceSpec(n_true=30, n_false=60), 5)
        rep = run(Scenario(name="g", trace=trace,
                           link=LinkModel(delivery_prob=0.4)))
        stages = rep.funnel.as_list()
        assert all(a >= b for a, b in zip(stages, stages[1:]))
        assert rep.delivered + rep.buffered + rep.dropped == rep.transmitted
        assert rep.energy.activation_count == rep.camera_activations

    def test_deterministic_reports(self):
        scn = Scenario(name="gen",
                       generator=TraceSpec(n_true=12, n_false=20), seed=4,
                       link=LinkModel(delivery_prob=0.7))
        a = run(scn).to_json_bytes()
        b = run(scn).to_json_bytes()
        assert a == b

    def test_seed_changes_lossy_outcome(self):
        def result(seed):
            scn = Scenario(name="gen",
                           generator=TraceSpec(n_true=40, n_false=10),
                           seed=seed, link=LinkModel(delivery_prob=0.5))
            return run(scn).delivered

        outcomes = {result(s) for s in range(1, 7)}
        assert len(outcomes) > 1

    def test_medium_alerts_logged_not_sent(self):
        samples = _quiet_burst() + [
            _event(5000 + k * 1000, 11.0,
                   Truth(GroundTruth.TRUE_INTRUSION, "cow"))
            for k in range(4)]
        rep = run(Scenario(name="cows", trace=EventTrace(samples)))
        assert rep.detections_by_label == {"animal": 4}
        assert rep.medium_logged == 4
        assert rep.transmitted == 0
        assert rep.funnel.ai_confirmed == 4

    def test_ack_loss_duplicates_reach_receiver(self):
        samples = _quiet_burst() + [
            _event(5000, 11.0, Truth(GroundTruth.TRUE_INTRUSION, "human"))]
        rep = run(Scenario(
            name="acks", trace=EventTrace(samples),
            link=LinkModel(delivery_prob=1.0, ack_loss_prob=1.0)))
        assert rep.transmitted == 1
        assert rep.delivered == 0
        assert rep.buffered == 1
        # all four frame copies arrived; one event plus three duplicates
        assert len(rep.driver_event_log) == 1
        assert rep.duplicates == 3

    def test_latency_profile_difference(self):
        samples = _quiet_burst() + [
            _event(5000, 11.0, Truth(GroundTruth.TRUE_INTRUSION, "human"))]
        fast = run(Scenario(name="x", trace=EventTrace(samples)))
        slow = run(Scenario(name="x", trace=EventTrace(samples),
                            platform=PI_ZERO))
        assert fast.mean_latency_ms == 2400.0
        assert slow.mean_latency_ms == 6500.0


class TestSweep:
    def _scenario(self):
        trace, _ = fusion_validation_trace()
        return Scenario(name="a", trace=trace)

    def test_threshold_rows(self):
        reports = sweep(self._scenario(), [0.45, 0.65])
        assert [(r.camera_activations, r.false_activations)
                for r in reports] == [(40, 2), (38, 0)]

    def test_floor_threshold_opens_every_gated_event(self):
        (rep,) = sweep(self._scenario(), [0.0])
        assert rep.camera_activations == 40

    def test_monotone_activations(self):
        scn = Scenario(name="g",
                       generator=TraceSpec(n_true=25, n_false=40), seed=8)
        taus = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
        counts = [r.camera_activations for r in sweep(scn, taus)]
        assert counts == sorted(counts, reverse=True)

    def test_order_independent(self):
        up = sweep(self._scenario(), [0.45, 0.65])
        down = sweep(self._scenario(), [0.65, 0.45])
        assert [r.camera_activations for r in up] == \
            [r.camera_activations for r in reversed(down)]

    def test_single_point_matches_run(self):
        scn = self._scenario()
        (swept,) = sweep(scn, [0.65])
        solo = run(scn)
        assert swept.to_json_bytes() == solo.to_json_bytes()

    def test_bad_tau_rejected(self):
        with pytest.raises(ConfigError):
            sweep(self._scenario(), [1.01])

    def test_empty_tau_list_rejected(self):
        with pytest.raises(ConfigError):
            sweep(self._scenario(), [])


class TestReportShape:
    def test_dict_layout(self):
        trace, _ = end_to_end_trace()
        d = run(Scenario(name="b", trace=trace)).to_dict()
        assert set(d) >= {"report_version", "scenario", "events",
                          "classify", "link", "metrics", "funnel",
                          "energy", "driver_event_log"}
        assert d["funnel"] == [113, 42, 10, 10, 10]
        assert d["report_version"] == 1

    def test_json_ends_with_newline(self):
        trace = generate_trace(TraceSpec(n_true=2, n_false=2), 1)
        payload = run(Scenario(name="x", trace=trace)).to_json_bytes()
        assert payload.endswith(b"\n")


class TestScenarioFiles:
    def _write(self, tmp_path, body):
        path = tmp_path / "s.scn"
        path.write_text("#netra-scenario v1\n" + body, encoding="utf-8")
        return path

    def test_missing_header(self, tmp_path):
        path = tmp_path / "s.scn"
        path.write_text("name = x\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="header"):
            parse_scenario(path)

    def test_unknown_key_is_hard_error(self, tmp_path):
        path = self._write(tmp_path, "fusion.tau = 0.5\n"
                           "generate.n_true = 1\n")
        with pytest.raises(ConfigError, match="fusion.tau"):
            parse_scenario(path)

    def test_duplicate_key_rejected(self, tmp_path):
        path = self._write(tmp_path, "seed = 1\nseed = 2\n"
                           "generate.n_true = 1\n")
        with pytest.raises(ConfigError, match="duplicate"):
            parse_scenario(path)

    def test_unknown_mode(self, tmp_path):
        path = self._write(tmp_path, "mode = quantum\n"
                           "generate.n_true = 1\n")
        with pytest.raises(ConfigError, match="mode"):
            parse_scenario(path)

    def test_unknown_platform_lists_choices(self, tmp_path):
        path = self._write(tmp_path, "platform = pi-5\n"
                           "generate.n_true = 1\n")
        with pytest.raises(ConfigError, match="pi-zero"):
            parse_scenario(path)

    def test_full_file_parses(self, tmp_path):
        trace = generate_trace(TraceSpec(n_true=3, n_false=3), 2)
        from netra.sensing import save_trace
        save_trace(trace, tmp_path / "t.trace")
        body = "\n".join([
            "name = demo",
            "trace = t.trace",
            "seed = 9",
            "mode = binary",
            "platform = pi-zero",
            "node.lat = -10.5",
            "node.lon = 100.25",
            "fusion.tau_c = 0.7",
            "fusion.d_max = 2.0",
            "classify.tau_alert = 0.55",
            "classifier = heuristic",
            "link.delivery = 0.9",
            "link.delivery.sf9 = 0.8",
            "link.ack_loss = 0.05",
            "link.snr_margin_db = -11",
            "link.propagation_ms = 2",
            "link.max_retries = 5",
            "link.sf = 8",
            "sweep.tau = 0.45, 0.65",
            "receiver.dedup_window_ms = 30000",
            "",
        ])
        scn = parse_scenario(self._write(tmp_path, body))
        assert scn.name == "demo"
        assert scn.trace_path == (tmp_path / "t.trace").resolve()
        assert scn.seed == 9
        assert scn.mode is PipelineMode.BINARY
        assert scn.platform.name == "pi-zero"
        assert scn.node_lat == -10.5
        assert scn.fusion.tau_c == 0.7
        assert scn.fusion.d_max == 2.0
        assert scn.classify_cfg.tau_alert == 0.55
        assert scn.classifier == "heuristic"
        assert scn.link.delivery_prob == 0.9
        assert scn.link.per_sf_delivery == {9: 0.8}
        assert scn.link.ack_loss_prob == 0.05
        assert scn.retry.max_retries == 5
        assert scn.sf == 8
        assert scn.sweep_taus == [0.45, 0.65]
        assert scn.dedup_window_ms == 30000

    def test_generator_keys(self, tmp_path):
        body = ("generate.n_true = 6\ngenerate.n_false = 9\n"
                "generate.d_bg = 12.5\ngenerate.true_class = elephant\n")
        scn = parse_scenario(self._write(tmp_path, body))
        assert scn.generator.n_true == 6
        assert scn.generator.n_false == 9
        assert scn.generator.d_bg == 12.5
        assert scn.generator.true_class == "elephant"

    def test_adaptive_sf_token(self, tmp_path):
        body = "generate.n_true = 1\nlink.sf = adaptive\n"
        scn = parse_scenario(self._write(tmp_path, body))
        assert scn.sf is None

    def test_fixture_scenarios_parse(self, fixtures_dir):
        for name in ("fusion_validation.scn", "end_to_end.scn"):
            scn = parse_scenario(fixtures_dir / name)
            assert scn.trace_path.exists()


class TestFixtureTraces:
    def test_fusion_validation_composition(self):
        trace, notes = fusion_validation_trace()
        assert trace.n_true == 40
        assert trace.n_false == 39
        assert trace.n_quiet == 5
        assert len(notes) > 70

    def test_end_to_end_composition(self):
        trace, _ = end_to_end_trace()
        assert trace.n_true == 20
        assert trace.n_false == 93
        assert len(trace.samples) == 118

    def test_builders_deterministic(self):
        a, _ = fusion_validation_trace()
        b, _ = fusion_validation_trace()
        assert [s.echo_time_s for s in a.samples] == \
            [s.echo_time_s for s in b.samples]

    def test_checked_in_files_current(self, tmp_path, fixtures_dir):
        from netra.fixtures import write_fixture
        for name in ("fusion_validation", "end_to_end"):
            fresh = write_fixture(name, tmp_path)
            repo_copy = fixtures_dir / ("%s.trace" % name)
            assert fresh.read_bytes() == repo_copy.read_bytes()
