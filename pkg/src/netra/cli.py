"""Command-line front end.

Subcommands: run a scenario, sweep camera thresholds, encode/decode alert
frames, regenerate the bundled fixtures, and render a saved report to
delimited files and figures. Diagnostics go to stderr; exit codes are 2 for
a missing file, 3 for invalid configuration or input, 4 for a frame that
fails decoding.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from . import fixtures, report as report_mod, sim
from .alerting import Alert, decode_payload, encode_payload, make_alert_id
from .classify import Label, Priority
from .energy import PLATFORMS
from .errors import CodecError, ConfigError, NetraError, TraceParseError

log = logging.getLogger("netra")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MISSING_FILE = 2
EXIT_BAD_CONFIG = 3
EXIT_CODEC = 4


def _configure_logging(level_name: str) -> None:
    level = getattr(logging, level_name.upper(), None)
    if not isinstance(level, int):
        raise ConfigError("log_level", "unknown level %r" % level_name)
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _apply_overrides(scn: sim.Scenario, args) -> sim.Scenario:
    env_seed = os.environ.get("NETRA_SEED")
    if env_seed:
        try:
            scn.seed = int(env_seed)
        except ValueError:
            raise ConfigError("NETRA_SEED",
                             "expected an integer, got %r" % env_seed) from None
    if getattr(args, "seed", None) is not None:
        scn.seed = args.seed
    if getattr(args, "mode", None):
        scn.mode = sim.PipelineMode(args.mode)
    if getattr(args, "platform", None):
        if args.platform not in PLATFORMS:
            raise ConfigError("platform", "unknown platform %r (have: %s)"
                              % (args.platform, ", ".join(sorted(PLATFORMS))))
        scn.platform = PLATFORMS[args.platform]
    if getattr(args, "tau", None) is not None:
        scn.fusion = dataclasses.replace(scn.fusion, tau_c=args.tau)
    return scn.validate()


def cmd_run(args) -> int:
    scn = sim.parse_scenario(args.scenario)
    scn = _apply_overrides(scn, args)
    rep = sim.run(scn)
    d = rep.to_dict()
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "report.json").write_bytes(rep.to_json_bytes())
        report_mod.write_driver_log(d, outdir / "driver_events.log")
        log.info("wrote %s", outdir / "report.json")
    print(report_mod.render_summary(d))
    return EXIT_OK


def cmd_sweep(args) -> int:
    scn = sim.parse_scenario(args.scenario)
    scn = _apply_overrides(scn, args)
    if args.taus:
        try:
            taus = [float(tok)
                    for tok in args.taus.replace(",", " ").split()]
        except ValueError:
            raise ConfigError("sweep.tau",
                             "expected numbers, got %r" % args.taus) from None
    elif scn.sweep_taus:
        taus = scn.sweep_taus
    else:
        raise ConfigError("sweep.tau",
                         "no thresholds: pass --taus or set sweep.tau")
    reports = sim.sweep(scn, taus)
    dicts = [r.to_dict() for r in reports]
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        report_mod.write_sweep_csv(dicts, outdir / "sweep.csv")
        report_mod.render_sweep_figure(dicts, outdir / "sweep.png")
        log.info("wrote %s", outdir / "sweep.csv")
    print(report_mod.render_sweep_table(dicts))
    return EXIT_OK


def _enum_by_name(enum_cls, value: str, field: str):
    try:
        return enum_cls[value.upper()]
    except KeyError:
        raise ConfigError(field, "unknown value %r (have: %s)"
                          % (value, ", ".join(m.name.lower()
                                              for m in enum_cls))) from None


def cmd_codec_encode(args) -> int:
    label = _enum_by_name(Label, args.label, "codec.label")
    priority = _enum_by_name(Priority, args.priority, "codec.priority")
    alert_id = (args.alert_id if args.alert_id is not None
                else make_alert_id(args.timestamp_ms, args.lat, args.lon))
    alert = Alert(alert_id=alert_id, label=label, ips=args.ips,
                  lat=args.lat, lon=args.lon,
                  timestamp_ms=args.timestamp_ms, priority=priority)
    print(encode_payload(alert).hex())
    return EXIT_OK


def cmd_codec_decode(args) -> int:
    try:
        data = bytes.fromhex(args.hex)
    except ValueError:
        raise ConfigError("codec.hex", "not a hex string") from None
    alert = decode_payload(data)
    print("alert_id=%016x" % alert.alert_id)
    print("label=%s" % alert.label.token)
    print("priority=%s" % alert.priority.token)
    print("ips=%.4f" % alert.ips)
    print("lat=%.5f" % alert.lat)
    print("lon=%.5f" % alert.lon)
    print("timestamp_ms=%d" % alert.timestamp_ms)
    return EXIT_OK


def cmd_fixture_generate(args) -> int:
    if args.list:
        for name in sorted(fixtures.FIXTURES):
            print(name)
        return EXIT_OK
    if args.all:
        paths = fixtures.write_all(args.out)
    elif args.name:
        try:
            paths = [fixtures.write_fixture(args.name, args.out)]
        except KeyError as exc:
            raise ConfigError("fixture.name", str(exc)) from None
    else:
        raise ConfigError("fixture", "pass --name, --all or --list")
    for path in paths:
        print(path)
    return EXIT_OK


def cmd_report_render(args) -> int:
    with open(args.report, "r", encoding="utf-8") as fp:
        try:
            d = json.load(fp)
        except json.JSONDecodeError as exc:
            raise ConfigError("report", "bad report json: %s" % exc) from None
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    report_mod.write_funnel_csv(d, outdir / "funnel.csv")
    report_mod.write_metrics_csv(d, outdir / "metrics.csv")
    report_mod.write_driver_log(d, outdir / "driver_events.log")
    figures = report_mod.render_figures(d, outdir)
    log.info("wrote %s and %d figures", outdir / "metrics.csv", len(figures))
    print(report_mod.render_summary(d))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netra",
        description="Replay and analyze gated intrusion-detection scenarios.")
    parser.add_argument("--log-level", default=None,
                        help="debug|info|warning|error (or env NETRA_LOG)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--mode",
                       choices=[m.value for m in sim.PipelineMode])
    p_run.add_argument("--tau", type=float,
                       help="override the camera threshold")
    p_run.add_argument("--platform", help="pi-zero or pi-4")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--out", help="write report.json + driver log here")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run across camera thresholds")
    p_sweep.add_argument("--scenario", required=True)
    p_sweep.add_argument("--taus",
                         help="comma or space separated thresholds")
    p_sweep.add_argument("--mode",
                         choices=[m.value for m in sim.PipelineMode])
    p_sweep.add_argument("--platform")
    p_sweep.add_argument("--seed", type=int)
    p_sweep.add_argument("--out", help="write sweep.csv + sweep.png here")
    p_sweep.set_defaults(func=cmd_sweep)

    p_codec = sub.add_parser("codec", help="alert frame tools")
    codec_sub = p_codec.add_subparsers(dest="codec_command", required=True)
    p_enc = codec_sub.add_parser("encode", help="alert fields -> hex frame")
    p_enc.add_argument("--label", required=True)
    p_enc.add_argument("--priority", required=True)
    p_enc.add_argument("--ips", type=float, required=True)
    p_enc.add_argument("--lat", type=float, required=True)
    p_enc.add_argument("--lon", type=float, required=True)
    p_enc.add_argument("--timestamp-ms", type=int, required=True)
    p_enc.add_argument("--alert-id", type=int,
                       help="default: derived from timestamp and position")
    p_enc.set_defaults(func=cmd_codec_encode)
    p_dec = codec_sub.add_parser("decode", help="hex frame -> alert fields")
    p_dec.add_argument("hex")
    p_dec.set_defaults(func=cmd_codec_decode)

    p_fix = sub.add_parser("fixture", help="bundled validation fixtures")
    fix_sub = p_fix.add_subparsers(dest="fixture_command", required=True)
    p_gen = fix_sub.add_parser("generate", help="write fixture files")
    p_gen.add_argument("--name", help="one fixture by name")
    p_gen.add_argument("--all", action="store_true",
                       help="all traces plus scenario/confusion files")
    p_gen.add_argument("--list", action="store_true",
                       help="list fixture names")
    p_gen.add_argument("--out", default="fixtures")
    p_gen.set_defaults(func=cmd_fixture_generate)

    p_rep = sub.add_parser("report", help="render a saved report")
    rep_sub = p_rep.add_subparsers(dest="report_command", required=True)
    p_render = rep_sub.add_parser(
        "render", help="report.json -> csv, driver log and figures")
    p_render.add_argument("--report", required=True)
    p_render.add_argument("--out", required=True)
    p_render.set_defaults(func=cmd_report_render)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _configure_logging(args.log_level
                           or os.environ.get("NETRA_LOG", "warning"))
        return args.func(args)
    except FileNotFoundError as exc:
        log.error("missing file: %s", exc)
        return EXIT_MISSING_FILE
    except CodecError as exc:
        log.error("frame rejected: %s", exc)
        return EXIT_CODEC
    except (ConfigError, TraceParseError) as exc:
        log.error("%s", exc)
        return EXIT_BAD_CONFIG
    except NetraError as exc:
        log.error("%s", exc)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
