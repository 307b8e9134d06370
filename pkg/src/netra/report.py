"""Report rendering: text summaries, delimited output, figures.

All functions work on the plain-dict form of a report (MetricsReport
.to_dict() or a parsed report.json), so a saved report renders exactly like
a live one.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, List, Sequence

FUNNEL_LABELS = ("PIR", "Fusion", "AI confirmed", "Transmitted", "Delivered")


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _fmt_opt_pct(value) -> str:
    return "n/a" if value is None else "%.1f%%" % value


def render_summary(d: dict) -> str:
    scn = d["scenario"]
    ev = d["events"]
    link = d["link"]
    met = d["metrics"]
    en = d["energy"]
    lines = [
        "scenario    %s  (mode %s, seed %d)" % (scn["name"], scn["mode"],
                                                scn["seed"]),
        "platform    %s  sf%d  tau_c %.2f" % (scn["platform"], scn["sf"],
                                              scn["tau_c"]),
        "events      %d samples, %d PIR triggers (%d real / %d spurious)"
        % (ev["samples"], ev["pir_triggers"], ev["true_ground"],
           ev["false_ground"]),
        "camera      %d activations (%d real, %d spurious)"
        % (ev["camera_activations"], ev["true_activations"],
           ev["false_activations"]),
        "detection   %s of real events activated the camera"
        % _fmt_opt_pct(met["detection_rate_pct"]),
        "funnel      %s" % " -> ".join(str(n) for n in d["funnel"]),
        "alerts      %d transmitted, %d delivered, %d buffered, %d dropped"
        % (link["transmitted"], link["delivered"], link["buffered"],
           link["dropped"]),
        "suppression %s of PIR triggers never left the node"
        % _fmt_opt_pct(met["suppression_pct"]),
        "pdr         %.1f%%" % link["pdr_pct"],
        "latency     mean %.0f ms, p95 %.0f ms"
        % (met["mean_latency_ms"], met["p95_latency_ms"]),
        "energy      %.4f Wh total (camera %.4f, inference %.4f, "
        "idle %.4f, radio %.4f)"
        % (en["total_wh"], en["camera_wh"], en["inference_wh"],
           en["idle_wh"], en["radio_wh"]),
    ]
    if d.get("camera_savings_pct") is not None:
        lines.append(
            "camera      %.1f%% below the trigger-everything baseline "
            "(%.4f Wh)" % (d["camera_savings_pct"], d["camera_baseline_wh"]))
    labels = d["classify"]["detections_by_label"]
    if labels:
        lines.append("labels      " + ", ".join(
            "%s %d" % (k, v) for k, v in sorted(labels.items())))
    return "\n".join(lines)


def render_sweep_table(dicts: Sequence[dict]) -> str:
    rows = ["  tau   activations   real   spurious   transmitted"]
    for d in dicts:
        ev = d["events"]
        rows.append("%5.2f   %11d   %4d   %8d   %11d" % (
            d["scenario"]["tau_c"], ev["camera_activations"],
            ev["true_activations"], ev["false_activations"],
            d["link"]["transmitted"]))
    return "\n".join(rows)


# ---------------------------------------------------------------------------
# Delimited output
# ---------------------------------------------------------------------------

def write_funnel_csv(d: dict, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(["stage", "count"])
        for label, count in zip(FUNNEL_LABELS, d["funnel"]):
            writer.writerow([label, count])


def _scalar_metrics(d: dict) -> List[tuple]:
    ev = d["events"]
    met = d["metrics"]
    link = d["link"]
    en = d["energy"]
    out = [
        ("samples", ev["samples"]),
        ("pir_triggers", ev["pir_triggers"]),
        ("camera_activations", ev["camera_activations"]),
        ("true_activations", ev["true_activations"]),
        ("false_activations", ev["false_activations"]),
        ("detection_rate_pct", met["detection_rate_pct"]),
        ("suppression_pct", met["suppression_pct"]),
        ("transmitted", link["transmitted"]),
        ("delivered", link["delivered"]),
        ("buffered", link["buffered"]),
        ("dropped", link["dropped"]),
        ("pdr_pct", link["pdr_pct"]),
        ("mean_latency_ms", met["mean_latency_ms"]),
        ("p95_latency_ms", met["p95_latency_ms"]),
        ("camera_wh", en["camera_wh"]),
        ("inference_wh", en["inference_wh"]),
        ("idle_wh", en["idle_wh"]),
        ("radio_wh", en["radio_wh"]),
        ("total_wh", en["total_wh"]),
        ("camera_baseline_wh", d["camera_baseline_wh"]),
        ("camera_savings_pct", d["camera_savings_pct"]),
    ]
    return out


def write_metrics_csv(d: dict, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(["metric", "value"])
        for name, value in _scalar_metrics(d):
            writer.writerow([name, "" if value is None else value])


def write_sweep_csv(dicts: Sequence[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(["tau_c", "camera_activations", "true_activations",
                         "false_activations", "transmitted", "delivered"])
        for d in dicts:
            ev = d["events"]
            writer.writerow([
                d["scenario"]["tau_c"], ev["camera_activations"],
                ev["true_activations"], ev["false_activations"],
                d["link"]["transmitted"], d["link"]["delivered"]])


def write_driver_log(d: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fp:
        for line in d["driver_event_log"]:
            fp.write(line + "\n")


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------

def render_funnel_figure(d: dict, path) -> Path:
    plt = _plt()
    counts = d["funnel"]
    fig, ax = plt.subplots(figsize=(7, 4))
    bars = ax.bar(range(len(counts)), counts, color="#3b6ea5")
    ax.set_xticks(range(len(counts)))
    ax.set_xticklabels(FUNNEL_LABELS)
    ax.set_ylabel("events")
    ax.set_title("Suppression funnel: %s" % d["scenario"]["name"])
    for bar, count in zip(bars, counts):
        ax.annotate(str(count), (bar.get_x() + bar.get_width() / 2,
                                 bar.get_height()),
                    ha="center", va="bottom")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def render_energy_figure(d: dict, path) -> Path:
    plt = _plt()
    en = d["energy"]
    parts = ["camera_wh", "inference_wh", "idle_wh", "radio_wh"]
    values = [en[p] for p in parts]
    labels = [p[:-3] for p in parts]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(labels, values, color="#74a06b")
    ax.set_ylabel("Wh")
    ax.set_title("Energy by component: %s (%s)"
                 % (d["scenario"]["name"], d["scenario"]["platform"]))
    if d.get("camera_baseline_wh") is not None:
        ax.axhline(d["camera_baseline_wh"], color="#b2452c", linestyle="--",
                   linewidth=1,
                   label="camera baseline (every PIR trigger)")
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def render_figures(d: dict, outdir) -> List[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return [
        render_funnel_figure(d, outdir / "funnel.png"),
        render_energy_figure(d, outdir / "energy.png"),
    ]


def render_sweep_figure(dicts: Sequence[dict], path) -> Path:
    plt = _plt()
    taus = [d["scenario"]["tau_c"] for d in dicts]
    total = [d["events"]["camera_activations"] for d in dicts]
    spurious = [d["events"]["false_activations"] for d in dicts]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(taus, total, marker="o", label="activations")
    ax.plot(taus, spurious, marker="s", label="spurious")
    ax.set_xlabel("camera threshold tau_c")
    ax.set_ylabel("events")
    ax.set_title("Threshold sweep: %s" % dicts[0]["scenario"]["name"])
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
