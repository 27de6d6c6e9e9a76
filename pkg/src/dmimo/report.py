"""Optional figure rendering for the experiment harness.

Each renderer takes the aggregated records a case study produced and saves
a PNG next to the delimited output. CSV/JSON stays the canonical artifact;
the figures are a convenience for eyeballing sweeps.
"""

from __future__ import annotations

import re

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import ResultRecord

_SUFFIX = re.compile(r"^(?P<base>[^\[]+)\[(?P<key>[^=]+)=(?P<val>[^\]]+)\]$")


def _series(records: list[ResultRecord], base_metric: str) -> dict:
    """mean rows grouped as {suffix_value or None: [(sweep_value, mean)]}."""
    out: dict = {}
    for r in records:
        if r.seed != "mean":
            continue
        m = _SUFFIX.match(r.metric_name)
        name = m.group("base") if m else r.metric_name
        if name != base_metric:
            continue
        key = m.group("val") if m else None
        out.setdefault(key, []).append((r.sweep_value, r.metric_value))
    for key in out:
        try:
            out[key].sort(key=lambda p: float(p[0]))
        except (TypeError, ValueError):
            pass
    return out


def _plot_series(ax, series: dict, label_fmt: str) -> None:
    for key, pts in sorted(series.items(), key=lambda kv: str(kv[0])):
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        label = label_fmt % key if key is not None else None
        if all(isinstance(x, (int, float)) for x in xs):
            ax.plot(xs, ys, marker="o", label=label)
        else:
            ax.plot(range(len(xs)), ys, marker="o", label=label)
            ax.set_xticks(range(len(xs)), xs)


def render_downlink(records: list[ResultRecord], path: str) -> str:
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    _plot_series(axes[0], _series(records, "virtual_capacity_bpshz"), "%s RUs")
    _plot_series(axes[0], _series(records, "baseline_capacity_bpshz"), None)
    axes[0].set_xlabel("UE distance [m]")
    axes[0].set_ylabel("sum capacity [bps/Hz]")
    axes[0].set_xscale("log")
    axes[0].legend()
    _plot_series(axes[1], _series(records, "relative_gain"), "%s RUs")
    axes[1].set_xlabel("UE distance [m]")
    axes[1].set_ylabel("gain over direct link")
    axes[1].set_xscale("log")
    axes[1].legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_uplink(records: list[ResultRecord], path: str) -> str:
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    _plot_series(axes[0], _series(records, "throughput_mbps"), "%s mobility")
    axes[0].set_xlabel("active relay units")
    axes[0].set_ylabel("throughput [Mbps]")
    axes[0].legend()
    _plot_series(axes[1], _series(records, "fused_snr_db"), "%s mobility")
    axes[1].set_xlabel("active relay units")
    axes[1].set_ylabel("fused post-detection SNR [dB]")
    axes[1].legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_mobility(records: list[ResultRecord], path: str) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    _plot_series(ax, _series(records, "bitrate_mbps"), "%s UEs")
    ax.set_xlabel("mobility profile")
    ax.set_ylabel("delivered bitrate [Mbps]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_rc_benchmark(rows: list[dict], path: str) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    by_fd: dict = {}
    for r in rows:
        by_fd.setdefault(r["f_d_dt"], []).append(r)
    fds = sorted(by_fd)
    for key, style in (("nmse_predictor_db", "o-"), ("nmse_persistence_db", "s--")):
        means = [sum(r[key] for r in by_fd[fd]) / len(by_fd[fd]) for fd in fds]
        ax.plot(fds, means, style, label=key.replace("_db", ""))
    ax.set_xlabel("normalized Doppler f_d dt")
    ax.set_ylabel("one-step NMSE [dB]")
    ax.set_xscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
