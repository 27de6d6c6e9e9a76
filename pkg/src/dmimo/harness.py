"""Monte-Carlo experiment harness.

Runs the case studies over sweeps and trials, aggregates means with 95%
confidence intervals, and writes deterministic CSV/JSON results plus a
manifest carrying the config hash.
"""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import channel as ch
from . import engine
from . import linkadapt as la
from . import reservoir as rc
from .config import ExperimentConfig, apply_sweep_value, build_scenario, config_hash
from .impairments import SyncState

VERSION = "0.1.0"

UNITS = ("bps/Hz", "Mbps", "dB", "ratio")

DEFAULT_RU_COUNTS = (2, 4, 8)
DEFAULT_UE_COUNTS = (2, 4, 8)
MOBILITY_LEVELS = ("low", "medium", "high")


@dataclass(frozen=True)
class ResultRecord:
    sweep_value: object  # float or str
    seed: object  # trial index, or "mean" / "ci95" for aggregates
    metric_name: str
    metric_value: float
    units: str


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _sort_key(r: ResultRecord):
    return (str(r.sweep_value), isinstance(r.seed, str), str(r.seed), r.metric_name)


def _parallel(fn, tasks, workers: int) -> list:
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _aggregate(records: list[ResultRecord]) -> list[ResultRecord]:
    """Append mean and 95% CI half-width rows per (sweep_value, metric)."""
    groups: dict = {}
    order: list = []
    for r in records:
        if isinstance(r.seed, str):
            continue
        key = (r.sweep_value, r.metric_name, r.units)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(r.metric_value)

    out = list(records)
    for key in order:
        vals = np.asarray(groups[key], dtype=float)
        mean = float(np.mean(vals))
        half = float(1.96 * np.std(vals, ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
        sweep_value, metric, units = key
        out.append(ResultRecord(sweep_value, "mean", metric, mean, units))
        out.append(ResultRecord(sweep_value, "ci95", metric, half, units))
    return out


def run_downlink_case_study(
    config: ExperimentConfig,
    workers: int = 1,
    ru_counts: tuple[int, ...] = DEFAULT_RU_COUNTS,
    num_groups: int | None = None,
) -> list[ResultRecord]:
    """Distance sweep: baseline capacity, virtual-array capacity, gain."""
    if config.sweep_variable != "distance_m":
        raise ValueError("downlink case study requires a distance_m sweep")

    tasks = [
        (dist, trial)
        for dist in config.sweep_values
        for trial in range(config.trials)
    ]

    def one(task):
        dist, trial = task
        rows = []
        base_params = apply_sweep_value(config.scenario, "distance_m", dist)
        baseline = None
        for k in ru_counts:
            scenario = build_scenario(replace(base_params, num_rus=k))
            b, v = engine.downlink_phase2_capacities(scenario, trial, num_groups)
            if baseline is None:
                baseline = b
                rows.append(
                    ResultRecord(dist, trial, "baseline_capacity_bpshz", b, "bps/Hz")
                )
            rows.append(
                ResultRecord(dist, trial, "virtual_capacity_bpshz[rus=%d]" % k, v, "bps/Hz")
            )
            gain = v / b if b > 0 else 0.0
            rows.append(ResultRecord(dist, trial, "relative_gain[rus=%d]" % k, gain, "ratio"))
        return rows

    nested = _parallel(one, tasks, workers)
    records = [r for rows in nested for r in rows]
    return _aggregate(records)


def run_uplink_case_study(
    config: ExperimentConfig,
    workers: int = 1,
    mobilities: tuple[str, ...] = MOBILITY_LEVELS,
    num_groups: int | None = None,
    payload_blocks: int = 4,
) -> list[ResultRecord]:
    """RU-count sweep: fused SNR, chosen MCS and throughput per mobility."""
    if config.sweep_variable != "num_rus":
        raise ValueError("uplink case study requires a num_rus sweep")
    table = (
        la.load_mcs_table_csv(config.mcs_table_path)
        if config.mcs_table_path
        else la.default_mcs_table()
    )

    tasks = [
        (int(k), mob, trial)
        for k in config.sweep_values
        for mob in mobilities
        for trial in range(config.trials)
    ]

    def one(task):
        k, mob, trial = task
        params = replace(
            config.scenario, num_rus=k, num_ues=2, ue_antennas=2, mobility=mob
        )
        scenario = build_scenario(params)
        round_ = engine.run_uplink_round(
            scenario,
            table,
            trial=trial,
            num_groups=num_groups,
            payload_blocks=payload_blocks,
            sync=config.sync,
            overhead=config.overhead,
        )
        mcs = [m if m is not None else -1 for m in round_.per_ue_chosen_mcs]
        tag = "[mobility=%s]" % mob
        return [
            ResultRecord(
                float(k), trial, "throughput_mbps" + tag,
                float(sum(round_.per_ue_throughput_mbps)), "Mbps",
            ),
            ResultRecord(float(k), trial, "mcs_index" + tag, float(min(mcs)), "ratio"),
            ResultRecord(
                float(k), trial, "fused_snr_db" + tag,
                float(np.mean(round_.per_ue_fused_snr_db)), "dB",
            ),
        ]

    nested = _parallel(one, tasks, workers)
    return _aggregate([r for rows in nested for r in rows])


def run_mobility_sweep(
    config: ExperimentConfig,
    workers: int = 1,
    ue_counts: tuple[int, ...] = DEFAULT_UE_COUNTS,
    num_groups: int = 2,
    predictor_size: int = 32,
    min_history_slots: int = 160,
    csi_source: engine.CsiSource = engine.CsiSource.PREDICTED,
) -> list[ResultRecord]:
    """Mobility sweep of the coherent downlink, predicted CSI by default."""
    if config.sweep_variable != "mobility":
        raise ValueError("mobility sweep requires a mobility sweep variable")

    bandwidth = config.scenario.ofdm.bandwidth_hz()
    tasks = [
        (str(mob).lower(), u, trial)
        for mob in config.sweep_values
        for u in ue_counts
        for trial in range(config.trials)
    ]

    def one(task):
        mob, u, trial = task
        params = replace(
            config.scenario,
            mobility=mob,
            num_ues=u,
            duration_slots=max(config.scenario.duration_slots, min_history_slots),
        )
        scenario = build_scenario(params)
        round_ = engine.run_downlink_round(
            scenario,
            sync=config.sync,
            csi_source=csi_source,
            csi_age_slots=config.csi_age_slots,
            trial=trial,
            num_groups=num_groups,
            predictor_size=predictor_size,
        )
        se = round_.sum_rate_bpshz()
        tag = "[ues=%d]" % u
        return [
            ResultRecord(
                mob, trial, "bitrate_mbps" + tag,
                se * bandwidth * config.overhead / 1e6, "Mbps",
            ),
            ResultRecord(mob, trial, "spectral_eff_bpshz" + tag, se, "bps/Hz"),
        ]

    nested = _parallel(one, tasks, workers)
    return _aggregate([r for rows in nested for r in rows])


def run_rc_benchmark(
    seeds: range | list[int],
    fd_dt_values: tuple[float, ...] = (0.002, 0.005, 0.01, 0.02),
    train_steps: int = 1500,
    eval_steps: int = 400,
    reservoir_size: int = rc.DEFAULT_SIZE,
) -> list[dict]:
    """One-step prediction NMSE of the ESN vs the persistence baseline on
    band-limited Jakes fading. Rows: seed, f_d_dt, nmse dB for both."""
    rows = []
    total = train_steps + eval_steps + 1
    for seed in seeds:
        for fd_dt in fd_dt_values:
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=int(seed), spawn_key=(31337,))
            )
            h = ch.jakes_process(fd_dt, total, rng)
            res, readout = rc.fit_channel_predictor(
                h[:train_steps], horizon=1, size=reservoir_size, seed=int(seed)
            )
            preds = rc.predict_sequence(res, readout, h)
            target = h[train_steps + 1:]
            pred = preds[train_steps: -1, 0]
            persist = h[train_steps: -1]
            power = float(np.mean(np.abs(target) ** 2))
            nmse_pred = float(np.mean(np.abs(pred - target) ** 2) / power)
            nmse_persist = float(np.mean(np.abs(persist - target) ** 2) / power)
            rows.append(
                {
                    "seed": int(seed),
                    "f_d_dt": fd_dt,
                    "nmse_predictor_db": 10.0 * np.log10(max(nmse_pred, 1e-300)),
                    "nmse_persistence_db": 10.0 * np.log10(max(nmse_persist, 1e-300)),
                }
            )
    return rows


def emit_rc_benchmark(rows: list[dict], path: str) -> None:
    lines = ["seed,f_d_dt,nmse_predictor_db,nmse_persistence_db"]
    for r in rows:
        lines.append(
            ",".join(
                [str(r["seed"])]
                + [_fmt(float(r[k])) for k in ("f_d_dt", "nmse_predictor_db", "nmse_persistence_db")]
            )
        )
    with open(path, "w", newline="") as f:
        f.write("\n".join(lines) + "\n")


def make_manifest(config: ExperimentConfig) -> dict:
    return {
        "config_hash": config_hash(config),
        "seed_root": config.scenario.seed,
        "version": VERSION,
    }


def emit_results(
    records: list[ResultRecord],
    emit_format: str,
    path: str,
    manifest: dict | None = None,
) -> None:
    """Write records deterministically.

    CSV: header + one row per record, 17-significant-digit floats, LF
    endings; the manifest goes to a ``<path>.manifest.json`` sidecar (the
    CSV body stays parseable by anything). JSON: records array plus the
    manifest embedded in one object.
    """
    records = sorted(records, key=_sort_key)
    if emit_format == "csv":
        _check_manifest(path, manifest)
        lines = ["sweep_value,seed,metric_name,metric_value,units"]
        for r in records:
            lines.append(
                ",".join(
                    [_fmt(r.sweep_value), _fmt(r.seed), r.metric_name,
                     _fmt(float(r.metric_value)), r.units]
                )
            )
        with open(path, "w", newline="", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")
        if manifest is not None:
            with open(path + ".manifest.json", "w", encoding="utf-8") as f:
                json.dump(manifest, f, indent=2, sort_keys=True)
                f.write("\n")
    elif emit_format == "json":
        payload = {
            "manifest": manifest or {},
            "records": [
                {
                    "sweep_value": r.sweep_value,
                    "seed": r.seed,
                    "metric_name": r.metric_name,
                    "metric_value": r.metric_value,
                    "units": r.units,
                }
                for r in records
            ],
        }
        with open(path, "w", newline="", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
    else:
        raise ValueError("unknown format %r" % emit_format)


def _check_manifest(path: str, manifest: dict | None) -> None:
    if manifest is None:
        return
    sidecar = path + ".manifest.json"
    try:
        with open(sidecar) as f:
            old = json.load(f)
    except (OSError, ValueError):
        return
    if old.get("config_hash") != manifest.get("config_hash"):
        warnings.warn(
            "overwriting %s produced by a different config (hash %s != %s)"
            % (path, old.get("config_hash"), manifest.get("config_hash")),
            stacklevel=2,
        )
