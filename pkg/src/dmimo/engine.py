"""End-to-end cooperation rounds.

Coherent two-phase downlink: gNB broadcasts to the RU cluster, then the
virtual array ZF-precodes to the UEs. Non-coherent two-phase uplink:
every receive node detects the UE streams independently (Alamouti + SIC),
RUs decode-and-forward, the gNB fuses surviving copies.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import channel as ch
from . import detection as det
from . import linkadapt as la
from . import precoding as pc
from . import reservoir as rc
from .impairments import SyncState
from .scenario import NodeSpec, Scenario


class CsiSource(Enum):
    PERFECT = "perfect"
    STALE = "stale"
    PREDICTED = "predicted"


class RuSelectionObjective(Enum):
    MAX_END_TO_END = "max_end_to_end"


@dataclass(frozen=True)
class DownlinkRound:
    phase1_rate_bpshz: float
    phase2_rates_bpshz: tuple[float, ...]
    time_split: float
    end_to_end_rates_bpshz: tuple[float, ...]
    zf_feasible: bool = True

    def sum_rate_bpshz(self) -> float:
        return float(sum(self.end_to_end_rates_bpshz))


@dataclass(frozen=True)
class UplinkRound:
    per_node_reports: dict  # node_id -> {ue_id: DetectionReport}
    fused_bits: dict  # ue_id -> bit vector
    per_ue_throughput_mbps: tuple[float, ...]
    per_ue_chosen_mcs: tuple[int | None, ...]
    per_ue_fused_snr_db: tuple[float, ...]
    active_rus: tuple[int, ...]


def cascade_end_to_end(
    phase1_rate: float, phase2_rates: tuple[float, ...] | list[float]
) -> tuple[tuple[float, ...], float]:
    """Optimal time split for a shared broadcast payload.

    Phase 1 must carry the total payload of all UEs, so with split t the
    delivered per-UE rate is R1 * R2_u / (R1 + sum(R2)). Returns the
    per-UE end-to-end rates and the phase-1 time fraction.
    """
    r2 = np.asarray(phase2_rates, dtype=float)
    r2_sum = float(r2.sum())
    if phase1_rate <= 0 or r2_sum <= 0:
        return tuple(0.0 for _ in r2), 0.0
    if np.isinf(phase1_rate):
        return tuple(r2), 0.0
    denom = phase1_rate + r2_sum
    return tuple(phase1_rate * r2 / denom), r2_sum / denom


def _ue_links(
    scenario: Scenario,
    tx_nodes: list[NodeSpec],
    trial: int,
    num_groups: int,
) -> dict:
    return {
        (tx.id, ue.id): ch.make_link(tx, ue, scenario.ofdm, scenario.seed, trial, num_groups)
        for tx in tx_nodes
        for ue in scenario.ues()
    }


def _composite_for_group(
    links: dict,
    tx_nodes: list[NodeSpec],
    ues: list[NodeSpec],
    group: int,
    fading_override: dict | None = None,
) -> pc.CompositeChannel:
    blocks = []
    for ue in ues:
        row = []
        for tx in tx_nodes:
            link = links[(tx.id, ue.id)]
            fading = fading_override[(tx.id, ue.id)] if fading_override else link.fading
            row.append(fading[group])
        blocks.append(np.hstack(row))
    return pc.CompositeChannel(
        per_ue_blocks=tuple(blocks),
        node_antenna_counts=tuple(tx.num_antennas for tx in tx_nodes),
    )


def realized_zf_rates(
    h_csi: pc.CompositeChannel,
    h_true: pc.CompositeChannel,
    budgets_dbm: list[float],
    noise_dbm: float,
) -> tuple[float, ...]:
    """ZF precoder from (possibly stale) CSI applied to the true channel.

    Residual inter-stream leakage from the CSI mismatch is counted as
    extra noise in the per-stream SINR.
    """
    result = pc.zf_precoder(h_csi, budgets_dbm, noise_dbm)
    g = h_true.stacked() @ result.precoder
    sig = np.abs(np.diag(g)) ** 2
    interf = np.sum(np.abs(g) ** 2, axis=1) - sig
    noise_mw = pc.dbm_to_mw(noise_dbm)
    sinr = sig / (interf + noise_mw)

    rates = []
    idx = 0
    for n_streams in h_csi.stream_counts():
        rates.append(float(np.sum(np.log2(1.0 + sinr[idx: idx + n_streams]))))
        idx += n_streams
    return tuple(rates)


def _node_rotations(
    tx_nodes: list[NodeSpec], sync: SyncState | None, elapsed_s: float
) -> np.ndarray:
    """Per-column phase rotation of the stacked transmit array."""
    rots = []
    for tx in tx_nodes:
        if sync is None:
            phi = 0.0
        else:
            phi = 2.0 * np.pi * sync.cfo(tx.id) * elapsed_s + sync.phase(tx.id)
        rots.extend([np.exp(1j * phi)] * tx.num_antennas)
    return np.array(rots)


def _phase1_rate(
    scenario: Scenario, rus: list[NodeSpec], trial: int, num_groups: int
) -> float:
    """Broadcast bottleneck: the worst gNB->RU MIMO capacity."""
    gnb = scenario.gnb()
    noise_dbm = ch.noise_power_dbm(scenario.ofdm.bandwidth_hz(), scenario.noise_figure_db)
    rates = []
    for ru in rus:
        link = ch.make_link(gnb, ru, scenario.ofdm, scenario.seed, trial, num_groups)
        caps = [
            pc.baseline_capacity_bpshz(link.fading[g], gnb.tx_power_dbm, noise_dbm)
            for g in range(num_groups)
        ]
        rates.append(float(np.mean(caps)))
    return min(rates)


def _link_trajectory(
    link: ch.LinkState, n_slots: int, slot_dt: float, model: str
) -> np.ndarray:
    """Fading sample path of one link, shape (n_slots, groups, rx, tx).

    'clarke' draws a band-limited sum-of-sinusoids path (predictable, used
    by the CSI-prediction studies); 'gauss_markov' steps the AR(1) rule.
    """
    if model == "gauss_markov":
        traj = np.empty((n_slots, link.num_groups, link.n_rx, link.n_tx), dtype=complex)
        cur = link
        traj[0] = cur.fading
        for t in range(1, n_slots):
            cur = ch.evolve_fading(cur, slot_dt)
            traj[t] = cur.fading
        return traj
    if model != "clarke":
        raise ValueError("unknown fading model %r" % model)
    n_paths = 16
    shape = (link.num_groups, link.n_rx, link.n_tx, n_paths)
    alpha = link.rng.uniform(0.0, 2.0 * np.pi, size=shape)
    phi = link.rng.uniform(0.0, 2.0 * np.pi, size=shape)
    fd_dt = link.doppler_hz * slot_dt
    t = np.arange(n_slots).reshape(n_slots, 1, 1, 1, 1)
    phase = 2.0 * np.pi * fd_dt * np.cos(alpha)[None] * t + phi[None]
    h = np.exp(1j * phase).sum(axis=-1) / np.sqrt(n_paths)
    return h * link.amplitude()


def run_downlink_round(
    scenario: Scenario,
    sync: SyncState | None = None,
    csi_source: CsiSource = CsiSource.PERFECT,
    csi_age_slots: int = 1,
    trial: int = 0,
    num_groups: int | None = None,
    active_ru_ids: list[int] | None = None,
    predictor_size: int = rc.DEFAULT_SIZE,
    fading_model: str = "clarke",
) -> DownlinkRound:
    """One coherent downlink round: broadcast phase, ZF phase, cascade.

    The fading of every link follows a trajectory over
    ``scenario.duration_slots`` slots (identical for all CSI sources, so
    comparisons are paired). The precoder sees CSI aged by
    ``csi_age_slots``; PREDICTED trains an ESN on the recorded history to
    extrapolate across the age gap.
    """
    if num_groups is None:
        num_groups = ch.NUM_SUBCARRIER_GROUPS
    gnb = scenario.gnb()
    ues = scenario.ues()
    rus = scenario.rus()
    if active_ru_ids is not None:
        rus = [r for r in rus if r.id in set(active_ru_ids)]
    noise_dbm = ch.noise_power_dbm(scenario.ofdm.bandwidth_hz(), scenario.noise_figure_db)

    if not rus:
        # degenerate virtual array: direct transmission, TDM across UEs
        links = _ue_links(scenario, [gnb], trial, num_groups)
        rates = []
        for ue in ues:
            link = links[(gnb.id, ue.id)]
            caps = [
                pc.baseline_capacity_bpshz(link.fading[g], gnb.tx_power_dbm, noise_dbm)
                for g in range(num_groups)
            ]
            rates.append(float(np.mean(caps)) / len(ues))
        return DownlinkRound(
            phase1_rate_bpshz=float("inf"),
            phase2_rates_bpshz=tuple(rates),
            time_split=0.0,
            end_to_end_rates_bpshz=tuple(rates),
        )

    tx_nodes = [gnb] + rus
    links = _ue_links(scenario, tx_nodes, trial, num_groups)
    slot_dt = scenario.ofdm.slot_duration_s()
    n_slots = max(scenario.duration_slots, csi_age_slots + 2)
    t_csi = n_slots - 1 - csi_age_slots

    history = {
        k: _link_trajectory(v, n_slots, slot_dt, fading_model) for k, v in links.items()
    }
    true_fading = {k: history[k][n_slots - 1] for k in links}
    if csi_source is CsiSource.PERFECT:
        csi_fading = true_fading
    elif csi_source is CsiSource.STALE:
        csi_fading = {k: history[k][t_csi] for k in links}
    else:
        csi_fading = _predict_fading(
            links, history, t_csi, csi_age_slots, scenario.seed, trial, predictor_size
        )

    rot = _node_rotations(tx_nodes, sync, csi_age_slots * slot_dt)
    budgets = [tx.tx_power_dbm for tx in tx_nodes]

    phase2 = np.zeros(len(ues))
    feasible = True
    for g in range(num_groups):
        h_csi = _composite_for_group(links, tx_nodes, ues, g, csi_fading)
        h_true = _composite_for_group(links, tx_nodes, ues, g, true_fading)
        h_true = pc.CompositeChannel(
            per_ue_blocks=tuple(b * rot[None, :] for b in h_true.per_ue_blocks),
            node_antenna_counts=h_true.node_antenna_counts,
        )
        try:
            rates = realized_zf_rates(h_csi, h_true, budgets, noise_dbm)
        except pc.ZfInfeasibleError:
            feasible = False
            rates = tuple(0.0 for _ in ues)
        phase2 += np.asarray(rates)
    phase2 /= num_groups

    phase1 = _phase1_rate(scenario, rus, trial, num_groups)
    end_to_end, time_split = cascade_end_to_end(phase1, tuple(phase2))
    return DownlinkRound(
        phase1_rate_bpshz=phase1,
        phase2_rates_bpshz=tuple(phase2),
        time_split=time_split,
        end_to_end_rates_bpshz=end_to_end,
        zf_feasible=feasible,
    )


def _predict_fading(
    links: dict,
    history: dict,
    t_csi: int,
    horizon: int,
    seed: int,
    trial: int,
    predictor_size: int,
) -> dict:
    """One ESN per link per group, trained on the recorded trajectory up to
    the CSI time, predicting the transmit-time fading."""
    out = {}
    for key, link in links.items():
        traj = np.asarray(history[key][: t_csi + 1])  # (T, groups, rx, tx)
        t, n_g, n_rx, n_tx = traj.shape
        flat = traj.reshape(t, n_g * n_rx * n_tx)
        scale = max(link.amplitude(), 1e-30)
        try:
            res, readout = rc.fit_channel_predictor(
                flat / scale,
                horizon=horizon,
                size=predictor_size,
                seed=np.random.SeedSequence(
                    entropy=seed, spawn_key=(trial, key[0], key[1], 7)
                ),
            )
            pred = rc.predict_channel(res, readout, flat / scale) * scale
            out[key] = np.asarray(pred).reshape(n_g, n_rx, n_tx)
        except ValueError:
            # history too short to train: fall back to stale CSI
            out[key] = history[key][t_csi]
    return out


def impaired_downlink_sum_rate(
    scenario: Scenario,
    sync: SyncState | None,
    csi_age_s: float,
    trial: int = 0,
    num_groups: int | None = None,
) -> float:
    """Continuous-age variant used by the sync-sensitivity analysis.

    CSI is the current fading; the channel then evolves by exactly
    ``csi_age_s`` seconds and picks up each node's CFO/phase rotation
    before transmission.
    """
    if num_groups is None:
        num_groups = ch.NUM_SUBCARRIER_GROUPS
    gnb = scenario.gnb()
    ues = scenario.ues()
    rus = scenario.rus()
    tx_nodes = [gnb] + rus
    noise_dbm = ch.noise_power_dbm(scenario.ofdm.bandwidth_hz(), scenario.noise_figure_db)

    links = _ue_links(scenario, tx_nodes, trial, num_groups)
    csi_fading = {k: v.fading.copy() for k, v in links.items()}
    if csi_age_s > 0:
        links = {k: ch.evolve_fading(v, csi_age_s) for k, v in links.items()}
    true_fading = {k: v.fading for k, v in links.items()}

    rot = _node_rotations(tx_nodes, sync, csi_age_s)
    budgets = [tx.tx_power_dbm for tx in tx_nodes]

    total = 0.0
    for g in range(num_groups):
        h_csi = _composite_for_group(links, tx_nodes, ues, g, csi_fading)
        h_true = _composite_for_group(links, tx_nodes, ues, g, true_fading)
        h_true = pc.CompositeChannel(
            per_ue_blocks=tuple(b * rot[None, :] for b in h_true.per_ue_blocks),
            node_antenna_counts=h_true.node_antenna_counts,
        )
        total += sum(realized_zf_rates(h_csi, h_true, budgets, noise_dbm))
    return total / num_groups


def _alamouti_equivalent(h_blocks: list[np.ndarray], amps: list[float]) -> np.ndarray:
    """Stacked-time equivalent channel for superimposed Alamouti streams.

    Each UE's (n_rx, 2) block maps to a (2 n_rx, 2) orthogonal pair of
    columns in the [y(t1); conj(y(t2))] representation.
    """
    cols = []
    for h, a in zip(h_blocks, amps):
        h1, h2 = h[:, 0] * a, h[:, 1] * a
        top = np.column_stack([h1, h2])
        bot = np.column_stack([np.conj(h2), -np.conj(h1)])
        cols.append(np.vstack([top, bot]))
    return np.hstack(cols)


def _cfo_sinr_factor(cfo_hz: float, symbol_s: float) -> float:
    """Inter-carrier-interference loss for the non-coherent path; below a
    1% normalized offset, symbol-level sync is considered achieved."""
    x = abs(cfo_hz) * symbol_s
    if x <= 0.01:
        return 1.0
    return float(np.sinc(x) ** 2)


def run_uplink_round(
    scenario: Scenario,
    mcs_table: list[la.McsEntry] | None = None,
    trial: int = 0,
    num_groups: int | None = None,
    payload_blocks: int = 8,
    sync: SyncState | None = None,
    overhead: float = la.DEFAULT_OVERHEAD,
) -> UplinkRound:
    """One non-coherent uplink round.

    Phase 1: each UE Alamouti-encodes; every receive node (gNB + RUs)
    separates the streams with MMSE-ordered SIC on the block-equivalent
    channel. Phase 2: an RU's copy reaches the gNB error-free if its
    front-haul supports the lowest MCS, else it is erased. The gNB fuses
    surviving copies; throughput is MCS-maximized on the fused SNR.
    """
    if mcs_table is None:
        mcs_table = la.default_mcs_table()
    if num_groups is None:
        num_groups = ch.NUM_SUBCARRIER_GROUPS
    gnb = scenario.gnb()
    ues = scenario.ues()
    rus = scenario.rus()
    rx_nodes = [gnb] + rus
    ofdm = scenario.ofdm
    noise_dbm = ch.noise_power_dbm(ofdm.bandwidth_hz(), scenario.noise_figure_db)
    noise_mw = pc.dbm_to_mw(noise_dbm)
    constellation = det.make_constellation("qpsk")
    bpsym = constellation.bits_per_symbol

    # ue -> rx links; detection CSI is one pilot symbol old
    links = {
        (ue.id, rxn.id): ch.make_link(ue, rxn, ofdm, scenario.seed, trial, num_groups)
        for ue in ues
        for rxn in rx_nodes
    }
    est_fading = {k: v.fading.copy() for k, v in links.items()}
    links = {
        k: ch.evolve_fading(v, ofdm.symbol_duration_s()) for k, v in links.items()
    }
    amps = [np.sqrt(pc.dbm_to_mw(ue.tx_power_dbm) / ue.num_antennas) for ue in ues]

    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=scenario.seed, spawn_key=(trial, 1_000_003))
    )

    # symbol-level payload on subcarrier group 0
    tx_indices = rng.integers(0, len(constellation.points), size=(len(ues), 2 * payload_blocks))
    tx_blocks = {
        ue.id: [
            det.alamouti_encode(
                constellation.points[tx_indices[u, 2 * b]],
                constellation.points[tx_indices[u, 2 * b + 1]],
            )
            for b in range(payload_blocks)
        ]
        for u, ue in enumerate(ues)
    }

    per_node_reports: dict = {}
    per_node_ue_sinr: dict = {}  # node_id -> (num_groups, num_ues) linear SINR
    for rxn in rx_nodes:
        g_true = {
            g: _alamouti_equivalent(
                [links[(ue.id, rxn.id)].fading[g] for ue in ues], amps
            )
            for g in range(num_groups)
        }
        g_est = {
            g: _alamouti_equivalent(
                [est_fading[(ue.id, rxn.id)][g] for ue in ues], amps
            )
            for g in range(num_groups)
        }

        # payload detection on group 0
        ue_bits = {ue.id: [] for ue in ues}
        ue_rels = {ue.id: [] for ue in ues}
        last_reports = {}
        for b in range(payload_blocks):
            y1 = np.zeros(rxn.num_antennas, dtype=complex)
            y2 = np.zeros(rxn.num_antennas, dtype=complex)
            for u, ue in enumerate(ues):
                h = links[(ue.id, rxn.id)].fading[0] * amps[u]
                block = tx_blocks[ue.id][b].code_matrix
                y1 += h @ block[0]
                y2 += h @ block[1]
            noise = (
                rng.standard_normal(2 * rxn.num_antennas)
                + 1j * rng.standard_normal(2 * rxn.num_antennas)
            ) * np.sqrt(noise_mw / 2.0)
            y = np.concatenate([y1, np.conj(y2)]) + noise
            report = det.sic_detect(y, g_est[0], constellation, noise_mw)
            for u, ue in enumerate(ues):
                ue_bits[ue.id].append(report.bit_decisions[2 * u * bpsym: 2 * (u + 1) * bpsym])
                ue_rels[ue.id].append(report.bit_reliabilities[2 * u * bpsym: 2 * (u + 1) * bpsym])
                last_reports[ue.id] = report

        per_node_reports[rxn.id] = {
            ue.id: det.DetectionReport(
                per_stream_symbols=last_reports[ue.id].per_stream_symbols[2 * u: 2 * u + 2],
                per_stream_post_snr_db=last_reports[ue.id].per_stream_post_snr_db[2 * u: 2 * u + 2],
                decode_order=[0, 1],
                bit_decisions=np.concatenate(ue_bits[ue.id]),
                bit_reliabilities=np.concatenate(ue_rels[ue.id]),
            )
            for u, ue in enumerate(ues)
        }

        # analytic per-group post-SIC SINRs for link adaptation
        sinr = np.zeros((num_groups, len(ues)))
        for g in range(num_groups):
            _, sinrs = det.sic_order_and_sinrs(g_est[g], noise_mw)
            for u, ue in enumerate(ues):
                streams = sinrs[2 * u: 2 * u + 2]
                factor = 1.0
                if sync is not None:
                    factor = _cfo_sinr_factor(sync.cfo(ue.id), ofdm.symbol_duration_s())
                sinr[g, u] = float(np.mean(streams)) * factor
        per_node_ue_sinr[rxn.id] = sinr

    # phase 2: decode-and-forward over the front-haul, erasure below MCS 0
    surviving = [gnb.id]
    for ru in rus:
        fh = ch.make_link(ru, gnb, ofdm, scenario.seed, trial, num_groups)
        fh_snr = ch.link_snr_db(fh, ru.tx_power_dbm, ofdm, scenario.noise_figure_db)
        if fh_snr >= mcs_table[0].snr_threshold_db:
            surviving.append(ru.id)

    fused_bits = {}
    throughputs, mcs_choices, fused_snrs = [], [], []
    for u, ue in enumerate(ues):
        copies = [per_node_reports[nid][ue.id] for nid in surviving]
        fused_bits[ue.id] = det.fuse_decisions(copies, det.FusionStrategy.RELIABILITY_WEIGHTED)
        per_group = np.sum([per_node_ue_sinr[nid][:, u] for nid in surviving], axis=0)
        eff = la.effective_snr_db(10.0 * np.log10(np.maximum(per_group, 1e-300)))
        rep = la.max_throughput(eff, mcs_table, ofdm.bandwidth_hz(), overhead)
        throughputs.append(rep.goodput_mbps)
        mcs_choices.append(rep.chosen_mcs)
        fused_snrs.append(eff)

    return UplinkRound(
        per_node_reports=per_node_reports,
        fused_bits=fused_bits,
        per_ue_throughput_mbps=tuple(throughputs),
        per_ue_chosen_mcs=tuple(mcs_choices),
        per_ue_fused_snr_db=tuple(fused_snrs),
        active_rus=tuple(r.id for r in rus if r.id in surviving),
    )


def downlink_phase2_capacities(
    scenario: Scenario, trial: int = 0, num_groups: int | None = None
) -> tuple[float, float]:
    """(baseline, virtual-array) phase-2 sum capacity with perfect CSI.

    Baseline: the gNB alone transmits directly to each UE (equal power,
    TDM across UEs). Virtual: ZF from the full gNB + RU array. Both use
    the same gNB->UE channel realizations.
    """
    if num_groups is None:
        num_groups = ch.NUM_SUBCARRIER_GROUPS
    gnb = scenario.gnb()
    ues = scenario.ues()
    tx_nodes = [gnb] + scenario.rus()
    noise_dbm = ch.noise_power_dbm(scenario.ofdm.bandwidth_hz(), scenario.noise_figure_db)
    links = _ue_links(scenario, tx_nodes, trial, num_groups)

    baseline = 0.0
    for ue in ues:
        link = links[(gnb.id, ue.id)]
        caps = [
            pc.baseline_capacity_bpshz(link.fading[g], gnb.tx_power_dbm, noise_dbm)
            for g in range(num_groups)
        ]
        baseline += float(np.mean(caps)) / len(ues)

    if len(tx_nodes) == 1:
        # no RUs: the "virtual array" is just the direct link
        return baseline, baseline

    budgets = [tx.tx_power_dbm for tx in tx_nodes]
    virtual = 0.0
    for g in range(num_groups):
        comp = _composite_for_group(links, tx_nodes, ues, g)
        try:
            result = pc.zf_precoder(comp, budgets, noise_dbm)
            virtual += pc.sum_capacity_bpshz(result)
        except pc.ZfInfeasibleError:
            pass
    virtual /= num_groups
    return baseline, virtual


def select_active_rus(
    scenario: Scenario,
    candidate_rus: list[int],
    objective: RuSelectionObjective = RuSelectionObjective.MAX_END_TO_END,
    trial: int = 0,
    num_groups: int | None = None,
) -> list[int]:
    """Greedy prefix sweep over rate-ordered RU candidates.

    Evaluates the downlink end-to-end rate for every prefix size and
    returns the best prefix (possibly empty).
    """
    if objective is not RuSelectionObjective.MAX_END_TO_END:
        raise ValueError("unknown objective")
    best_rate = -1.0
    best_prefix: list[int] = []
    for k in range(len(candidate_rus) + 1):
        prefix = candidate_rus[:k]
        round_ = run_downlink_round(
            scenario, active_ru_ids=prefix, trial=trial, num_groups=num_groups
        )
        rate = round_.sum_rate_bpshz()
        if rate > best_rate + 1e-12:
            best_rate = rate
            best_prefix = list(prefix)
    return best_prefix
