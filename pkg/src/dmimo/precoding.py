"""Zero-forcing multi-user precoding and capacity formulas.

The precoder operates on a composite channel stacking every destination
UE's block against the full virtual transmit array (gNB + RUs). Power is
normalized so the tightest per-node budget binds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelMatrix

RANK_TOL_REL = 1e-12


class ZfInfeasibleError(ValueError):
    pass


@dataclass(frozen=True)
class CompositeChannel:
    """Per-UE channel blocks against the whole virtual array.

    ``node_antenna_counts`` partitions the transmit antennas (columns)
    into per-node groups, in order, for per-node power accounting.
    """

    per_ue_blocks: tuple[np.ndarray, ...]
    node_antenna_counts: tuple[int, ...]

    @property
    def total_tx_antennas(self) -> int:
        return int(sum(self.node_antenna_counts))

    def stacked(self) -> np.ndarray:
        return np.vstack(self.per_ue_blocks)

    def stream_counts(self) -> list[int]:
        return [b.shape[0] for b in self.per_ue_blocks]


@dataclass(frozen=True)
class PrecodingResult:
    precoder: np.ndarray  # (total_tx_ant, total_streams), power included
    per_ue_sinr_db: tuple[tuple[float, ...], ...]  # per UE, per stream
    per_ue_rate_bpshz: tuple[float, ...]


def dbm_to_mw(x_dbm: float) -> float:
    return 10.0 ** (x_dbm / 10.0)


def zf_precoder(
    h: CompositeChannel,
    node_power_budgets_dbm: list[float] | tuple[float, ...],
    noise_power_dbm: float,
) -> PrecodingResult:
    """Zero-forcing precoder under per-node power budgets.

    W = H^H (H H^H)^-1 with unit-norm columns, equal power per stream,
    globally scaled until the tightest node budget binds. The effective
    channel H W is diagonal, so per-stream SINR is interference-free.
    """
    if len(h.per_ue_blocks) == 0:
        raise ValueError("at least one UE block required")
    if len(node_power_budgets_dbm) != len(h.node_antenna_counts):
        raise ValueError("one power budget per node required")

    hs = h.stacked()
    n_streams, n_tx = hs.shape
    if n_streams > n_tx:
        raise ZfInfeasibleError(
            "ZF infeasible: %d streams exceed %d transmit antennas" % (n_streams, n_tx)
        )

    sv = np.linalg.svd(hs, compute_uv=False)
    rank = int(np.sum(sv > RANK_TOL_REL * sv[0]))
    if rank < n_streams:
        raise ZfInfeasibleError(
            "ZF infeasible: rank %d < streams %d" % (rank, n_streams)
        )

    w0 = hs.conj().T @ np.linalg.inv(hs @ hs.conj().T)
    col_norms = np.linalg.norm(w0, axis=0)
    w = w0 / col_norms
    # diagonal effective gain of the normalized precoder
    diag_gain = 1.0 / col_norms

    # equal power p per stream; node n emits p * ||W_rows(n)||_F^2
    budgets_mw = np.array([dbm_to_mw(b) for b in node_power_budgets_dbm])
    row_start = np.cumsum((0,) + tuple(h.node_antenna_counts))
    node_norms = np.array(
        [
            np.sum(np.abs(w[row_start[i]: row_start[i + 1], :]) ** 2)
            for i in range(len(h.node_antenna_counts))
        ]
    )
    active = node_norms > 0
    if not np.any(active):
        raise ZfInfeasibleError("ZF infeasible: precoder is identically zero")
    p_stream = float(np.min(budgets_mw[active] / node_norms[active]))

    noise_mw = dbm_to_mw(noise_power_dbm)
    sinr_lin = p_stream * diag_gain**2 / noise_mw

    per_ue_sinr: list[tuple[float, ...]] = []
    per_ue_rate: list[float] = []
    idx = 0
    for n_ue_streams in h.stream_counts():
        s = sinr_lin[idx: idx + n_ue_streams]
        per_ue_sinr.append(tuple(10.0 * np.log10(np.maximum(s, 1e-300))))
        per_ue_rate.append(float(np.sum(np.log2(1.0 + s))))
        idx += n_ue_streams

    return PrecodingResult(
        precoder=w * np.sqrt(p_stream),
        per_ue_sinr_db=tuple(per_ue_sinr),
        per_ue_rate_bpshz=tuple(per_ue_rate),
    )


def sum_capacity_bpshz(result: PrecodingResult) -> float:
    return float(sum(result.per_ue_rate_bpshz))


def baseline_capacity_bpshz(
    h_direct: ChannelMatrix | np.ndarray,
    tx_power_dbm: float,
    noise_power_dbm: float,
) -> float:
    """Shannon MIMO capacity with equal power split over transmit antennas:
    log2 det(I + P/(Nt sigma^2) H H^H)."""
    hm = h_direct.entries if isinstance(h_direct, ChannelMatrix) else h_direct
    n_rx, n_tx = hm.shape
    snr = dbm_to_mw(tx_power_dbm) / dbm_to_mw(noise_power_dbm)
    gram = np.eye(n_rx) + (snr / n_tx) * (hm @ hm.conj().T)
    sign, logdet = np.linalg.slogdet(gram)
    if sign.real <= 0:
        return 0.0
    return float(logdet / np.log(2.0))


def relative_gain(virtual_capacity: float, baseline_capacity: float) -> float:
    if baseline_capacity <= 0:
        raise ValueError("undefined relative gain: baseline capacity is zero")
    return virtual_capacity / baseline_capacity
