"""Link adaptation: MCS table, effective-SNR mapping, BLER and throughput.

Channel coding is abstracted: a logistic BLER curve around each entry's
SNR threshold stands in for a full FEC chain.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .detection import CONSTELLATIONS

BLER_SLOPE_DB = 0.5
BLER_FLOOR = 1e-6
MIN_GOODPUT_BPS = 1e3
DEFAULT_OVERHEAD = 0.86
SHANNON_GAP_DB = 2.0


@dataclass(frozen=True)
class McsEntry:
    index: int
    modulation: str  # constellation label
    code_rate: float
    spectral_eff_bpshz: float
    snr_threshold_db: float


@dataclass(frozen=True)
class ThroughputReport:
    chosen_mcs: int | None
    bler: float
    goodput_mbps: float


def _threshold_for(se: float) -> float:
    # Shannon-inverse threshold plus a fixed implementation gap
    return 10.0 * np.log10(2.0**se - 1.0) + SHANNON_GAP_DB


def default_mcs_table() -> list[McsEntry]:
    specs = [
        ("qpsk", 0.33),
        ("qpsk", 0.50),
        ("qpsk", 0.66),
        ("qam16", 0.50),
        ("qam16", 0.66),
        ("qam16", 0.75),
        ("qam64", 0.75),
        ("qam64", 0.85),
    ]
    table = []
    for i, (mod, rate) in enumerate(specs):
        se = CONSTELLATIONS[mod].bits_per_symbol * rate
        table.append(
            McsEntry(
                index=i,
                modulation=mod,
                code_rate=rate,
                spectral_eff_bpshz=se,
                snr_threshold_db=_threshold_for(se),
            )
        )
    return table


def load_mcs_table_csv(path: str) -> list[McsEntry]:
    """Read an MCS table override: columns index,modulation,code_rate,snr_threshold_db."""
    table = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            mod = row["modulation"].lower()
            rate = float(row["code_rate"])
            se = CONSTELLATIONS[mod].bits_per_symbol * rate
            table.append(
                McsEntry(
                    index=int(row["index"]),
                    modulation=mod,
                    code_rate=rate,
                    spectral_eff_bpshz=se,
                    snr_threshold_db=float(row["snr_threshold_db"]),
                )
            )
    table.sort(key=lambda e: e.index)
    validate_mcs_table(table)
    return table


def validate_mcs_table(table: list[McsEntry]) -> None:
    if not table:
        raise ValueError("MCS table must not be empty")
    for a, b in zip(table, table[1:]):
        if not (b.spectral_eff_bpshz > a.spectral_eff_bpshz):
            raise ValueError("MCS table spectral efficiencies must strictly increase")
        if not (b.snr_threshold_db > a.snr_threshold_db):
            raise ValueError("MCS table SNR thresholds must strictly increase")


def effective_snr_db(per_subcarrier_snr_db: list[float] | np.ndarray) -> float:
    """Capacity-based effective SNR: the single SNR whose Shannon rate
    equals the mean per-subcarrier Shannon rate."""
    snrs = np.asarray(per_subcarrier_snr_db, dtype=float)
    if snrs.size == 0:
        raise ValueError("per-subcarrier SNR list must not be empty")
    lin = 10.0 ** (snrs / 10.0)
    eff = 2.0 ** np.mean(np.log2(1.0 + lin)) - 1.0
    return float(10.0 * np.log10(max(eff, 1e-300)))


def bler(snr_eff_db: float, mcs: McsEntry) -> float:
    """Logistic BLER abstraction centered on the entry's 10% point."""
    x = (snr_eff_db - mcs.snr_threshold_db) / BLER_SLOPE_DB
    # clamp the exponent to keep exp() finite
    val = 1.0 / (1.0 + np.exp(min(x, 700.0)))
    return float(min(max(val, BLER_FLOOR), 1.0))


def max_throughput(
    snr_eff_db: float,
    table: list[McsEntry],
    bandwidth_hz: float,
    overhead: float = DEFAULT_OVERHEAD,
) -> ThroughputReport:
    """Pick the MCS maximizing spectral efficiency x (1 - BLER)."""
    if not table:
        raise ValueError("MCS table must not be empty")
    if not (0.0 < overhead <= 1.0):
        raise ValueError("overhead must be in (0, 1]")

    best_entry = None
    best_score = -1.0
    for entry in table:
        score = entry.spectral_eff_bpshz * (1.0 - bler(snr_eff_db, entry))
        if score > best_score:
            best_score = score
            best_entry = entry

    goodput_bps = best_score * bandwidth_hz * overhead
    if goodput_bps < MIN_GOODPUT_BPS:
        return ThroughputReport(chosen_mcs=None, bler=1.0, goodput_mbps=0.0)
    return ThroughputReport(
        chosen_mcs=best_entry.index,
        bler=bler(snr_eff_db, best_entry),
        goodput_mbps=goodput_bps / 1e6,
    )
