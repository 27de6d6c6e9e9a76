"""Uplink physical-layer detection.

Alamouti space-time block encoding/decoding, MMSE-ordered successive
interference cancellation, a brute-force joint-ML oracle, and
post-detection fusion of multiple receive nodes' decisions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .channel import ChannelMatrix

_MIN_NOISE_VAR = 1e-12
ML_MAX_HYPOTHESES = 4096


class FusionStrategy(Enum):
    RELIABILITY_WEIGHTED = "reliability_weighted"
    MAJORITY_VOTE = "majority_vote"


def _gray_levels(bits: int) -> np.ndarray:
    """PAM levels indexed by gray-coded bit groups (adjacent levels differ
    in one bit)."""
    n = 1 << bits
    order = [i ^ (i >> 1) for i in range(n)]  # gray sequence
    levels = np.empty(n)
    for pos, code in enumerate(order):
        levels[code] = 2 * pos - (n - 1)
    return levels


def _build_points(bits_per_symbol: int) -> np.ndarray:
    if bits_per_symbol == 1:
        return np.array([1.0 + 0j, -1.0 + 0j])
    half = bits_per_symbol // 2
    lv = _gray_levels(half)
    n = 1 << bits_per_symbol
    pts = np.empty(n, dtype=complex)
    for idx in range(n):
        i_bits = idx >> half
        q_bits = idx & ((1 << half) - 1)
        pts[idx] = lv[i_bits] + 1j * lv[q_bits]
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


@dataclass(frozen=True)
class Constellation:
    label: str
    points: np.ndarray
    bits_per_symbol: int

    def nearest(self, z: complex) -> int:
        # argmin takes the first occurrence, so ties break to lowest index
        return int(np.argmin(np.abs(self.points - z) ** 2))

    def bits_of(self, index: int) -> np.ndarray:
        return np.array(
            [(index >> (self.bits_per_symbol - 1 - i)) & 1 for i in range(self.bits_per_symbol)],
            dtype=np.int8,
        )

    def bit_llrs(self, z: complex, snr_lin: float) -> np.ndarray:
        """Max-log LLRs (positive favors bit 1) for a soft estimate z with
        post-detection SNR snr_lin on a unit-energy constellation."""
        d2 = np.abs(self.points - z) ** 2
        llrs = np.empty(self.bits_per_symbol)
        for i in range(self.bits_per_symbol):
            shift = self.bits_per_symbol - 1 - i
            mask = (np.arange(len(self.points)) >> shift) & 1
            llrs[i] = snr_lin * (d2[mask == 0].min() - d2[mask == 1].min())
        return llrs


CONSTELLATIONS = {
    "bpsk": Constellation("bpsk", _build_points(1), 1),
    "qpsk": Constellation("qpsk", _build_points(2), 2),
    "qam16": Constellation("qam16", _build_points(4), 4),
    "qam64": Constellation("qam64", _build_points(6), 6),
}


def make_constellation(label: str) -> Constellation:
    return CONSTELLATIONS[label.lower()]


@dataclass(frozen=True)
class StbcBlock:
    code_matrix: np.ndarray  # 2x2, rows = time, columns = antennas


@dataclass
class DetectionReport:
    per_stream_symbols: np.ndarray
    per_stream_post_snr_db: np.ndarray
    decode_order: list[int]
    bit_decisions: np.ndarray  # int8, streams concatenated in stream order
    bit_reliabilities: np.ndarray  # |LLR| per bit
    degenerate: bool = False

    def signed_reliabilities(self) -> np.ndarray:
        return self.bit_reliabilities * (2.0 * self.bit_decisions - 1.0)


def alamouti_encode(s1: complex, s2: complex) -> StbcBlock:
    """Alamouti block: [[s1, s2], [-s2*, s1*]] (rows = time, cols = antennas)."""
    return StbcBlock(
        code_matrix=np.array(
            [[s1, s2], [-np.conj(s2), np.conj(s1)]], dtype=complex
        )
    )


def alamouti_decode(
    y: np.ndarray,
    h: ChannelMatrix | np.ndarray,
    noise_var: float,
    constellation: Constellation,
) -> DetectionReport:
    """Linear Alamouti combining over a 2-slot block.

    y: (n_rx, 2) received samples, one column per time slot.
    h: (n_rx, 2) channel, assumed constant over the block.
    The combined gain is g = sum_rx(|h1|^2 + |h2|^2); post-SNR = g / noise_var.
    """
    hm = h.entries if isinstance(h, ChannelMatrix) else np.asarray(h)
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    if y.shape[0] != hm.shape[0]:
        y = y.reshape(hm.shape[0], 2)
    h1, h2 = hm[:, 0], hm[:, 1]
    g = float(np.sum(np.abs(h1) ** 2 + np.abs(h2) ** 2))

    if g == 0.0:
        zeros = np.zeros(2 * constellation.bits_per_symbol)
        return DetectionReport(
            per_stream_symbols=np.array([constellation.points[0]] * 2),
            per_stream_post_snr_db=np.array([-np.inf, -np.inf]),
            decode_order=[0, 1],
            bit_decisions=np.zeros(2 * constellation.bits_per_symbol, dtype=np.int8),
            bit_reliabilities=zeros,
            degenerate=True,
        )

    z1 = np.sum(np.conj(h1) * y[:, 0] + h2 * np.conj(y[:, 1])) / g
    z2 = np.sum(np.conj(h2) * y[:, 0] - h1 * np.conj(y[:, 1])) / g
    snr_lin = g / max(noise_var, _MIN_NOISE_VAR)

    symbols, bits, rels = [], [], []
    for z in (z1, z2):
        idx = constellation.nearest(z)
        symbols.append(constellation.points[idx])
        llrs = constellation.bit_llrs(z, snr_lin)
        bits.append((llrs > 0).astype(np.int8))
        rels.append(np.abs(llrs))

    return DetectionReport(
        per_stream_symbols=np.array(symbols),
        per_stream_post_snr_db=np.full(2, 10.0 * np.log10(snr_lin)),
        decode_order=[0, 1],
        bit_decisions=np.concatenate(bits),
        bit_reliabilities=np.concatenate(rels),
    )


def sic_order_and_sinrs(
    h: ChannelMatrix | np.ndarray, noise_var: float
) -> tuple[list[int], np.ndarray]:
    """Detection order and post-MMSE SINR per stream for SIC.

    Purely channel-dependent (no received signal), so link adaptation can
    reuse it without running symbols through the detector. Assumes each
    detected stream is cancelled perfectly before the next step.
    """
    hm = h.entries if isinstance(h, ChannelMatrix) else np.asarray(h)
    n_rx, n_str = hm.shape
    if n_str > n_rx:
        raise ValueError(
            "underdetermined without coding: %d streams, %d rx antennas" % (n_str, n_rx)
        )
    nv = max(noise_var, _MIN_NOISE_VAR)
    remaining = list(range(n_str))
    order: list[int] = []
    sinr_out = np.zeros(n_str)
    while remaining:
        hr = hm[:, remaining]
        a_inv = np.linalg.inv(hr @ hr.conj().T + nv * np.eye(n_rx))
        sinrs = []
        for k in remaining:
            hk = hm[:, k]
            c = float(np.real(hk.conj() @ a_inv @ hk))
            c = min(c, 1.0 - 1e-15)
            sinrs.append(c / (1.0 - c))
        best_pos = int(np.argmax(sinrs))
        k = remaining.pop(best_pos)
        sinr_out[k] = sinrs[best_pos]
        order.append(k)
    return order, sinr_out


def sic_detect(
    y: np.ndarray,
    h: ChannelMatrix | np.ndarray,
    constellation: Constellation,
    noise_var: float,
) -> DetectionReport:
    """MMSE-ordered successive interference cancellation (V-BLAST style).

    At each step the undetected stream with the highest post-MMSE SINR is
    equalized, sliced to the nearest point and subtracted.
    """
    hm = h.entries if isinstance(h, ChannelMatrix) else np.asarray(h)
    y = np.asarray(y, dtype=complex).ravel()
    n_rx, n_str = hm.shape
    order, sinr_all = sic_order_and_sinrs(hm, noise_var)

    nv = max(noise_var, _MIN_NOISE_VAR)
    remaining = list(range(n_str))
    residual = y.copy()

    symbols = np.zeros(n_str, dtype=complex)
    post_snr_db = np.zeros(n_str)
    bits = [None] * n_str
    rels = [None] * n_str

    for k in order:
        hr = hm[:, remaining]
        a_inv = np.linalg.inv(hr @ hr.conj().T + nv * np.eye(n_rx))
        sinr = sinr_all[k]

        hk = hm[:, k]
        filt = a_inv @ hk
        z = (filt.conj() @ residual) / (filt.conj() @ hk)

        idx = constellation.nearest(z)
        symbols[k] = constellation.points[idx]
        post_snr_db[k] = 10.0 * np.log10(max(sinr, 1e-300))
        llrs = constellation.bit_llrs(complex(z), sinr)
        bits[k] = (llrs > 0).astype(np.int8)
        rels[k] = np.abs(llrs)

        residual = residual - hk * symbols[k]
        remaining.remove(k)

    return DetectionReport(
        per_stream_symbols=symbols,
        per_stream_post_snr_db=post_snr_db,
        decode_order=order,
        bit_decisions=np.concatenate(bits),
        bit_reliabilities=np.concatenate(rels),
    )


def ml_joint_detect(
    y: np.ndarray,
    h: ChannelMatrix | np.ndarray,
    constellation: Constellation,
    noise_var: float,
) -> DetectionReport:
    """Exhaustive maximum-likelihood detection over all symbol tuples."""
    hm = h.entries if isinstance(h, ChannelMatrix) else np.asarray(h)
    y = np.asarray(y, dtype=complex).ravel()
    n_rx, n_str = hm.shape
    m = len(constellation.points)
    if m**n_str > ML_MAX_HYPOTHESES:
        raise ValueError("oracle too large: %d hypotheses" % (m**n_str))

    combos = np.array(list(itertools.product(range(m), repeat=n_str)))
    s_all = constellation.points[combos]  # (n_hyp, n_str)
    resid = y[None, :] - s_all @ hm.T
    metrics = np.sum(np.abs(resid) ** 2, axis=1)
    best = int(np.argmin(metrics))
    nv = max(noise_var, _MIN_NOISE_VAR)

    bpc = constellation.bits_per_symbol
    bits = np.zeros(n_str * bpc, dtype=np.int8)
    rels = np.zeros(n_str * bpc)
    for k in range(n_str):
        for b in range(bpc):
            shift = bpc - 1 - b
            bitvals = (combos[:, k] >> shift) & 1
            m0 = metrics[bitvals == 0].min()
            m1 = metrics[bitvals == 1].min()
            llr = (m0 - m1) / nv
            bits[k * bpc + b] = 1 if llr > 0 else 0
            rels[k * bpc + b] = abs(llr)

    return DetectionReport(
        per_stream_symbols=constellation.points[combos[best]],
        per_stream_post_snr_db=10.0 * np.log10(
            np.maximum(np.sum(np.abs(hm) ** 2, axis=0) / nv, 1e-300)
        ),
        decode_order=list(range(n_str)),
        bit_decisions=bits,
        bit_reliabilities=rels,
    )


def fuse_decisions(
    copies: list[DetectionReport],
    strategy: FusionStrategy = FusionStrategy.RELIABILITY_WEIGHTED,
) -> np.ndarray:
    """Merge independent nodes' bit decisions into one bit vector."""
    if not copies:
        raise ValueError("at least one copy required")
    lengths = {len(c.bit_decisions) for c in copies}
    if len(lengths) != 1:
        raise ValueError("mismatched bit vector lengths: %s" % sorted(lengths))

    if strategy is FusionStrategy.RELIABILITY_WEIGHTED:
        score = np.sum([c.signed_reliabilities() for c in copies], axis=0)
        best = max(copies, key=lambda c: float(np.mean(c.bit_reliabilities)))
        out = np.where(score > 0, 1, np.where(score < 0, 0, best.bit_decisions))
        return out.astype(np.int8)

    votes = np.sum([c.bit_decisions for c in copies], axis=0)
    n = len(copies)
    best = max(copies, key=lambda c: float(np.mean(c.bit_reliabilities)))
    out = np.where(
        2 * votes > n, 1, np.where(2 * votes < n, 0, best.bit_decisions)
    )
    return out.astype(np.int8)
