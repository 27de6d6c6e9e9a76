"""Residual synchronization impairments for coherent transmission.

CFO, timing offset and oscillator phase drift are exogenous inputs; no
synchronization algorithm is modeled. The non-coherent uplink ignores
phase offsets entirely.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelMatrix

TIMING_BOUND_FRACTION = 0.1  # of one OFDM symbol duration


def wrap_phase(x):
    """Wrap angle(s) to (-pi, pi]."""
    w = np.remainder(np.asarray(x, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    return float(w) if np.isscalar(x) or np.ndim(x) == 0 else w


@dataclass(frozen=True)
class SyncState:
    """Per-node residual offsets, keyed by node id; absent means perfect."""

    cfo_hz: dict = field(default_factory=dict)
    timing_offset_s: dict = field(default_factory=dict)
    phase_offset_rad: dict = field(default_factory=dict)
    phase_noise_std_rad_per_slot: float = 0.0

    def cfo(self, node_id: int) -> float:
        return self.cfo_hz.get(node_id, 0.0)

    def phase(self, node_id: int) -> float:
        return self.phase_offset_rad.get(node_id, 0.0)

    def timing(self, node_id: int) -> float:
        return self.timing_offset_s.get(node_id, 0.0)


def apply_cfo(
    h_effective: ChannelMatrix,
    cfo_hz: float,
    elapsed_s: float,
    cols: slice | None = None,
) -> ChannelMatrix:
    """Rotate the offending node's channel columns by exp(j 2 pi cfo t)."""
    rot = np.exp(1j * 2.0 * np.pi * cfo_hz * elapsed_s)
    entries = h_effective.entries.copy()
    if cols is None:
        entries *= rot
    else:
        entries[:, cols] *= rot
    return replace(h_effective, entries=entries)


def apply_timing_offset(
    h_per_subcarrier: list[ChannelMatrix],
    offset_s: float,
    scs_hz: float,
    cols: slice | None = None,
) -> list[ChannelMatrix]:
    """Linear phase ramp across subcarriers caused by a timing offset.

    Subcarrier k picks up exp(-j 2 pi k scs offset) on the offending
    node's columns. Offsets beyond 10% of the symbol duration fall
    outside the cyclic-prefix model and are rejected.
    """
    bound = TIMING_BOUND_FRACTION / scs_hz
    if abs(offset_s) > bound:
        raise ValueError(
            "timing offset exceeds CP model: |%.3e| s > %.3e s" % (offset_s, bound)
        )
    out = []
    for cm in h_per_subcarrier:
        rot = np.exp(-1j * 2.0 * np.pi * cm.subcarrier_index * scs_hz * offset_s)
        entries = cm.entries.copy()
        if cols is None:
            entries *= rot
        else:
            entries[:, cols] *= rot
        out.append(replace(cm, entries=entries))
    return out


def evolve_phase_noise(state: SyncState, rng: np.random.Generator) -> SyncState:
    """One slot of oscillator drift: each node's phase offset takes a
    Gaussian random-walk step and is wrapped."""
    std = state.phase_noise_std_rad_per_slot
    if std == 0.0:
        return state
    new_phase = {
        node_id: float(wrap_phase(phase + rng.normal(0.0, std)))
        for node_id, phase in state.phase_offset_rad.items()
    }
    return replace(state, phase_offset_rad=new_phase)


def coherent_capacity_under_impairment(
    scenario,
    sync: SyncState,
    csi_age_s: float,
    trial: int = 0,
    num_groups: int | None = None,
) -> float:
    """Realized coherent downlink sum rate with aged CSI and sync errors.

    The ZF precoder is computed from CSI measured ``csi_age_s`` earlier;
    the channel applied at transmit time has evolved and carries each
    node's CFO/phase rotation. Residual inter-stream leakage is counted
    as noise in the SINR denominator.
    """
    from . import engine  # deferred: engine imports this module

    return engine.impaired_downlink_sum_rate(
        scenario, sync, csi_age_s, trial=trial, num_groups=num_groups
    )
