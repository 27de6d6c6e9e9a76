"""Per-link MIMO channel generation.

Pathloss follows the TR 38.901 UMi street-canyon closed forms; small-scale
fading is flat Rayleigh per subcarrier group with Jakes-correlated
(Gauss-Markov) time evolution. All randomness is owned by a per-link
deterministic stream derived from the scenario seed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import j0

from .scenario import NodeSpec, OfdmConfig, link_doppler_hz

NUM_SUBCARRIER_GROUPS = 8
THERMAL_NOISE_DBM_PER_HZ = -174.0


@dataclass(frozen=True)
class ChannelMatrix:
    entries: np.ndarray  # complex, (rx_ant, tx_ant)
    subcarrier_index: int = 0
    time_slot: int = 0


@dataclass
class LinkState:
    """One tx->rx link: pathloss, LOS state, Doppler and the current fading.

    ``fading`` has shape (num_groups, rx_ant, tx_ant) and already includes
    the amplitude scaling 10^(-pathloss_db/20). ``rng`` is the link's
    private random stream; evolution is sequential per link.
    """

    tx_id: int
    rx_id: int
    n_tx: int
    n_rx: int
    doppler_hz: float
    pathloss_db: float
    los: bool
    rng: np.random.Generator
    fading: np.ndarray | None = None
    num_groups: int = NUM_SUBCARRIER_GROUPS

    def amplitude(self) -> float:
        return 10.0 ** (-self.pathloss_db / 20.0)


def pathloss_db(distance_m: float, fc_ghz: float, los: bool) -> float:
    """TR 38.901 UMi street-canyon pathloss in dB.

    Distances below 1 m are clamped to 1 m.
    """
    if fc_ghz <= 0:
        raise ValueError("fc_ghz must be positive")
    d = max(float(distance_m), 1.0)
    pl_los = 32.4 + 21.0 * np.log10(d) + 20.0 * np.log10(fc_ghz)
    if los:
        return float(pl_los)
    pl_nlos = 35.3 * np.log10(d) + 22.4 + 21.3 * np.log10(fc_ghz)
    return float(max(pl_los, pl_nlos))


def los_probability(distance_m: float) -> float:
    """UMi LOS probability as a function of 2D distance."""
    d = max(float(distance_m), 1.0)
    return min(18.0 / d, 1.0) * (1.0 - np.exp(-d / 36.0)) + np.exp(-d / 36.0)


def make_link(
    tx: NodeSpec,
    rx: NodeSpec,
    ofdm: OfdmConfig,
    root_seed: int,
    trial: int = 0,
    num_groups: int = NUM_SUBCARRIER_GROUPS,
) -> LinkState:
    """Build a link with its own deterministic random stream.

    The stream is keyed by (root seed, trial, tx id, rx id), so adding or
    removing other links never perturbs this one.
    """
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=root_seed, spawn_key=(trial, tx.id, rx.id))
    )
    dist = float(np.linalg.norm(np.subtract(rx.position_m, tx.position_m)))
    los = bool(rng.random() < los_probability(dist))
    link = LinkState(
        tx_id=tx.id,
        rx_id=rx.id,
        n_tx=tx.num_antennas,
        n_rx=rx.num_antennas,
        doppler_hz=link_doppler_hz(tx, rx, ofdm.fc_hz),
        pathloss_db=pathloss_db(dist, ofdm.fc_hz / 1e9, los),
        los=los,
        rng=rng,
        num_groups=num_groups,
    )
    link.fading = _draw_iid(link) * link.amplitude()
    return link


def _draw_iid(link: LinkState) -> np.ndarray:
    """Unit-power i.i.d. complex Gaussian block, (groups, rx, tx)."""
    shape = (link.num_groups, link.n_rx, link.n_tx)
    return (link.rng.standard_normal(shape) + 1j * link.rng.standard_normal(shape)) / np.sqrt(2.0)


def draw_fading(link: LinkState, rng: np.random.Generator) -> ChannelMatrix:
    """Fresh i.i.d. Rayleigh draw for one subcarrier group.

    Entries are CN(0, 1) scaled by 10^(-pathloss_db/20).
    """
    shape = (link.n_rx, link.n_tx)
    h = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return ChannelMatrix(entries=h * link.amplitude())


def evolve_fading(link: LinkState, dt_s: float) -> LinkState:
    """Advance the fading by dt via the Gauss-Markov / Jakes rule.

    H' = rho * H + sqrt(1 - rho^2) * W with rho = J0(2 pi f_d dt) and W a
    fresh i.i.d. draw at the link's power, so mean power is preserved.
    """
    if dt_s < 0:
        raise ValueError("dt_s must be non-negative")
    if link.fading is None:
        raise ValueError("link has no fading state")
    rho = float(j0(2.0 * np.pi * link.doppler_hz * dt_s))
    if rho == 1.0:
        return link
    w = _draw_iid(link) * link.amplitude()
    new_fading = rho * link.fading + np.sqrt(max(0.0, 1.0 - rho * rho)) * w
    return replace(link, fading=new_fading)


def noise_power_dbm(bandwidth_hz: float, noise_figure_db: float) -> float:
    return THERMAL_NOISE_DBM_PER_HZ + 10.0 * np.log10(bandwidth_hz) + noise_figure_db


def link_snr_db(
    link: LinkState,
    tx_power_dbm: float,
    ofdm: OfdmConfig,
    noise_figure_db: float,
) -> float:
    """Average per-entry SNR of the link: tx power minus pathloss minus noise."""
    return tx_power_dbm - link.pathloss_db - noise_power_dbm(
        ofdm.bandwidth_hz(), noise_figure_db
    )


def jakes_process(
    fd_dt: float,
    num_steps: int,
    rng: np.random.Generator,
    num_paths: int = 32,
) -> np.ndarray:
    """Clarke sum-of-sinusoids fading sample path, unit average power.

    Band-limited by construction, so in contrast to the Gauss-Markov
    surrogate it is genuinely predictable; used by the channel-prediction
    benchmark.
    """
    if num_steps < 1:
        raise ValueError("num_steps must be >= 1")
    alpha = rng.uniform(0.0, 2.0 * np.pi, size=num_paths)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=num_paths)
    t = np.arange(num_steps)[:, None]
    phase = 2.0 * np.pi * fd_dt * np.cos(alpha)[None, :] * t + phi[None, :]
    return np.exp(1j * phase).sum(axis=1) / np.sqrt(num_paths)
