"""Scenario description: nodes, geometry, mobility and OFDM numerology.

All objects here are immutable value types; operations return new copies.
Deterministic seeding for everything downstream flows from ``Scenario.seed``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

SPEED_OF_LIGHT_MPS = 299792458.0


class NodeKind(Enum):
    GNB = "gnb"
    RU = "ru"
    UE = "ue"


class MobilityLabel(Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CUSTOM = "custom"


# (gNB ground speed, UE speed relative to the gNB), km/h
_MOBILITY_SPEEDS_KMH = {
    MobilityLabel.LOW: (0.1, 0.01),
    MobilityLabel.MEDIUM: (3.0, 0.3),
    MobilityLabel.HIGH: (10.0, 1.0),
}

TX_POWER_MIN_DBM = -10.0
TX_POWER_MAX_DBM = 50.0


def kmh_to_mps(v_kmh: float) -> float:
    return v_kmh / 3.6


@dataclass(frozen=True)
class NodeSpec:
    id: int
    kind: NodeKind
    num_antennas: int
    tx_power_dbm: float
    position_m: tuple[float, float, float]
    velocity_mps: tuple[float, float, float]

    def speed_mps(self) -> float:
        return float(np.linalg.norm(self.velocity_mps))


@dataclass(frozen=True)
class OfdmConfig:
    fc_hz: float = 3.5e9
    scs_hz: float = 15e3
    num_subcarriers: int = 512
    symbols_per_slot: int = 14

    def bandwidth_hz(self) -> float:
        return self.scs_hz * self.num_subcarriers

    def symbol_duration_s(self) -> float:
        return 1.0 / self.scs_hz

    def slot_duration_s(self) -> float:
        return self.symbols_per_slot / self.scs_hz


@dataclass(frozen=True)
class MobilityProfile:
    label: MobilityLabel
    gnb_speed_kmh: float
    ue_relative_speed_kmh: float

    @classmethod
    def from_label(cls, label: MobilityLabel | str) -> "MobilityProfile":
        if isinstance(label, str):
            label = MobilityLabel(label.lower())
        if label is MobilityLabel.CUSTOM:
            raise ValueError("custom mobility requires explicit speeds")
        gnb, ue = _MOBILITY_SPEEDS_KMH[label]
        return cls(label=label, gnb_speed_kmh=gnb, ue_relative_speed_kmh=ue)


@dataclass(frozen=True)
class Scenario:
    nodes: tuple[NodeSpec, ...]
    ofdm: OfdmConfig
    mobility: MobilityProfile
    noise_figure_db: float
    seed: int
    duration_slots: int

    def gnb(self) -> NodeSpec:
        return next(n for n in self.nodes if n.kind is NodeKind.GNB)

    def rus(self) -> list[NodeSpec]:
        return [n for n in self.nodes if n.kind is NodeKind.RU]

    def ues(self) -> list[NodeSpec]:
        return [n for n in self.nodes if n.kind is NodeKind.UE]

    def node_by_id(self, node_id: int) -> NodeSpec:
        return next(n for n in self.nodes if n.id == node_id)


def validate(scenario: Scenario) -> list[str]:
    """Check all scenario invariants; returns a list of violation messages.

    An empty list means the scenario is valid. Violations are reported,
    never raised, so a harness can show all of them at once.
    """
    violations: list[str] = []

    ids = [n.id for n in scenario.nodes]
    if len(set(ids)) != len(ids):
        violations.append("node ids must be unique")

    n_gnb = sum(1 for n in scenario.nodes if n.kind is NodeKind.GNB)
    if n_gnb != 1:
        violations.append("exactly one gNB required (found %d)" % n_gnb)

    if not any(n.kind is NodeKind.UE for n in scenario.nodes):
        violations.append("at least one UE required")

    for n in scenario.nodes:
        if n.num_antennas < 1:
            violations.append("node %d: num_antennas must be >= 1" % n.id)
        if not (TX_POWER_MIN_DBM <= n.tx_power_dbm <= TX_POWER_MAX_DBM):
            violations.append(
                "node %d: tx_power_dbm %.1f outside [%.0f, %.0f]"
                % (n.id, n.tx_power_dbm, TX_POWER_MIN_DBM, TX_POWER_MAX_DBM)
            )

    ofdm = scenario.ofdm
    if ofdm.fc_hz <= 0:
        violations.append("ofdm.fc_hz must be positive")
    if ofdm.scs_hz <= 0 or ofdm.num_subcarriers < 1:
        violations.append("ofdm bandwidth must be positive")
    if ofdm.symbols_per_slot < 1:
        violations.append("ofdm.symbols_per_slot must be >= 1")

    mob = scenario.mobility
    if mob.gnb_speed_kmh < 0 or mob.ue_relative_speed_kmh < 0:
        violations.append("mobility speeds must be non-negative")
    if mob.label is not MobilityLabel.CUSTOM:
        expected = _MOBILITY_SPEEDS_KMH[mob.label]
        if (mob.gnb_speed_kmh, mob.ue_relative_speed_kmh) != expected:
            violations.append(
                "mobility label %s requires speeds %s km/h"
                % (mob.label.value, expected)
            )

    if scenario.duration_slots < 1:
        violations.append("duration_slots must be >= 1")

    return violations


def doppler_hz(speed_mps: float, fc_hz: float) -> float:
    """Maximum Doppler shift f_d = v * f_c / c for ground speed v."""
    if speed_mps < 0:
        raise ValueError("speed_mps must be non-negative")
    if fc_hz <= 0:
        raise ValueError("fc_hz must be positive")
    return speed_mps * fc_hz / SPEED_OF_LIGHT_MPS


def link_doppler_hz(tx: NodeSpec, rx: NodeSpec, fc_hz: float) -> float:
    """Doppler spread of a link: both endpoints move against the scatterers,
    so the ground speeds add (worst-case Clarke spectrum width)."""
    return doppler_hz(tx.speed_mps() + rx.speed_mps(), fc_hz)


def advance_positions(scenario: Scenario, dt_s: float) -> Scenario:
    """Rectilinear constant-velocity motion: position += velocity * dt."""
    if dt_s < 0:
        raise ValueError("dt_s must be non-negative")
    moved = tuple(
        replace(
            n,
            position_m=tuple(
                p + v * dt_s for p, v in zip(n.position_m, n.velocity_mps)
            ),
        )
        for n in scenario.nodes
    )
    return replace(scenario, nodes=moved)
