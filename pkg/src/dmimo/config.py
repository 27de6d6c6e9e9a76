"""Experiment configuration: scenario geometry builder and INI parsing.

Config files use configparser sections [scenario], [ofdm], [mobility],
[sweep], [sync], [mcs]; key names match the ScenarioParams /
ExperimentConfig field names below (see README for the full schema).
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from .impairments import SyncState
from .scenario import (
    MobilityLabel,
    MobilityProfile,
    NodeKind,
    NodeSpec,
    OfdmConfig,
    Scenario,
    kmh_to_mps,
)

SWEEP_VARIABLES = ("distance_m", "num_rus", "num_ues", "mobility", "cfo_hz")

GNB_ID = 0
RU_ID_BASE = 1
UE_ID_BASE = 101

_GOLDEN_ANGLE = 2.39996322972865332


@dataclass(frozen=True)
class ScenarioParams:
    num_rus: int = 4
    num_ues: int = 1
    ue_distance_m: float = 300.0
    ru_ring_radius_m: float = 30.0
    gnb_antennas: int = 4
    ru_antennas: int = 2
    ue_antennas: int = 2
    gnb_power_dbm: float = 35.0
    ru_power_dbm: float = 26.0
    ue_power_dbm: float = 23.0
    noise_figure_db: float = 7.0
    seed: int = 1
    duration_slots: int = 8
    mobility: str = "low"
    gnb_speed_kmh: float | None = None  # only for mobility = custom
    ue_relative_speed_kmh: float | None = None
    ofdm: OfdmConfig = field(default_factory=OfdmConfig)


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioParams = field(default_factory=ScenarioParams)
    sweep_variable: str = "distance_m"
    sweep_values: tuple = (100.0, 300.0, 1000.0)
    trials: int = 200
    emit_format: str = "csv"
    sync: SyncState = field(default_factory=SyncState)
    csi_age_slots: int = 1
    mcs_table_path: str | None = None
    overhead: float = 0.86

    def validate(self) -> list[str]:
        problems = []
        if self.sweep_variable not in SWEEP_VARIABLES:
            problems.append(
                "unknown sweep variable %r (expected one of %s)"
                % (self.sweep_variable, ", ".join(SWEEP_VARIABLES))
            )
        if not self.sweep_values:
            problems.append("sweep values must not be empty")
        if self.sweep_variable == "mobility":
            bad = [v for v in self.sweep_values if str(v).lower() not in ("low", "medium", "high")]
            if bad:
                problems.append("invalid mobility sweep values: %s" % bad)
        elif self.sweep_variable in ("num_rus", "num_ues"):
            if any(int(v) != float(v) or int(v) < 0 for v in self.sweep_values):
                problems.append("%s sweep values must be non-negative integers" % self.sweep_variable)
        else:
            if any(float(v) < 0 for v in self.sweep_values):
                problems.append("%s sweep values must be non-negative" % self.sweep_variable)
        if self.trials < 1:
            problems.append("trials must be >= 1")
        if self.emit_format not in ("csv", "json"):
            problems.append("emit_format must be csv or json")
        return problems


def _heading(seed: int, node_id: int) -> float:
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(424242, node_id))
    )
    return float(rng.uniform(0.0, 2.0 * np.pi))


def _vel(speed_kmh: float, angle: float) -> np.ndarray:
    v = kmh_to_mps(speed_kmh)
    return np.array([v * np.cos(angle), v * np.sin(angle), 0.0])


def build_scenario(p: ScenarioParams) -> Scenario:
    """Deterministic node layout for one experiment point.

    gNB at the origin; RUs on a ring around it (golden-angle spacing, so a
    prefix of the RU list is stable when the count grows); UEs at
    ``ue_distance_m``. RUs travel with the gNB (convoy); UE velocity is
    the gNB's plus the profile's relative speed along a random heading.
    """
    if p.mobility.lower() == "custom":
        if p.gnb_speed_kmh is None or p.ue_relative_speed_kmh is None:
            raise ValueError("custom mobility requires explicit speeds")
        mobility = MobilityProfile(
            MobilityLabel.CUSTOM, p.gnb_speed_kmh, p.ue_relative_speed_kmh
        )
    else:
        mobility = MobilityProfile.from_label(p.mobility)

    gnb_vel = _vel(mobility.gnb_speed_kmh, _heading(p.seed, GNB_ID))
    nodes = [
        NodeSpec(
            id=GNB_ID,
            kind=NodeKind.GNB,
            num_antennas=p.gnb_antennas,
            tx_power_dbm=p.gnb_power_dbm,
            position_m=(0.0, 0.0, 0.0),
            velocity_mps=tuple(gnb_vel),
        )
    ]
    for i in range(p.num_rus):
        ang = i * _GOLDEN_ANGLE
        nodes.append(
            NodeSpec(
                id=RU_ID_BASE + i,
                kind=NodeKind.RU,
                num_antennas=p.ru_antennas,
                tx_power_dbm=p.ru_power_dbm,
                position_m=(
                    p.ru_ring_radius_m * np.cos(ang),
                    p.ru_ring_radius_m * np.sin(ang),
                    0.0,
                ),
                velocity_mps=tuple(gnb_vel),
            )
        )
    for j in range(p.num_ues):
        ang = 2.0 * np.pi * j / p.num_ues
        ue_vel = gnb_vel + _vel(
            mobility.ue_relative_speed_kmh, _heading(p.seed, UE_ID_BASE + j)
        )
        nodes.append(
            NodeSpec(
                id=UE_ID_BASE + j,
                kind=NodeKind.UE,
                num_antennas=p.ue_antennas,
                tx_power_dbm=p.ue_power_dbm,
                position_m=(
                    p.ue_distance_m * np.cos(ang),
                    p.ue_distance_m * np.sin(ang),
                    0.0,
                ),
                velocity_mps=tuple(ue_vel),
            )
        )

    return Scenario(
        nodes=tuple(nodes),
        ofdm=p.ofdm,
        mobility=mobility,
        noise_figure_db=p.noise_figure_db,
        seed=p.seed,
        duration_slots=p.duration_slots,
    )


def apply_sweep_value(params: ScenarioParams, variable: str, value) -> ScenarioParams:
    if variable == "distance_m":
        return replace(params, ue_distance_m=float(value))
    if variable == "num_rus":
        return replace(params, num_rus=int(value))
    if variable == "num_ues":
        return replace(params, num_ues=int(value))
    if variable == "mobility":
        return replace(params, mobility=str(value).lower())
    if variable == "cfo_hz":
        return params  # handled through SyncState, not geometry
    raise ValueError("unknown sweep variable %r" % variable)


def _get(section, key, cast, default):
    if section is None or key not in section:
        return default
    return cast(section[key])


def load_config(path: str) -> ExperimentConfig:
    """Parse an experiment description from an INI file."""
    cp = configparser.ConfigParser()
    with open(path) as f:
        cp.read_file(f)

    sc = cp["scenario"] if cp.has_section("scenario") else None
    of = cp["ofdm"] if cp.has_section("ofdm") else None
    mo = cp["mobility"] if cp.has_section("mobility") else None
    sw = cp["sweep"] if cp.has_section("sweep") else None
    sy = cp["sync"] if cp.has_section("sync") else None
    mc = cp["mcs"] if cp.has_section("mcs") else None

    ofdm = OfdmConfig(
        fc_hz=_get(of, "fc_hz", float, 3.5e9),
        scs_hz=_get(of, "scs_hz", float, 15e3),
        num_subcarriers=_get(of, "num_subcarriers", int, 512),
        symbols_per_slot=_get(of, "symbols_per_slot", int, 14),
    )
    params = ScenarioParams(
        num_rus=_get(sc, "num_rus", int, 4),
        num_ues=_get(sc, "num_ues", int, 1),
        ue_distance_m=_get(sc, "ue_distance_m", float, 300.0),
        ru_ring_radius_m=_get(sc, "ru_ring_radius_m", float, 30.0),
        gnb_antennas=_get(sc, "gnb_antennas", int, 4),
        ru_antennas=_get(sc, "ru_antennas", int, 2),
        ue_antennas=_get(sc, "ue_antennas", int, 2),
        gnb_power_dbm=_get(sc, "gnb_power_dbm", float, 35.0),
        ru_power_dbm=_get(sc, "ru_power_dbm", float, 26.0),
        ue_power_dbm=_get(sc, "ue_power_dbm", float, 23.0),
        noise_figure_db=_get(sc, "noise_figure_db", float, 7.0),
        seed=_get(sc, "seed", int, 1),
        duration_slots=_get(sc, "duration_slots", int, 8),
        mobility=_get(mo, "label", str, "low"),
        gnb_speed_kmh=_get(mo, "gnb_speed_kmh", float, None),
        ue_relative_speed_kmh=_get(mo, "ue_relative_speed_kmh", float, None),
        ofdm=ofdm,
    )

    variable = _get(sw, "variable", str, "distance_m")
    raw_values = _get(sw, "values", str, "100,300,1000")
    values = tuple(
        v.strip() if variable == "mobility" else float(v)
        for v in raw_values.split(",")
        if v.strip()
    )

    ru_cfo = _get(sy, "ru_cfo_hz", float, 0.0)
    sync = SyncState(
        cfo_hz={RU_ID_BASE + i: ru_cfo for i in range(params.num_rus)} if ru_cfo else {},
        phase_noise_std_rad_per_slot=_get(sy, "phase_noise_std_rad_per_slot", float, 0.0),
    )

    return ExperimentConfig(
        scenario=params,
        sweep_variable=variable,
        sweep_values=values,
        trials=_get(sw, "trials", int, 200),
        emit_format=_get(sw, "format", str, "csv"),
        sync=sync,
        csi_age_slots=_get(sy, "csi_age_slots", int, 1),
        mcs_table_path=_get(mc, "table", str, None),
        overhead=_get(mc, "overhead", float, 0.86),
    )


def config_hash(config: ExperimentConfig) -> str:
    """Stable hash of the full experiment description."""

    def default(obj):
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        return str(obj)

    blob = json.dumps(asdict(config), sort_keys=True, default=default)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
