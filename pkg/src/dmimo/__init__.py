"""Mobile distributed-MIMO link/system simulator.

Coherent downlink transmit virtual arrays (ZF precoding over gNB + relay
units), non-coherent uplink receive virtual arrays (Alamouti + SIC +
decode-and-forward fusion), mobile Rayleigh fading with urban-micro
pathloss, sync impairments, MCS link adaptation and an echo-state-network
CSI predictor, plus a Monte-Carlo experiment harness and CLI.
"""

from .scenario import (
    MobilityLabel,
    MobilityProfile,
    NodeKind,
    NodeSpec,
    OfdmConfig,
    Scenario,
    doppler_hz,
    link_doppler_hz,
)
from .channel import (
    ChannelMatrix,
    LinkState,
    evolve_fading,
    link_snr_db,
    los_probability,
    make_link,
    noise_power_dbm,
    pathloss_db,
)
from .precoding import (
    CompositeChannel,
    PrecodingResult,
    ZfInfeasibleError,
    baseline_capacity_bpshz,
    relative_gain,
    sum_capacity_bpshz,
    zf_precoder,
)
from .detection import (
    CONSTELLATIONS,
    Constellation,
    DetectionReport,
    FusionStrategy,
    alamouti_decode,
    alamouti_encode,
    fuse_decisions,
    ml_joint_detect,
    sic_detect,
)
from .linkadapt import (
    McsEntry,
    ThroughputReport,
    bler,
    default_mcs_table,
    effective_snr_db,
    max_throughput,
)
from .impairments import SyncState, apply_cfo, apply_timing_offset, wrap_phase
from .reservoir import (
    Readout,
    Reservoir,
    fit_channel_predictor,
    init_reservoir,
    predict_channel,
    train_readout,
)
from .engine import (
    CsiSource,
    DownlinkRound,
    UplinkRound,
    cascade_end_to_end,
    run_downlink_round,
    run_uplink_round,
    select_active_rus,
)
from .config import (
    ExperimentConfig,
    ScenarioParams,
    build_scenario,
    config_hash,
    load_config,
)
from .harness import (
    ResultRecord,
    emit_results,
    run_downlink_case_study,
    run_mobility_sweep,
    run_rc_benchmark,
    run_uplink_case_study,
)

__version__ = "0.1.0"
