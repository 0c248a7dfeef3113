"""Frequency-hopping MIMO dual-function radar-communications simulator."""

from .config import SPEED_OF_LIGHT, ConfigError, RadarConfig
from .iqfile import IqFormatError, IqFrame, read_iq, write_iq
from .waveform import (FhcsCodebook, HopPlan, PayloadLengthError, PskGrid,
                       build_fhcs_codebook, make_psk_grid, plan_hops,
                       sub_band_frequency, synthesize)
from .impairments import (FrontEndProfile, ImpairmentSpec, accumulated_sto,
                          apply, rho_from_sto, sto_from_rho, window_gain)
from .commrx import (DemodReport, ErrorCounts, PilotRatioTable, SyncEstimate,
                     assign_peaks, build_pilot_ratios, correction_factor,
                     demodulate, estimate_cfo, estimate_clock, hop_spectrum,
                     score_report)
from .radarrx import (ArrayModel, Detection, DetectionList, RangeDopplerMap,
                      Target, TargetScene, calibrate, cfar_detect,
                      estimate_angle, estimate_params, matched_filter, mtd,
                      process_cpi, synthesize_echo)
from .bench import (SweepReport, SweepSpec, data_rate, run_ber_sweep,
                    run_method_comparison, run_radar_sweep, wilson_interval)

__all__ = [
    "SPEED_OF_LIGHT", "ConfigError", "RadarConfig",
    "IqFormatError", "IqFrame", "read_iq", "write_iq",
    "FhcsCodebook", "HopPlan", "PayloadLengthError", "PskGrid",
    "build_fhcs_codebook", "make_psk_grid", "plan_hops",
    "sub_band_frequency", "synthesize",
    "FrontEndProfile", "ImpairmentSpec", "accumulated_sto", "apply",
    "rho_from_sto", "sto_from_rho", "window_gain",
    "DemodReport", "ErrorCounts", "PilotRatioTable", "SyncEstimate",
    "assign_peaks", "build_pilot_ratios", "correction_factor", "demodulate",
    "estimate_cfo", "estimate_clock", "hop_spectrum", "score_report",
    "ArrayModel", "Detection", "DetectionList", "RangeDopplerMap", "Target",
    "TargetScene", "calibrate", "cfar_detect", "estimate_angle",
    "estimate_params", "matched_filter", "mtd", "process_cpi",
    "synthesize_echo",
    "SweepReport", "SweepSpec", "data_rate", "run_ber_sweep",
    "run_method_comparison", "run_radar_sweep", "wilson_interval",
]

__version__ = "0.1.0"
