"""Static waveform/clock configuration shared by every stage of the simulator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Propagation speed for all range/delay conversions (m/s). The round radar
# value keeps figures like the blind zone (750 m for a 5 us transmit window)
# exact.
SPEED_OF_LIGHT = 3.0e8


class ConfigError(ValueError):
    """Invalid or mutually inconsistent configuration values."""


def _as_exact_int(value: float, name: str) -> int:
    n = round(value)
    if n <= 0 or abs(value - n) > 1e-6:
        raise ConfigError(f"{name} = {value} must be a positive integer")
    return n


@dataclass(frozen=True)
class RadarConfig:
    """Pulsed FH-MIMO radar parameters.

    The band of width ``bandwidth`` is split into ``n_subbands`` equally
    spaced tones; each pulse holds ``hops_per_pulse`` hops of duration
    ``hop_duration``, each antenna sitting on one sub-band per hop.
    Sub-band tones must complete an integer number of cycles per hop
    (bandwidth*hop_duration/n_subbands integer) so that antennas are
    exactly orthogonal over a hop and tones land on DFT bins.

    Attributes:
        n_subbands: number of hopping sub-bands (K).
        n_tx: transmit antenna count.
        hops_per_pulse: hops per radar pulse.
        hop_duration: hop length in seconds.
        prt_duration: pulse repetition time in seconds.
        bandwidth: occupied bandwidth in Hz.
        sample_rate: complex baseband sampling rate in Hz (>= bandwidth).
        carrier_freq: RF carrier in Hz.
        prts_per_cpi: pulses per coherent processing interval.
    """

    n_subbands: int = 20
    n_tx: int = 2
    hops_per_pulse: int = 5
    hop_duration: float = 1e-6
    prt_duration: float = 40e-6
    bandwidth: float = 20e6
    sample_rate: float = 40e6
    carrier_freq: float = 5.5e9
    prts_per_cpi: int = 128

    def __post_init__(self):
        if min(self.n_subbands, self.n_tx, self.hops_per_pulse,
               self.prts_per_cpi) < 1:
            raise ConfigError("counts must be positive")
        if min(self.hop_duration, self.prt_duration, self.bandwidth,
               self.sample_rate, self.carrier_freq) <= 0:
            raise ConfigError("durations/frequencies must be positive")
        if self.n_tx > self.n_subbands:
            raise ConfigError("need at least as many sub-bands as antennas")
        if self.hops_per_pulse < self.n_tx + 1:
            raise ConfigError(
                "hops_per_pulse must be >= n_tx + 1 for the pilot layout")
        if self.hops_per_pulse * self.hop_duration > self.prt_duration * (1 + 1e-12):
            raise ConfigError("pulse does not fit in the PRT")
        if self.sample_rate < self.bandwidth:
            raise ConfigError("sample_rate below occupied bandwidth")
        _as_exact_int(self.cycles_per_hop, "bandwidth*hop_duration/n_subbands")
        _as_exact_int(self.sample_rate * self.hop_duration, "samples per hop")
        _as_exact_int(self.sample_rate * self.prt_duration, "samples per PRT")

    # -- derived sizes ----------------------------------------------------

    @property
    def cycles_per_hop(self) -> float:
        """Tone cycles per hop between adjacent sub-bands; integer by design."""
        return self.bandwidth * self.hop_duration / self.n_subbands

    @property
    def samples_per_hop(self) -> int:
        return round(self.sample_rate * self.hop_duration)

    @property
    def samples_per_prt(self) -> int:
        return round(self.sample_rate * self.prt_duration)

    @property
    def samples_per_pulse(self) -> int:
        return self.hops_per_pulse * self.samples_per_hop

    @property
    def subband_spacing(self) -> float:
        return self.bandwidth / self.n_subbands

    @property
    def zero_subband(self) -> int:
        """Index of the sub-band whose baseband frequency is exactly 0 Hz."""
        return -(-self.n_subbands // 2)  # ceil(K/2)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def blind_range(self) -> float:
        """Closest observable range: echoes arriving earlier fall inside
        the transmit window of the pulsed radar."""
        return SPEED_OF_LIGHT * self.hops_per_pulse * self.hop_duration / 2

    @property
    def unambiguous_range(self) -> float:
        return SPEED_OF_LIGHT * self.prt_duration / 2

    @property
    def unambiguous_velocity(self) -> float:
        """One-sided unambiguous radial speed of the slow-time DFT."""
        return self.wavelength / (4 * self.prt_duration)

    @property
    def range_bin(self) -> float:
        """Range per fast-time sample (m)."""
        return SPEED_OF_LIGHT / (2 * self.sample_rate)

    @property
    def doppler_bin(self) -> float:
        """Doppler resolution of one CPI (Hz)."""
        return 1.0 / (self.prts_per_cpi * self.prt_duration)

    @property
    def velocity_bin(self) -> float:
        return self.wavelength * self.doppler_bin / 2

    # -- sub-band helpers --------------------------------------------------

    def subband_frequency(self, k) -> float:
        """Baseband frequency (Hz) of sub-band ``k``.

        Sub-bands span the band symmetrically: k=0 is the most negative
        frequency, ``zero_subband`` maps to 0 Hz.
        """
        k = np.asarray(k)
        if np.any((k < 0) | (k >= self.n_subbands)):
            raise ValueError(f"sub-band index out of range 0..{self.n_subbands - 1}")
        lo = -((self.n_subbands + 1) // 2)  # floor(-K/2)
        out = (lo + k) * self.bandwidth / self.n_subbands
        return out if out.ndim else float(out)

    def subband_bin(self, k):
        """DFT bin (hop-length transform) occupied by sub-band ``k``."""
        k = np.asarray(k)
        cycles = np.rint(self.subband_frequency(k) * self.hop_duration).astype(int)
        out = np.mod(cycles, self.samples_per_hop)
        return out if out.ndim else int(out)

    def pilot_offset(self, prt_index) -> int:
        """Frequency-cycled pilot offset for a PRT: kappa = prt mod K."""
        out = np.mod(np.asarray(prt_index), self.n_subbands)
        return out if out.ndim else int(out)

    def pilot_subband(self, prt_index) -> int:
        """Sub-band index the cycled pilot occupies in a PRT."""
        out = np.mod(self.zero_subband + self.pilot_offset(prt_index),
                     self.n_subbands)
        return out if out.ndim else int(out)

    def subband_offset(self, k):
        """Offset kappa of sub-band k from the zero-frequency sub-band."""
        out = np.mod(np.asarray(k) - self.zero_subband, self.n_subbands)
        return out if out.ndim else int(out)
