"""Hardware-error model of an unsynchronized communication receiver.

The receive chain differs from the radar transmitter by a carrier-frequency
offset (CFO), a sampling-timing offset (STO) that accumulates with the
sample-clock mismatch, and smooth frequency-dependent complex gains of the
RF front ends. Because every transmit segment is a pure tone, the
impairments are applied analytically per hop: each antenna's hop segment is
multiplied by a closed-form phasor, summed into a single receive stream, and
circular AWGN is added. A received hop sample n of hop h in PRT i is

    sum_m beta_m(w) e^{j phi} e^{j (w + dw)(n/fs + dt_ih)} e^{j dw (i Tp + h T)}

with w the slot tone (rad/s), dw the CFO, and dt_ih the accumulated STO;
the last factor is the CFO rotation of absolute time across the frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError, RadarConfig
from .iqfile import IqFrame
from .waveform import HopPlan, PskGrid


def sto_from_rho(rho: float, sample_rate: float) -> float:
    """Sampling-time difference implied by clock stability rho."""
    return -rho / (sample_rate * (1.0 - rho))


def rho_from_sto(sample_time_offset: float, sample_rate: float) -> float:
    """Inverse of :func:`sto_from_rho`."""
    a = sample_time_offset * sample_rate
    return a / (a - 1.0)


def window_gain(cfo: float, hop_duration: float) -> complex:
    """Continuous-time spectral gain of a hop window under CFO.

    T*sinc(dw*T/2)*exp(j*dw*T/2); equals T at dw=0.
    """
    x = cfo * hop_duration / 2.0
    return hop_duration * np.sinc(x / np.pi) * np.exp(1j * x)


def dft_window_gain(cfo, n_samples: int, sample_rate: float):
    """Discrete counterpart of :func:`window_gain` for an n-point hop DFT.

    sum_{n<N} exp(j*cfo*n/fs): Dirichlet kernel, equals N at cfo=0.
    """
    phi = np.asarray(cfo, dtype=float) / sample_rate
    num = np.sin(n_samples * phi / 2.0)
    den = np.sin(phi / 2.0)
    mag = np.where(np.abs(den) < 1e-300, float(n_samples), num / np.where(
        np.abs(den) < 1e-300, 1.0, den))
    out = mag * np.exp(1j * (n_samples - 1) * phi / 2.0)
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class FrontEndProfile:
    """Frequency-dependent complex gain of each transmit chain.

    ``gains[m, k]`` is the gain of antenna m at sub-band k; ``channel[m]``
    is the flat complex propagation gain. Both are held fixed over a run
    (front ends are stable within a contiguous operation).
    """

    gains: np.ndarray        # (M, K) complex
    channel: np.ndarray      # (M,) complex

    def __post_init__(self):
        if np.any(np.abs(self.gains) <= 0):
            raise ConfigError("front-end gain magnitude must be positive")

    @classmethod
    def flat(cls, cfg: RadarConfig) -> "FrontEndProfile":
        return cls(np.ones((cfg.n_tx, cfg.n_subbands), dtype=complex),
                   np.ones(cfg.n_tx, dtype=complex))

    @classmethod
    def rippled(cls, cfg: RadarConfig, rng=None, mag_ripple_db: float = 1.0,
                phase_ripple_rad: float = 0.2, poly_order: int = 3,
                channel: np.ndarray | None = None) -> "FrontEndProfile":
        """Smooth random ripple: low-order polynomials over the band, scaled
        so the log-magnitude peaks at +/-mag_ripple_db and the phase at
        +/-phase_ripple_rad."""
        rng = np.random.default_rng(rng) if not isinstance(
            rng, np.random.Generator) else rng
        x = np.linspace(-1.0, 1.0, cfg.n_subbands)
        gains = np.empty((cfg.n_tx, cfg.n_subbands), dtype=complex)
        for m in range(cfg.n_tx):
            mag_curve = np.polyval(rng.standard_normal(poly_order + 1), x)
            ph_curve = np.polyval(rng.standard_normal(poly_order + 1), x)
            mag_db = mag_ripple_db * mag_curve / max(
                np.max(np.abs(mag_curve)), 1e-12)
            ph = phase_ripple_rad * ph_curve / max(
                np.max(np.abs(ph_curve)), 1e-12)
            gains[m] = 10.0 ** (mag_db / 20.0) * np.exp(1j * ph)
        if channel is None:
            channel = np.exp(2j * np.pi * rng.random(cfg.n_tx))
        return cls(gains, np.asarray(channel, dtype=complex))

    def response(self):
        """(M, K) combined complex gain channel*front-end."""
        return self.channel[:, None] * self.gains


@dataclass(frozen=True)
class ImpairmentSpec:
    """Receiver-side hardware errors and noise level.

    Attributes:
        cfo: carrier-frequency offset in rad/s.
        sto_initial: initial sampling-timing offset in seconds.
        sample_time_offset: per-sample clock mismatch in seconds
            (negative when the receiver clock runs fast).
        noise_var: per-sample complex AWGN variance.
        front_end: per-antenna gain profile; None means flat unity.
    """

    cfo: float = 0.0
    sto_initial: float = 0.0
    sample_time_offset: float = 0.0
    noise_var: float = 0.0
    front_end: FrontEndProfile | None = None

    def validate(self, cfg: RadarConfig) -> None:
        if abs(self.cfo) * cfg.prt_duration >= np.pi:
            raise ConfigError(
                "CFO outside the unambiguous range |cfo|*prt_duration < pi")
        if self.noise_var < 0:
            raise ConfigError("noise_var must be >= 0")
        if self.front_end is not None and (
                self.front_end.gains.shape != (cfg.n_tx, cfg.n_subbands)):
            raise ConfigError("front-end profile shape mismatch")

    def rho(self, cfg: RadarConfig) -> float:
        """Clock stability implied by the sample-time offset."""
        return rho_from_sto(self.sample_time_offset, cfg.sample_rate)

    @classmethod
    def from_clock(cls, rho: float, cfg: RadarConfig, sto_initial: float = 0.0,
                   noise_var: float = 0.0,
                   front_end: FrontEndProfile | None = None) -> "ImpairmentSpec":
        """Consistent draw from one clock-stability value: the CFO and the
        sample-clock mismatch both derive from rho."""
        spec = cls(cfo=2 * np.pi * cfg.carrier_freq * rho,
                   sto_initial=sto_initial,
                   sample_time_offset=sto_from_rho(rho, cfg.sample_rate),
                   noise_var=noise_var, front_end=front_end)
        spec.validate(cfg)
        return spec


def accumulated_sto(i, h, spec: ImpairmentSpec, cfg: RadarConfig):
    """Accumulated sampling-timing offset at hop h of PRT i (seconds)."""
    i = np.asarray(i)
    h = np.asarray(h)
    if np.any(i < 0) or np.any((h < 0) | (h >= cfg.hops_per_pulse)):
        raise ValueError("PRT/hop index out of range")
    out = spec.sto_initial + (
        i * cfg.samples_per_prt + h * cfg.samples_per_hop
    ) * spec.sample_time_offset
    return out if out.ndim else float(out)


def slot_gain(plan: HopPlan, spec: ImpairmentSpec, cfg: RadarConfig):
    """Per-slot complex factor applied to each antenna's hop segment.

    Shape (n_prt, H, M); excludes the common within-hop CFO ramp
    exp(j*cfo*n/fs), which is identical for every slot.
    """
    beta = (spec.front_end or FrontEndProfile.flat(cfg)).response()  # (M, K)
    i_idx = plan.prt_indices()[:, None, None]
    h_idx = np.arange(cfg.hops_per_pulse)[None, :, None]
    dt = accumulated_sto(i_idx, h_idx, spec, cfg)                    # (n_prt,H,1)
    omega = 2 * np.pi * plan.frequencies()                           # (n_prt,H,M)
    gains = beta.T[plan.subband % cfg.n_subbands,
                   np.arange(cfg.n_tx)[None, None, :]]               # (n_prt,H,M)
    hop_start = (i_idx * cfg.prt_duration + h_idx * cfg.hop_duration)
    return gains * np.exp(1j * ((omega + spec.cfo) * dt
                                + spec.cfo * hop_start))


def expected_hop_peak(i, h, m, subband, psk_phase, spec: ImpairmentSpec,
                      cfg: RadarConfig):
    """Closed-form hop-DFT coefficient of one slot's tone at its own bin.

    This is the exact discrete transform of the impaired tone and the
    reference model for receiver-side corrections and oracle tests.
    """
    beta = (spec.front_end or FrontEndProfile.flat(cfg)).response()
    omega = 2 * np.pi * cfg.subband_frequency(subband)
    dt = accumulated_sto(i, h, spec, cfg)
    hop_start = np.asarray(i) * cfg.prt_duration + np.asarray(h) * cfg.hop_duration
    gain = beta[np.asarray(m), np.asarray(subband)]
    return (dft_window_gain(spec.cfo, cfg.samples_per_hop, cfg.sample_rate)
            * gain * np.exp(1j * (np.asarray(psk_phase)
                                  + (omega + spec.cfo) * dt
                                  + spec.cfo * hop_start)))


def apply(frame: IqFrame, plan: HopPlan, psk: PskGrid | None,
          spec: ImpairmentSpec, cfg: RadarConfig, rng=None) -> IqFrame:
    """Propagate per-antenna transmit frames through the impaired channel.

    Linear in the input frame: each antenna's hop segment is scaled by its
    slot gain and the common CFO ramp, antennas are summed into one stream,
    and AWGN of the configured variance is added everywhere (the inter-pulse
    silence receives noise only).
    """
    spec.validate(cfg)
    M, H = cfg.n_tx, cfg.hops_per_pulse
    n_hop, n_p = cfg.samples_per_hop, cfg.samples_per_prt
    if frame.data.shape[0] != M:
        raise ValueError("frame channel count does not match antennas")
    n_prt = frame.n_prt
    if plan.n_prt != n_prt or (psk is not None
                               and psk.phases.shape[0] != n_prt):
        raise ValueError("plan/psk PRT count does not match frame")

    tx = frame.prt_view()                                  # (M, n_prt, n_p)
    active = tx[:, :, :H * n_hop].reshape(M, n_prt, H, n_hop)
    gains = slot_gain(plan, spec, cfg)                     # (n_prt, H, M)
    ramp = np.exp(1j * spec.cfo * np.arange(n_hop) / cfg.sample_rate)
    mixed = np.einsum("mihn,ihm->ihn", active, gains) * ramp

    out = np.zeros((n_prt, n_p), dtype=np.complex128)
    out[:, :H * n_hop] = mixed.reshape(n_prt, H * n_hop)
    out = out.reshape(1, n_prt * n_p)
    if spec.noise_var > 0:
        rng = np.random.default_rng(rng) if not isinstance(
            rng, np.random.Generator) else rng
        scale = np.sqrt(spec.noise_var / 2.0)
        noise = rng.standard_normal((2, out.size)) * scale
        out = out + (noise[0] + 1j * noise[1])
    return IqFrame(out, cfg.sample_rate, n_p)
