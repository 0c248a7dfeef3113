"""Radar receive chain: echo synthesis, pulse compression, range-Doppler
processing, CFAR detection, array calibration and grid angle estimation.

The virtual array is the Kronecker product of the receive and transmit
steering vectors; with M transmitters every receive stream passes all M
matched filters, giving P = M*N spatial channels ordered p = n*M + m.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .config import SPEED_OF_LIGHT, RadarConfig
from .iqfile import write_csv
from .waveform import HopPlan, PskGrid, synthesize


@dataclass(frozen=True)
class Target:
    range_m: float
    velocity: float          # radial, m/s (positive = approaching bins > 0)
    azimuth_deg: float
    coeff: complex = 1.0 + 0.0j

    def delay(self) -> float:
        return 2.0 * self.range_m / SPEED_OF_LIGHT

    def doppler(self, wavelength: float) -> float:
        return 2.0 * self.velocity / wavelength


@dataclass
class TargetScene:
    targets: list

    def __post_init__(self):
        self.targets = list(self.targets)

    @classmethod
    def random(cls, cfg: RadarConfig, n_targets: int, rng=None,
               range_span=(750.0, 4185.0), velocity_span=(-170.0, 170.0),
               azimuth_span=(-4.0, 4.0)) -> "TargetScene":
        rng = np.random.default_rng(rng) if not isinstance(
            rng, np.random.Generator) else rng
        lo_r = max(range_span[0], cfg.blind_range)
        hi_r = min(range_span[1], cfg.unambiguous_range)
        targets = []
        for _ in range(n_targets):
            targets.append(Target(
                range_m=float(rng.uniform(lo_r, hi_r)),
                velocity=float(rng.uniform(*velocity_span)),
                azimuth_deg=float(rng.uniform(*azimuth_span)),
                coeff=np.exp(2j * np.pi * rng.random()),
            ))
        return cls(targets)

    def validate(self, cfg: RadarConfig) -> None:
        for t in self.targets:
            if not (cfg.blind_range <= t.range_m <= cfg.unambiguous_range):
                raise ValueError(f"target range {t.range_m} outside "
                                 f"[{cfg.blind_range}, {cfg.unambiguous_range}]")
            if abs(t.velocity) >= cfg.unambiguous_velocity:
                raise ValueError("target velocity outside unambiguous span")


@dataclass(frozen=True)
class ArrayModel:
    """Transmit/receive ULA geometry with per-element complex gain errors."""

    n_tx: int = 2
    n_rx: int = 12
    tx_spacing: float = 6.0    # wavelengths
    rx_spacing: float = 0.5    # wavelengths
    tx_errors: np.ndarray | None = None
    rx_errors: np.ndarray | None = None

    @property
    def n_virtual(self) -> int:
        return self.n_tx * self.n_rx

    def _errs(self):
        e_t = (np.ones(self.n_tx, dtype=complex) if self.tx_errors is None
               else np.asarray(self.tx_errors, dtype=complex))
        e_r = (np.ones(self.n_rx, dtype=complex) if self.rx_errors is None
               else np.asarray(self.rx_errors, dtype=complex))
        return e_t, e_r

    @classmethod
    def with_random_errors(cls, rng=None, n_tx: int = 2, n_rx: int = 12,
                           tx_spacing: float = 6.0, rx_spacing: float = 0.5,
                           phase_scale: float = 1.0) -> "ArrayModel":
        rng = np.random.default_rng(rng) if not isinstance(
            rng, np.random.Generator) else rng
        e_t = np.exp(1j * phase_scale * rng.uniform(-np.pi, np.pi, n_tx))
        e_r = np.exp(1j * phase_scale * rng.uniform(-np.pi, np.pi, n_rx))
        return cls(n_tx, n_rx, tx_spacing, rx_spacing, e_t, e_r)

    def steering_tx(self, theta_deg) -> np.ndarray:
        s = np.sin(np.deg2rad(np.asarray(theta_deg, dtype=float)))
        m = np.arange(self.n_tx)
        return np.exp(2j * np.pi * self.tx_spacing
                      * np.multiply.outer(s, m))

    def steering_rx(self, theta_deg) -> np.ndarray:
        s = np.sin(np.deg2rad(np.asarray(theta_deg, dtype=float)))
        n = np.arange(self.n_rx)
        return np.exp(2j * np.pi * self.rx_spacing
                      * np.multiply.outer(s, n))

    def virtual_steering(self, theta_deg, include_errors: bool = True
                         ) -> np.ndarray:
        """(..., P) steering of the virtual array, p = n*M + m."""
        a_t = self.steering_tx(theta_deg)
        a_r = self.steering_rx(theta_deg)
        out = (a_r[..., :, None] * a_t[..., None, :]).reshape(
            *a_t.shape[:-1], self.n_virtual)
        if include_errors:
            e_t, e_r = self._errs()
            out = out * np.kron(e_r, e_t)
        return out


# ---------------------------------------------------------------------------
# Echo synthesis
# ---------------------------------------------------------------------------

def synthesize_echo(plan: HopPlan, psk: PskGrid | None, scene: TargetScene,
                    array: ArrayModel, cfg: RadarConfig,
                    noise_var: float = 0.0, rng=None) -> np.ndarray:
    """Per-receive-antenna echo samples for one CPI.

    Returns (N, n_prt, samples_per_prt) complex. Each target contributes the
    delayed superposition of the transmit pulses weighted by the two-way
    steering and its scattering coefficient, with a per-PRT Doppler phase.
    Delays are rounded to the sample grid; samples inside the transmit
    window are zeroed (pulsed-radar blind zone). Noise is drawn before the
    echoes so equal seeds give equal noise regardless of the scene/plan.
    """
    scene_ok = []
    for t in scene.targets:
        if t.delay() < cfg.hops_per_pulse * cfg.hop_duration:
            warnings.warn(f"target at {t.range_m:.0f} m inside blind zone; "
                          "excluded")
            continue
        scene_ok.append(t)

    n_prt = plan.n_prt
    n_p = cfg.samples_per_prt
    n_pulse = cfg.samples_per_pulse
    N = array.n_rx
    rng = np.random.default_rng(rng) if not isinstance(
        rng, np.random.Generator) else rng

    if noise_var > 0:
        scale = np.sqrt(noise_var / 2.0)
        rx = (rng.standard_normal((N, n_prt, n_p))
              + 1j * rng.standard_normal((N, n_prt, n_p))) * scale
        rx = rx.astype(np.complex128)
    else:
        rx = np.zeros((N, n_prt, n_p), dtype=np.complex128)

    pulses = synthesize(plan, psk, cfg).prt_view()[:, :, :n_pulse]  # (M,n_prt,E)
    e_t, e_r = array._errs()
    i_idx = np.arange(n_prt)
    for t in scene_ok:
        d = int(round(t.delay() * cfg.sample_rate))
        a_t = array.steering_tx(t.azimuth_deg) * e_t          # (M,)
        a_r = array.steering_rx(t.azimuth_deg) * e_r          # (N,)
        dopp = np.exp(2j * np.pi * t.doppler(cfg.wavelength)
                      * i_idx * cfg.prt_duration)             # (n_prt,)
        tx_sum = np.einsum("m,min->in", a_t, pulses)          # (n_prt, E)
        contrib = t.coeff * dopp[:, None] * tx_sum            # (n_prt, E)
        stop = min(n_p, d + n_pulse)
        seg = contrib[:, :stop - d]
        rx[:, :, d:stop] += a_r[:, None, None] * seg[None]
    rx[:, :, :n_pulse] = 0.0  # receiver blanked while transmitting
    return rx


# ---------------------------------------------------------------------------
# Pulse compression and range-Doppler map
# ---------------------------------------------------------------------------

def matched_filter(rx: np.ndarray, plan: HopPlan, psk: PskGrid | None,
                   cfg: RadarConfig) -> np.ndarray:
    """Correlate every receive stream with every planned transmit pulse.

    rx: (N, n_prt, samples_per_prt). Returns (P, n_prt, n_range) range
    profiles with P = N*M channels (p = n*M + m) and range bins covering
    the listening window [pulse end, PRT end).
    """
    N, n_prt, n_p = rx.shape
    M = cfg.n_tx
    E = cfg.samples_per_pulse
    refs = synthesize(plan, psk, cfg).prt_view()[:, :, :E]    # (M, n_prt, E)
    n_fft = 1
    while n_fft < n_p + E:
        n_fft *= 2
    RX = np.fft.fft(rx, n_fft, axis=-1)                       # (N,n_prt,F)
    S = np.fft.fft(refs, n_fft, axis=-1)                      # (M,n_prt,F)
    # circular correlation y[t] = sum_u rx[t+u] conj(s[u])
    prod = RX[:, None] * np.conj(S)[None]                     # (N,M,n_prt,F)
    corr = np.fft.ifft(prod, axis=-1)
    start, stop = E, n_p
    profiles = corr[..., start:stop]                          # (N,M,n_prt,R)
    return profiles.reshape(N * M, n_prt, stop - start)


@dataclass
class RangeDopplerMap:
    """Doppler-transformed per-channel cube and its physical bin scalings."""

    cube: np.ndarray         # (n_doppler, P, n_range) complex
    cfg: RadarConfig
    range_offset: int        # fast-time sample index of range bin 0

    @property
    def n_doppler(self) -> int:
        return self.cube.shape[0]

    @property
    def n_range(self) -> int:
        return self.cube.shape[2]

    def doppler_freqs(self) -> np.ndarray:
        return (np.arange(self.n_doppler) - self.n_doppler // 2) \
            / (self.n_doppler * self.cfg.prt_duration)

    def range_axis(self) -> np.ndarray:
        t = (self.range_offset + np.arange(self.n_range)) / self.cfg.sample_rate
        return SPEED_OF_LIGHT * t / 2.0

    def detection_statistic(self) -> np.ndarray:
        """Incoherent accumulation over spatial channels: sum_p |Y_fp(t)|."""
        return np.abs(self.cube).sum(axis=1)

    def channel_vector(self, f_bin: int, t_bin: int) -> np.ndarray:
        return self.cube[f_bin, :, t_bin]


def mtd(profiles: np.ndarray, cfg: RadarConfig,
        range_offset: int | None = None) -> RangeDopplerMap:
    """Slow-time DFT across PRTs: the range-Doppler map.

    profiles: (P, n_prt, n_range). Doppler axis is shifted so bin
    n_doppler//2 is zero Doppler.
    """
    cube = np.fft.fftshift(np.fft.fft(profiles, axis=1), axes=1)
    cube = np.transpose(cube, (1, 0, 2))
    if range_offset is None:
        range_offset = cfg.samples_per_pulse
    return RangeDopplerMap(cube, cfg, range_offset)


# ---------------------------------------------------------------------------
# CFAR detection
# ---------------------------------------------------------------------------

def _rayleigh_sum_quantile(n_channels: int, prob: float) -> float:
    """Quantile (in units of the mean) of a sum of n iid unit-scale Rayleigh
    magnitudes, via numeric convolution of the density."""
    # grid generous enough for the upper tail
    mean1 = np.sqrt(np.pi / 2)
    hi = n_channels * mean1 + 12 * np.sqrt(n_channels * (2 - np.pi / 2))
    n_grid = 1 << 14
    dx = hi / n_grid
    x = (np.arange(n_grid) + 0.5) * dx
    pdf = x * np.exp(-x * x / 2.0)
    F = np.fft.rfft(pdf * dx)
    conv = np.fft.irfft(F ** n_channels, n=n_grid)
    conv = np.maximum(conv, 0.0)
    cdf = np.cumsum(conv)
    cdf /= cdf[-1]
    idx = int(np.searchsorted(cdf, 1.0 - prob))
    q = (idx + 0.5) * dx
    return q / (n_channels * mean1)


def cfar_threshold_scale(n_channels: int, p_fa: float) -> float:
    """Cell-averaging CFAR multiplier for the magnitude-sum statistic."""
    return _rayleigh_sum_quantile(n_channels, p_fa)


@dataclass
class Detection:
    doppler_bin: int
    range_bin: int
    statistic: float
    threshold: float
    channel_vector: np.ndarray
    range_m: float = 0.0
    velocity: float = 0.0
    azimuth_deg: float = 0.0


@dataclass
class DetectionList:
    detections: list = field(default_factory=list)

    def __len__(self):
        return len(self.detections)

    def __iter__(self):
        return iter(self.detections)

    def to_csv(self, path, cfg_hash=None) -> None:
        rows = [(d.doppler_bin, d.range_bin, d.range_m, d.velocity,
                 d.azimuth_deg, d.statistic, d.threshold)
                for d in self.detections]
        write_csv(path, ["doppler_bin", "range_bin", "range_m", "velocity",
                         "azimuth_deg", "statistic", "threshold"],
                  rows, cfg_hash)


def _box_mean(stat: np.ndarray, half: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated-window box sums and counts via a summed-area table."""
    F, R = stat.shape
    sat = np.zeros((F + 1, R + 1))
    sat[1:, 1:] = stat.cumsum(axis=0).cumsum(axis=1)
    f = np.arange(F)[:, None]
    r = np.arange(R)[None, :]
    f0 = np.clip(f - half, 0, F)
    f1 = np.clip(f + half + 1, 0, F)
    r0 = np.clip(r - half, 0, R)
    r1 = np.clip(r + half + 1, 0, R)
    sums = sat[f1, r1] - sat[f0, r1] - sat[f1, r0] + sat[f0, r0]
    counts = (f1 - f0) * (r1 - r0)
    return sums, counts


def cfar_detect(rdm: RangeDopplerMap, guard_cells: int = 2,
                training_cells: int = 8, p_fa: float = 1e-4) -> DetectionList:
    """2D cell-averaging CFAR on the incoherent channel sum.

    The noise level per cell is the mean of the training ring (a square
    annulus ``training_cells`` wide beyond ``guard_cells``); windows truncate
    at the map edges. Cells above threshold are clustered by keeping local
    maxima of the statistic over their 8-neighborhood.
    """
    stat = rdm.detection_statistic()
    outer = guard_cells + training_cells
    sum_out, cnt_out = _box_mean(stat, outer)
    sum_in, cnt_in = _box_mean(stat, guard_cells)
    train_mean = (sum_out - sum_in) / np.maximum(cnt_out - cnt_in, 1)
    alpha = cfar_threshold_scale(rdm.cube.shape[1], p_fa)
    threshold = alpha * train_mean

    above = stat > threshold
    # 8-neighborhood local maxima (strictly greater than any neighbor that
    # is itself above threshold keeps plateaus from double-counting)
    pad = np.pad(stat, 1, constant_values=-np.inf)
    neigh = np.stack([pad[1 + df:1 + df + stat.shape[0],
                          1 + dr:1 + dr + stat.shape[1]]
                      for df in (-1, 0, 1) for dr in (-1, 0, 1)
                      if not (df == 0 and dr == 0)])
    is_max = stat >= neigh.max(axis=0)
    hits = np.argwhere(above & is_max)

    out = DetectionList()
    for f_bin, t_bin in hits:
        out.detections.append(Detection(
            int(f_bin), int(t_bin), float(stat[f_bin, t_bin]),
            float(threshold[f_bin, t_bin]),
            rdm.channel_vector(int(f_bin), int(t_bin))))
    return out


# ---------------------------------------------------------------------------
# Calibration and parameter estimation
# ---------------------------------------------------------------------------

class CalibrationError(RuntimeError):
    pass


def calibrate(anchor_vector: np.ndarray, array: ArrayModel,
              anchor_azimuth_deg: float = 0.0,
              min_level: float = 1e-9) -> np.ndarray:
    """Array calibration vector from an anchor target of known direction.

    Channels are normalized to the first so that the calibrated steering
    a(theta)*cal sums the anchor's channel vector coherently.
    """
    z = np.asarray(anchor_vector)
    if np.any(np.abs(z) < min_level):
        raise CalibrationError("anchor channel level too low to calibrate")
    a_ideal = array.virtual_steering(anchor_azimuth_deg, include_errors=False)
    cal = (z / z[0]) / (a_ideal / a_ideal[0])
    return cal


def angle_grid(fov_deg: float = 30.0, n_points: int = 1024) -> np.ndarray:
    """Uniform azimuth grid over [-fov, fov) degrees."""
    step = 2 * fov_deg / n_points
    return -fov_deg + step * np.arange(n_points)


def estimate_angle(z: np.ndarray, array: ArrayModel, grid: np.ndarray,
                   cal: np.ndarray | None = None) -> float:
    """Azimuth maximizing |a(theta)^H z|^2 over the grid.

    Without a calibration vector the ideal steering is used (correct for
    error-free arrays); with one, per-channel gains are folded in.
    """
    A = array.virtual_steering(grid, include_errors=False)   # (L, P)
    if cal is not None:
        A = A * cal
    spectrum = np.abs(A.conj() @ np.asarray(z)) ** 2
    return float(grid[int(np.argmax(spectrum))])


def estimate_params(det: Detection, rdm: RangeDopplerMap, array: ArrayModel,
                    grid: np.ndarray, cal: np.ndarray | None = None
                    ) -> Detection:
    """Fill the physical (range, velocity, azimuth) of a detection."""
    cfg = rdm.cfg
    t_star = (rdm.range_offset + det.range_bin) / cfg.sample_rate
    det.range_m = SPEED_OF_LIGHT * t_star / 2.0
    f_star = rdm.doppler_freqs()[det.doppler_bin]
    det.velocity = cfg.wavelength * f_star / 2.0
    det.azimuth_deg = estimate_angle(det.channel_vector, array, grid, cal)
    return det


def process_cpi(rx: np.ndarray, plan: HopPlan, psk: PskGrid | None,
                cfg: RadarConfig, array: ArrayModel, guard_cells: int = 2,
                training_cells: int = 8, p_fa: float = 1e-4,
                grid: np.ndarray | None = None,
                cal: np.ndarray | None = None
                ) -> tuple[RangeDopplerMap, DetectionList]:
    """Full chain for one CPI: matched filter, MTD, CFAR, parameters."""
    profiles = matched_filter(rx, plan, psk, cfg)
    rdm = mtd(profiles, cfg)
    dets = cfar_detect(rdm, guard_cells, training_cells, p_fa)
    if grid is None:
        grid = angle_grid()
    for d in dets:
        estimate_params(d, rdm, array, grid, cal)
    return rdm, dets
