"""Communication receiver: joint hardware-error estimation and demodulation.

Processing of a CPI-aligned single-channel receive stream:

1. Per-hop DFTs; peaks are read at the known sub-band bins.
2. Zero-frequency pilots (hop m, antenna m) of consecutive PRTs give the
   CFO via their pairwise phase ratio; clock stability and the sampling-time
   offset follow from the CFO and the carrier/sampling frequencies.
3. The cycled pilot (hop m+1) and the zero pilot of the same PRT give one
   pilot ratio per PRT; over a group of K consecutive PRTs these fill a
   per-antenna table indexed by sub-band offset, jointly capturing the
   frequency-dependent front-end gain and the initial-timing phase.
4. Payload peaks are mapped back to FHCS codewords (pinned antennas by
   known position, the rest by ascending frequency), and PSK phases are
   recovered by dividing each payload peak by its same-PRT zero pilot, the
   matching pilot-table entry, and a correction factor that advances the
   table entry's timing/CFO phases to the payload slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import RadarConfig
from .iqfile import IqFrame, write_csv
from .impairments import ImpairmentSpec, expected_hop_peak, sto_from_rho
from .waveform import (HopPlan, PskGrid, _subbands_to_positions,
                       gray_encode, hop_groups, int_to_bits,
                       payload_codewords, rank_subsets)

PEAK_FLOOR_FACTOR = 3.0  # peak must exceed this multiple of the median bin


@dataclass
class HopSpectrum:
    """DFT view of one hop: full spectrum plus the sub-band coefficients."""

    spectrum: np.ndarray        # (N_h,) complex
    subband_values: np.ndarray  # (K,) complex at the sub-band bins
    median_mag: float


def hop_spectrum(frame: IqFrame, i: int, h: int, cfg: RadarConfig) -> HopSpectrum:
    """Hop-length DFT of one hop of a single-channel frame."""
    seg = frame.hop_samples(i, h, cfg.samples_per_hop)[0]
    spec = np.fft.fft(seg)
    bins = cfg.subband_bin(np.arange(cfg.n_subbands))
    return HopSpectrum(spec, spec[bins], float(np.median(np.abs(spec))))


def _batch_spectra(frame: IqFrame, cfg: RadarConfig):
    """(n_prt, H, N_h) hop DFTs and (n_prt, H, K) sub-band coefficients."""
    n_hop = cfg.samples_per_hop
    active = frame.prt_view()[0, :, :cfg.hops_per_pulse * n_hop]
    hops = active.reshape(frame.n_prt, cfg.hops_per_pulse, n_hop)
    spectra = np.fft.fft(hops, axis=-1)
    bins = cfg.subband_bin(np.arange(cfg.n_subbands))
    return spectra, spectra[..., bins]


def assign_peaks(spectrum: HopSpectrum, pinned: dict, cfg: RadarConfig):
    """Map spectral peaks to antennas for one hop.

    Pinned antennas take their known sub-bands; the remaining peaks are
    sorted by frequency and assigned to the remaining antennas in ascending
    antenna order. Returns (subband_per_antenna, erased) where ``erased``
    flags any peak buried below the noise floor.
    """
    M = cfg.n_tx
    out = np.full(M, -1, dtype=np.int64)
    floor = PEAK_FLOOR_FACTOR * spectrum.median_mag
    erased = False
    for m, k in pinned.items():
        out[m] = k
        if np.abs(spectrum.subband_values[k]) < floor:
            erased = True
    free_ants = [m for m in range(M) if m not in pinned]
    if free_ants:
        mags = np.abs(spectrum.subband_values).copy()
        mags[list(set(pinned.values()))] = -1.0
        top = np.sort(np.argsort(mags)[::-1][:len(free_ants)])
        out[free_ants] = top  # ascending frequency -> ascending antenna
        if np.any(np.abs(spectrum.subband_values[top]) < floor):
            erased = True
    return out, erased


# ---------------------------------------------------------------------------
# Synchronization estimators
# ---------------------------------------------------------------------------

@dataclass
class SyncEstimate:
    """CFO/clock estimates and per-pair diagnostics."""

    cfo: float                    # rad/s
    rho: float                    # clock stability
    sample_time_offset: float     # s
    raw_pair_cfo: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @classmethod
    def from_spec(cls, spec: ImpairmentSpec, cfg: RadarConfig) -> "SyncEstimate":
        """Ground-truth sync (known-channel processing)."""
        return cls(spec.cfo, spec.cfo / (2 * np.pi * cfg.carrier_freq),
                   spec.sample_time_offset)


def estimate_cfo(pilot_zero: np.ndarray, cfg: RadarConfig,
                 valid: np.ndarray | None = None) -> tuple[float, np.ndarray]:
    """CFO from zero-frequency pilots of consecutive PRTs.

    ``pilot_zero``: (n_prt, M) complex pilot coefficients (hop m, antenna m).
    Returns (cfo_hat, per-pair raw estimates in rad/s). The final value is
    the circular mean of the pairwise phases over all PRT pairs and antennas.
    """
    n_prt = pilot_zero.shape[0]
    if n_prt < 2:
        raise ValueError("need at least two PRTs with pilots")
    ratios = pilot_zero[1:] * np.conj(pilot_zero[:-1])    # (n_prt-1, M)
    if valid is not None:
        ratios = np.where(valid[1:] & valid[:-1], ratios, 0.0)
    mags = np.abs(ratios)
    units = np.divide(ratios, mags, out=np.zeros_like(ratios),
                      where=mags > 0)
    pair_vec = units.sum(axis=1)                          # combine antennas
    good = np.abs(pair_vec) > 0
    if not np.any(good):
        raise ValueError("no valid pilot pairs for CFO estimation")
    raw = np.angle(pair_vec[good]) / cfg.prt_duration
    mean_vec = (pair_vec[good] / np.abs(pair_vec[good])).mean()
    cfo_hat = float(np.angle(mean_vec) / cfg.prt_duration)
    return cfo_hat, raw


def estimate_clock(cfo_hat: float, cfg: RadarConfig) -> tuple[float, float]:
    """(rho_hat, sample_time_offset_hat) from the CFO estimate."""
    rho_hat = cfo_hat / (2 * np.pi * cfg.carrier_freq)
    return rho_hat, sto_from_rho(rho_hat, cfg.sample_rate)


def correction_factor(i1, h1, i2, h2, k, sync: SyncEstimate,
                      cfg: RadarConfig):
    """Phase progression between a pilot-table entry at (i1, h1) and a
    payload slot at (i2, h2) on sub-band k.

    Composes the sampling-clock drift of the tone phase across the
    separating samples with the CFO advance across the separating hops, so
    that (payload ratio) / (table entry * correction) isolates the PSK phase.
    """
    i1, h1 = np.asarray(i1), np.asarray(h1)
    i2, h2 = np.asarray(i2), np.asarray(h2)
    omega = 2 * np.pi * cfg.subband_frequency(k)
    n_elapsed = ((i2 - i1) * cfg.samples_per_prt
                 + (h2 - h1) * cfg.samples_per_hop)
    hop_term = (h2 - h1) * (cfg.hop_duration
                            + cfg.samples_per_hop * sync.sample_time_offset)
    out = np.exp(1j * (omega * n_elapsed * sync.sample_time_offset
                       + sync.cfo * hop_term))
    return out if out.ndim else complex(out)


# ---------------------------------------------------------------------------
# Pilot-ratio table
# ---------------------------------------------------------------------------

@dataclass
class PilotRatioTable:
    """Per-(antenna, sub-band offset) complex pilot ratios.

    ``source_prt`` records the PRT each entry was measured in (the i1 the
    correction factor must reference); ``measured`` distinguishes measured
    entries from the analytic zero-offset entry; missing entries have
    source_prt = -1.
    """

    values: np.ndarray       # (M, K) complex
    source_prt: np.ndarray   # (M, K) int
    measured: np.ndarray     # (M, K) bool

    def complete(self) -> bool:
        return bool(np.all(self.source_prt >= 0))


def build_pilot_ratios(subband_values: np.ndarray, prt_indices: np.ndarray,
                       sync: SyncEstimate, cfg: RadarConfig,
                       valid: np.ndarray | None = None) -> PilotRatioTable:
    """Fill a pilot table from one group of PRTs.

    ``subband_values``: (n_prt, H, K) hop-DFT coefficients at sub-band bins;
    ``prt_indices``: absolute PRT index per row (the pilot offset cycles
    with it). The ratio of the cycled pilot (hop m+1) to the zero pilot
    (hop m) is stored at the PRT's offset. The zero-offset entry carries no
    information (both pilots would sit on the same sub-band, so the cycled
    one is not transmitted) and is synthesized from the sync estimates.
    """
    M, K = cfg.n_tx, cfg.n_subbands
    values = np.zeros((M, K), dtype=complex)
    source = np.full((M, K), -1, dtype=np.int64)
    measured = np.zeros((M, K), dtype=bool)
    k0 = cfg.zero_subband
    hop_term = cfg.hop_duration + cfg.samples_per_hop * sync.sample_time_offset
    for row, i_abs in enumerate(prt_indices):
        if valid is not None and not valid[row]:
            continue
        kappa = int(cfg.pilot_offset(i_abs))
        if kappa == 0:
            values[:, 0] = np.exp(1j * sync.cfo * hop_term)
            source[:, 0] = i_abs
            continue
        pilot_k = (k0 + kappa) % K
        for m in range(M):
            den = subband_values[row, m, k0]
            if den == 0:
                continue
            values[m, kappa] = subband_values[row, m + 1, pilot_k] / den
            source[m, kappa] = i_abs
            measured[m, kappa] = True
    return PilotRatioTable(values, source, measured)


def _averaged_table(tables: list[PilotRatioTable], sync: SyncEstimate,
                    cfg: RadarConfig) -> PilotRatioTable:
    """Average measured ratios of equal offset across groups after removing
    each entry's timing/CFO progression relative to the earliest source PRT
    (the refinement that further averages the correction factor over a CPI).
    """
    M, K = cfg.n_tx, cfg.n_subbands
    k0 = cfg.zero_subband
    values = np.zeros((M, K), dtype=complex)
    source = np.full((M, K), -1, dtype=np.int64)
    measured = np.zeros((M, K), dtype=bool)
    for m in range(M):
        for kappa in range(K):
            entries = [(int(t.source_prt[m, kappa]), t.values[m, kappa],
                        bool(t.measured[m, kappa]))
                       for t in tables if t.source_prt[m, kappa] >= 0]
            if not entries:
                continue
            ref_i = entries[0][0]
            meas_entries = [e for e in entries if e[2]]
            if kappa == 0 or not meas_entries:
                values[m, kappa] = entries[0][1]
                source[m, kappa] = ref_i
                measured[m, kappa] = entries[0][2]
                continue
            k = (k0 + kappa) % K
            acc = 0.0 + 0.0j
            for i_src, val, _ in meas_entries:
                rot = correction_factor(ref_i, m + 1, i_src, m + 1, k,
                                        sync, cfg)
                acc += val * np.conj(rot)
            values[m, kappa] = acc / len(meas_entries)
            source[m, kappa] = ref_i
            measured[m, kappa] = True
    return PilotRatioTable(values, source, measured)


def _flat_gain_table(table: PilotRatioTable, sync: SyncEstimate,
                     cfg: RadarConfig) -> PilotRatioTable:
    """Disable the measured pilot-ratio correction: entries keep only the
    analytic timing/CFO progression, as if the front-end gain were flat and
    the initial-timing phase zero."""
    M, K = cfg.n_tx, cfg.n_subbands
    k0 = cfg.zero_subband
    hop_term = cfg.hop_duration + cfg.samples_per_hop * sync.sample_time_offset
    values = table.values.copy()
    for m in range(M):
        kappas = np.flatnonzero(table.measured[m])
        if kappas.size == 0:
            continue
        ks = (k0 + kappas) % K
        omegas = 2 * np.pi * cfg.subband_frequency(ks)
        samples_elapsed = (table.source_prt[m, kappas] * cfg.samples_per_prt
                           + (m + 1) * cfg.samples_per_hop)
        values[m, kappas] = np.exp(
            1j * (omegas * samples_elapsed * sync.sample_time_offset
                  + sync.cfo * hop_term))
    return PilotRatioTable(values, table.source_prt.copy(),
                           table.measured.copy())


# ---------------------------------------------------------------------------
# Demodulation
# ---------------------------------------------------------------------------

@dataclass
class DemodReport:
    """Recovered payload with per-symbol diagnostics.

    ``slots`` columns: prt, hop, antenna, detected sub-band, offset, erased.
    FHCS rows: (prt, hop, n_bits, codeword) with codeword -1 when erased or
    outside the usable range.
    """

    order_bits: int
    sync: SyncEstimate | None
    slots: np.ndarray
    psk_phase: np.ndarray        # raw corrected phase per slot
    psk_symbol: np.ndarray       # snapped constellation position
    psk_residual: np.ndarray     # phase residual after snapping
    fhcs_rows: list
    n_erased_slots: int = 0
    n_erased_hops: int = 0

    @property
    def psk_erased(self) -> np.ndarray:
        return self.slots[:, 5].astype(bool)

    def psk_bits(self) -> np.ndarray:
        """Gray-coded payload bits in slot order (erased slots emit zeros;
        use ``psk_erased`` for accounting)."""
        return int_to_bits(gray_encode(self.psk_symbol),
                           self.order_bits).reshape(-1)

    def fhcs_bits(self) -> np.ndarray:
        parts = [int_to_bits(max(cw, 0), nb).ravel()
                 for (_, _, nb, cw) in self.fhcs_rows if nb > 0]
        if not parts:
            return np.zeros(0, dtype=np.uint8)
        return np.concatenate(parts)

    def to_csv(self, path, cfg_hash=None) -> None:
        rows = [(int(r[0]), int(r[1]), int(r[2]), int(r[3]), int(r[4]),
                 float(p), float(res), int(r[5]))
                for r, p, res in zip(self.slots, self.psk_phase,
                                     self.psk_residual)]
        write_csv(path, ["prt", "hop", "antenna", "subband", "offset",
                         "phase_est", "residual", "erased"], rows, cfg_hash)

    def summary(self) -> dict:
        return {
            "cfo_hat": self.sync.cfo if self.sync else 0.0,
            "rho_hat": self.sync.rho if self.sync else 0.0,
            "sample_time_offset_hat":
                self.sync.sample_time_offset if self.sync else 0.0,
            "n_psk_symbols": int(self.slots.shape[0]),
            "n_fhcs_codewords": len(self.fhcs_rows),
            "n_erased_slots": int(self.n_erased_slots),
            "n_erased_hops": int(self.n_erased_hops),
        }


def demodulate(frame: IqFrame, cfg: RadarConfig, order_bits: int,
               mode: str = "estimated", spec: ImpairmentSpec | None = None,
               first_prt: int = 0, group_len: int | None = None) -> DemodReport:
    """Recover FHCS and PSK payloads from a receive stream.

    mode:
      "estimated"  full blind pipeline (per-group pilot tables);
      "averaged"   estimated + pilot ratios averaged across groups;
      "flat"       estimated, but measured pilot ratios are replaced by
                   their analytic clock progression - i.e. the per-sub-band
                   gain/timing correction is disabled (comparison baseline);
      "known"      corrections from the true ``spec`` (lower bound).
    """
    if mode not in ("estimated", "averaged", "flat", "known"):
        raise ValueError(f"unknown demodulation mode {mode!r}")
    if mode == "known" and spec is None:
        raise ValueError("known-channel mode needs the impairment spec")

    M, K, H = cfg.n_tx, cfg.n_subbands, cfg.hops_per_pulse
    k0 = cfg.zero_subband
    n_prt = frame.n_prt
    prt_abs = first_prt + np.arange(n_prt)
    if group_len is None:
        group_len = K

    spectra, sub_vals = _batch_spectra(frame, cfg)
    median_mag = np.median(np.abs(spectra), axis=-1)      # (n_prt, H)
    groups = hop_groups(cfg, prt_abs)

    # --- peak assignment / erasures per hop (vectorized per group) ---------
    subband_det = np.zeros((n_prt, H, M), dtype=np.int64)
    hop_erased = np.zeros((n_prt, H), dtype=bool)
    for g in groups:
        mags = np.abs(sub_vals[g.rows, g.hop, :])         # (R, K)
        floor = PEAK_FLOOR_FACTOR * median_mag[g.rows, g.hop]
        erased = np.zeros(g.rows.size, dtype=bool)
        if g.pin_ants:
            for ant, ks in zip(g.pin_ants, np.moveaxis(g.pin_ks, 1, 0)):
                subband_det[g.rows, g.hop, ant] = ks
                erased |= mags[np.arange(g.rows.size), ks] < floor
        if g.free_ants:
            masked = mags.copy()
            if g.pin_ks.shape[1]:
                masked[np.arange(g.rows.size)[:, None], g.pin_ks] = -1.0
            F = len(g.free_ants)
            top = np.argpartition(masked, K - F, axis=1)[:, K - F:]
            ks_det = np.sort(top, axis=1)                 # ascending freq
            subband_det[g.rows[:, None], g.hop,
                        np.array(g.free_ants)] = ks_det
            erased |= (mags[np.arange(g.rows.size)[:, None], ks_det]
                       < floor[:, None]).any(axis=1)
        hop_erased[g.rows, g.hop] = erased

    # --- synchronization ----------------------------------------------------
    pilot_zero = sub_vals[:, np.arange(M), k0]            # (n_prt, M)
    pilot_ok = ~hop_erased[:, np.arange(M)]
    if mode == "known":
        sync = SyncEstimate.from_spec(spec, cfg)
    else:
        cfo_hat, raw = estimate_cfo(pilot_zero, cfg, pilot_ok)
        rho_hat, dts_hat = estimate_clock(cfo_hat, cfg)
        sync = SyncEstimate(cfo_hat, rho_hat, dts_hat, raw)

    # --- pilot tables (per group of group_len PRTs) -------------------------
    n_groups = max(1, (n_prt + group_len - 1) // group_len)
    tables: list[PilotRatioTable] = []
    if mode != "known":
        pilot_hops_ok = ~hop_erased[:, :min(M + 1, H)].any(axis=1)
        for g in range(n_groups):
            rows = slice(g * group_len, min((g + 1) * group_len, n_prt))
            tables.append(build_pilot_ratios(
                sub_vals[rows], prt_abs[rows], sync, cfg,
                pilot_hops_ok[rows]))
        for g in range(1, n_groups):  # carry earlier measurements into holes
            hole = tables[g].source_prt < 0
            tables[g].values[hole] = tables[g - 1].values[hole]
            tables[g].source_prt[hole] = tables[g - 1].source_prt[hole]
            tables[g].measured[hole] = tables[g - 1].measured[hole]
        if mode == "averaged":
            avg = _averaged_table(tables, sync, cfg)
            tables = [avg] * n_groups
        elif mode == "flat":
            tables = [_flat_gain_table(t, sync, cfg) for t in tables]

    # --- payload slot enumeration (vectorized per group) --------------------
    slot_parts = []
    fhcs_parts = []
    for g in groups:
        if not g.free_ants:
            continue
        F = len(g.free_ants)
        ks = subband_det[g.rows[:, None], g.hop, np.array(g.free_ants)]
        erased = hop_erased[g.rows, g.hop]
        if g.bits:
            pos = _subbands_to_positions(ks, g.pin_ks)
            cw = rank_subsets(pos, g.pool)
            cw = np.where(erased | (cw >= (1 << g.bits)), -1, cw)
            fhcs_parts.append(np.stack(
                [prt_abs[g.rows], np.full(g.rows.size, g.hop),
                 np.full(g.rows.size, g.bits), cw], axis=1))
        block = np.empty((g.rows.size * F, 6), dtype=np.int64)
        block[:, 0] = np.repeat(prt_abs[g.rows], F)
        block[:, 1] = g.hop
        block[:, 2] = np.tile(np.array(g.free_ants), g.rows.size)
        block[:, 3] = ks.reshape(-1)
        block[:, 4] = cfg.subband_offset(block[:, 3])
        block[:, 5] = np.repeat(erased.astype(np.int64), F)
        slot_parts.append(block)

    slots = (np.concatenate(slot_parts) if slot_parts
             else np.zeros((0, 6), dtype=np.int64))
    order = np.lexsort((slots[:, 2], slots[:, 1], slots[:, 0]))
    slots = slots[order]
    if fhcs_parts:
        fr = np.concatenate(fhcs_parts)
        fr = fr[np.lexsort((fr[:, 1], fr[:, 0]))]
        fhcs_rows = [tuple(int(v) for v in row) for row in fr]
    else:
        fhcs_rows = []

    # --- PSK recovery ---------------------------------------------------------
    i_arr, h_arr, m_arr, k_arr, kap_arr = (slots[:, c] for c in range(5))
    row_arr = i_arr - first_prt
    meas = sub_vals[row_arr, h_arr, k_arr]
    if mode == "known":
        ref = expected_hop_peak(i_arr, h_arr, m_arr, k_arr, 0.0, spec, cfg)
        raw_phase = np.angle(meas * np.conj(ref))
    else:
        g_arr = np.minimum(row_arr // group_len, n_groups - 1)
        tab_vals = np.stack([t.values for t in tables])
        tab_src = np.stack([t.source_prt for t in tables])
        d_vals = tab_vals[g_arr, m_arr, kap_arr]
        d_src = tab_src[g_arr, m_arr, kap_arr]
        missing = d_src < 0
        if np.any(missing):
            d_vals[missing] = 1.0
            d_src[missing] = i_arr[missing]
            slots[missing, 5] = 1
        corr = correction_factor(d_src, m_arr + 1, i_arr, h_arr, k_arr,
                                 sync, cfg)
        pilot = sub_vals[row_arr, m_arr, k0]
        raw_phase = np.angle(meas * np.conj(d_vals * corr * pilot))

    size = 1 << order_bits
    sym = np.mod(np.rint(raw_phase * size / (2 * np.pi)), size).astype(
        np.int64)
    residual = np.mod(raw_phase - 2 * np.pi * sym / size + np.pi,
                      2 * np.pi) - np.pi
    return DemodReport(order_bits, sync, slots, raw_phase, sym, residual,
                       fhcs_rows, int(slots[:, 5].sum()),
                       int(hop_erased.sum()))


# ---------------------------------------------------------------------------
# Scoring against ground truth
# ---------------------------------------------------------------------------

@dataclass
class ErrorCounts:
    """Bit/symbol error tallies; erased symbols count half their bits wrong."""

    psk_bits: int = 0
    psk_bit_errors: float = 0.0
    psk_symbols: int = 0
    psk_symbol_errors: float = 0.0
    fhcs_bits: int = 0
    fhcs_bit_errors: float = 0.0
    fhcs_codewords: int = 0
    fhcs_codeword_errors: float = 0.0

    @property
    def psk_ber(self) -> float:
        return self.psk_bit_errors / self.psk_bits if self.psk_bits else 0.0

    @property
    def psk_ser(self) -> float:
        return (self.psk_symbol_errors / self.psk_symbols
                if self.psk_symbols else 0.0)

    @property
    def fhcs_ber(self) -> float:
        return (self.fhcs_bit_errors / self.fhcs_bits
                if self.fhcs_bits else 0.0)

    def merge(self, other: "ErrorCounts") -> "ErrorCounts":
        return ErrorCounts(*(getattr(self, f) + getattr(other, f)
                             for f in ("psk_bits", "psk_bit_errors",
                                       "psk_symbols", "psk_symbol_errors",
                                       "fhcs_bits", "fhcs_bit_errors",
                                       "fhcs_codewords",
                                       "fhcs_codeword_errors")))


def score_report(report: DemodReport, plan: HopPlan, psk: PskGrid | None,
                 cfg: RadarConfig) -> ErrorCounts:
    """Compare a demodulation report against the transmitted ground truth."""
    counts = ErrorCounts()
    J = report.order_bits

    if psk is not None:
        truth_sym = psk.symbol_index[~plan.pinned]
        if truth_sym.size != report.psk_symbol.size:
            raise ValueError("slot count mismatch between report and truth")
        xor = (gray_encode(truth_sym)
               ^ gray_encode(report.psk_symbol)).astype(np.uint64)
        erased = report.psk_erased
        diff = np.bitwise_count(xor).astype(float)
        diff[erased] = J / 2.0
        counts.psk_bits = truth_sym.size * J
        counts.psk_bit_errors = float(diff.sum())
        counts.psk_symbols = truth_sym.size
        counts.psk_symbol_errors = float(np.where(
            erased, 1.0, (truth_sym != report.psk_symbol)).sum())

    if report.fhcs_rows:
        est = np.asarray(report.fhcs_rows, dtype=np.int64)
        prt_t, hop_t, bits_t, cw_t = payload_codewords(plan)
        if not (np.array_equal(est[:, 0], prt_t)
                and np.array_equal(est[:, 1], hop_t)
                and np.array_equal(est[:, 2], bits_t)):
            raise ValueError("FHCS row layout mismatch against truth")
        cw_e = est[:, 3]
        bad = cw_e < 0
        bit_err = np.bitwise_count(
            (np.maximum(cw_e, 0) ^ cw_t).astype(np.uint64)).astype(float)
        bit_err[bad] = bits_t[bad] / 2.0
        counts.fhcs_bits = int(bits_t.sum())
        counts.fhcs_bit_errors = float(bit_err.sum())
        counts.fhcs_codewords = int(est.shape[0])
        counts.fhcs_codeword_errors = float(
            (bad | (cw_e != cw_t)).sum())
    return counts
