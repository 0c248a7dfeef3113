import itertools

import numpy as np
import pytest

from fhmimo.config import ConfigError
from fhmimo import waveform as wf


# ---------------------------------------------------------------------------
# FHCS codebook
# ---------------------------------------------------------------------------

def test_codebook_experiment_size(cfg):
    cb = wf.build_fhcs_codebook(cfg)
    assert cb.n_total == 190
    assert cb.n_usable == 128
    assert cb.bits == 7


def test_codebook_degenerate_full_pick():
    cb = wf.FhcsCodebook(5, 5)
    assert cb.n_total == 1
    assert cb.bits == 0
    assert cb.unrank(0) == (0, 1, 2, 3, 4)


def test_codebook_small_against_bruteforce():
    # oracle: plain lexicographic enumeration of 2-subsets of {0,1,2,3}
    brute = sorted(itertools.combinations(range(4), 2))
    cb = wf.FhcsCodebook(4, 2)
    assert cb.n_total == 6
    assert cb.n_usable == 4
    assert cb.bits == 2
    assert cb.entries() == brute
    assert cb.unrank(0) == (0, 1)
    for i, subset in enumerate(brute):
        assert cb.rank(subset) == i


def test_rank_unrank_roundtrip_bulk(rng):
    n, m = 17, 4
    brute = list(itertools.combinations(range(n), m))
    idx = rng.integers(0, len(brute), size=200)
    subsets = np.array([brute[i] for i in idx])
    assert np.array_equal(wf.rank_subsets(subsets, n), idx)
    assert np.array_equal(wf.unrank_subsets(idx, n, m), subsets)


def test_codebook_rejects_overfull():
    with pytest.raises(ConfigError):
        wf.FhcsCodebook(3, 4)


# ---------------------------------------------------------------------------
# Pilot layout and plans
# ---------------------------------------------------------------------------

def test_pinned_unrolling_two_antennas(cfg):
    # direct unrolling for M=2, H=5 on a PRT with nonzero pilot offset:
    # hop0: ant0@zero; hop1: ant1@zero + ant0@pilot; hop2: ant1@pilot
    pins = wf.pinned_assignments(cfg, prt_index=23)
    k0, kp = 10, 13
    assert pins[0] == {0: k0}
    assert pins[1] == {1: k0, 0: kp}
    assert pins[2] == {1: kp}
    assert pins[3] == {} and pins[4] == {}


def test_pinned_unrolling_zero_offset_prt(cfg):
    # cycled pilot would collide with the zero pilots; it is skipped
    pins = wf.pinned_assignments(cfg, prt_index=20)
    assert pins[0] == {0: 10}
    assert pins[1] == {1: 10}
    assert pins[2] == {}


def test_plan_pilot_structure_per_prt(cfg, rng):
    plan = wf.plan_hops(cfg, n_prt=40, rng=rng)
    for i in range(40):
        for m in range(cfg.n_tx):
            # exactly one zero-frequency pilot per (PRT, antenna)
            zero_hops = np.flatnonzero(
                plan.pinned[i, :, m]
                & (plan.subband[i, :, m] == cfg.zero_subband))
            if cfg.pilot_offset(i) == 0:
                assert list(zero_hops) == [m]
            else:
                cycled = np.flatnonzero(
                    plan.pinned[i, :, m]
                    & (plan.subband[i, :, m] == cfg.pilot_subband(i)))
                assert list(zero_hops) == [m]
                assert list(cycled) == [m + 1]


def test_plan_no_subband_reuse_within_hop(cfg, rng):
    # within-hop sub-band uniqueness holds by construction; check over
    # 1e4 random hops including zero-offset PRT indices
    plan = wf.plan_hops(cfg, n_prt=2000, rng=rng)
    sb = np.sort(plan.subband, axis=2)
    assert np.all(sb[:, :, 1:] != sb[:, :, :-1])


def test_plan_payload_ascending_among_free_antennas(cfg, rng):
    plan = wf.plan_hops(cfg, n_prt=200, rng=rng)
    free = ~plan.pinned
    for i in range(200):
        for h in range(cfg.hops_per_pulse):
            ks = plan.subband[i, h, free[i, h]]
            assert np.all(np.diff(ks) > 0)


def test_fhcs_roundtrip_identity(cfg, rng):
    bits = rng.integers(0, 2, size=60000, dtype=np.uint8)
    plan = wf.plan_hops(cfg, fhcs_bits=bits, n_prt=2000)
    back = wf.extract_payload_bits(plan)
    assert back.size == plan.fhcs_bits_used
    assert np.array_equal(back, bits[:back.size])


def test_plan_bits_exhausted(cfg):
    with pytest.raises(wf.PayloadLengthError):
        wf.plan_hops(cfg, fhcs_bits=np.ones(10, dtype=np.uint8), n_prt=40)


def test_per_prt_capacity(cfg):
    # M=2, K=20: hops carry floor(log2(C(19,1)))=4, 0, 4, 7, 7 bits on a
    # regular PRT; the zero-offset PRT frees the cycled-pilot slots
    assert wf.hop_payload_capacity(cfg, 1) == [4, 0, 4, 7, 7]
    assert wf.hop_payload_capacity(cfg, 0) == [4, 4, 7, 7, 7]


def test_traditional_plan(cfg, rng):
    plan = wf.plan_hops(cfg, n_prt=500, mode="traditional", rng=rng)
    assert not plan.pinned.any()
    sb = np.sort(plan.subband, axis=2)
    assert np.all(sb[:, :, 1:] != sb[:, :, :-1])
    # antenna order random: ascending everywhere would be astronomically rare
    ordered = np.all(np.diff(plan.subband, axis=2) > 0, axis=2)
    assert not ordered.all()


# ---------------------------------------------------------------------------
# PSK grid / Gray mapping
# ---------------------------------------------------------------------------

def test_gray_mapping_roundtrip():
    for j in (1, 2, 3, 4):
        p = np.arange(1 << j)
        g = wf.gray_encode(p)
        assert sorted(g) == list(p)
        assert np.array_equal(wf.gray_decode(g), p)
        # adjacent constellation positions differ in exactly one bit
        ring = np.bitwise_count((g ^ np.roll(g, -1)).astype(np.uint64))
        assert np.all(ring == 1)


def test_psk_grid_phases(cfg, rng):
    plan = wf.plan_hops(cfg, n_prt=30, rng=rng)
    psk = wf.make_psk_grid(cfg, plan, 3, rng=rng)
    assert psk.phases.shape == plan.subband.shape
    assert np.all(psk.phases[plan.pinned] == 0.0)
    assert np.all(psk.symbol_index[plan.pinned] == -1)
    on_grid = psk.phases[~plan.pinned] * 8 / (2 * np.pi)
    assert np.allclose(on_grid, np.round(on_grid))


def test_psk_bits_roundtrip(cfg, rng):
    plan = wf.plan_hops(cfg, n_prt=30, rng=rng)
    n_slots = int((~plan.pinned).sum())
    bits = rng.integers(0, 2, size=n_slots * 4, dtype=np.uint8)
    psk = wf.make_psk_grid(cfg, plan, 4, bits=bits)
    assert np.array_equal(psk.payload_bits(), bits)


def test_psk_bits_exhausted(cfg, rng):
    plan = wf.plan_hops(cfg, n_prt=30, rng=rng)
    with pytest.raises(wf.PayloadLengthError):
        wf.make_psk_grid(cfg, plan, 4, bits=np.zeros(8, dtype=np.uint8))


# ---------------------------------------------------------------------------
# Synthesis
# ---------------------------------------------------------------------------

def test_synthesize_zero_subband_is_constant(cfg, rng):
    plan = wf.plan_hops(cfg, n_prt=5, rng=rng)
    frame = wf.synthesize(plan, None, cfg)
    # hop 0 pins antenna 0 to the zero sub-band: constant-one samples
    seg = frame.hop_samples(0, 0, cfg.samples_per_hop)[0]
    assert np.allclose(seg, 1.0)


def test_synthesize_frame_layout(cfg, rng):
    plan = wf.plan_hops(cfg, n_prt=3, rng=rng)
    psk = wf.make_psk_grid(cfg, plan, 3, rng=rng)
    frame = wf.synthesize(plan, psk, cfg)
    assert frame.data.shape == (2, 3 * 1600)
    view = frame.prt_view()
    # first 200 samples of each PRT active, remainder silent
    assert np.all(np.abs(view[:, :, :200]) > 0.99)
    assert np.all(view[:, :, 200:] == 0)


def test_synthesize_hop_orthogonality_exact(cfg, rng):
    # inter-antenna inner product over any hop is exactly zero (integer
    # cycles per hop); check 1e4 random hops
    plan = wf.plan_hops(cfg, n_prt=2000, rng=rng)
    psk = wf.make_psk_grid(cfg, plan, 4, rng=rng)
    frame = wf.synthesize(plan, psk, cfg)
    hops = frame.prt_view()[:, :, :200].reshape(2, 2000, 5, 40)
    inner = np.einsum("ihn,ihn->ih", hops[0], hops[1].conj())
    assert np.max(np.abs(inner)) < 1e-9


def test_synthesize_tone_frequencies(cfg, rng):
    plan = wf.plan_hops(cfg, n_prt=4, rng=rng)
    psk = wf.make_psk_grid(cfg, plan, 3, rng=rng)
    frame = wf.synthesize(plan, psk, cfg)
    for i in (0, 3):
        for h in range(5):
            seg = frame.hop_samples(i, h, 40)
            spec = np.fft.fft(seg, axis=1)
            for m in range(2):
                b = np.argmax(np.abs(spec[m]))
                assert b == cfg.subband_bin(plan.subband[i, h, m])
                # peak carries the PSK phase (compare wrapped)
                dphi = np.angle(spec[m, b]) - float(psk.phases[i, h, m])
                assert abs((dphi + np.pi) % (2 * np.pi) - np.pi) < 1e-9
