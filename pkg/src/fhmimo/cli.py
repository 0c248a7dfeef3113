"""Command-line front end: config parsing, subcommand dispatch, file I/O.

One JSON config file with sections mirroring the library modules (radar,
impairment, scene, array, sweep, run); command-line flags override file
keys; the effective configuration is echoed into the output directory so
every artifact can be reproduced from it. A single --seed drives all
randomness.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import bench, commrx, radarrx
from .config import ConfigError, RadarConfig
from .impairments import FrontEndProfile, ImpairmentSpec, apply
from .iqfile import IqFormatError, config_hash, read_iq, write_csv, write_iq
from .waveform import PayloadLengthError, make_psk_grid, plan_hops, synthesize

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_PAYLOAD = 4
EXIT_INTERNAL = 5

_SECTIONS = ("radar", "impairment", "scene", "array", "sweep", "run")


def _check_keys(section: str, given: dict, allowed) -> None:
    unknown = set(given) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Parse and validate the JSON run configuration."""
    raw = {}
    if path is not None:
        with open(path) as f:
            raw = json.load(f)
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys("<root>", raw, _SECTIONS)
    for sec in _SECTIONS:
        raw.setdefault(sec, {})
    for key, val in (overrides or {}).items():
        sec, name = key.split(".", 1)
        raw[sec][name] = val

    fields = {f.name for f in dataclasses.fields(RadarConfig)}
    _check_keys("radar", raw["radar"], fields)
    _check_keys("impairment", raw["impairment"],
                {"rho", "cfo", "sto_initial", "sample_time_offset",
                 "noise_var", "snr_db", "front_end", "ripple_db",
                 "ripple_rad"})
    _check_keys("scene", raw["scene"],
                {"targets", "n_targets", "range_span", "velocity_span",
                 "azimuth_span"})
    _check_keys("array", raw["array"],
                {"n_rx", "tx_spacing", "rx_spacing", "random_errors"})
    sweep_fields = {f.name for f in dataclasses.fields(bench.SweepSpec)}
    _check_keys("sweep", raw["sweep"], sweep_fields | {"kind"})
    _check_keys("run", raw["run"],
                {"seed", "out", "order_bits", "n_prt", "mode", "group_len",
                 "payload_file", "iq_file"})
    return raw


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Validated run configuration: module sections plus run options,
    defaulting to the experiment parameters, unknown keys rejected."""

    sections: dict

    @classmethod
    def load(cls, path=None, overrides: dict | None = None) -> "RunConfig":
        return cls(load_config(path, overrides))

    def radar(self) -> RadarConfig:
        return build_radar_config(self.sections)

    def impairments(self, rng) -> ImpairmentSpec:
        return build_impairments(self.sections, self.radar(), rng)

    def sweep(self) -> "bench.SweepSpec":
        return build_sweep_spec(self.sections)

    def hash(self) -> str:
        return config_hash(self.sections)


def build_radar_config(raw: dict) -> RadarConfig:
    return RadarConfig(**raw["radar"])


def build_impairments(raw: dict, cfg: RadarConfig, rng) -> ImpairmentSpec:
    sec = dict(raw["impairment"])
    noise_var = sec.pop("noise_var", 0.0)
    if "snr_db" in sec:
        noise_var = 10.0 ** (-float(sec.pop("snr_db")) / 10.0)
    fe_kind = sec.pop("front_end", "flat")
    ripple_db = float(sec.pop("ripple_db", 1.0))
    ripple_rad = float(sec.pop("ripple_rad", 0.2))
    if fe_kind == "rippled":
        fe = FrontEndProfile.rippled(cfg, rng=rng, mag_ripple_db=ripple_db,
                                     phase_ripple_rad=ripple_rad)
    elif fe_kind == "flat":
        fe = None
    else:
        raise ConfigError(f"unknown front_end kind {fe_kind!r}")
    if "rho" in sec:
        rho = float(sec.pop("rho"))
        spec = ImpairmentSpec.from_clock(
            rho, cfg, sto_initial=float(sec.pop("sto_initial", 0.0)),
            noise_var=noise_var, front_end=fe)
        _check_keys("impairment", sec, {})
        return spec
    spec = ImpairmentSpec(
        cfo=float(sec.pop("cfo", 0.0)),
        sto_initial=float(sec.pop("sto_initial", 0.0)),
        sample_time_offset=float(sec.pop("sample_time_offset", 0.0)),
        noise_var=noise_var, front_end=fe)
    spec.validate(cfg)
    return spec


def build_scene(raw: dict, cfg: RadarConfig, rng) -> radarrx.TargetScene:
    sec = raw["scene"]
    if sec.get("targets"):
        targets = [radarrx.Target(t["range_m"], t.get("velocity", 0.0),
                                  t.get("azimuth_deg", 0.0),
                                  complex(t.get("coeff", 1.0)))
                   for t in sec["targets"]]
        scene = radarrx.TargetScene(targets)
    else:
        scene = radarrx.TargetScene.random(
            cfg, int(sec.get("n_targets", 50)), rng=rng,
            range_span=tuple(sec.get("range_span", (750.0, 4185.0))),
            velocity_span=tuple(sec.get("velocity_span", (-170.0, 170.0))),
            azimuth_span=tuple(sec.get("azimuth_span", (-4.0, 4.0))))
    scene.validate(cfg)
    return scene


def build_array(raw: dict, cfg: RadarConfig, rng) -> radarrx.ArrayModel:
    sec = raw["array"]
    kw = dict(n_tx=cfg.n_tx, n_rx=int(sec.get("n_rx", 12)),
              tx_spacing=float(sec.get("tx_spacing", 6.0)),
              rx_spacing=float(sec.get("rx_spacing", 0.5)))
    if sec.get("random_errors"):
        return radarrx.ArrayModel.with_random_errors(rng=rng, **kw)
    return radarrx.ArrayModel(**kw)


def _echo_config(raw: dict, out_dir: Path) -> str:
    blob = json.dumps(raw, sort_keys=True, indent=2, default=str)
    (out_dir / "effective_config.json").write_text(blob + "\n")
    return config_hash(raw)


def _read_payload_bits(path) -> np.ndarray:
    text = Path(path).read_text()
    bits = [c for c in text if c in "01"]
    if not bits:
        raise PayloadLengthError(f"no payload bits found in {path}")
    return np.array([int(c) for c in bits], dtype=np.uint8)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_txgen(raw: dict, out_dir: Path) -> None:
    """Write transmit IQ frames and the ground-truth plan/PSK records."""
    cfg = build_radar_config(raw)
    run = raw["run"]
    seed = int(run.get("seed", 0))
    n_prt = int(run.get("n_prt", cfg.prts_per_cpi))
    order_bits = int(run.get("order_bits", 3))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    payload = (_read_payload_bits(run["payload_file"])
               if run.get("payload_file") else None)
    plan = plan_hops(cfg, fhcs_bits=payload, n_prt=n_prt, rng=rng)
    psk = make_psk_grid(cfg, plan, order_bits, rng=rng)
    frame = synthesize(plan, psk, cfg)
    cfg_hash = _echo_config(raw, out_dir)
    write_iq(out_dir / "tx.iq", frame)
    (out_dir / "plan.txt").write_text(
        f"# config_hash={cfg_hash}\n" + "\n".join(plan.to_records(psk)) + "\n")
    print(f"wrote {out_dir / 'tx.iq'} ({frame.n_channels} ch x "
          f"{frame.n_samples} samples) and plan.txt")


def cmd_comm(raw: dict, out_dir: Path) -> None:
    """End-to-end communication pipeline; reports BER when truth is local."""
    cfg = build_radar_config(raw)
    run = raw["run"]
    seed = int(run.get("seed", 0))
    n_prt = int(run.get("n_prt", cfg.prts_per_cpi))
    order_bits = int(run.get("order_bits", 3))
    mode = run.get("mode", "estimated")
    group_len = run.get("group_len")
    group_len = int(group_len) if group_len else None
    seq = np.random.SeedSequence([seed, 2])
    rng = np.random.default_rng(seq)
    spec = build_impairments(raw, cfg, rng)
    cfg_hash = _echo_config(raw, out_dir)

    plan = psk = None
    if run.get("iq_file"):
        rx = read_iq(run["iq_file"])
    else:
        plan = plan_hops(cfg, n_prt=n_prt, rng=rng)
        psk = make_psk_grid(cfg, plan, order_bits, rng=rng)
        frame = synthesize(plan, psk, cfg)
        rx = apply(frame, plan, psk, spec, cfg, rng=rng)
    report = commrx.demodulate(rx, cfg, order_bits, mode=mode,
                               spec=spec if mode == "known" else None,
                               group_len=group_len)
    report.to_csv(out_dir / "demod.csv", cfg_hash)
    summary = report.summary()
    if plan is not None:
        counts = commrx.score_report(report, plan, psk, cfg)
        summary.update(psk_ber=counts.psk_ber, psk_ser=counts.psk_ser,
                       fhcs_ber=counts.fhcs_ber,
                       psk_bits=counts.psk_bits,
                       fhcs_bits=counts.fhcs_bits)
    (out_dir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n")
    print(f"wrote {out_dir / 'demod.csv'}; "
          + (f"psk_ber={summary['psk_ber']:.3g} "
             f"fhcs_ber={summary['fhcs_ber']:.3g}" if plan is not None
             else "no local truth"))


def write_rdm(path, rdm: radarrx.RangeDopplerMap) -> None:
    """Binary range-Doppler cube: text header then float32 re/im pairs."""
    with open(path, "wb") as f:
        f.write((f"FHRDM1\ndoppler={rdm.n_doppler}\n"
                 f"channels={rdm.cube.shape[1]}\n"
                 f"range={rdm.n_range}\n"
                 f"range_offset={rdm.range_offset}\n"
                 f"prt_duration={rdm.cfg.prt_duration:.17g}\n"
                 f"sample_rate={rdm.cfg.sample_rate:.17g}\ndata\n"
                 ).encode("ascii"))
        inter = np.empty(rdm.cube.shape + (2,), dtype=np.float32)
        inter[..., 0] = rdm.cube.real
        inter[..., 1] = rdm.cube.imag
        f.write(inter.tobytes())


def cmd_radar(raw: dict, out_dir: Path) -> None:
    """Synthesize a scene, run the radar chain, export detections + RDM."""
    cfg = build_radar_config(raw)
    run = raw["run"]
    seed = int(run.get("seed", 0))
    seq = np.random.SeedSequence([seed, 3])
    scene_rng, noise_rng, plan_rng, arr_rng = (
        np.random.default_rng(s) for s in seq.spawn(4))
    scene = build_scene(raw, cfg, scene_rng)
    array = build_array(raw, cfg, arr_rng)
    sweep = build_sweep_spec(raw)
    spec = raw["impairment"]
    noise_var = 10.0 ** (-float(spec.get("snr_db", 0.0)) / 10.0) \
        if "snr_db" in spec else float(spec.get("noise_var", 1.0))
    plan = plan_hops(cfg, n_prt=cfg.prts_per_cpi, rng=plan_rng)
    psk = make_psk_grid(cfg, plan, int(run.get("order_bits", 3)),
                        rng=plan_rng)
    rx = radarrx.synthesize_echo(plan, psk, scene, array, cfg,
                                 noise_var=noise_var, rng=noise_rng)
    grid = radarrx.angle_grid(sweep.angle_fov_deg, sweep.angle_grid_points)
    rdm, dets = radarrx.process_cpi(rx, plan, psk, cfg, array,
                                    p_fa=sweep.p_fa, grid=grid)
    cfg_hash = _echo_config(raw, out_dir)
    dets.to_csv(out_dir / "detections.csv", cfg_hash)
    write_rdm(out_dir / "rdm.bin", rdm)
    truth_rows = [(t.range_m, t.velocity, t.azimuth_deg)
                  for t in scene.targets]
    write_csv(out_dir / "scene.csv", ["range_m", "velocity", "azimuth_deg"],
              truth_rows, cfg_hash)
    print(f"wrote {len(dets)} detections for {len(scene.targets)} targets")


def build_sweep_spec(raw: dict) -> bench.SweepSpec:
    sec = {k: v for k, v in raw["sweep"].items() if k != "kind"}
    for key in ("snr_grid_db", "modulations", "hop_durations",
                "radar_snr_grid_db", "rho_span", "range_span",
                "velocity_span", "azimuth_span"):
        if key in sec:
            sec[key] = tuple(sec[key])
    if "seed" not in sec:
        sec["seed"] = int(raw["run"].get("seed", 0))
    return bench.SweepSpec(**sec)


def cmd_sweep(raw: dict, out_dir: Path) -> None:
    """Run the configured Monte-Carlo study and export report files."""
    cfg = build_radar_config(raw)
    sweep = build_sweep_spec(raw)
    kind = raw["sweep"].get("kind", "ber")
    cfg_hash = _echo_config(raw, out_dir)
    if kind == "ber":
        rep = bench.run_ber_sweep(cfg, sweep)
        rep.to_csv(out_dir / "ber_sweep.csv", cfg_hash)
        rep.to_plotdata(out_dir / "ber_plotdata.csv", "snr_db",
                        ["psk_ber", "fhcs_ber"],
                        ["hop_duration", "order_bits"], cfg_hash)
    elif kind == "radar":
        rep = bench.run_radar_sweep(cfg, sweep)
        rep.to_csv(out_dir / "radar_sweep.csv", cfg_hash)
        rep.to_plotdata(out_dir / "radar_plotdata.csv", "snr_db",
                        ["rmse_range", "rmse_velocity", "rmse_angle"],
                        ["waveform"], cfg_hash)
    elif kind == "methods":
        rep = bench.run_method_comparison(cfg, sweep)
        rep.to_csv(out_dir / "method_comparison.csv", cfg_hash)
    else:
        raise ConfigError(f"unknown sweep kind {kind!r}")
    print(f"wrote {kind} report to {out_dir}")


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fhmimo",
        description="Frequency-hopping MIMO dual-function "
                    "radar-communications simulator")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="master seed (overrides config)")
    p.add_argument("--out", default="out", help="output directory")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("txgen", help="generate transmit IQ + plan files")
    c = sub.add_parser("comm", help="run the communication receive chain")
    c.add_argument("--modulation", type=int, choices=(1, 2, 3, 4),
                   help="PSK bits per symbol")
    c.add_argument("--mode",
                   choices=("estimated", "averaged", "flat", "known"))
    r = sub.add_parser("radar", help="run the radar receive chain")
    r.add_argument("--snr", type=float, help="per-sample SNR in dB")
    s = sub.add_parser("sweep", help="run a Monte-Carlo study")
    s.add_argument("--kind", choices=("ber", "radar", "methods"))
    s.add_argument("--snr", type=float, nargs="+", help="SNR grid override")
    s.add_argument("--modulation", type=int, nargs="+",
                   help="PSK orders (bits) override")
    s.add_argument("--trials", type=int)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    overrides = {}
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if getattr(args, "modulation", None) is not None:
        if args.command == "comm":
            overrides["run.order_bits"] = args.modulation
        else:
            overrides["sweep.modulations"] = list(args.modulation)
    if getattr(args, "mode", None):
        overrides["run.mode"] = args.mode
    if getattr(args, "snr", None) is not None:
        if args.command == "radar":
            overrides["impairment.snr_db"] = args.snr
        else:
            overrides["sweep.snr_grid_db"] = list(args.snr)
            overrides["sweep.radar_snr_grid_db"] = list(args.snr)
    if getattr(args, "kind", None):
        overrides["sweep.kind"] = args.kind
    if getattr(args, "trials", None) is not None:
        overrides["sweep.trials"] = args.trials

    try:
        raw = load_config(args.config, overrides)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        handler = {"txgen": cmd_txgen, "comm": cmd_comm,
                   "radar": cmd_radar, "sweep": cmd_sweep}[args.command]
        handler(raw, out_dir)
        return EXIT_OK
    except (ConfigError, json.JSONDecodeError, TypeError) as exc:
        _fail("config", exc)
        return EXIT_CONFIG
    except PayloadLengthError as exc:
        _fail("payload", exc)
        return EXIT_PAYLOAD
    except (IqFormatError, OSError) as exc:
        _fail("io", exc)
        return EXIT_IO
    except Exception as exc:  # pragma: no cover - defensive
        _fail("internal", exc)
        return EXIT_INTERNAL


def _fail(category: str, exc: Exception) -> None:
    sys.stderr.write(json.dumps({"error": category, "message": str(exc)})
                     + "\n")


if __name__ == "__main__":
    sys.exit(main())
