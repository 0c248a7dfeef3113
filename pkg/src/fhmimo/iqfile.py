"""IQ sample container and file formats.

Binary IQ files carry a small text header (terminated by a ``data`` line)
followed by interleaved float32 real/imag pairs, channel-major. CSV helpers
stamp a configuration hash comment so every artifact can be traced back to
the exact run settings.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

_MAGIC = "FHIQ1"


class IqFormatError(ValueError):
    """Malformed IQ file header or truncated payload."""


@dataclass
class IqFrame:
    """Complex baseband samples, one row per channel."""

    data: np.ndarray          # (n_channels, n_samples) complex
    sample_rate: float
    samples_per_prt: int

    def __post_init__(self):
        self.data = np.atleast_2d(np.asarray(self.data))

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def n_prt(self) -> int:
        return self.n_samples // self.samples_per_prt

    def prt_view(self) -> np.ndarray:
        """Samples reshaped to (n_channels, n_prt, samples_per_prt)."""
        return self.data.reshape(self.n_channels, self.n_prt,
                                 self.samples_per_prt)

    def hop_samples(self, i: int, h: int, samples_per_hop: int) -> np.ndarray:
        """(n_channels, samples_per_hop) slice of hop h in PRT i."""
        start = i * self.samples_per_prt + h * samples_per_hop
        return self.data[:, start:start + samples_per_hop]


def write_iq(path, frame: IqFrame) -> None:
    with open(path, "wb") as f:
        header = (f"{_MAGIC}\n"
                  f"sample_rate={frame.sample_rate:.17g}\n"
                  f"channels={frame.n_channels}\n"
                  f"samples={frame.n_samples}\n"
                  f"samples_per_prt={frame.samples_per_prt}\n"
                  f"data\n")
        f.write(header.encode("ascii"))
        interleaved = np.empty((frame.n_channels, frame.n_samples, 2),
                               dtype=np.float32)
        interleaved[..., 0] = frame.data.real
        interleaved[..., 1] = frame.data.imag
        f.write(interleaved.tobytes())


def read_iq(path) -> IqFrame:
    with open(path, "rb") as f:
        first = f.readline().decode("ascii", "replace").strip()
        if first != _MAGIC:
            raise IqFormatError(f"bad magic {first!r}")
        fields = {}
        while True:
            line = f.readline().decode("ascii", "replace").strip()
            if line == "data":
                break
            if not line or "=" not in line:
                raise IqFormatError(f"bad header line {line!r}")
            key, val = line.split("=", 1)
            fields[key] = val
        try:
            sample_rate = float(fields["sample_rate"])
            channels = int(fields["channels"])
            samples = int(fields["samples"])
            spp = int(fields["samples_per_prt"])
        except (KeyError, ValueError) as exc:
            raise IqFormatError(f"incomplete header: {exc}") from exc
        payload = f.read()
        if len(payload) != channels * samples * 8:
            raise IqFormatError("payload size does not match header")
        raw = np.frombuffer(payload, dtype=np.float32)
        ri = raw.reshape(channels, samples, 2)
        return IqFrame(ri[..., 0] + 1j * ri[..., 1], sample_rate, spp)


def config_hash(config_dict: dict) -> str:
    """Short stable hash of a configuration mapping."""
    blob = json.dumps(config_dict, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def write_csv(path, header_cols, rows, cfg_hash: str | None = None) -> None:
    """CSV with a header row and an optional config-hash comment line."""
    with open(path, "w", encoding="ascii") as f:
        if cfg_hash is not None:
            f.write(f"# config_hash={cfg_hash}\n")
        f.write(",".join(header_cols) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, (np.floating,)):
        return f"{float(v):.12g}"
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)
