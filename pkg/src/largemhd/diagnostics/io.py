"""CSV trajectories and binary spectral snapshots.

Snapshot layout (little-endian)::

    b"MHDF" | u32 version = 1 | u32 dim | u32 components | u32 N | f64 L |
    f64 (re, im) pairs of the full spectrum, shape (components, N, ..., N),
    numpy FFT index order, row-major

The half spectrum kept in memory is expanded by Hermitian symmetry on write
and recovered verbatim on read, so read(write(F)) is bit-exact.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from ..spectral import HERMITIAN_TOL, DomainSpec, SpectralField
from .records import RECORD_FIELDS, DiagnosticsRecord

__all__ = ["write_csv", "read_csv", "write_snapshot", "read_snapshot", "SnapshotError"]

MAGIC = b"MHDF"
VERSION = 1
_HEADER = struct.Struct("<4sIIIId")


class SnapshotError(ValueError):
    pass


def _format(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    return format(float(value), ".16e")


def write_csv(trajectory, path) -> None:
    """One header row with every record field, one line per record."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for rec in trajectory:
            w.writerow([_format(v) for v in rec.values()])


def read_csv(path) -> list[DiagnosticsRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RECORD_FIELDS:
            raise ValueError(f"unexpected CSV header {header}")
        for row in reader:
            vals = [float(x) for x in row]
            vals[-1] = bool(vals[-1])
            out.append(DiagnosticsRecord(*vals))
    return out


def _full_spectrum(F: SpectralField) -> np.ndarray:
    d = F.domain
    n = d.N
    half = F.coeffs
    full = np.zeros((F.components,) + d.physical_shape, dtype=complex)
    full[..., : n // 2 + 1] = half
    # c(-k) = conj(c(k)) fills the last-axis indices above N/2
    neg = np.conj(half[..., 1 : n // 2])
    for ax in range(1, d.dim):
        neg = np.roll(np.flip(neg, axis=ax), 1, axis=ax)
    full[..., n // 2 + 1 :] = np.flip(neg, axis=-1)
    return full


def write_snapshot(F: SpectralField, path) -> None:
    d = F.domain
    full = _full_spectrum(F)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, d.dim, F.components, d.N, float(d.scale)))
        fh.write(np.ascontiguousarray(full).astype("<c16").tobytes())


def read_snapshot(path, dealias_fraction: float = 2.0 / 3.0) -> SpectralField:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise SnapshotError(f"snapshot too short for header: {len(raw)} bytes")
    magic, version, dim, m, n, L = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    domain = DomainSpec(dim, L, n, dealias_fraction)
    expected = _HEADER.size + 16 * m * n**dim
    if len(raw) != expected:
        raise SnapshotError(f"snapshot length {len(raw)} bytes, expected {expected}")
    full = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).reshape((m,) + domain.physical_shape)
    F = SpectralField(domain, full[..., : n // 2 + 1].astype(complex))
    mirror = _full_spectrum(F)
    asym = float(np.max(np.abs(mirror - full), initial=0.0))
    if asym > HERMITIAN_TOL * max(float(np.max(np.abs(full), initial=0.0)), 1.0):
        raise SnapshotError(f"snapshot spectrum is not Hermitian: asymmetry {asym:.3e}")
    return F
