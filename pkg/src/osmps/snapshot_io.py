"""Binary snapshot files and run manifests.

A snapshot file holds one operator-space MPS bit-exactly: a fixed header
(magic "OMPS", format version, chain geometry, arithmetic flag, basis tag,
stamp, log_scale, bond dimensions) followed by the site tensors as
little-endian float64 in row-major order, complex entries stored as
re/im pairs (numpy's native complex128 layout).  Loading reproduces the
state bit for bit; loaders reject unknown format versions.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from pathlib import Path

import numpy as np

from .basis import make_basis
from .evolve import Snapshot
from .mps import OperatorMps

MAGIC = b"OMPS"
FORMAT_VERSION = 1
_KINDS = {"beta": 0, "t": 1}
_KINDS_INV = {v: k for k, v in _KINDS.items()}


class SnapshotFormatError(ValueError):
    """Corrupt or unsupported snapshot file."""


def save_snapshot(path, snap: Snapshot) -> None:
    """Write atomically (temp file + rename)."""
    state = snap.state
    header = bytearray()
    header += MAGIC
    header += struct.pack("<III", FORMAT_VERSION, state.n, state.phys_dim)
    header += struct.pack("<BB", 0 if state.is_real else 1, _KINDS[snap.kind])
    tag = state.basis.label.encode()
    header += struct.pack("<I", len(tag)) + tag
    header += struct.pack("<dd", snap.stamp, state.log_scale)
    header += struct.pack(f"<{state.n + 1}I", *state.bond_dims())

    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(bytes(header))
        dtype = "<f8" if state.is_real else "<c16"
        for t in state.tensors:
            fh.write(np.ascontiguousarray(t, dtype=dtype).tobytes())
    os.replace(tmp, path)


def load_snapshot(path) -> Snapshot:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {raw[:4]!r}")
    off = 4
    version, n, phys_dim = struct.unpack_from("<III", raw, off)
    off += 12
    if version != FORMAT_VERSION:
        raise SnapshotFormatError(f"{path}: unsupported format version {version}")
    arith, kind_code = struct.unpack_from("<BB", raw, off)
    off += 2
    (tag_len,) = struct.unpack_from("<I", raw, off)
    off += 4
    tag = raw[off : off + tag_len].decode()
    off += tag_len
    stamp, log_scale = struct.unpack_from("<dd", raw, off)
    off += 16
    bonds = struct.unpack_from(f"<{n + 1}I", raw, off)
    off += 4 * (n + 1)

    kind_name, d_str = tag.split(":d=")
    basis = make_basis(int(d_str), kind_name)
    if basis.size != phys_dim:
        raise SnapshotFormatError(f"{path}: basis {tag} does not match phys_dim {phys_dim}")
    dtype = np.dtype("<f8") if arith == 0 else np.dtype("<c16")
    tensors = []
    for j in range(n):
        shape = (bonds[j], phys_dim, bonds[j + 1])
        count = shape[0] * shape[1] * shape[2]
        t = np.frombuffer(raw, dtype=dtype, count=count, offset=off).reshape(shape).copy()
        off += count * dtype.itemsize
        tensors.append(t)
    if off != len(raw):
        raise SnapshotFormatError(f"{path}: {len(raw) - off} trailing bytes")
    state = OperatorMps(n, basis, tensors, log_scale, center=None)
    return Snapshot(stamp=stamp, kind=_KINDS_INV[kind_code], state=state, cum_discarded=0.0)


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, *, kind: str, n: int, d: int, basis: str, entries,
                   metadata: dict, aborted: bool = False) -> None:
    """Structured listing of a run's snapshot stamps, files, and hashes."""
    doc = {
        "format": FORMAT_VERSION,
        "kind": kind,
        "n": n,
        "d": d,
        "basis": basis,
        "aborted": aborted,
        "metadata": metadata,
        "snapshots": entries,
    }
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def read_manifest(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise SnapshotFormatError(f"manifest not found: {path}")
    except json.JSONDecodeError as exc:
        raise SnapshotFormatError(f"manifest {path} is not valid JSON: {exc}")
    if doc.get("format") != FORMAT_VERSION:
        raise SnapshotFormatError(f"manifest {path}: unsupported format {doc.get('format')}")
    return doc


def load_manifest_snapshots(manifest_path) -> tuple[dict, list[Snapshot]]:
    """Load every snapshot a manifest lists, restoring truncation provenance."""
    doc = read_manifest(manifest_path)
    base = Path(manifest_path).parent
    snaps = []
    for entry in doc["snapshots"]:
        snap = load_snapshot(base / entry["file"])
        snap.cum_discarded = entry.get("cum_discarded", 0.0)
        if abs(snap.stamp - entry["stamp"]) > 1e-12:
            raise SnapshotFormatError(
                f"{entry['file']}: stamp {snap.stamp} disagrees with manifest {entry['stamp']}"
            )
        snaps.append(snap)
    snaps.sort(key=lambda s: s.stamp)
    return doc, snaps
