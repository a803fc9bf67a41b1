"""CSV/JSON/binary artifacts.

CSV files start with two comment lines, ``# meta: {json}`` and
``# generated: <UTC timestamp>``, followed by a header row.

Binary dumps (little-endian):

    offset 0   8 bytes   magic b"LPSCBIN1"
    offset 8   u64       rows
    offset 16  u64       cols
    offset 24  u64       length L of the UTF-8 JSON metadata
    offset 32  L bytes   metadata
    then       rows*cols pairs of f64 (re, im), row-major
"""

from __future__ import annotations

import csv
import json
import struct
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

__all__ = [
    "MAGIC",
    "to_jsonable",
    "write_json",
    "write_csv",
    "read_csv",
    "write_binary",
    "read_binary",
    "export_jost_csv",
    "export_scattering",
    "export_kernel",
]

MAGIC = b"LPSCBIN1"
_HEADER = struct.Struct("<8sQQQ")


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return obj


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def _stamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_csv(path: str | Path, header, rows, meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# meta: {json.dumps(to_jsonable(meta or {}), sort_keys=True)}\n")
        fh.write(f"# generated: {_stamp()}\n")
        w = csv.writer(fh)
        w.writerow(list(header))
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def read_csv(path: str | Path) -> tuple[dict, list, np.ndarray]:
    """(meta, header, numeric body)."""
    meta, header, body = {}, None, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("# meta:"):
                meta = json.loads(line[len("# meta:"):])
            elif line.startswith("#"):
                continue
            elif header is None:
                header = next(csv.reader([line]))
            elif line.strip():
                body.append([float(v) for v in next(csv.reader([line]))])
    return meta, header or [], np.array(body, dtype=float)


def write_binary(path: str | Path, array, meta: dict | None = None) -> Path:
    a = np.asarray(array)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError("binary dumps hold 1-D or 2-D arrays")
    blob = json.dumps(to_jsonable(meta or {}), sort_keys=True).encode()
    pairs = np.empty(a.shape + (2,), dtype="<f8")
    pairs[..., 0] = np.real(a)
    pairs[..., 1] = np.imag(a) if np.iscomplexobj(a) else 0.0
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, a.shape[0], a.shape[1], len(blob)))
        fh.write(blob)
        fh.write(pairs.tobytes(order="C"))
    return path


def read_binary(path: str | Path) -> tuple[np.ndarray, dict]:
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, rows, cols, L = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise ValueError(f"{path}: not an lpscatter binary dump")
    off = _HEADER.size
    meta = json.loads(raw[off:off + L].decode())
    data = np.frombuffer(raw, dtype="<f8", offset=off + L)
    if data.size != rows * cols * 2:
        raise ValueError(f"{path}: truncated payload")
    pairs = data.reshape(rows, cols, 2)
    return pairs[..., 0] + 1j * pairs[..., 1], meta


def export_jost_csv(jf, path: str | Path, side: str = "+", meta: dict | None = None) -> Path:
    m = jf.m_plus if side in ("+", "plus") else jf.m_minus
    X, Tau = np.meshgrid(jf.x, jf.tau, indexing="ij")
    rows = zip(X.ravel(), Tau.ravel(), m.real.ravel(), m.imag.ravel())
    return write_csv(path, ["x", "tau", "re_m", "im_m"], rows, dict(meta or {}, side=side))


def export_scattering(sd, csv_path: str | Path, json_path: str | Path | None = None,
                      meta: dict | None = None) -> list[Path]:
    rows = zip(sd.tau, sd.T.real, sd.T.imag, sd.R_plus.real, sd.R_plus.imag, sd.R_minus.real, sd.R_minus.imag)
    out = [write_csv(csv_path, ["tau", "re_T", "im_T", "re_R_plus", "im_R_plus", "re_R_minus", "im_R_minus"],
                     rows, meta)]
    if json_path is not None:
        out.append(write_json(json_path, dict(sd.summary(), **(meta or {}))))
    return out


def export_kernel(km, bin_path: str | Path, csv_path: str | Path | None = None, stride: int = 16,
                  meta: dict | None = None) -> list[Path]:
    info = dict(meta or {}, M=km.M, provenance=km.provenance, constant=km.constant,
                x_min=float(km.x[0]), x_max=float(km.x[-1]), n=int(km.x.size), **km.meta)
    out = [write_binary(bin_path, km.K, info)]
    if csv_path is not None:
        idx = np.arange(0, km.x.size, stride)
        sub = km.K[np.ix_(idx, idx)]
        X, Y = np.meshgrid(km.x[idx], km.x[idx], indexing="ij")
        rows = zip(X.ravel(), Y.ravel(), np.real(sub).ravel(), np.imag(sub).ravel())
        out.append(write_csv(csv_path, ["x", "y", "re_K", "im_K"], rows, dict(info, stride=stride)))
    return out
