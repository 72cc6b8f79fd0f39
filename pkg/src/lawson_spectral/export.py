"""Mesh and record writers: OBJ, binary PLY, JSON, CSV.

Vertices are points (a, b) of S^3 in C^2.  OBJ carries a stereographic image
in R^3 with the raw coordinates in a comment before each vertex; PLY carries
the raw coordinates as four little-endian floats.
"""

from __future__ import annotations

import csv
import io
import json
import struct

import numpy as np

from .surface_reconstruction import SurfaceMesh


def s3_coords(vertices):
    """(Re a, Im a, Re b, Im b)."""
    v = np.asarray(vertices, complex)
    return np.stack([v[:, 0].real, v[:, 0].imag, v[:, 1].real, v[:, 1].imag], axis=-1)


def auto_pole(vertices):
    """Of the eight points +-e_k, the one farthest from every vertex."""
    X = s3_coords(vertices)
    cands = np.concatenate([np.eye(4), -np.eye(4)])
    gaps = [np.linalg.norm(X - c, axis=1).min() for c in cands]
    return cands[int(np.argmax(gaps))]


def stereographic(vertices, pole):
    """Projection from ``pole`` onto the hyperplane orthogonal to it."""
    X = s3_coords(vertices)
    p = np.asarray(pole, float)
    p = p / np.linalg.norm(p)
    # orthonormal basis of the complement, deterministic
    q, _ = np.linalg.qr(np.column_stack([p, np.eye(4)]))
    basis = q[:, 1:4]
    dot = X @ p
    return (X @ basis) / (1 - dot)[:, None]


def _header_lines(stamp: dict):
    return [f"{k}: {v}" for k, v in stamp.items()]


def obj_text(mesh: SurfaceMesh, stamp: dict, pole=None) -> str:
    pole = auto_pole(mesh.vertices) if pole is None else np.asarray(pole, float)
    P = stereographic(mesh.vertices, pole)
    X = s3_coords(mesh.vertices)
    out = io.StringIO()
    for line in _header_lines(stamp):
        out.write(f"# {line}\n")
    out.write("# stereographic pole: " + " ".join(f"{c:.17g}" for c in pole) + "\n")
    for x, p in zip(X, P):
        out.write("# s3 " + " ".join(f"{c:.17g}" for c in x) + "\n")
        out.write("v " + " ".join(f"{c:.10g}" for c in p) + "\n")
    for f in mesh.faces:
        out.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")
    return out.getvalue()


def ply_bytes(mesh: SurfaceMesh, stamp: dict) -> bytes:
    X = s3_coords(mesh.vertices).astype("<f4")
    header = ["ply", "format binary_little_endian 1.0"]
    header += [f"comment {line}" for line in _header_lines(stamp)]
    header += [f"element vertex {len(X)}", "property float x", "property float y", "property float z",
               "property float w", f"element face {len(mesh.faces)}", "property list uchar int vertex_indices",
               "end_header"]
    buf = io.BytesIO()
    buf.write(("\n".join(header) + "\n").encode("ascii"))
    buf.write(X.tobytes())
    for f in mesh.faces:
        buf.write(struct.pack("<B3i", 3, *(int(i) for i in f)))
    return buf.getvalue()


def read_ply_vertices(data: bytes):
    """Vertices and faces back from ply_bytes output."""
    end = data.index(b"end_header\n") + len(b"end_header\n")
    head = data[:end].decode("ascii").splitlines()
    nv = int(next(h for h in head if h.startswith("element vertex")).split()[-1])
    nf = int(next(h for h in head if h.startswith("element face")).split()[-1])
    X = np.frombuffer(data, "<f4", count=4 * nv, offset=end).reshape(nv, 4)
    off = end + 16 * nv
    faces = np.array([struct.unpack_from("<B3i", data, off + 13 * k)[1:] for k in range(nf)])
    return X, faces


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.generic):
        return _jsonable(v.item())
    if isinstance(v, float) and not np.isfinite(v):
        return None
    return v


def json_text(record: dict, stamp: dict) -> str:
    return json.dumps(_jsonable({**stamp, **record}), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def csv_text(columns, rows, stamp: dict) -> str:
    """RFC 4180 CSV; the stamp goes in two leading columns of every row."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    keys = list(stamp)
    w.writerow(keys + list(columns))
    for r in rows:
        w.writerow([stamp[k] for k in keys] + list(r))
    return buf.getvalue()
