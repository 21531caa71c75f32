"""Point cloud and mesh file I/O: XYZ text, PLY (ascii and binary
little-endian), and OFF meshes.

XYZ files hold one whitespace-separated x y z triple per line with '#'
comments. PLY vertices need float x/y/z properties; extra scalar
properties are skipped. Polygon faces are fan-triangulated and degenerate
faces dropped (logged). Coordinates with NaN/inf are rejected at the
boundary.
"""

from __future__ import annotations

import enum
import logging
import struct
from pathlib import Path

import numpy as np

from .errors import IoError, ParseError, UnsupportedFormat
from .geom_core import PointCloud
from .metrics import TriangleMesh

log = logging.getLogger(__name__)

_PLY_TYPES = {
    "char": "b", "int8": "b", "uchar": "B", "uint8": "B",
    "short": "h", "int16": "h", "ushort": "H", "uint16": "H",
    "int": "i", "int32": "i", "uint": "I", "uint32": "I",
    "float": "f", "float32": "f", "double": "d", "float64": "d",
}


class CloudFormat(enum.Enum):
    XYZ = "xyz"
    PLY_ASCII = "ply_ascii"
    PLY_BINARY_LE = "ply_binary"


# ---------------------------------------------------------------------------
# XYZ

def _read_xyz(path: Path) -> PointCloud:
    rows = []
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(f"expected 3 values, got {len(parts)}",
                                 path=path, line=lineno)
            try:
                xyz = [float(v) for v in parts]
            except ValueError:
                raise ParseError(f"bad float in {line!r}", path=path, line=lineno)
            if not all(np.isfinite(xyz)):
                raise ParseError("non-finite coordinate", path=path, line=lineno)
            rows.append(xyz)
    if not rows:
        raise ParseError("file contains no points", path=path)
    return PointCloud(np.array(rows))


def _write_xyz(cloud: PointCloud, path: Path):
    with open(path, "w") as fh:
        for x, y, z in cloud.points:
            fh.write(f"{x:.9g} {y:.9g} {z:.9g}\n")


# ---------------------------------------------------------------------------
# PLY

class _PlyHeader:
    def __init__(self):
        self.binary = False
        self.elements = []   # (name, count, [(prop_name, fmt) or ("__list__", ...)])


def _parse_ply_header(fh, path):
    magic = fh.readline()
    if magic.strip() != b"ply":
        raise ParseError("missing 'ply' magic", path=path, line=1)
    hdr = _PlyHeader()
    props = None
    lineno = 1
    while True:
        raw = fh.readline()
        if not raw:
            raise ParseError("unterminated header", path=path, line=lineno)
        lineno += 1
        line = raw.decode("ascii", errors="replace").strip()
        if not line or line.startswith("comment"):
            continue
        parts = line.split()
        if parts[0] == "format":
            if parts[1] == "ascii":
                hdr.binary = False
            elif parts[1] == "binary_little_endian":
                hdr.binary = True
            else:
                raise UnsupportedFormat(f"unsupported PLY format {parts[1]!r}")
        elif parts[0] == "element":
            props = []
            hdr.elements.append((parts[1], int(parts[2]), props))
        elif parts[0] == "property":
            if props is None:
                raise ParseError("property before element", path=path, line=lineno)
            if parts[1] == "list":
                props.append(("__list__", parts[-1], _PLY_TYPES.get(parts[2]),
                              _PLY_TYPES.get(parts[3])))
            else:
                fmt = _PLY_TYPES.get(parts[1])
                if fmt is None:
                    raise UnsupportedFormat(f"unsupported PLY type {parts[1]!r}")
                props.append((parts[2], fmt))
        elif parts[0] == "end_header":
            return hdr, lineno
    # unreachable


def _read_ply(path: Path, want_faces: bool):
    with open(path, "rb") as fh:
        hdr, lineno = _parse_ply_header(fh, path)
        verts = None
        faces = []
        for name, count, props in hdr.elements:
            if name == "vertex":
                verts = _read_ply_vertices(fh, hdr, count, props, path, lineno)
            elif name == "face" and want_faces:
                faces = _read_ply_faces(fh, hdr, count, props, path)
            else:
                _skip_ply_element(fh, hdr, count, props, path)
        if verts is None:
            raise ParseError("no vertex element", path=path)
        if not np.isfinite(verts).all():
            raise ParseError("non-finite vertex coordinate", path=path)
        return verts, faces


def _read_ply_vertices(fh, hdr, count, props, path, header_lines):
    names = [p[0] for p in props]
    if any(n == "__list__" for n in names):
        raise UnsupportedFormat("list property in vertex element")
    for axis in ("x", "y", "z"):
        if axis not in names:
            raise ParseError(f"vertex element lacks property {axis!r}", path=path)
    ix, iy, iz = names.index("x"), names.index("y"), names.index("z")
    if hdr.binary:
        fmt = "<" + "".join(p[1] for p in props)
        size = struct.calcsize(fmt)
        data = fh.read(size * count)
        if len(data) != size * count:
            raise ParseError(
                f"vertex data truncated: declared {count}, found "
                f"{len(data) // size}", path=path, offset=fh.tell())
        rows = list(struct.iter_unpack(fmt, data))
        arr = np.array([(r[ix], r[iy], r[iz]) for r in rows], dtype=np.float64)
    else:
        arr = np.empty((count, 3))
        for i in range(count):
            raw = fh.readline()
            if not raw:
                raise ParseError(
                    f"vertex data truncated: declared {count}, found {i}",
                    path=path, line=header_lines + i + 1)
            vals = raw.split()
            if len(vals) < len(props):
                raise ParseError("short vertex line", path=path,
                                 line=header_lines + i + 1)
            arr[i] = (float(vals[ix]), float(vals[iy]), float(vals[iz]))
    return arr


def _read_ply_faces(fh, hdr, count, props, path):
    faces = []
    if hdr.binary:
        for _ in range(count):
            for p in props:
                if p[0] == "__list__":
                    cnt_fmt, idx_fmt = p[2], p[3]
                    (n,) = struct.unpack("<" + cnt_fmt,
                                         fh.read(struct.calcsize(cnt_fmt)))
                    idx = struct.unpack("<" + idx_fmt * n,
                                        fh.read(struct.calcsize(idx_fmt) * n))
                    faces.append(list(idx))
                else:
                    fh.read(struct.calcsize(p[1]))
    else:
        for i in range(count):
            raw = fh.readline()
            if not raw:
                raise ParseError(f"face data truncated: declared {count}, found {i}",
                                 path=path)
            vals = raw.split()
            n = int(vals[0])
            faces.append([int(v) for v in vals[1:1 + n]])
    return faces


def _skip_ply_element(fh, hdr, count, props, path):
    if hdr.binary:
        if any(p[0] == "__list__" for p in props):
            raise UnsupportedFormat("cannot skip binary element with list properties")
        size = struct.calcsize("<" + "".join(p[1] for p in props))
        fh.read(size * count)
    else:
        for _ in range(count):
            fh.readline()


def _write_ply(cloud: PointCloud, path: Path, binary: bool):
    n = len(cloud)
    fmt_line = "binary_little_endian 1.0" if binary else "ascii 1.0"
    header = (f"ply\nformat {fmt_line}\nelement vertex {n}\n"
              "property double x\nproperty double y\nproperty double z\n"
              "end_header\n")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            fh.write(np.ascontiguousarray(cloud.points, dtype="<f8").tobytes())
        else:
            for x, y, z in cloud.points:
                fh.write(f"{x:.9g} {y:.9g} {z:.9g}\n".encode("ascii"))


# ---------------------------------------------------------------------------
# OFF

def _read_off(path: Path):
    with open(path, "r") as fh:
        tokens = []
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise ParseError("missing OFF magic", path=path, line=1)
    try:
        nv, nf = int(tokens[1]), int(tokens[2])
        pos = 4  # skip edge count
        verts = np.array([float(t) for t in tokens[pos:pos + 3 * nv]],
                         dtype=np.float64).reshape(nv, 3)
        pos += 3 * nv
        faces = []
        for _ in range(nf):
            n = int(tokens[pos])
            faces.append([int(t) for t in tokens[pos + 1:pos + 1 + n]])
            pos += 1 + n
    except (ValueError, IndexError):
        raise ParseError("truncated or malformed OFF data", path=path)
    return verts, faces


def write_mesh(mesh: TriangleMesh, path) -> None:
    """Write a triangle mesh as ASCII OFF."""
    path = Path(path)
    try:
        with open(path, "w") as fh:
            fh.write(f"OFF\n{len(mesh.vertices)} {len(mesh.faces)} 0\n")
            for x, y, z in mesh.vertices:
                fh.write(f"{x:.9g} {y:.9g} {z:.9g}\n")
            for f in mesh.faces:
                fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")
    except OSError as exc:
        raise IoError(str(exc))


# ---------------------------------------------------------------------------
# Public API

def read_cloud(path) -> PointCloud:
    """Read a point cloud, inferring the format from the extension/magic."""
    path = Path(path)
    if not path.exists():
        raise IoError(f"no such file: {path}")
    suffix = path.suffix.lower()
    if suffix == ".ply":
        verts, _ = _read_ply(path, want_faces=False)
        return PointCloud(verts)
    if suffix in (".xyz", ".txt", ""):
        return _read_xyz(path)
    raise UnsupportedFormat(f"unknown cloud format {suffix!r}")


def write_cloud(cloud: PointCloud, path, fmt: CloudFormat | None = None) -> None:
    """Write a cloud; format defaults from the extension (.ply -> binary)."""
    path = Path(path)
    if fmt is None:
        fmt = CloudFormat.PLY_BINARY_LE if path.suffix.lower() == ".ply" else CloudFormat.XYZ
    try:
        if fmt is CloudFormat.XYZ:
            _write_xyz(cloud, path)
        elif fmt is CloudFormat.PLY_ASCII:
            _write_ply(cloud, path, binary=False)
        elif fmt is CloudFormat.PLY_BINARY_LE:
            _write_ply(cloud, path, binary=True)
        else:
            raise UnsupportedFormat(f"unknown format {fmt!r}")
    except OSError as exc:
        raise IoError(str(exc))


def _triangulate(verts: np.ndarray, polys, path) -> TriangleMesh:
    tris = []
    dropped = 0
    for poly in polys:
        if any(i < 0 or i >= len(verts) for i in poly):
            raise ParseError(f"face index out of range in {poly}", path=path)
        for a in range(1, len(poly) - 1):
            tri = (poly[0], poly[a], poly[a + 1])
            v = verts[list(tri)]
            area = 0.5 * np.linalg.norm(np.cross(v[1] - v[0], v[2] - v[0]))
            if area <= 0:
                dropped += 1
            else:
                tris.append(tri)
    if dropped:
        log.warning("dropped %d degenerate face(s) from %s", dropped, path)
    if not tris:
        raise ParseError("mesh has no non-degenerate triangles", path=path)
    return TriangleMesh(verts, np.array(tris, dtype=np.intp))


def read_mesh(path) -> TriangleMesh:
    """Read an OFF or PLY mesh; polygons are fan-triangulated."""
    path = Path(path)
    if not path.exists():
        raise IoError(f"no such file: {path}")
    suffix = path.suffix.lower()
    if suffix == ".off":
        verts, polys = _read_off(path)
    elif suffix == ".ply":
        verts, polys = _read_ply(path, want_faces=True)
    else:
        raise UnsupportedFormat(f"unknown mesh format {suffix!r}")
    if not polys:
        raise ParseError("mesh file contains no faces", path=path)
    return _triangulate(verts, polys, path)
