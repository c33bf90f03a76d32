"""ASCII XYZ and PLY readers and writers.

Writers are byte-deterministic: every coordinate is printed with Python's
shortest round-trip ``repr``, so write -> read -> write reproduces the file
exactly and no precision is lost.

XYZ: one ``x y z`` triple per line; blank lines and ``#`` comments are skipped.
PLY: ``format ascii 1.0`` only. The vertex element must carry x, y and z; other
properties are skipped positionally. Faces are ignored for cloud reads and
fan-triangulated for mesh reads.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .core import PointCloud, TriangleSoup
from .errors import InvalidParam, ParseError

FORMATS = ("xyz", "ply")
_PLY_SCALARS = {
    "char", "uchar", "short", "ushort", "int", "uint", "float", "double",
    "int8", "uint8", "int16", "uint16", "int32", "uint32", "float32", "float64",
}


def infer_format(path, fmt=None) -> str:
    if fmt is not None:
        fmt = fmt.lower()
        if fmt not in FORMATS:
            raise InvalidParam(f"unknown format {fmt!r}; expected one of {FORMATS}")
        return fmt
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".xyz":
        return "xyz"
    if ext == ".ply":
        return "ply"
    raise InvalidParam(f"cannot infer format from extension of {path!s}; pass a format")


def _real(tok: str, lineno: int, path) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"not a number: {tok!r}", lineno, path) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite coordinate {tok!r}", lineno, path)
    return v


# ---------------------------------------------------------------- XYZ


def parse_xyz(text: str, path=None) -> PointCloud:
    pts = []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        toks = s.split()
        if len(toks) != 3:
            raise ParseError(f"expected 3 values, found {len(toks)}", lineno, path)
        pts.append([_real(t, lineno, path) for t in toks])
    return PointCloud(np.array(pts, dtype=np.float64).reshape(-1, 3))


def format_xyz(cloud: PointCloud) -> str:
    return "".join(f"{x!r} {y!r} {z!r}\n" for x, y, z in cloud)


# ---------------------------------------------------------------- PLY


@dataclass
class _Element:
    name: str
    count: int
    props: list = field(default_factory=list)  # (name, is_list)


def _parse_header(lines, path):
    if not lines or lines[0].strip() != "ply":
        raise ParseError("missing 'ply' magic", 1, path)
    elements = []
    fmt_seen = False
    for i, raw in enumerate(lines[1:], 2):
        toks = raw.split()
        if not toks:
            continue
        kw = toks[0]
        if kw == "format":
            if len(toks) < 3 or toks[1] != "ascii":
                raise ParseError("only 'format ascii 1.0' is supported", i, path)
            fmt_seen = True
        elif kw in ("comment", "obj_info"):
            continue
        elif kw == "element":
            if len(toks) != 3:
                raise ParseError("malformed element line", i, path)
            try:
                count = int(toks[2])
            except ValueError:
                raise ParseError(f"bad element count {toks[2]!r}", i, path) from None
            if count < 0:
                raise ParseError("negative element count", i, path)
            elements.append(_Element(toks[1], count))
        elif kw == "property":
            if not elements:
                raise ParseError("property before any element", i, path)
            if len(toks) == 5 and toks[1] == "list":
                elements[-1].props.append((toks[4], True))
            elif len(toks) == 3 and toks[1] in _PLY_SCALARS:
                elements[-1].props.append((toks[2], False))
            else:
                raise ParseError("malformed property line", i, path)
        elif kw == "end_header":
            if not fmt_seen:
                raise ParseError("missing format line", i, path)
            return elements, i
        else:
            raise ParseError(f"unexpected header keyword {kw!r}", i, path)
    raise ParseError("missing end_header", len(lines), path)


def _records(lines, start, elements, path):
    """Yield ``(element, lineno, {prop: value-or-list})`` for every body record."""
    lineno = start
    for el in elements:
        for _ in range(el.count):
            # skip blank lines between records
            while lineno < len(lines) and not lines[lineno].strip():
                lineno += 1
            if lineno >= len(lines):
                raise ParseError(f"unexpected end of file in element {el.name!r}", lineno, path)
            toks = lines[lineno].split()
            lineno += 1
            rec, k = {}, 0
            for name, is_list in el.props:
                if k >= len(toks):
                    raise ParseError(f"too few values for element {el.name!r}", lineno, path)
                if is_list:
                    try:
                        m = int(toks[k])
                    except ValueError:
                        raise ParseError(f"bad list length {toks[k]!r}", lineno, path) from None
                    if m < 0 or k + 1 + m > len(toks):
                        raise ParseError("list runs past end of line", lineno, path)
                    rec[name] = toks[k + 1:k + 1 + m]
                    k += 1 + m
                else:
                    rec[name] = toks[k]
                    k += 1
            if k != len(toks):
                raise ParseError(f"too many values for element {el.name!r}", lineno, path)
            yield el, lineno, rec


def _parse_ply(text, path, want_faces):
    lines = text.splitlines()
    elements, end = _parse_header(lines, path)
    vertex = next((e for e in elements if e.name == "vertex"), None)
    if vertex is None:
        raise ParseError("no vertex element", end, path)
    names = {n for n, is_list in vertex.props if not is_list}
    if not {"x", "y", "z"} <= names:
        raise ParseError("vertex element lacks x, y, z properties", end, path)
    verts, faces = [], []
    for el, lineno, rec in _records(lines, end, elements, path):
        if el is vertex:
            verts.append([_real(rec[c], lineno, path) for c in "xyz"])
        elif want_faces and el.name == "face":
            key = "vertex_indices" if "vertex_indices" in rec else "vertex_index"
            if key not in rec:
                raise ParseError("face element lacks vertex_indices", lineno, path)
            try:
                idx = [int(t) for t in rec[key]]
            except ValueError:
                raise ParseError("non-integer vertex index", lineno, path) from None
            if len(idx) < 3:
                raise ParseError("face with fewer than 3 vertices", lineno, path)
            if any(i < 0 or i >= vertex.count for i in idx):
                raise ParseError("vertex index out of range", lineno, path)
            faces.append((lineno, idx))
    return np.array(verts, dtype=np.float64).reshape(-1, 3), faces


def parse_ply(text: str, path=None) -> PointCloud:
    verts, _ = _parse_ply(text, path, want_faces=False)
    return PointCloud(verts)


def parse_ply_mesh(text: str, path=None) -> TriangleSoup:
    verts, faces = _parse_ply(text, path, want_faces=True)
    tris = []
    for _, idx in faces:
        # fan around the first corner: (0,1,2), (0,2,3), ...
        for k in range(1, len(idx) - 1):
            tris.append(verts[[idx[0], idx[k], idx[k + 1]]])
    return TriangleSoup(np.array(tris).reshape(-1, 3, 3))


def format_ply(cloud: PointCloud) -> str:
    head = (
        "ply\n"
        "format ascii 1.0\n"
        f"element vertex {len(cloud)}\n"
        "property double x\n"
        "property double y\n"
        "property double z\n"
        "end_header\n"
    )
    return head + format_xyz(cloud)


# ---------------------------------------------------------------- files


def _read_text(path) -> str:
    with open(path, "r", encoding="ascii", errors="strict", newline=None) as fh:
        try:
            return fh.read()
        except UnicodeDecodeError as exc:
            raise ParseError(f"not an ASCII file ({exc.reason})", None, path) from None


def read_cloud(path, fmt=None) -> PointCloud:
    fmt = infer_format(path, fmt)
    text = _read_text(path)
    return parse_xyz(text, path) if fmt == "xyz" else parse_ply(text, path)


def write_cloud(cloud: PointCloud, path, fmt=None) -> None:
    fmt = infer_format(path, fmt)
    data = format_xyz(cloud) if fmt == "xyz" else format_ply(cloud)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(data)


def read_mesh(path, fmt=None) -> TriangleSoup:
    if infer_format(path, fmt) != "ply":
        raise InvalidParam("meshes must be PLY files")
    return parse_ply_mesh(_read_text(path), path)
