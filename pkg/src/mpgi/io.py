"""File formats: PGM images, measurement CSV, float sidecars and INI-style manifests."""
from __future__ import annotations

import configparser
import csv
import io
from pathlib import Path

import numpy as np

from .simulate import BucketRecord


class FormatError(ValueError):
    pass


def _tokens(data: bytes, count: int, pos: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments."""
    out = []
    n = len(data)
    while len(out) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        out.append(data[start:pos])
    return out, pos


def read_pgm(path) -> np.ndarray:
    """Read a P2 or P5 PGM and return values normalized to [0, 1] (divided by maxval)."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"{path}: not a PGM file (magic {magic!r})")
    try:
        (w, h, maxval), pos = _tokens(data, 3, 2)
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise FormatError(f"{path}: bad PGM header") from exc
    if not 0 < maxval < 65536 or width < 1 or height < 1:
        raise FormatError(f"{path}: bad PGM dimensions or maxval")
    if magic == b"P5":
        pos += 1  # single whitespace after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = width * height * dtype.itemsize
        raw = data[pos:pos + need]
        if len(raw) != need:
            raise FormatError(f"{path}: expected {need} bytes of pixel data, got {len(raw)}")
        pixels = np.frombuffer(raw, dtype=dtype).astype(np.int64)
    else:
        text = b" ".join(line.split(b"#")[0] for line in data[pos:].splitlines())
        try:
            pixels = np.array([int(t) for t in text.split()], dtype=np.int64)
        except ValueError as exc:
            raise FormatError(f"{path}: non-integer P2 sample") from exc
        if pixels.size != width * height:
            raise FormatError(f"{path}: expected {width * height} samples, got {pixels.size}")
    if pixels.max(initial=0) > maxval:
        raise FormatError(f"{path}: sample exceeds maxval {maxval}")
    return pixels.reshape(height, width) / maxval


def write_pgm(path, img, lo: float | None = None, hi: float | None = None) -> None:
    """Write an 8-bit P5 PGM, mapping ``[lo, hi]`` (default: image range) onto 0..255."""
    a = np.asarray(img, dtype=np.float64)
    lo = float(a.min()) if lo is None else lo
    hi = float(a.max()) if hi is None else hi
    span = hi - lo
    scaled = np.zeros_like(a) if span <= 0 else (a - lo) / span
    q = np.clip(np.rint(scaled * 255), 0, 255).astype(np.uint8)
    header = f"P5\n{a.shape[1]} {a.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + q.tobytes())


def write_record_csv(path, record: BucketRecord) -> None:
    lines = ["m,bucket_value"] + [f"{m},{float(b)!r}" for m, b in enumerate(record.values)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_record_csv(path, mode: str = "differential", K: int | None = None) -> BucketRecord:
    """Load a measurement CSV; indices must run 0, 1, 2, ... without gaps."""
    text = Path(path).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["m", "bucket_value"]:
        raise FormatError(f"{path}: expected header 'm,bucket_value'")
    ms, vals = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise FormatError(f"{path}:{lineno}: expected 2 columns")
        try:
            ms.append(int(row[0]))
            vals.append(float(row[1]))
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
    if not ms:
        raise FormatError(f"{path}: no measurements")
    if ms != list(range(len(ms))):
        first_bad = next(i for i, m in enumerate(ms) if m != i)
        raise FormatError(f"{path}: record is gapped or unordered at m={ms[first_bad]} (expected {first_bad})")
    if K is None:
        K = 0
        while 4 ** K < len(vals):
            K += 1
    return BucketRecord(np.array(vals), mode, K=K)


def write_float_csv(path, img) -> None:
    a = np.asarray(img, dtype=np.float64)
    Path(path).write_text("\n".join(",".join(repr(float(v)) for v in row) for row in a) + "\n")


def read_float_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_manifest(path, sections: dict) -> None:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for name, items in sections.items():
        cp[name] = {k: str(v) for k, v in items.items()}
    with open(path, "w") as fh:
        cp.write(fh)


def read_config(path) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    if not cp.read(path):
        raise FileNotFoundError(path)
    return {s: dict(cp[s]) for s in cp.sections()}
