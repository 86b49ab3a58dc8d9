"""Clip ingestion: YUV4MPEG2 parsing, frame directories, synthetic clips.

The in-memory representation is planar and full-range normalized: every
sample is stored as float64 in [0,1], obtained as raw / (2^bit_depth - 1).
Chroma (when present) stays at its source resolution and is only upsampled
(nearest neighbor) when RGB is requested.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyInput,
    ParseError,
    TruncatedFrame,
    Unsupported,
)

__all__ = [
    "Frame",
    "VideoClip",
    "ClipSpec",
    "CANONICAL_SPECS",
    "parse_y4m",
    "write_y4m",
    "load_frame_dir",
    "synth_clip",
    "frame_rgb",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Frame:
    """One decoded frame: normalized luma plane plus optional chroma planes.

    chroma_b / chroma_r may be subsampled relative to the luma plane; they are
    either both present or both absent.
    """

    luma: np.ndarray
    chroma_b: np.ndarray | None = None
    chroma_r: np.ndarray | None = None
    source_bit_depth: int = 8

    def __post_init__(self):
        object.__setattr__(self, "luma", _freeze(self.luma))
        if (self.chroma_b is None) != (self.chroma_r is None):
            raise DimensionMismatch("chroma planes must be both present or both absent")
        if self.chroma_b is not None:
            object.__setattr__(self, "chroma_b", _freeze(self.chroma_b))
            object.__setattr__(self, "chroma_r", _freeze(self.chroma_r))
        if self.source_bit_depth not in (8, 10):
            raise Unsupported(f"{self.source_bit_depth}-bit")

    @property
    def has_chroma(self) -> bool:
        return self.chroma_b is not None


@dataclass(frozen=True)
class VideoClip:
    width: int
    height: int
    fps: Fraction
    frames: tuple[Frame, ...]

    def __post_init__(self):
        object.__setattr__(self, "fps", Fraction(self.fps))
        object.__setattr__(self, "frames", tuple(self.frames))
        if not self.frames:
            raise EmptyInput("clip needs at least one frame")
        if self.fps.numerator <= 0 or self.fps.denominator <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        for i, f in enumerate(self.frames):
            if f.luma.shape != (self.height, self.width):
                raise DimensionMismatch(
                    f"frame {i} luma is {f.luma.shape}, clip is {(self.height, self.width)}"
                )

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class ClipSpec:
    """Canonical benchmarking payload: frame count x resolution."""

    label: str
    frame_count: int
    width: int
    height: int


CANONICAL_SPECS: dict[str, ClipSpec] = {
    "30-FHD": ClipSpec("30-FHD", 30, 1920, 1080),
    "60-HD": ClipSpec("60-HD", 60, 1280, 720),
    "30-4K": ClipSpec("30-4K", 30, 3840, 2160),
}


# --- YUV4MPEG2 ---------------------------------------------------------------

# colorspace tag -> (x subsampling, y subsampling, bit depth)
_COLORSPACES: dict[str, tuple[int, int, int]] = {
    "420": (2, 2, 8),
    "420jpeg": (2, 2, 8),
    "420mpeg2": (2, 2, 8),
    "420paldv": (2, 2, 8),
    "422": (2, 1, 8),
    "444": (1, 1, 8),
    "420p10": (2, 2, 10),
    "422p10": (2, 1, 10),
    "444p10": (1, 1, 10),
}


def _read_plane(buf: bytes, pos: int, w: int, h: int, depth: int, index: int):
    n = w * h
    if depth == 8:
        end = pos + n
        if end > len(buf):
            raise TruncatedFrame(index)
        plane = np.frombuffer(buf, dtype=np.uint8, count=n, offset=pos)
        return plane.reshape(h, w).astype(np.float64) / 255.0, end
    end = pos + 2 * n
    if end > len(buf):
        raise TruncatedFrame(index)
    plane = np.frombuffer(buf, dtype="<u2", count=n, offset=pos)
    return plane.reshape(h, w).astype(np.float64) / 1023.0, end


def parse_y4m(byte_stream) -> VideoClip:
    """Parse a YUV4MPEG2 stream (bytes or a binary file object) into a clip.

    Supports 4:2:0, 4:2:2 and 4:4:4 layouts, 8- or 10-bit. Samples are
    normalized to [0,1] by the full-range maximum (255 or 1023).
    """
    buf = byte_stream if isinstance(byte_stream, (bytes, bytearray)) else byte_stream.read()
    buf = bytes(buf)

    nl = buf.find(b"\n")
    if nl < 0:
        raise ParseError(0, buf[:20].decode("latin-1"))
    header = buf[:nl].decode("latin-1")
    tokens = header.split(" ")
    if tokens[0] != "YUV4MPEG2":
        raise ParseError(0, tokens[0])

    width = height = None
    fps = None
    ctag = "420"
    offset = len(tokens[0]) + 1
    for tok in tokens[1:]:
        if not tok:
            offset += 1
            continue
        key, val = tok[0], tok[1:]
        try:
            if key == "W":
                width = int(val)
            elif key == "H":
                height = int(val)
            elif key == "F":
                num, den = val.split(":")
                fps = Fraction(int(num), int(den))
            elif key == "C":
                ctag = val
            # I (interlace), A (aspect), X (extensions) are ignored
        except (ValueError, ZeroDivisionError):
            raise ParseError(offset, tok) from None
        offset += len(tok) + 1

    if width is None or width <= 0:
        raise ParseError(0, "W")
    if height is None or height <= 0:
        raise ParseError(0, "H")
    if fps is None or fps <= 0:
        raise ParseError(0, "F")
    if ctag not in _COLORSPACES:
        raise Unsupported(ctag)
    sx, sy, depth = _COLORSPACES[ctag]
    cw = -(-width // sx)
    ch = -(-height // sy)

    frames: list[Frame] = []
    pos = nl + 1
    while pos < len(buf):
        if not buf.startswith(b"FRAME", pos):
            raise ParseError(pos, buf[pos : pos + 8].decode("latin-1", "replace"))
        fnl = buf.find(b"\n", pos)
        if fnl < 0:
            raise TruncatedFrame(len(frames))
        pos = fnl + 1
        luma, pos = _read_plane(buf, pos, width, height, depth, len(frames))
        cb, pos = _read_plane(buf, pos, cw, ch, depth, len(frames))
        cr, pos = _read_plane(buf, pos, cw, ch, depth, len(frames))
        frames.append(Frame(luma, cb, cr, source_bit_depth=depth))

    if not frames:
        raise TruncatedFrame(0)
    return VideoClip(width, height, fps, tuple(frames))


def write_y4m(clip: VideoClip) -> bytes:
    """Serialize a clip back to YUV4MPEG2 bytes.

    Round-trips clips produced by parse_y4m bit-exactly; clips without chroma
    cannot be represented and are rejected.
    """
    first = clip.frames[0]
    if not first.has_chroma:
        raise Unsupported("mono")
    ch, cw = first.chroma_b.shape
    sx = -(-clip.width // cw)
    sy = -(-clip.height // ch)
    depth = first.source_bit_depth
    base = {(2, 2): "420", (2, 1): "422", (1, 1): "444"}.get((sx, sy))
    if base is None:
        raise Unsupported(f"{sx}:{sy} subsampling")
    ctag = base + ("p10" if depth == 10 else "")

    maxv = (1 << depth) - 1
    dtype = np.uint8 if depth == 8 else "<u2"
    out = bytearray(
        f"YUV4MPEG2 W{clip.width} H{clip.height} "
        f"F{clip.fps.numerator}:{clip.fps.denominator} C{ctag}\n".encode()
    )
    for f in clip.frames:
        out += b"FRAME\n"
        for plane in (f.luma, f.chroma_b, f.chroma_r):
            raw = np.rint(plane * maxv).astype(dtype)
            out += raw.tobytes()
    return bytes(out)


# --- PGM/PPM frame directories ----------------------------------------------

_PNM_EXT = (".pgm", ".ppm")


def _parse_pnm(data: bytes, name: str):
    """Parse a binary PGM (P5) or PPM (P6) with maxval 255 or 1023."""
    toks = []
    pos = 0
    while len(toks) < 4:
        m = re.match(rb"(?:\s+|#[^\n]*\n)*([^\s#]+)", data[pos:])
        if not m:
            raise ParseError(pos, name)
        toks.append(m.group(1))
        pos += m.end()
    magic, w_, h_, maxval_ = toks
    if magic not in (b"P5", b"P6"):
        raise Unsupported(magic.decode("latin-1"))
    try:
        w, h, maxval = int(w_), int(h_), int(maxval_)
    except ValueError:
        raise ParseError(pos, name) from None
    if maxval not in (255, 1023):
        raise Unsupported(f"maxval {maxval}")
    depth = 8 if maxval == 255 else 10
    channels = 1 if magic == b"P5" else 3
    itemsize = 1 if maxval == 255 else 2
    pos += 1  # single whitespace byte after maxval
    n = w * h * channels
    if pos + n * itemsize > len(data):
        raise TruncatedFrame(0)
    dtype = np.uint8 if maxval == 255 else ">u2"  # netpbm 16-bit is big-endian
    raw = np.frombuffer(data, dtype=dtype, count=n, offset=pos)
    arr = raw.reshape((h, w) if channels == 1 else (h, w, 3)).astype(np.float64) / maxval
    return arr, depth


# BT.709 analysis/synthesis; the toolkit's single fixed matrix.
_KR, _KG, _KB = 0.2126, 0.7152, 0.0722


def _rgb_to_planes(rgb: np.ndarray):
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = _KR * r + _KG * g + _KB * b
    cb = (b - y) / (2.0 * (1.0 - _KB)) + 0.5
    cr = (r - y) / (2.0 * (1.0 - _KR)) + 0.5
    return y, cb, cr


def load_frame_dir(path, fps) -> VideoClip:
    """Load a directory of same-sized PGM/PPM frames, ordered by filename."""
    root = Path(path)
    files = sorted(p for p in root.iterdir() if p.suffix.lower() in _PNM_EXT)
    if not files:
        raise EmptyInput(f"no PGM/PPM files in {root}")

    frames: list[Frame] = []
    dims: tuple[int, int] | None = None
    for p in files:
        arr, depth = _parse_pnm(p.read_bytes(), p.name)
        hw = arr.shape[:2]
        if dims is None:
            dims = hw
        elif hw != dims:
            raise DimensionMismatch(str(p))
        if arr.ndim == 2:
            frames.append(Frame(arr, source_bit_depth=depth))
        else:
            y, cb, cr = _rgb_to_planes(arr)
            frames.append(Frame(y, cb, cr, source_bit_depth=depth))
    h, w = dims
    return VideoClip(w, h, Fraction(fps), tuple(frames))


# --- synthetic clips ---------------------------------------------------------

def synth_clip(spec: ClipSpec, pattern: str, *, value: float = 0.5, seed: int = 0) -> VideoClip:
    """Generate a deterministic luma-only clip for a benchmark spec.

    pattern: "constant" (flat at ``value``), "gradient" (raster ramp 0..1,
    identical frames), or "noise" (uniform [0,1] per frame from ``seed``).
    """
    if spec.width <= 0 or spec.height <= 0 or spec.frame_count <= 0:
        raise ValueError(f"invalid spec {spec}")
    w, h, n = spec.width, spec.height, spec.frame_count

    if pattern == "constant":
        planes = [np.full((h, w), float(value))] * n
    elif pattern == "gradient":
        ramp = np.arange(h * w, dtype=np.float64).reshape(h, w) / max(h * w - 1, 1)
        planes = [ramp] * n
    elif pattern == "noise":
        rng = np.random.default_rng(seed)
        planes = [rng.random((h, w)) for _ in range(n)]
    else:
        raise ValueError(f"unknown pattern {pattern!r}")

    frames = tuple(Frame(p) for p in planes)
    return VideoClip(w, h, Fraction(30), frames)


def frame_rgb(frame: Frame, width: int | None = None, height: int | None = None) -> np.ndarray | None:
    """Return the frame as HxWx3 RGB in [0,1], or None for chroma-less frames.

    Subsampled chroma is upsampled to luma resolution by nearest neighbor;
    conversion uses BT.709 with clamping.
    """
    if not frame.has_chroma:
        return None
    h, w = frame.luma.shape
    y = frame.luma

    def up(plane: np.ndarray) -> np.ndarray:
        ph, pw = plane.shape
        if (ph, pw) == (h, w):
            return plane
        out = np.repeat(np.repeat(plane, -(-h // ph), axis=0), -(-w // pw), axis=1)
        return out[:h, :w]

    cb = up(frame.chroma_b) - 0.5
    cr = up(frame.chroma_r) - 0.5
    r = y + 2.0 * (1.0 - _KR) * cr
    b = y + 2.0 * (1.0 - _KB) * cb
    g = (y - _KR * r - _KB * b) / _KG
    rgb = np.stack([r, g, b], axis=-1)
    return np.clip(rgb, 0.0, 1.0)
