"""Grayscale images, frame sequences, and patch extraction.

Images are kept as float64 matrices in (height, width) layout. On disk
the package speaks binary PGM (P5, 8-bit); color PPM (P6) input is
converted to grayscale with the 0.299/0.587/0.114 luminance weights.
Patches are flattened row-major and carry their own DC (per-patch mean)
removal flag.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConstantImage,
    DataError,
    DimensionMismatch,
    FormatError,
    OutOfBounds,
    PatchTooLarge,
)
from .matrixio import format_float, read_meta

LUMINANCE_WEIGHTS = (0.299, 0.587, 0.114)
DEFAULT_FRAME_RATE = 24.0
FRAME_NAME_FORMAT = "frame_{:06d}.pgm"
SEQUENCE_META_NAME = "sequence.meta"


@dataclass
class GrayImage:
    """A single grayscale image; values may take any finite real range."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.size == 0:
            raise DataError(f"image must be a non-empty 2-D array, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise DataError("image contains non-finite values")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass
class PatchSet:
    """Vectorized image patches, one patch per row."""

    data: np.ndarray
    patch_side: int
    source_tag: str = ""
    per_patch_mean_removed: bool = False

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise DataError(f"patch data must be 2-D, got shape {self.data.shape}")
        if self.data.shape[1] != self.patch_side**2:
            raise DimensionMismatch(
                f"{self.data.shape[1]} pixels per row, expected patch_side^2 = {self.patch_side**2}"
            )

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def n_pixels(self) -> int:
        return self.data.shape[1]


@dataclass
class FrameSequence:
    """Ordered frames of identical size plus their frame rate."""

    frames: list = field(default_factory=list)
    frame_rate: float = DEFAULT_FRAME_RATE

    def __post_init__(self):
        if not self.frames:
            raise DataError("frame sequence is empty")
        w, h = self.frames[0].width, self.frames[0].height
        for i, frame in enumerate(self.frames):
            if frame.width != w or frame.height != h:
                raise DimensionMismatch(
                    f"frame {i} is {frame.width}x{frame.height}, expected {w}x{h}"
                )
        if not self.frame_rate > 0:
            raise DataError(f"frame_rate must be > 0, got {self.frame_rate}")

    def __len__(self) -> int:
        return len(self.frames)


def normalize_image(img: GrayImage) -> GrayImage:
    """Shift and scale to zero mean and unit (population) variance."""
    values = img.values
    if values.size < 2:
        raise DataError("need at least 2 pixels to normalize")
    mean = values.mean()
    var = values.var()
    if var == 0.0:
        raise ConstantImage("image has zero pixel variance")
    return GrayImage((values - mean) / np.sqrt(var))


def _remove_row_means(rows: np.ndarray) -> np.ndarray:
    return rows - rows.mean(axis=1, keepdims=True)


def extract_random_patches(img: GrayImage, patch_side: int, count: int, seed: int) -> PatchSet:
    """Extract `count` square patches at uniformly random locations.

    Each patch is flattened row-major and has its own mean subtracted.
    The same seed always yields bit-identical output.
    """
    if patch_side < 1:
        raise DataError(f"patch_side must be >= 1, got {patch_side}")
    if patch_side > min(img.width, img.height):
        raise PatchTooLarge(
            f"patch_side {patch_side} exceeds image size {img.width}x{img.height}"
        )
    if count < 1:
        raise DataError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, img.height - patch_side + 1, size=count)
    cols = rng.integers(0, img.width - patch_side + 1, size=count)
    out = np.empty((count, patch_side * patch_side))
    for i in range(count):
        crop = img.values[rows[i]:rows[i] + patch_side, cols[i]:cols[i] + patch_side]
        out[i] = crop.reshape(-1)
    return PatchSet(
        _remove_row_means(out),
        patch_side,
        source_tag=f"random(seed={seed}, count={count})",
        per_patch_mean_removed=True,
    )


def per_image_seed(master_seed: int, image_index: int) -> int:
    """Derive a deterministic per-image seed from the master seed."""
    return int(np.random.SeedSequence([master_seed, image_index]).generate_state(1)[0])


def extract_patches_from_images(images, patch_side: int, count: int, seed: int) -> PatchSet:
    """Split a total patch budget across images, earlier images first.

    Per-image extraction is seeded independently via `per_image_seed`, so
    images may be processed in parallel without changing the result.
    """
    if not images:
        raise DataError("no images to extract patches from")
    if count < 1:
        raise DataError(f"count must be >= 1, got {count}")
    base, extra = divmod(count, len(images))
    parts = []
    for i, img in enumerate(images):
        n = base + (1 if i < extra else 0)
        if n == 0:
            continue
        parts.append(extract_random_patches(img, patch_side, n, per_image_seed(seed, i)).data)
    return PatchSet(
        np.concatenate(parts, axis=0),
        patch_side,
        source_tag=f"random(seed={seed}, count={count}, images={len(images)})",
        per_patch_mean_removed=True,
    )


def extract_fixed_patches(seq: FrameSequence, origin, patch_side: int) -> PatchSet:
    """Crop the same patch location out of every frame, one row per frame."""
    row, col = origin
    frame = seq.frames[0]
    if patch_side > min(frame.width, frame.height):
        raise PatchTooLarge(
            f"patch_side {patch_side} exceeds frame size {frame.width}x{frame.height}"
        )
    if row < 0 or col < 0 or row + patch_side > frame.height or col + patch_side > frame.width:
        raise OutOfBounds(
            f"patch at origin ({row}, {col}) with side {patch_side} leaves the "
            f"{frame.width}x{frame.height} frame"
        )
    out = np.empty((len(seq), patch_side * patch_side))
    for t, fr in enumerate(seq.frames):
        out[t] = fr.values[row:row + patch_side, col:col + patch_side].reshape(-1)
    return PatchSet(
        _remove_row_means(out),
        patch_side,
        source_tag=f"fixed(origin=({row},{col}))",
        per_patch_mean_removed=True,
    )


def _resample_axis(values: np.ndarray, new_len: int, axis: int) -> np.ndarray:
    """Bilinear (align-corners) resampling along one axis."""
    old_len = values.shape[axis]
    if new_len == old_len:
        return values
    values = np.moveaxis(values, axis, 0)
    if new_len == 1:
        pos = np.zeros(1)
    else:
        pos = np.arange(new_len) * ((old_len - 1) / (new_len - 1))
    lo = np.minimum(pos.astype(int), max(old_len - 2, 0))
    frac = pos - lo
    hi = np.minimum(lo + 1, old_len - 1)
    out = values[lo] * (1.0 - frac)[:, None] + values[hi] * frac[:, None]
    return np.moveaxis(out, 0, axis)


def resize_to_width(img: GrayImage, target_width: int) -> GrayImage:
    """Resize to the given width, preserving aspect ratio (bilinear)."""
    if target_width < 1:
        raise DataError(f"target_width must be >= 1, got {target_width}")
    if target_width == img.width:
        return GrayImage(img.values.copy())
    target_height = max(1, int(np.floor(img.height * target_width / img.width + 0.5)))
    out = _resample_axis(img.values, target_width, axis=1)
    out = _resample_axis(out, target_height, axis=0)
    return GrayImage(out)


def crop_image(img: GrayImage, top: int, left: int, height: int, width: int) -> GrayImage:
    if height < 1 or width < 1:
        raise DataError("crop height and width must be >= 1")
    if top < 0 or left < 0 or top + height > img.height or left + width > img.width:
        raise OutOfBounds(
            f"crop ({top},{left},{height},{width}) leaves the {img.width}x{img.height} image"
        )
    return GrayImage(img.values[top:top + height, left:left + width].copy())


def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    r, g, b = LUMINANCE_WEIGHTS
    return r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]


# ---------------------------------------------------------------------------
# PGM / PPM input and output


def _read_pnm_header(f, n_fields: int):
    """Read whitespace-separated header fields, honoring '#' comments."""
    fields = []
    while len(fields) < n_fields:
        line = f.readline()
        if not line:
            raise FormatError("unexpected end of file in PNM header")
        line = line.split(b"#", 1)[0]
        fields.extend(line.split())
    return fields[:n_fields]


def read_image(path) -> GrayImage:
    """Read a binary PGM (P5) or PPM (P6, converted to grayscale) image.

    8-bit samples are mapped linearly to [0, 1].
    """
    with open(path, "rb") as f:
        magic = f.read(2)
        if magic not in (b"P5", b"P6"):
            raise FormatError(f"{path}: expected binary PGM/PPM, got magic {magic!r}")
        width, height, maxval = (int(v) for v in _read_pnm_header(f, 3))
        if width < 1 or height < 1:
            raise FormatError(f"{path}: bad dimensions {width}x{height}")
        if not 0 < maxval <= 255:
            raise FormatError(f"{path}: only 8-bit images supported, maxval={maxval}")
        channels = 3 if magic == b"P6" else 1
        payload = f.read(width * height * channels)
    if len(payload) != width * height * channels:
        raise FormatError(f"{path}: truncated pixel data")
    raw = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / maxval
    if channels == 3:
        return GrayImage(to_grayscale(raw.reshape(height, width, 3)))
    return GrayImage(raw.reshape(height, width))


def write_image(path, img: GrayImage, lo: float | None = None, hi: float | None = None) -> None:
    """Write a binary 8-bit PGM, mapping [lo, hi] linearly onto 0..255.

    Without explicit bounds the image's own min/max are used; a constant
    image maps to all zeros.
    """
    values = img.values
    if lo is None:
        lo = float(values.min())
    if hi is None:
        hi = float(values.max())
    if hi > lo:
        scaled = (values - lo) / (hi - lo) * 255.0
    else:
        scaled = np.zeros_like(values)
    pixels = np.clip(np.rint(scaled), 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{img.width} {img.height}\n255\n".encode("ascii"))
        f.write(pixels.tobytes(order="C"))


def load_images(directory) -> list:
    """Read every .pgm/.ppm file in a directory, sorted by name."""
    names = sorted(
        name for name in os.listdir(directory) if name.lower().endswith((".pgm", ".ppm"))
    )
    if not names:
        raise DataError(f"no PGM/PPM images found in {directory}")
    return [read_image(os.path.join(directory, name)) for name in names]


def load_sequence(directory) -> FrameSequence:
    """Read a frame directory (frame_000000.pgm, ...) plus sequence.meta."""
    pattern = re.compile(r"^frame_(\d{6})\.pgm$")
    names = sorted(name for name in os.listdir(directory) if pattern.match(name))
    if not names:
        raise DataError(f"no frame_NNNNNN.pgm files found in {directory}")
    frames = [read_image(os.path.join(directory, name)) for name in names]
    frame_rate = DEFAULT_FRAME_RATE
    meta_path = os.path.join(directory, SEQUENCE_META_NAME)
    if os.path.exists(meta_path):
        meta = read_meta(meta_path)
        if "frame_rate" in meta:
            frame_rate = float(meta["frame_rate"])
    return FrameSequence(frames, frame_rate)


def save_sequence(seq: FrameSequence, directory, lo: float | None = None,
                  hi: float | None = None) -> None:
    """Write frames as numbered PGMs with a shared linear intensity scale."""
    os.makedirs(directory, exist_ok=True)
    if lo is None:
        lo = min(float(f.values.min()) for f in seq.frames)
    if hi is None:
        hi = max(float(f.values.max()) for f in seq.frames)
    for t, frame in enumerate(seq.frames):
        write_image(os.path.join(directory, FRAME_NAME_FORMAT.format(t)), frame, lo, hi)
    with open(os.path.join(directory, SEQUENCE_META_NAME), "w", encoding="ascii") as f:
        f.write(f"frame_rate={format_float(seq.frame_rate)}\n")
