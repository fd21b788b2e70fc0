"""Image and tensor ingestion, mask sampling, quantization, and file formats.

Randomness uses the counter-based Philox (4x64) bit generator keyed
directly with the caller's 64-bit seed, so masks and synthetic fixtures
reproduce exactly across runs and platforms.

File formats (all integers little-endian):

* tensor: magic ``DTCT``, version byte 1, uint32 mode count, one uint64
  per mode size, then the elements as IEEE-754 float64 in row-major order.
* mask: magic ``DTCM``, version byte 1, the same shape header, then the
  ascending uint64 row-major linear indices of the observed entries.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .regularizer import Alphabet
from .tensor import ObservationMask, fold, unfold

__all__ = [
    "FileFormatError",
    "MaskSpec",
    "load_image",
    "save_image",
    "sample_mask",
    "quantize_to_alphabet",
    "tensor_save",
    "tensor_load",
    "mask_save",
    "mask_load",
    "synthesize_discrete_lowrank",
]

TENSOR_MAGIC = b"DTCT"
MASK_MAGIC = b"DTCM"
FORMAT_VERSION = 1

MAX_SEED = 2**64

# image modes Pillow can convert to 8-bit RGB without precision loss
_SUPPORTED_IMAGE_MODES = {"1", "L", "LA", "P", "PA", "RGB", "RGBA", "RGBX"}


class FileFormatError(ValueError):
    """Raised for malformed tensor or mask files."""


@dataclass(frozen=True)
class MaskSpec:
    """Sampling recipe for an observation mask.

    ``pixel_aligned`` samples positions over all but the last mode and
    observes every entry along that mode together (e.g. whole RGB pixels);
    the default samples every entry independently.
    """

    ratio: float
    seed: int
    pixel_aligned: bool = False

    def __post_init__(self):
        if not 0.0 < self.ratio <= 1.0:
            raise ValueError("observation ratio must lie in (0, 1]")
        if not 0 <= self.seed < MAX_SEED:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def _select_indices(total: int, count: int, rng: np.random.Generator) -> np.ndarray:
    # partial Fisher-Yates: an exact-count uniform draw without replacement
    perm = np.arange(total, dtype=np.int64)
    draws = rng.integers(np.arange(count, dtype=np.int64), total, dtype=np.int64)
    for i in range(count):
        j = draws[i]
        perm[i], perm[j] = perm[j], perm[i]
    return perm[:count]


def sample_mask(shape, spec: MaskSpec) -> ObservationMask:
    """Sample a uniform observation mask with an exact observed count.

    Observes exactly ``round(ratio * total)`` positions, drawn uniformly
    without replacement; identical ``(shape, spec)`` always produce the
    identical mask.
    """
    shape = tuple(int(d) for d in shape)
    if any(d < 1 for d in shape) or not shape:
        raise ValueError("shape dims must be positive")
    base_shape = shape[:-1] if spec.pixel_aligned else shape
    if spec.pixel_aligned and len(shape) < 2:
        raise ValueError("pixel-aligned sampling needs at least 2 modes")
    total = int(np.prod(base_shape, dtype=np.int64))
    count = int(round(spec.ratio * total))
    if count <= 0:
        raise ValueError("observation ratio selects zero entries")
    chosen = _select_indices(total, count, _rng(spec.seed))
    flat = np.zeros(total, dtype=bool)
    flat[chosen] = True
    observed = flat.reshape(base_shape)
    if spec.pixel_aligned:
        observed = np.broadcast_to(observed[..., None], shape).copy()
    return ObservationMask(observed)


def quantize_to_alphabet(t, alphabet: Alphabet) -> np.ndarray:
    """Snap every entry to the nearest alphabet value (ties go down)."""
    return alphabet.nearest(np.asarray(t, dtype=np.float64))


def load_image(path) -> np.ndarray:
    """Load an 8-bit RGB image as a ``[width, height, 3]`` float tensor.

    Pixel ``(x, y, channel)`` maps to tensor entry ``[x, y, channel]``.
    Alpha channels are stripped and grayscale inputs are expanded to three
    channels; higher bit depths are rejected.
    """
    with Image.open(path) as img:
        if img.mode not in _SUPPORTED_IMAGE_MODES:
            raise ValueError(f"unsupported image mode {img.mode!r} "
                             "(8-bit RGB-convertible input required)")
        arr = np.asarray(img.convert("RGB"), dtype=np.float64)  # H x W x 3
    return np.ascontiguousarray(arr.transpose(1, 0, 2))


def save_image(t, path) -> None:
    """Write a ``[width, height, 3]`` tensor as an 8-bit RGB image.

    Entries are clamped to [0, 255] and rounded to the nearest integer.
    Use a lossless format (PNG) for exact roundtrips.
    """
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3 or t.shape[2] != 3:
        raise ValueError(f"expected a [W, H, 3] tensor, got shape {t.shape}")
    pixels = np.rint(np.clip(t, 0.0, 255.0)).astype(np.uint8)
    Image.fromarray(pixels.transpose(1, 0, 2)).save(path)


def _shape_header(shape) -> bytes:
    dims = tuple(int(d) for d in shape)
    return (struct.pack("<B", FORMAT_VERSION)
            + struct.pack("<I", len(dims))
            + struct.pack(f"<{len(dims)}Q", *dims))


def _parse_shape_header(buf: bytes, magic: bytes, kind: str) -> tuple[tuple, int]:
    if len(buf) < 9 or buf[:4] != magic:
        raise FileFormatError(f"not a {kind} file (bad magic)")
    version = buf[4]
    if version != FORMAT_VERSION:
        raise FileFormatError(f"unsupported {kind} format version {version}")
    (ndim,) = struct.unpack_from("<I", buf, 5)
    if ndim < 1:
        raise FileFormatError("shape must have at least one mode")
    offset = 9 + 8 * ndim
    if len(buf) < offset:
        raise FileFormatError(f"truncated {kind} header")
    dims = struct.unpack_from(f"<{ndim}Q", buf, 9)
    if any(d < 1 for d in dims):
        raise FileFormatError("shape dims must be positive")
    total = int(np.prod(np.asarray(dims, dtype=np.float64)))
    if total > 2**62:
        raise FileFormatError("element count overflows")
    return tuple(int(d) for d in dims), offset


def tensor_save(t, path) -> None:
    """Write a tensor in the ``DTCT`` binary format (lossless float64)."""
    t = np.ascontiguousarray(t, dtype=np.float64)
    payload = t.astype("<f8", copy=False).tobytes()
    Path(path).write_bytes(TENSOR_MAGIC + _shape_header(t.shape) + payload)


def tensor_load(path) -> np.ndarray:
    """Read a ``DTCT`` tensor file back bit-exactly."""
    buf = Path(path).read_bytes()
    shape, offset = _parse_shape_header(buf, TENSOR_MAGIC, "tensor")
    total = int(np.prod(shape, dtype=np.int64))
    if len(buf) - offset != 8 * total:
        raise FileFormatError(f"tensor payload has {len(buf) - offset} bytes, "
                              f"expected {8 * total}")
    data = np.frombuffer(buf, dtype="<f8", count=total, offset=offset)
    return data.astype(np.float64, copy=True).reshape(shape)


def mask_save(mask: ObservationMask, path) -> None:
    """Write an observation mask in the ``DTCM`` binary format."""
    payload = mask.omega.astype("<u8").tobytes()
    Path(path).write_bytes(MASK_MAGIC + _shape_header(mask.shape) + payload)


def mask_load(path) -> ObservationMask:
    """Read a ``DTCM`` mask file, checking index order and bounds."""
    buf = Path(path).read_bytes()
    shape, offset = _parse_shape_header(buf, MASK_MAGIC, "mask")
    total = int(np.prod(shape, dtype=np.int64))
    if (len(buf) - offset) % 8 != 0:
        raise FileFormatError("mask payload is not a whole number of indices")
    omega = np.frombuffer(buf, dtype="<u8", offset=offset).astype(np.int64)
    if omega.size:
        if omega.max() >= total:
            raise FileFormatError("mask index out of range")
        if np.any(np.diff(omega) <= 0):
            raise FileFormatError("mask indices must be strictly ascending")
    return ObservationMask.from_linear(shape, omega)


def _mode_multiply(t: np.ndarray, factor: np.ndarray, mode: int) -> np.ndarray:
    new_shape = list(t.shape)
    new_shape[mode - 1] = factor.shape[0]
    return fold(factor @ unfold(t, mode), mode, tuple(new_shape))


def synthesize_discrete_lowrank(shape, ranks, alphabet: Alphabet, seed: int) -> np.ndarray:
    """Seeded near-low-rank tensor with entries on the alphabet.

    Draws a Gaussian core of size ``ranks`` and one Gaussian factor per
    mode, multiplies them into a tensor of multilinear rank ``ranks``,
    maps the one-standard-deviation band around the mean linearly onto
    the alphabet's value range, and snaps every entry to the nearest
    alphabet value. Values beyond one standard deviation saturate at the
    end symbols, like over/under-exposed sensor data; together with the
    quantization this perturbs the exact low-rank structure slightly,
    which is what makes the fixture a realistic discrete completion
    target.
    """
    shape = tuple(int(d) for d in shape)
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != len(shape):
        raise ValueError("need one rank per mode")
    if any(r < 1 or r > d for r, d in zip(ranks, shape)):
        raise ValueError("ranks must lie in [1, mode size]")
    rng = _rng(seed)
    t = rng.standard_normal(ranks)
    for n, dim in enumerate(shape, start=1):
        t = _mode_multiply(t, rng.standard_normal((dim, ranks[n - 1])), n)
    lo, hi = float(alphabet.values[0]), float(alphabet.values[-1])
    spread = float(t.std())
    if spread == 0.0:
        t = np.full(shape, 0.5 * (lo + hi))
    else:
        t = (t - (t.mean() - spread)) / (2.0 * spread) * (hi - lo) + lo
    return quantize_to_alphabet(t, alphabet)
