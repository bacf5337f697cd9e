"""Imaging support: Bayer mosaicking, 2x downsampling, classical baselines
(bilinear demosaic, Catmull-Rom bicubic), BT.601 luma, PSNR/SSIM and
bit-exact binary PPM/PGM I/O.

Images are numpy float64 arrays, (H, W) for grayscale or (H, W, 3) for
color, with sample values in [0, 255].  Vectors handed to the solvers are
row-major flattenings of one channel plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.ndimage

from .glr import SamplingSet

# channel index per 2x2 cell position, (row % 2, col % 2) -> 0/1/2 = R/G/B
BAYER_LAYOUTS = {
    "RGGB": ((0, 1), (1, 2)),
    "BGGR": ((2, 1), (1, 0)),
    "GRBG": ((1, 0), (2, 1)),
    "GBRG": ((1, 2), (0, 1)),
}


def validate_image(img) -> np.ndarray:
    a = np.asarray(img, dtype=np.float64)
    if a.ndim == 2:
        pass
    elif a.ndim == 3 and a.shape[2] == 3:
        pass
    else:
        raise ValueError("image must be (H, W) or (H, W, 3)")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError("image dimensions must be at least 1")
    if not np.all(np.isfinite(a)):
        raise ValueError("image samples must be finite")
    return a


def _channel_masks(shape, pattern):
    try:
        layout = BAYER_LAYOUTS[pattern]
    except KeyError:
        raise ValueError(f"unknown Bayer pattern {pattern!r}") from None
    h, w = shape
    cell = np.asarray(layout)
    tiled = cell[np.arange(h)[:, None] % 2, np.arange(w)[None, :] % 2]
    return [tiled == c for c in range(3)]


@dataclass(frozen=True)
class MosaicObservation:
    """Per-channel sampling of one Bayer-patterned capture.

    ``samples[c]`` is the (SamplingSet, y) pair of channel c on the
    row-major grid; ``raw`` is the single-plane mosaic with each pixel's
    sole observed color.
    """

    shape: tuple
    pattern: str
    samples: tuple
    raw: np.ndarray


def mosaic(img, pattern="RGGB") -> MosaicObservation:
    """Sample a color image on a Bayer grid: one color kept per pixel."""
    a = validate_image(img)
    if a.ndim != 3:
        raise ValueError("mosaicking needs a 3-channel image")
    h, w = a.shape[:2]
    masks = _channel_masks((h, w), pattern)
    raw = np.zeros((h, w))
    samples = []
    for c, m in enumerate(masks):
        flat = np.nonzero(m.ravel())[0]
        samples.append((SamplingSet(h * w, flat), a[..., c].ravel()[flat]))
        raw[m] = a[..., c][m]
    return MosaicObservation((h, w), pattern, tuple(samples), raw)


def downsample2x(img):
    """Keep even-row, even-column pixels (no anti-aliasing filter).

    Returns the low-resolution image and the sampling set marking the kept
    positions on the original grid (shared by all channels).
    """
    a = validate_image(img)
    h, w = a.shape[:2]
    if h < 2 or w < 2:
        raise ValueError("downsampling needs at least 2x2 pixels")
    lr = a[0::2, 0::2].copy()
    rr, cc = np.meshgrid(np.arange(0, h, 2), np.arange(0, w, 2), indexing="ij")
    idx = np.sort((rr * w + cc).ravel())
    return lr, SamplingSet(h * w, idx)


_BILINEAR_KERNEL = np.array([[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]])


def bilinear_demosaic(obs: MosaicObservation) -> np.ndarray:
    """Fill each missing color with the average of the nearest same-color
    neighbours (the per-position 3x3 stencils), reflected at borders."""
    h, w = obs.shape
    masks = _channel_masks((h, w), obs.pattern)
    out = np.empty((h, w, 3))
    for c, m in enumerate(masks):
        known = np.where(m, obs.raw, 0.0)
        num = scipy.ndimage.convolve(known, _BILINEAR_KERNEL, mode="reflect")
        den = scipy.ndimage.convolve(m.astype(np.float64), _BILINEAR_KERNEL, mode="reflect")
        plane = np.where(m, obs.raw, num / den)
        out[..., c] = plane
    return out


def _mirror_index(idx, n):
    # reflect about the edge samples (no edge repetition)
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * n - 2
    idx = np.abs(idx) % period
    return np.where(idx >= n, period - idx, idx)


def _catmull_rom_weights(t):
    # a = -0.5 interpolating cubic; weights for samples at offsets -1..2
    t = float(t)
    t2, t3 = t * t, t * t * t
    return np.array(
        [
            -0.5 * t3 + t2 - 0.5 * t,
            1.5 * t3 - 2.5 * t2 + 1.0,
            -1.5 * t3 + 2.0 * t2 + 0.5 * t,
            0.5 * t3 - 0.5 * t2,
        ]
    )


def _upsample_axis(a, out_len, factor):
    n = a.shape[0]
    out = np.zeros((out_len,) + a.shape[1:])
    pos = np.arange(out_len) / float(factor)
    base = np.floor(pos).astype(np.int64)
    frac = pos - base
    for t in np.unique(frac):
        sel = frac == t
        wts = _catmull_rom_weights(t)
        acc = np.zeros((int(sel.sum()),) + a.shape[1:])
        for k, wk in enumerate(wts):
            if wk == 0.0:
                continue
            idx = _mirror_index(base[sel] + k - 1, n)
            acc += wk * a[idx]
        out[sel] = acc
    return out


def bicubic_upsample(lr, factor=2, out_shape=None) -> np.ndarray:
    """Separable Catmull-Rom upsampling, phase-aligned so output position
    (factor*i, factor*j) reproduces the low-resolution sample (i, j)."""
    a = validate_image(lr)
    if factor < 1:
        raise ValueError("factor must be at least 1")
    if out_shape is None:
        out_shape = (a.shape[0] * factor, a.shape[1] * factor)
    oh, ow = int(out_shape[0]), int(out_shape[1])
    if math.ceil(oh / factor) != a.shape[0] or math.ceil(ow / factor) != a.shape[1]:
        raise ValueError("output shape inconsistent with the input grid")
    out = _upsample_axis(a, oh, factor)
    out = np.swapaxes(_upsample_axis(np.swapaxes(out, 0, 1), ow, factor), 0, 1)
    return out


def rgb_to_ycbcr(img) -> np.ndarray:
    """ITU-R BT.601 full-range conversion."""
    a = validate_image(img)
    if a.ndim != 3:
        raise ValueError("color conversion needs 3 channels")
    r, g, b = a[..., 0], a[..., 1], a[..., 2]
    out = np.empty_like(a)
    out[..., 0] = 0.299 * r + 0.587 * g + 0.114 * b
    out[..., 1] = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    out[..., 2] = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    return out


def luma(img) -> np.ndarray:
    """BT.601 luma plane; grayscale images pass through."""
    a = validate_image(img)
    if a.ndim == 2:
        return a
    return 0.299 * a[..., 0] + 0.587 * a[..., 1] + 0.114 * a[..., 2]


def _clipped(a):
    return np.clip(a, 0.0, 255.0)


def psnr(a, b, peak=255.0) -> float:
    """10 log10(peak^2 / MSE) over all samples; +inf when identical.

    For 3-channel inputs the MSE pools the channels (the CPSNR
    convention).  Values are clipped to [0, 255] but not re-quantized.
    """
    a = validate_image(a)
    b = validate_image(b)
    if a.shape != b.shape:
        raise ValueError("psnr needs identically shaped images")
    diff = _clipped(a) - _clipped(b)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5


def _ssim_kernel():
    r = _SSIM_WINDOW // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * _SSIM_SIGMA * _SSIM_SIGMA))
    return k / k.sum()


def _ssim_filter(a):
    k = _ssim_kernel()
    r = _SSIM_WINDOW // 2
    t = scipy.ndimage.correlate1d(a, k, axis=0, mode="constant")
    t = scipy.ndimage.correlate1d(t, k, axis=1, mode="constant")
    return t[r:-r, r:-r]


def ssim(a, b, k1=0.01, k2=0.03, peak=255.0) -> float:
    """Mean structural similarity with the 11x11 sigma-1.5 Gaussian window.

    Single-channel only; windows fully inside the image (valid mode).
    """
    a = validate_image(a)
    b = validate_image(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("ssim operates on single-channel images")
    if a.shape != b.shape:
        raise ValueError("ssim needs identically shaped images")
    if min(a.shape) < _SSIM_WINDOW:
        raise ValueError(f"image smaller than the {_SSIM_WINDOW}x{_SSIM_WINDOW} window")
    a = _clipped(a)
    b = _clipped(b)
    c1 = (k1 * peak) ** 2
    c2 = (k2 * peak) ** 2
    mu_a = _ssim_filter(a)
    mu_b = _ssim_filter(b)
    var_a = _ssim_filter(a * a) - mu_a * mu_a
    var_b = _ssim_filter(b * b) - mu_b * mu_b
    cov = _ssim_filter(a * b) - mu_a * mu_b
    s = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) / (
        (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    )
    return float(s.mean())


def _next_token(data, pos):
    # Netpbm token scan: skip whitespace and # comments
    n = len(data)
    while pos < n:
        ch = data[pos:pos + 1]
        if ch == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ValueError("malformed header: unexpected end of file")
    return data[start:pos], pos


def read_ppm(path) -> np.ndarray:
    """Binary P5 (grayscale) or P6 (color) with maxval 255."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, pos = _next_token(data, 0)
    if magic not in (b"P5", b"P6"):
        raise ValueError(f"unsupported format magic {magic!r}; expected binary P5 or P6")
    fields = []
    for _ in range(3):
        tok, pos = _next_token(data, pos)
        if not tok.isdigit():
            raise ValueError(f"malformed header field {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}; only 255 is handled")
    if width < 1 or height < 1:
        raise ValueError("degenerate image dimensions")
    pos += 1  # exactly one whitespace byte after maxval
    channels = 1 if magic == b"P5" else 3
    need = width * height * channels
    raster = data[pos:pos + need]
    if len(raster) < need:
        raise ValueError("truncated raster payload")
    a = np.frombuffer(raster, dtype=np.uint8).astype(np.float64)
    if channels == 1:
        return a.reshape(height, width)
    return a.reshape(height, width, 3)


def write_ppm(path, img) -> None:
    """Write P5/P6 with maxval 255; samples are rounded to nearest."""
    a = validate_image(img)
    q = np.clip(np.rint(a), 0, 255).astype(np.uint8)
    magic = b"P5" if a.ndim == 2 else b"P6"
    header = b"%s\n%d %d\n255\n" % (magic, a.shape[1], a.shape[0])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(q.tobytes())


def read_png(path) -> np.ndarray:
    """Optional 8-bit PNG reader; requires Pillow."""
    try:
        from PIL import Image as PilImage
    except ImportError as exc:
        raise RuntimeError(
            "PNG support needs the optional Pillow dependency (pip install graphinterp[png])"
        ) from exc
    with PilImage.open(path) as im:
        if im.mode not in ("RGB", "L"):
            im = im.convert("RGB")
        return np.asarray(im, dtype=np.float64)
