"""Full-reference image metrics for view-synthesis evaluation.

psnr and ssim operate on float images in [0, 1], shape (H, W, 3) or (H, W).
8-bit arrays are accepted and divided by 255 at the boundary; the peak value
is fixed at 1.0. Misaligned renders score poorly under both metrics even when
perceptually close, so treat small PSNR/SSIM gaps between methods with care.

LPIPS needs a neural network, which this library does not ship; lpips_external
shells out to a user-supplied command instead and parses its stdout.
"""

from __future__ import annotations

import math
import subprocess
import tempfile
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ExternalUnavailable, ParseFailure, ShapeMismatch, TooSmall

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
PEAK = 1.0


def _as_unit_float(img: np.ndarray) -> np.ndarray:
    arr = np.asarray(img)
    if arr.dtype == np.uint8:
        arr = arr.astype(np.float64) / 255.0
    else:
        arr = arr.astype(np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("image entries must be finite")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("image entries must lie in [0, 1]")
    return arr


def _check_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    fa, fb = _as_unit_float(a), _as_unit_float(b)
    if fa.shape != fb.shape:
        raise ShapeMismatch(f"image shapes differ: {fa.shape} vs {fb.shape}")
    return fa, fb


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB; math.inf for identical images."""
    fa, fb = _check_pair(a, b)
    mse = float(np.mean((fa - fb) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse)


def _gaussian_taps(sigma: float, radius: int) -> np.ndarray:
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-0.5 * (x / sigma) ** 2)
    return taps / taps.sum()


def _window_mean(img: np.ndarray, taps: np.ndarray) -> np.ndarray:
    # separable weighted mean over every fully-interior window ('valid')
    out = sliding_window_view(img, taps.size, axis=0) @ taps
    return sliding_window_view(out, taps.size, axis=1) @ taps


def _ssim_channel(x: np.ndarray, y: np.ndarray, taps: np.ndarray) -> float:
    ux = _window_mean(x, taps)
    uy = _window_mean(y, taps)
    # population (not sample) second moments, per the classic definition
    vx = _window_mean(x * x, taps) - ux * ux
    vy = _window_mean(y * y, taps) - uy * uy
    vxy = _window_mean(x * y, taps) - ux * uy
    c1 = (SSIM_K1 * PEAK) ** 2
    c2 = (SSIM_K2 * PEAK) ** 2
    s = ((2 * ux * uy + c1) * (2 * vxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
    return float(s.mean())


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity with an 11x11 Gaussian window, sigma 1.5.

    Equals 1.0 for identical images. Color images score each channel
    independently and average the three results. Local statistics use
    population covariance; the mean runs over windows that fit entirely
    inside the image, so no padding choice leaks into the score.
    """
    fa, fb = _check_pair(a, b)
    if min(fa.shape[0], fa.shape[1]) < SSIM_WINDOW:
        raise TooSmall(
            f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {fa.shape[:2]}"
        )
    taps = _gaussian_taps(SSIM_SIGMA, SSIM_WINDOW // 2)
    if fa.ndim == 2:
        return _ssim_channel(fa, fb, taps)
    if fa.ndim != 3:
        raise ShapeMismatch(f"expected (H, W) or (H, W, C) images, got shape {fa.shape}")
    channels = [
        _ssim_channel(fa[..., c], fb[..., c], taps) for c in range(fa.shape[2])
    ]
    return float(np.mean(channels))


def _write_png(img: np.ndarray, path: Path) -> None:
    from PIL import Image

    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        arr = np.round(_as_unit_float(arr) * 255.0).astype(np.uint8)
    Image.fromarray(arr).save(path)


def lpips_external(a: np.ndarray, b: np.ndarray, command: list[str]) -> float:
    """Run an external LPIPS backend on the image pair and parse its score.

    ``command`` is an argv list; occurrences of ``{a}`` and ``{b}`` are
    replaced with paths to temporary PNGs of the two images, and when neither
    placeholder appears the two paths are appended. The score is the last
    whitespace-separated token of stdout. A missing or failing command raises
    ExternalUnavailable rather than reporting a score of zero.
    """
    if not command:
        raise ExternalUnavailable("empty LPIPS command")
    with tempfile.TemporaryDirectory(prefix="condkit-lpips-") as tmp:
        path_a = Path(tmp) / "a.png"
        path_b = Path(tmp) / "b.png"
        _write_png(a, path_a)
        _write_png(b, path_b)
        argv = [
            arg.replace("{a}", str(path_a)).replace("{b}", str(path_b))
            for arg in command
        ]
        if not any("{a}" in arg or "{b}" in arg for arg in command):
            argv = argv + [str(path_a), str(path_b)]
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, check=False)
        except (FileNotFoundError, PermissionError) as exc:
            raise ExternalUnavailable(f"LPIPS command not runnable: {exc}") from exc
        if proc.returncode != 0:
            raise ExternalUnavailable(
                f"LPIPS command exited {proc.returncode}: {proc.stderr.strip()}"
            )
    tokens = proc.stdout.split()
    if not tokens:
        raise ParseFailure("LPIPS command produced no output")
    try:
        return float(tokens[-1])
    except ValueError:
        raise ParseFailure(f"cannot parse LPIPS score from {tokens[-1]!r}") from None
