"""Deterministic image pairs used for the SSIM golden-value check.

The reference scores in tests/fixtures/ssim_golden.json were computed from
these exact arrays with scikit-image (see scripts/make_ssim_reference.py and
the provenance block inside the JSON). Regenerating the pairs here, rather
than committing .npy files, keeps the fixtures readable; the PCG64 stream is
stable across numpy releases.
"""

import numpy as np


def _smooth(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    # Sum of low-frequency sinusoids plus mild noise, scaled into [0, 1].
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    img = np.zeros((h, w, 3))
    for c in range(3):
        fx, fy = rng.uniform(0.5, 3.0, size=2)
        phase = rng.uniform(0, 2 * np.pi)
        img[:, :, c] = np.sin(2 * np.pi * (fx * xx / w + fy * yy / h) + phase)
    img += 0.15 * rng.standard_normal((h, w, 3))
    img -= img.min()
    img /= img.max()
    return img


def make_pairs() -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Five named (a, b) pairs, float64 RGB in [0, 1], 64x64."""
    rng = np.random.default_rng(20240915)
    pairs = {}

    # independent uniform noise
    a = rng.uniform(0, 1, (64, 64, 3))
    b = rng.uniform(0, 1, (64, 64, 3))
    pairs["noise_vs_noise"] = (a, b)

    # smooth field vs the same field with additive noise
    a = _smooth(rng, 64, 64)
    b = np.clip(a + 0.05 * rng.standard_normal(a.shape), 0, 1)
    pairs["smooth_vs_noisy"] = (a, b)

    # smooth field vs box-blurred copy
    a = _smooth(rng, 64, 64)
    k = np.ones((5, 5)) / 25.0
    blurred = np.empty_like(a)
    pad = np.pad(a, ((2, 2), (2, 2), (0, 0)), mode="edge")
    for c in range(3):
        acc = np.zeros((64, 64))
        for dy in range(5):
            for dx in range(5):
                acc += k[dy, dx] * pad[dy : dy + 64, dx : dx + 64, c]
        blurred[:, :, c] = acc
    pairs["smooth_vs_blurred"] = (a, blurred)

    # image vs its photographic negative
    a = _smooth(rng, 64, 64)
    pairs["image_vs_negative"] = (a, 1.0 - a)

    # smooth field vs 3-pixel diagonal shift of itself
    a = _smooth(rng, 64, 64)
    b = np.roll(np.roll(a, 3, axis=0), 3, axis=1)
    pairs["image_vs_shifted"] = (a, b)

    return pairs
