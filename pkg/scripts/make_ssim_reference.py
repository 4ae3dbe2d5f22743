"""Compute reference SSIM scores for the committed fixture pairs.

Run once to (re)generate tests/fixtures/ssim_golden.json. Uses scikit-image
as an independent reference implementation, configured for the classic SSIM
definition: 11x11 Gaussian window, sigma=1.5, K1=0.01, K2=0.03, population
(not sample) covariance, per-channel then averaged.

scikit-image is deliberately not a dependency of the package; it is only
needed to regenerate the golden file.
"""

import json
import sys
from pathlib import Path

import numpy as np
import skimage
from skimage.metrics import structural_similarity

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
from ssim_fixtures import make_pairs  # noqa: E402


def main() -> None:
    golden = {}
    for name, (a, b) in make_pairs().items():
        score = structural_similarity(
            a,
            b,
            win_size=11,
            gaussian_weights=True,
            sigma=1.5,
            use_sample_covariance=False,
            K1=0.01,
            K2=0.03,
            data_range=1.0,
            channel_axis=2,
        )
        golden[name] = float(score)

    out = {
        "provenance": {
            "tool": "scikit-image",
            "version": skimage.__version__,
            "numpy_version": np.__version__,
            "settings": {
                "win_size": 11,
                "gaussian_weights": True,
                "sigma": 1.5,
                "use_sample_covariance": False,
                "K1": 0.01,
                "K2": 0.03,
                "data_range": 1.0,
                "channel_axis": 2,
            },
            "fixtures": "tests/ssim_fixtures.py::make_pairs",
        },
        "scores": golden,
    }
    path = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "ssim_golden.json"
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(f"wrote {path}")
    for k, v in golden.items():
        print(f"  {k}: {v:.10f}")


if __name__ == "__main__":
    main()
