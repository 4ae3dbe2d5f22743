import json
import math
from pathlib import Path

import numpy as np
import pytest

from condkit.errors import ExternalUnavailable, ParseFailure, ShapeMismatch, TooSmall
from condkit.metrics import (
    SSIM_K1,
    SSIM_K2,
    SSIM_SIGMA,
    SSIM_WINDOW,
    lpips_external,
    psnr,
    ssim,
)

from conftest import FIXTURES
from ssim_fixtures import make_pairs

GOLDEN = json.loads((FIXTURES / "ssim_golden.json").read_text())["scores"]


class TestPsnr:
    def test_identical_is_infinite(self):
        rng = np.random.default_rng(50)
        img = rng.uniform(0, 1, (16, 16, 3))
        assert psnr(img, img) == math.inf

    def test_uniform_tenth_offset_is_twenty_db(self):
        a = np.full((8, 8, 3), 0.5)
        b = np.full((8, 8, 3), 0.6)
        assert psnr(a, b) == pytest.approx(20.0, abs=1e-9)

    def test_symmetric(self):
        rng = np.random.default_rng(51)
        a = rng.uniform(0, 1, (12, 12))
        b = rng.uniform(0, 1, (12, 12))
        assert psnr(a, b) == psnr(b, a)

    def test_monotone_in_noise(self):
        rng = np.random.default_rng(52)
        base = rng.uniform(0.3, 0.7, (32, 32, 3))
        noise = rng.standard_normal(base.shape)
        scores = [
            psnr(base, np.clip(base + eps * noise, 0, 1))
            for eps in (0.01, 0.05, 0.1, 0.2)
        ]
        assert all(x > y for x, y in zip(scores, scores[1:]))

    def test_uint8_divided_by_255(self):
        a8 = np.full((8, 8, 3), 100, dtype=np.uint8)
        b8 = np.full((8, 8, 3), 110, dtype=np.uint8)
        want = 10.0 * math.log10(1.0 / (10.0 / 255.0) ** 2)
        assert psnr(a8, b8) == pytest.approx(want, abs=1e-9)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            psnr(np.zeros((4, 4)), np.zeros((4, 5)))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            psnr(np.full((4, 4), 1.5), np.zeros((4, 4)))
        with pytest.raises(ValueError):
            psnr(np.full((4, 4), -0.1), np.zeros((4, 4)))

    def test_rejects_nonfinite(self):
        bad = np.zeros((4, 4))
        bad[1, 1] = np.nan
        with pytest.raises(ValueError):
            psnr(bad, np.zeros((4, 4)))


class TestSsim:
    def test_identical_is_one(self):
        rng = np.random.default_rng(53)
        img = rng.uniform(0, 1, (24, 24, 3))
        assert ssim(img, img) == pytest.approx(1.0, abs=1e-9)

    def test_identical_gray_is_one(self):
        rng = np.random.default_rng(54)
        img = rng.uniform(0, 1, (16, 20))
        assert ssim(img, img) == pytest.approx(1.0, abs=1e-9)

    def test_constant_images_closed_form(self):
        # zero variance everywhere: score reduces to the luminance term
        a = np.full((16, 16), 0.3)
        b = np.full((16, 16), 0.7)
        c1 = SSIM_K1**2
        want = (2 * 0.3 * 0.7 + c1) / (0.3**2 + 0.7**2 + c1)
        assert ssim(a, b) == pytest.approx(want, abs=1e-12)

    @pytest.mark.parametrize("name", sorted(GOLDEN))
    def test_golden_scores(self, name):
        a, b = make_pairs()[name]
        assert ssim(a, b) == pytest.approx(GOLDEN[name], abs=1e-4)

    def test_symmetric(self):
        a, b = make_pairs()["smooth_vs_noisy"]
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)

    def test_flip_invariant(self):
        a, b = make_pairs()["smooth_vs_blurred"]
        flipped = ssim(a[::-1, ::-1].copy(), b[::-1, ::-1].copy())
        assert ssim(a, b) == pytest.approx(flipped, abs=1e-12)

    def test_color_is_channel_average(self):
        a, b = make_pairs()["noise_vs_noise"]
        per_channel = [ssim(a[..., c], b[..., c]) for c in range(3)]
        assert ssim(a, b) == pytest.approx(float(np.mean(per_channel)), abs=1e-12)

    def test_uint8_accepted(self):
        img = np.full((12, 12, 3), 200, dtype=np.uint8)
        assert ssim(img, img) == pytest.approx(1.0, abs=1e-9)

    def test_too_small(self):
        img = np.zeros((SSIM_WINDOW - 1, 32))
        with pytest.raises(TooSmall):
            ssim(img, img)

    def test_minimum_size_works(self):
        img = np.linspace(0, 1, SSIM_WINDOW * SSIM_WINDOW).reshape(
            SSIM_WINDOW, SSIM_WINDOW
        )
        assert ssim(img, img) == pytest.approx(1.0, abs=1e-9)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            ssim(np.zeros((16, 16)), np.zeros((16, 16, 3)))

    def test_window_constants(self):
        assert SSIM_WINDOW == 11
        assert SSIM_SIGMA == 1.5
        assert SSIM_K1 == 0.01
        assert SSIM_K2 == 0.03


def stub_script(tmp_path: Path, body: str) -> Path:
    path = tmp_path / "fake_lpips.py"
    path.write_text(body)
    return path


class TestLpipsExternal:
    def setup_method(self):
        rng = np.random.default_rng(55)
        self.a = rng.uniform(0, 1, (16, 16, 3))
        self.b = rng.uniform(0, 1, (16, 16, 3))

    def test_missing_binary(self):
        with pytest.raises(ExternalUnavailable):
            lpips_external(self.a, self.b, ["/nonexistent/lpips-backend"])

    def test_empty_command(self):
        with pytest.raises(ExternalUnavailable):
            lpips_external(self.a, self.b, [])

    def test_placeholder_substitution(self, tmp_path):
        script = stub_script(
            tmp_path,
            "import sys, os\n"
            "a, b = sys.argv[1], sys.argv[2]\n"
            "assert os.path.exists(a) and a.endswith('.png'), a\n"
            "assert os.path.exists(b) and b.endswith('.png'), b\n"
            "print('0.42')\n",
        )
        score = lpips_external(
            self.a, self.b, ["python3", str(script), "{a}", "{b}"]
        )
        assert score == 0.42

    def test_paths_appended_without_placeholders(self, tmp_path):
        script = stub_script(
            tmp_path,
            "import sys, os\n"
            "assert len(sys.argv) == 3\n"
            "assert all(os.path.exists(p) for p in sys.argv[1:])\n"
            "print(0.25)\n",
        )
        assert lpips_external(self.a, self.b, ["python3", str(script)]) == 0.25

    def test_last_token_wins(self, tmp_path):
        script = stub_script(
            tmp_path, "print('loading weights...')\nprint('score', 0.123)\n"
        )
        score = lpips_external(self.a, self.b, ["python3", str(script), "{a}", "{b}"])
        assert score == 0.123

    def test_nonzero_exit(self, tmp_path):
        script = stub_script(tmp_path, "import sys\nsys.exit(3)\n")
        with pytest.raises(ExternalUnavailable):
            lpips_external(self.a, self.b, ["python3", str(script), "{a}", "{b}"])

    def test_no_output(self, tmp_path):
        script = stub_script(tmp_path, "pass\n")
        with pytest.raises(ParseFailure):
            lpips_external(self.a, self.b, ["python3", str(script), "{a}", "{b}"])

    def test_unparseable_output(self, tmp_path):
        script = stub_script(tmp_path, "print('done')\n")
        with pytest.raises(ParseFailure):
            lpips_external(self.a, self.b, ["python3", str(script), "{a}", "{b}"])
