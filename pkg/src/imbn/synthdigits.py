"""Deterministic synthetic digit corpus in the IDX container layout.

Renders 28x28 grayscale digits from stroke bitmaps with randomized affine
deformation, brightness, and correlated pixel noise, then writes the four
standard split files (train/t10k images and labels). Per-digit counts
default to the classic 60k/10k split so experiment subsets that assume
those counts work unchanged. Generation is fully determined by the seed.

This exists so the end-to-end experiments can run on machines without the
real handwritten-digit files; point the data directory at real IDX files
to use those instead.
"""

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import ndimage

from .dataset import write_idx_images, write_idx_labels

# bump when rendering parameters change, so cached corpora regenerate
CORPUS_VERSION = 1

TRAIN_DIGIT_COUNTS = {
    0: 5923, 1: 6742, 2: 5958, 3: 6131, 4: 5842,
    5: 5421, 6: 5918, 7: 6265, 8: 5851, 9: 5949,
}
TEST_DIGIT_COUNTS = {
    0: 980, 1: 1135, 2: 1032, 3: 1010, 4: 982,
    5: 892, 6: 958, 7: 1028, 8: 974, 9: 1009,
}

FILE_NAMES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}

# 5x7 stroke bitmaps, one string row per pixel row
_GLYPHS = {
    0: ("01110", "10001", "10011", "10101", "11001", "10001", "01110"),
    1: ("00100", "01100", "00100", "00100", "00100", "00100", "01110"),
    2: ("01110", "10001", "00001", "00010", "00100", "01000", "11111"),
    3: ("11111", "00010", "00100", "00010", "00001", "10001", "01110"),
    4: ("00010", "00110", "01010", "10010", "11111", "00010", "00010"),
    5: ("11111", "10000", "11110", "00001", "00001", "10001", "01110"),
    6: ("00110", "01000", "10000", "11110", "10001", "10001", "01110"),
    7: ("11111", "00001", "00010", "00100", "01000", "01000", "01000"),
    8: ("01110", "10001", "10001", "01110", "10001", "10001", "01110"),
    9: ("01110", "10001", "10001", "01111", "00001", "00010", "01100"),
}


@dataclass
class RenderParams:
    """Deformation and noise ranges; wider ranges make a digit's style
    manifold broader and therefore harder to cover with few samples."""

    rotation_deg: float = 25.0
    scale_low: float = 0.75
    scale_high: float = 1.3
    shear: float = 0.25
    translate_px: float = 2.5
    brightness_low: float = 0.65
    brightness_high: float = 1.0
    noise_sigma: float = 0.18
    noise_blur: float = 1.0
    glyph_blur: float = 0.8
    occlude_prob: float = 0.0
    occlude_low: int = 4
    occlude_high: int = 10
    # sloppy-style fraction: blend the glyph toward a random other digit
    scrawl_prob: float = 0.0
    scrawl_low: float = 0.35
    scrawl_high: float = 0.8


# Per-digit style variability. Digits 1 and 4 are tight, careful clusters;
# the others are written loosely, and a fraction of them are scrawled
# hybrids that drift toward other digits, so the class clouds overlap.
_CAREFUL = RenderParams(
    rotation_deg=8.0, scale_low=0.95, scale_high=1.12, shear=0.08,
    translate_px=1.0, brightness_low=0.8, noise_sigma=0.22, noise_blur=0.4,
    glyph_blur=0.6, occlude_prob=0.03,
)
_SLOPPY = RenderParams(
    rotation_deg=25.0, scale_low=0.7, scale_high=1.35, shear=0.3,
    translate_px=3.0, brightness_low=0.45, noise_sigma=0.15, glyph_blur=0.9,
    occlude_prob=0.2, scrawl_prob=0.15, scrawl_low=0.35, scrawl_high=0.6,
)
STYLE_PROFILES = {
    digit: (_CAREFUL if digit in (1, 4) else _SLOPPY) for digit in range(10)
}

# A sliver of each loosely-written digit is drawn so badly it approaches a
# visually adjacent digit (rendered under the neighbor's style, glyphs
# blended); at blend 1.0 the image is indistinguishable from the neighbor.
# This is what makes rare classes genuinely contested. Shares are the
# fraction of the digit's doppel budget that goes to each neighbor.
DOPPEL_PARTNERS = {
    0: {1: 0.42, 6: 0.29, 8: 0.29},
    2: {3: 0.5, 7: 0.5},
    3: {5: 0.5, 8: 0.5},
    5: {6: 0.5, 8: 0.5},
    6: {0: 0.5, 5: 0.5},
    7: {1: 0.315, 4: 0.37, 9: 0.315},
    8: {1: 0.46, 0: 0.27, 3: 0.27},
    9: {4: 0.5, 7: 0.5},
}
DOPPEL_FRACTION = 0.055
DOPPEL_BLEND = (0.7, 1.0)


def _base_image(digit: int) -> np.ndarray:
    glyph = np.array(
        [[float(c) for c in row] for row in _GLYPHS[digit]], dtype=float
    )
    big = np.kron(glyph, np.ones((3, 3)))  # 21 x 15
    canvas = np.zeros((28, 28))
    y0 = (28 - big.shape[0]) // 2
    x0 = (28 - big.shape[1]) // 2
    canvas[y0 : y0 + big.shape[0], x0 : x0 + big.shape[1]] = big
    return canvas


@lru_cache(maxsize=None)
def _blurred_base(digit: int, blur: float) -> np.ndarray:
    return ndimage.gaussian_filter(_base_image(digit), blur)


def render_digits(
    digit: int,
    count: int,
    rng,
    params: RenderParams | None = None,
    hybrid_with: int | None = None,
    hybrid_blend=DOPPEL_BLEND,
) -> np.ndarray:
    """(count, 28, 28) uint8 renderings of one digit.

    With hybrid_with set, every image is a glyph blend toward that digit
    (blend factor uniform in hybrid_blend) rendered under params.
    """
    params = params or STYLE_PROFILES[digit]
    if count == 0:
        return np.zeros((0, 28, 28), dtype=np.uint8)
    base = _blurred_base(digit, params.glyph_blur)

    theta = np.deg2rad(rng.uniform(-params.rotation_deg, params.rotation_deg, count))
    scale_y = rng.uniform(params.scale_low, params.scale_high, count)
    scale_x = rng.uniform(params.scale_low, params.scale_high, count)
    shear = rng.uniform(-params.shear, params.shear, count)
    t_y = rng.uniform(-params.translate_px, params.translate_px, count)
    t_x = rng.uniform(-params.translate_px, params.translate_px, count)

    # pull-back map per image: rotation @ shear @ inverse scale
    cos, sin = np.cos(theta), np.sin(theta)
    a11 = cos / scale_y
    a12 = (cos * shear - sin) / scale_x
    a21 = sin / scale_y
    a22 = (sin * shear + cos) / scale_x

    c = 13.5
    yy, xx = np.mgrid[0:28, 0:28].astype(float) - c
    rows = a11[:, None, None] * yy + a12[:, None, None] * xx + c + t_y[:, None, None]
    cols = a21[:, None, None] * yy + a22[:, None, None] * xx + c + t_x[:, None, None]

    out = np.empty((count, 28, 28))
    if hybrid_with is not None:
        scrawl = np.ones(count, dtype=bool)
        partners = np.full(count, hybrid_with)
        blend = rng.uniform(hybrid_blend[0], hybrid_blend[1], count)
    elif params.scrawl_prob > 0:
        scrawl = rng.random(count) < params.scrawl_prob
        partners = rng.integers(0, 9, count)
        partners += partners >= digit  # uniform over the other nine digits
        blend = rng.uniform(params.scrawl_low, params.scrawl_high, count)
    else:
        scrawl = np.zeros(count, dtype=bool)
    plain = ~scrawl
    out[plain] = ndimage.map_coordinates(
        base, [rows[plain].ravel(), cols[plain].ravel()], order=1, mode="constant", cval=0.0
    ).reshape(-1, 28, 28)
    for i in np.flatnonzero(scrawl):
        other = _blurred_base(int(partners[i]), params.glyph_blur)
        hybrid = (1.0 - blend[i]) * base + blend[i] * other
        out[i] = ndimage.map_coordinates(
            hybrid, [rows[i].ravel(), cols[i].ravel()], order=1, mode="constant", cval=0.0
        ).reshape(28, 28)

    if params.occlude_prob > 0:
        occluded = np.flatnonzero(rng.random(count) < params.occlude_prob)
        sizes = rng.integers(params.occlude_low, params.occlude_high + 1, (occluded.size, 2))
        tops = rng.integers(0, 28 - sizes[:, 0] + 1) if occluded.size else np.array([], int)
        lefts = rng.integers(0, 28 - sizes[:, 1] + 1) if occluded.size else np.array([], int)
        for i, (hw, top, left) in enumerate(zip(sizes, tops, lefts)):
            out[occluded[i], top : top + hw[0], left : left + hw[1]] = 0.0

    brightness = rng.uniform(params.brightness_low, params.brightness_high, count)
    out *= brightness[:, None, None]
    noise = ndimage.gaussian_filter(
        rng.normal(0.0, 1.0, size=(count, 28, 28)),
        sigma=(0.0, params.noise_blur, params.noise_blur),
    )
    out += params.noise_sigma * noise
    np.clip(out, 0.0, 1.0, out=out)
    return np.rint(out * 255.0).astype(np.uint8)


def _render_split(counts: dict, seed: int, split_id: int, params) -> tuple:
    parts, labels = [], []
    for digit in sorted(counts):
        n = counts[digit]
        rng = np.random.default_rng([seed, split_id, digit])
        digit_params = params.get(digit) if isinstance(params, dict) else params
        partners = DOPPEL_PARTNERS.get(digit, {}) if digit_params is None else {}
        doppel = {
            p: round(n * DOPPEL_FRACTION * share) for p, share in partners.items()
        }
        plain = n - sum(doppel.values())
        parts.append(render_digits(digit, plain, rng, digit_params))
        for partner, m in doppel.items():
            parts.append(
                render_digits(
                    digit, m, rng, params=STYLE_PROFILES[partner], hybrid_with=partner
                )
            )
        labels.append(np.full(n, digit, dtype=np.uint8))
    images = np.concatenate(parts)
    labels = np.concatenate(labels)
    order = np.random.default_rng([seed, split_id, 1000]).permutation(labels.size)
    return images[order], labels[order]


def generate_corpus(
    out_dir,
    seed: int = 0,
    train_counts: dict | None = None,
    test_counts: dict | None = None,
    params=None,
) -> dict:
    """Write the four split files into out_dir; returns name -> path.

    params may be a single RenderParams for every digit, a digit -> params
    dict, or None for the per-digit style profiles.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_counts = TRAIN_DIGIT_COUNTS if train_counts is None else train_counts
    test_counts = TEST_DIGIT_COUNTS if test_counts is None else test_counts

    paths = {}
    for split_id, (counts, img_key, lab_key) in enumerate(
        [
            (train_counts, "train_images", "train_labels"),
            (test_counts, "test_images", "test_labels"),
        ]
    ):
        images, labels = _render_split(counts, seed, split_id, params)
        img_path = out_dir / FILE_NAMES[img_key]
        lab_path = out_dir / FILE_NAMES[lab_key]
        img_path.write_bytes(write_idx_images(images))
        lab_path.write_bytes(write_idx_labels(labels))
        paths[img_key] = img_path
        paths[lab_key] = lab_path
    return paths
