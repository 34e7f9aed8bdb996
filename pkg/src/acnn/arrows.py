"""Synthetic 8x8 arrow dataset generator.

Produces 1-bit 64-pixel images of arrows pointing up, left, down or
right.  Each image is derived from one of four hand-drawn up-pointing
templates: the class rotates the template, then a small random shift
and sparse pixel noise are applied.  All emitted patterns are distinct
and the train/test splits are disjoint, so test accuracy is never
inflated by memorized duplicates.

The on-disk format is line oriented text: a header line, then one
record per line consisting of 64 characters of {0,1} followed by the
class token.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, ParseError

FORMAT_VERSION = "v1"
N_PIXELS = 64
SIDE = 8

CLASS_NAMES = ("Up", "Left", "Down", "Right")
UP, LEFT, DOWN, RIGHT = range(4)

# Up-pointing base glyphs, four variants of one solid-arrow motif
# (full head, short head, thick stem, short stem).  Left/down/right are
# 90/180/270 degree rotations, so one drawing per shape covers all four
# classes.
_TEMPLATE_ART = [
    [
        "00011000",
        "00111100",
        "01111110",
        "11111111",
        "00011000",
        "00011000",
        "00011000",
        "00011000",
    ],
    [
        "00011000",
        "00111100",
        "01111110",
        "00011000",
        "00011000",
        "00011000",
        "00011000",
        "00011000",
    ],
    [
        "00011000",
        "00111100",
        "01111110",
        "11111111",
        "00111100",
        "00111100",
        "00111100",
        "00111100",
    ],
    [
        "00011000",
        "00111100",
        "01111110",
        "11111111",
        "00011000",
        "00011000",
        "00011000",
        "00000000",
    ],
]


def _parse_art(rows) -> np.ndarray:
    a = np.array([[int(ch) for ch in row] for row in rows], dtype=np.uint8)
    if a.shape != (SIDE, SIDE):
        raise ValueError("template must be 8x8")
    return a

UP_TEMPLATES = [_parse_art(rows) for rows in _TEMPLATE_ART]
N_TEMPLATES = len(UP_TEMPLATES)


@dataclass
class Image64:
    """One 1-bit image, stored as a flat length-64 uint8 vector."""

    pixels: np.ndarray
    label: int

    def grid(self) -> np.ndarray:
        return self.pixels.reshape(SIDE, SIDE)

    def art(self) -> str:
        return "\n".join(
            "".join(".#"[p] for p in row) for row in self.grid()
        )


@dataclass
class GeneratorConfig:
    """Augmentation knobs for the dataset generator.

    max_shift bounds the |dx|,|dy| translation in pixels (zero fill at
    the borders); max_noise_pixels bounds how many pixels get flipped.
    """

    max_shift: int = 1
    max_noise_pixels: int = 3

    def validate(self) -> None:
        if self.max_shift < 0 or self.max_shift >= SIDE:
            raise ConfigError(f"max_shift must be in [0, {SIDE - 1}]")
        if self.max_noise_pixels < 0 or self.max_noise_pixels > N_PIXELS:
            raise ConfigError("max_noise_pixels must be in [0, 64]")


@dataclass
class DatasetSplit:
    """Train/test image lists plus the provenance needed to regenerate."""

    train: list = field(default_factory=list)
    test: list = field(default_factory=list)
    seed: int = 0
    version: str = FORMAT_VERSION


def class_template(label: int, template_idx: int) -> np.ndarray:
    """Base glyph for a class: the up template rotated into position."""
    return np.rot90(UP_TEMPLATES[template_idx], k=label)


def _shift(img: np.ndarray, dy: int, dx: int) -> np.ndarray:
    out = np.zeros_like(img)
    ydst = slice(max(dy, 0), SIDE + min(dy, 0))
    xdst = slice(max(dx, 0), SIDE + min(dx, 0))
    ysrc = slice(max(-dy, 0), SIDE + min(-dy, 0))
    xsrc = slice(max(-dx, 0), SIDE + min(-dx, 0))
    out[ydst, xdst] = img[ysrc, xsrc]
    return out


def pattern_budget(cfg: GeneratorConfig) -> int:
    """Guaranteed distinct patterns per class.

    Distinct flip masks applied to a single base glyph give distinct
    images, so the number of <= max_noise_pixels subsets of the 64
    pixel positions is a hard lower bound.
    """
    return sum(math.comb(N_PIXELS, k) for k in range(cfg.max_noise_pixels + 1))


def _class_counts(n: int) -> list:
    counts = [n // 4] * 4
    for i in range(n % 4):
        counts[i] += 1
    return counts


def generate_dataset(
    seed: int,
    n_train: int = 4000,
    n_test: int = 4078,
    cfg: GeneratorConfig | None = None,
) -> DatasetSplit:
    """Generate a balanced train/test split of arrow images.

    Every pattern in the dataset is unique, which also makes the splits
    disjoint.  Class counts within each split differ by at most one.
    Raises DataError when the requested sizes exceed the distinct
    pattern budget for the configured augmentation ranges.
    """
    cfg = cfg or GeneratorConfig()
    cfg.validate()
    if n_train < 4 * N_TEMPLATES:
        raise ConfigError(f"n_train must be at least {4 * N_TEMPLATES}")
    if n_test < 4:
        raise ConfigError("n_test must be at least 4 so every class appears")

    budget = pattern_budget(cfg)
    need_per_class = math.ceil((n_train + n_test) / 4)
    if need_per_class > budget:
        raise DataError(
            f"requested {n_train}+{n_test} images needs {need_per_class} "
            f"distinct patterns per class but only {budget} are guaranteed"
        )

    rng = np.random.default_rng(seed)
    seen: set = set()

    def draw(label: int) -> Image64:
        for _ in range(10000):
            t = int(rng.integers(N_TEMPLATES))
            dy = int(rng.integers(-cfg.max_shift, cfg.max_shift + 1))
            dx = int(rng.integers(-cfg.max_shift, cfg.max_shift + 1))
            img = _shift(class_template(label, t), dy, dx)
            k = int(rng.integers(cfg.max_noise_pixels + 1))
            flat = img.reshape(-1).copy()
            if k:
                pos = rng.choice(N_PIXELS, size=k, replace=False)
                flat[pos] ^= 1
            key = flat.tobytes()
            if key not in seen:
                seen.add(key)
                return Image64(pixels=flat, label=label)
        raise DataError(
            f"could not find a fresh pattern for class {CLASS_NAMES[label]}; "
            "augmentation space exhausted"
        )

    def build(n: int) -> list:
        images = []
        for label, count in enumerate(_class_counts(n)):
            for _ in range(count):
                images.append(draw(label))
        order = rng.permutation(len(images))
        return [images[i] for i in order]

    train = build(n_train)
    test = build(n_test)
    return DatasetSplit(train=train, test=test, seed=seed)


def split_arrays(images) -> tuple:
    """Stack a list of Image64 into (X float64 [n,64], labels int64 [n])."""
    if not images:
        raise DataError("empty image list")
    x = np.stack([im.pixels for im in images]).astype(np.float64)
    y = np.array([im.label for im in images], dtype=np.int64)
    return x, y


def save_dataset(split: DatasetSplit, path) -> None:
    """Write the split in the line-oriented text format."""
    lines = [f"arrows64 {split.version} seed={split.seed}"]
    for name, images in (("train", split.train), ("test", split.test)):
        lines.append(f"{name} {len(images)}")
        for im in images:
            bits = "".join("01"[p] for p in im.pixels)
            lines.append(f"{bits} {CLASS_NAMES[im.label]}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


_LABEL_OF = {name: i for i, name in enumerate(CLASS_NAMES)}


def load_dataset(path) -> DatasetSplit:
    """Parse a dataset file; ParseError pinpoints line and byte offset."""
    with open(path, "rb") as fh:
        raw = fh.read()
    offsets = []
    pos = 0
    lines = raw.split(b"\n")
    for ln in lines:
        offsets.append(pos)
        pos += len(ln) + 1
    if lines and lines[-1] == b"":
        lines.pop()

    def text(i):
        try:
            return lines[i].decode("ascii")
        except UnicodeDecodeError as e:
            raise ParseError(
                "non-ASCII byte in dataset file", line=i + 1, offset=offsets[i]
            ) from e

    if not lines:
        raise ParseError("empty dataset file", line=1, offset=0)
    head = text(0).split()
    if len(head) != 3 or head[0] != "arrows64" or not head[2].startswith("seed="):
        raise ParseError("malformed dataset header", line=1, offset=0)
    if head[1] != FORMAT_VERSION:
        raise ParseError(
            f"unsupported dataset format version {head[1]!r}", line=1, offset=0
        )
    try:
        seed = int(head[2][len("seed="):])
    except ValueError:
        raise ParseError("malformed seed in header", line=1, offset=0) from None

    idx = 1

    def read_section(expect_name):
        nonlocal idx
        if idx >= len(lines):
            raise ParseError(
                f"missing {expect_name!r} section", line=idx + 1, offset=len(raw)
            )
        parts = text(idx).split()
        if len(parts) != 2 or parts[0] != expect_name:
            raise ParseError(
                f"expected {expect_name!r} section header",
                line=idx + 1,
                offset=offsets[idx],
            )
        try:
            count = int(parts[1])
        except ValueError:
            raise ParseError(
                "malformed section count", line=idx + 1, offset=offsets[idx]
            ) from None
        idx += 1
        images = []
        for rec in range(count):
            if idx >= len(lines):
                raise ParseError(
                    f"truncated file: {expect_name} record {rec} missing",
                    line=idx + 1,
                    offset=len(raw),
                )
            parts = text(idx).split()
            if len(parts) != 2:
                raise ParseError(
                    "record must be '<64 bits> <class>'",
                    line=idx + 1,
                    offset=offsets[idx],
                )
            bits, token = parts
            if len(bits) != N_PIXELS or set(bits) - {"0", "1"}:
                raise ParseError(
                    "pixel field must be 64 chars of 0/1",
                    line=idx + 1,
                    offset=offsets[idx],
                )
            if token not in _LABEL_OF:
                raise ParseError(
                    f"unknown class token {token!r}", line=idx + 1, offset=offsets[idx]
                )
            pixels = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
            images.append(Image64(pixels=pixels.copy(), label=_LABEL_OF[token]))
            idx += 1
        return images

    train = read_section("train")
    test = read_section("test")
    if idx != len(lines):
        raise ParseError(
            "trailing content after test section", line=idx + 1, offset=offsets[idx]
        )
    return DatasetSplit(train=train, test=test, seed=seed)
