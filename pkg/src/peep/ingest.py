"""Image loading, resolution normalization, and dataset assembly.

Images are binary PGM ("P5", 1 channel) or PPM ("P6", 3 channels) files.
Pixel integers are divided by the declared maxval, so every pixel lands in
[0, 1]. Flattened vectors are row-major and channel-interleaved:
``index = (y * width + x) * channels + c``.

Datasets follow a directory-per-class layout, ``root/<class_name>/<files>``.
Classes with fewer than ``imthresh`` images are dropped entirely.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import (
    CorruptFile,
    DataError,
    DimensionMismatch,
    EmptyDataset,
    UnsupportedFormat,
)

_WHITESPACE = b" \t\r\n\v\f"


@dataclass(frozen=True)
class Image:
    """A resolution-normalized pixel grid with values in [0, 1]."""

    width: int
    height: int
    channels: int
    pixels: np.ndarray  # float64, length width*height*channels

    def __post_init__(self):
        expected = self.width * self.height * self.channels
        if self.pixels.shape != (expected,):
            raise DimensionMismatch(
                f"pixel vector has shape {self.pixels.shape}, expected ({expected},)"
            )
        lo, hi = float(self.pixels.min()), float(self.pixels.max())
        if lo < 0.0 or hi > 1.0:
            raise DataError(f"pixel values outside [0, 1]: min={lo}, max={hi}")

    def as_array(self) -> np.ndarray:
        """(height, width, channels) view of the pixel vector."""
        return self.pixels.reshape(self.height, self.width, self.channels)


def image_from_array(arr: np.ndarray) -> Image:
    """Build an Image from an (h, w) or (h, w, c) array of values in [0, 1]."""
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3:
        raise DimensionMismatch(f"expected 2-D or 3-D array, got ndim={a.ndim}")
    h, w, c = a.shape
    return Image(width=w, height=h, channels=c, pixels=a.reshape(-1).copy())


def _next_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    """Next whitespace-delimited header token, skipping '#' comments."""
    n = len(buf)
    while pos < n:
        b = buf[pos : pos + 1]
        if b in (b"#",):
            while pos < n and buf[pos : pos + 1] != b"\n":
                pos += 1
        elif b in _WHITESPACE:
            pos += 1
        else:
            break
    start = pos
    while pos < n and buf[pos : pos + 1] not in _WHITESPACE and buf[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise CorruptFile("unexpected end of header")
    return buf[start:pos], pos


def _int_token(buf: bytes, pos: int, what: str) -> tuple[int, int]:
    token, pos = _next_token(buf, pos)
    try:
        return int(token), pos
    except ValueError:
        raise CorruptFile(f"non-integer {what} field: {token!r}") from None


def load_image(path) -> Image:
    """Read a binary PGM (P5) or PPM (P6) file."""
    buf = Path(path).read_bytes()
    magic = buf[:2]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise UnsupportedFormat(f"unsupported magic {magic!r} in {path}")
    width, pos = _int_token(buf, 2, "width")
    height, pos = _int_token(buf, pos, "height")
    maxval, pos = _int_token(buf, pos, "maxval")
    if width <= 0 or height <= 0:
        raise CorruptFile(f"non-positive dimensions {width}x{height} in {path}")
    if maxval <= 0 or maxval > 65535:
        raise CorruptFile(f"maxval {maxval} out of range in {path}")
    # A single whitespace byte separates the maxval from the raster.
    if pos >= len(buf) or buf[pos : pos + 1] not in _WHITESPACE:
        raise CorruptFile(f"missing raster separator in {path}")
    payload = buf[pos + 1 :]
    n_samples = width * height * channels
    if maxval < 256:
        if len(payload) < n_samples:
            raise CorruptFile(f"truncated payload in {path}")
        values = np.frombuffer(payload[:n_samples], dtype=np.uint8).astype(np.float64)
    else:
        if len(payload) < 2 * n_samples:
            raise CorruptFile(f"truncated payload in {path}")
        values = (
            np.frombuffer(payload[: 2 * n_samples], dtype=">u2").astype(np.float64)
        )
    return Image(width=width, height=height, channels=channels, pixels=values / maxval)


def save_image(img: Image, path) -> None:
    """Write an Image as binary PGM (1 channel) or PPM (3 channels), maxval 255."""
    if img.channels == 1:
        magic = b"P5"
    elif img.channels == 3:
        magic = b"P6"
    else:
        raise DataError(f"cannot serialize {img.channels}-channel image")
    raster = np.clip(np.round(img.pixels * 255.0), 0, 255).astype(np.uint8)
    header = magic + f"\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + raster.tobytes())


def _axis_coords(n_src: int, n_dst: int) -> np.ndarray:
    # Corner-aligned sample grid; a single output sample takes the source center.
    if n_dst == 1:
        return np.array([(n_src - 1) / 2.0])
    return np.arange(n_dst) * ((n_src - 1) / (n_dst - 1))


def resize_bilinear(img: Image, irw: int, irh: int) -> Image:
    """Resample to irw x irh with corner-aligned bilinear interpolation."""
    if irw < 1 or irh < 1:
        raise DataError(f"target resolution {irw}x{irh} must be at least 1x1")
    src = img.as_array()
    xs = _axis_coords(img.width, irw)
    ys = _axis_coords(img.height, irh)
    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    x1 = np.minimum(x0 + 1, img.width - 1)
    y1 = np.minimum(y0 + 1, img.height - 1)
    tx = (xs - x0)[None, :, None]
    ty = (ys - y0)[:, None, None]
    top = src[np.ix_(y0, x0)] * (1.0 - tx) + src[np.ix_(y0, x1)] * tx
    bottom = src[np.ix_(y1, x0)] * (1.0 - tx) + src[np.ix_(y1, x1)] * tx
    out = top * (1.0 - ty) + bottom * ty
    # Convex combination: clip only to absorb last-ulp wobble.
    np.clip(out, 0.0, 1.0, out=out)
    return Image(width=irw, height=irh, channels=img.channels, pixels=out.reshape(-1))


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for the end-to-end pipeline.

    epsilon is the per-index privacy budget; values outside (0, 9] are accepted
    with a warning because noise still calibrates correctly, they just fall
    outside the usually recommended range.
    """

    irw: int = 47
    irh: int = 62
    nc: int = 128
    imthresh: int = 100
    epsilon: float = 8.0
    seed: int = 0
    train_fraction: float = 0.7
    hidden_layer_sizes: tuple[int, ...] = (512, 1024, 2014, 1024, 512)
    batch_size: int = 100
    max_epochs: int = 200

    def __post_init__(self):
        if min(self.irw, self.irh, self.nc, self.imthresh) < 1:
            raise DataError("irw, irh, nc and imthresh must all be >= 1")
        if self.epsilon <= 0:
            raise DataError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 < self.train_fraction < 1.0:
            raise DataError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.epsilon > 9:
            warnings.warn(
                f"epsilon={self.epsilon} is outside the recommended range (0, 9]; "
                "proceeding with very weak privacy",
                stacklevel=2,
            )


@dataclass(frozen=True)
class LabeledDataset:
    """Uniformly sized images with integer labels 0..K-1."""

    images: tuple[Image, ...]
    labels: np.ndarray  # int64, one per image
    class_names: tuple[str, ...]
    per_class_counts: np.ndarray = field(default=None)

    def __post_init__(self):
        if not self.images:
            raise EmptyDataset("dataset holds no images")
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))
        if len(self.images) != len(self.labels):
            raise DimensionMismatch("images and labels differ in length")
        if self.labels.min() < 0 or self.labels.max() >= len(self.class_names):
            raise DataError("labels must lie in 0..K-1")
        counts = np.bincount(self.labels, minlength=len(self.class_names))
        if self.per_class_counts is None:
            object.__setattr__(self, "per_class_counts", counts)
        first = self.images[0]
        for img in self.images:
            if (img.width, img.height, img.channels) != (
                first.width,
                first.height,
                first.channels,
            ):
                raise DimensionMismatch("dataset images do not share one resolution")

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def width(self) -> int:
        return self.images[0].width

    @property
    def height(self) -> int:
        return self.images[0].height

    @property
    def channels(self) -> int:
        return self.images[0].channels

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return (self.height, self.width, self.channels)

    def to_matrix(self) -> np.ndarray:
        """(n_images, d) matrix of flattened pixel vectors."""
        return np.stack([img.pixels for img in self.images])

    def subset(self, indices: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(
            images=tuple(self.images[i] for i in indices),
            labels=self.labels[indices].copy(),
            class_names=self.class_names,
        )


def _class_files(class_dir: Path) -> list[Path]:
    return sorted(p for p in class_dir.iterdir() if p.is_file() and not p.name.startswith("."))


def build_dataset(root, cfg: PipelineConfig) -> LabeledDataset:
    """Load root/<class>/<image files>, filter by imthresh, resize to (irw, irh).

    If the requested resolution falls below the smallest width or height found
    in the corpus, both targets are raised to those minima before resizing.
    Class order is lexicographic, file order within a class is lexicographic.
    """
    root = Path(root)
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise EmptyDataset(f"no class subdirectories under {root}")

    survivors: list[tuple[str, list[Image]]] = []
    for class_dir in class_dirs:
        files = _class_files(class_dir)
        if len(files) < cfg.imthresh:
            continue
        survivors.append((class_dir.name, [load_image(f) for f in files]))
    if not survivors:
        raise EmptyDataset(f"no class with at least imthresh={cfg.imthresh} images")

    all_images = [img for _, imgs in survivors for img in imgs]
    channels = all_images[0].channels
    if any(img.channels != channels for img in all_images):
        raise DimensionMismatch("gray and color images cannot be mixed in one dataset")

    w_min = min(img.width for img in all_images)
    h_min = min(img.height for img in all_images)
    irw, irh = cfg.irw, cfg.irh
    if irw < w_min or irh < h_min:
        irw, irh = w_min, h_min

    images: list[Image] = []
    labels: list[int] = []
    for label, (_, imgs) in enumerate(survivors):
        for img in imgs:
            images.append(resize_bilinear(img, irw, irh))
            labels.append(label)
    return LabeledDataset(
        images=tuple(images),
        labels=np.asarray(labels, dtype=np.int64),
        class_names=tuple(name for name, _ in survivors),
    )


def stratified_split(
    dataset: LabeledDataset, train_fraction: float, rng: np.random.Generator
) -> tuple[LabeledDataset, LabeledDataset]:
    """Per-class shuffled split; every class keeps at least one training image."""
    train_idx: list[int] = []
    test_idx: list[int] = []
    for k in range(dataset.n_classes):
        members = np.flatnonzero(dataset.labels == k)
        members = members[rng.permutation(len(members))]
        n_train = int(round(train_fraction * len(members)))
        n_train = min(max(n_train, 1), len(members) - 1) if len(members) > 1 else 1
        train_idx.extend(members[:n_train])
        test_idx.extend(members[n_train:])
    return dataset.subset(np.asarray(sorted(train_idx))), dataset.subset(
        np.asarray(sorted(test_idx))
    )
