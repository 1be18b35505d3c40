"""Deterministic synthetic face-like corpus for demos, benchmarks, and tests.

Each class is a smooth low-frequency pattern; each image is that pattern
cyclically shifted by a few pixels plus mild pixel noise, quantized to 8 bits
the same way the PGM writer would. Classes are well separated in eigenface
space while keeping realistic within-class variation, which is exactly what
the accuracy-versus-budget experiments need at desk scale.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .ingest import Image, LabeledDataset, image_from_array, save_image
from .rng import derive_rng


def _class_prototype(rng: np.random.Generator, height: int, width: int) -> np.ndarray:
    y, x = np.mgrid[0:height, 0:width]
    pattern = np.full((height, width), 0.5)
    for _ in range(4):
        fx, fy = rng.integers(1, 4, size=2)
        phase = rng.uniform(0, 2 * np.pi)
        amp = rng.uniform(0.08, 0.16)
        pattern += amp * np.cos(2 * np.pi * (fx * x / width + fy * y / height) + phase)
    return pattern


def _render(rng: np.random.Generator, proto: np.ndarray) -> np.ndarray:
    dy, dx = rng.integers(-2, 3, size=2)
    img = np.roll(proto, (dy, dx), axis=(0, 1))
    img = img + rng.normal(0.0, 0.04, size=img.shape)
    img = np.clip(img, 0.0, 1.0)
    return np.round(img * 255.0) / 255.0  # match 8-bit PGM quantization


def synthetic_images(
    seed: int = 0,
    class_sizes=(20,) * 10,
    width: int = 32,
    height: int = 32,
) -> list[list[Image]]:
    """Per-class image lists; fully determined by (seed, sizes, resolution)."""
    out = []
    for k, size in enumerate(class_sizes):
        proto_rng = derive_rng(seed, "synthetic-proto", k)
        proto = _class_prototype(proto_rng, height, width)
        images = []
        for i in range(size):
            img_rng = derive_rng(seed, "synthetic-img", k, i)
            images.append(image_from_array(_render(img_rng, proto)))
        out.append(images)
    return out


def synthetic_dataset(
    seed: int = 0,
    class_sizes=(20,) * 10,
    width: int = 32,
    height: int = 32,
) -> LabeledDataset:
    """In-memory dataset equivalent to generating and reloading PGM files."""
    per_class = synthetic_images(seed, class_sizes, width, height)
    images, labels = [], []
    for k, imgs in enumerate(per_class):
        images.extend(imgs)
        labels.extend([k] * len(imgs))
    return LabeledDataset(
        images=tuple(images),
        labels=np.asarray(labels, dtype=np.int64),
        class_names=tuple(f"person_{k:02d}" for k in range(len(per_class))),
    )


def generate_corpus(
    root,
    seed: int = 0,
    class_sizes=(20,) * 10,
    width: int = 32,
    height: int = 32,
) -> Path:
    """Write the corpus as root/person_XX/NNN.pgm and return the root path."""
    root = Path(root)
    per_class = synthetic_images(seed, class_sizes, width, height)
    for k, imgs in enumerate(per_class):
        class_dir = root / f"person_{k:02d}"
        class_dir.mkdir(parents=True, exist_ok=True)
        for i, img in enumerate(imgs):
            save_image(img, class_dir / f"{i:03d}.pgm")
    return root
