#!/usr/bin/env python3
"""Materialize the lfw-funneled faces as a directory-per-class PGM corpus.

The raw archive lives at
    http://vis-www.cs.umass.edu/lfw/lfw-funneled.tgz
and scikit-learn mirrors it through ``fetch_lfw_people`` (which also applies
the standard crop; with resize=0.5 each face becomes 62 rows x 47 columns of
gray pixels). This script delegates the download/caching to scikit-learn and
writes the images in the layout the CLI expects:

    <out>/<person_name>/<index>.pgm

Usage:
    python scripts/fetch_lfw.py --out data/lfw --min-faces 100

Then, for example:
    PEEP_LFW_ROOT=data/lfw pytest tests/test_acceptance.py -k criterion_7 -s
    peep train data/lfw --imthresh 100 --nc 128 --epsilon 8 --out lfw.peep

Network access is required on the first run only; nothing in the test suite
invokes this script.
"""

import argparse
from pathlib import Path

import numpy as np
from sklearn.datasets import fetch_lfw_people

from peep.ingest import image_from_array, save_image


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="corpus root directory")
    parser.add_argument("--min-faces", type=int, default=100)
    parser.add_argument("--resize", type=float, default=0.5)
    args = parser.parse_args()

    data = fetch_lfw_people(
        min_faces_per_person=args.min_faces, resize=args.resize, funneled=True
    )
    root = Path(args.out)
    counters = {}
    for img, target in zip(data.images, data.target):
        name = data.target_names[target].replace(" ", "_")
        class_dir = root / name
        class_dir.mkdir(parents=True, exist_ok=True)
        idx = counters.get(name, 0)
        counters[name] = idx + 1
        arr = np.clip(img.astype(np.float64) / 255.0 if img.max() > 1.5 else img, 0, 1)
        save_image(image_from_array(arr), class_dir / f"{idx:04d}.pgm")
    total = sum(counters.values())
    print(f"wrote {total} images across {len(counters)} classes under {root}")


if __name__ == "__main__":
    main()
