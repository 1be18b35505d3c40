#!/usr/bin/env python3
"""Write the bundled synthetic face corpus to disk for CLI experiments.

Usage:
    python scripts/make_synthetic_corpus.py --out data/synthetic
    peep train data/synthetic --width 32 --height 32 --nc 16 --imthresh 1 \
        --hidden 128,64 --out model.peep
"""

import argparse

from peep.synthetic import generate_corpus


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--classes", type=int, default=10)
    parser.add_argument("--per-class", type=int, default=20)
    parser.add_argument("--width", type=int, default=32)
    parser.add_argument("--height", type=int, default=32)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    root = generate_corpus(
        args.out,
        seed=args.seed,
        class_sizes=(args.per_class,) * args.classes,
        width=args.width,
        height=args.height,
    )
    print(f"synthetic corpus written under {root}")


if __name__ == "__main__":
    main()
