#!/usr/bin/env python3
"""Write a small MNIST-format IDX file built from scikit-learn's bundled
8x8 handwritten digits.

Each 8x8 digit is bilinearly resized to 20x20 and centered on a 28x28 canvas
with a 4 pixel border, which mirrors the MNIST layout. Used as the default
dataset when the real MNIST files are not available offline.
"""
import argparse
import struct

import numpy as np
from skimage.transform import resize
from sklearn.datasets import load_digits


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/digits28-idx3-ubyte")
    ap.add_argument("--count", type=int, default=200)
    args = ap.parse_args()

    digits = load_digits().images[: args.count] / 16.0
    out = np.zeros((len(digits), 28, 28), dtype=np.uint8)
    for k, img in enumerate(digits):
        big = resize(img, (20, 20), order=1, mode="edge", anti_aliasing=False)
        big = np.clip((big - 0.1) / 0.8, 0.0, 1.0)
        out[k, 4:24, 4:24] = np.round(big * 255).astype(np.uint8)

    with open(args.out, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(out), 28, 28))
        f.write(out.tobytes())


if __name__ == "__main__":
    main()
