#!/usr/bin/env python3
"""Generate the desk-scale handwritten-digit corpus in IDX format.

Upsamples scikit-learn's bundled 8x8 digits set to 28x28, splits it into
disjoint train/test source pools per class, and augments with small integer
shifts so the desk presets have enough samples per class. Output files are
gzip-compressed IDX (image magic 2051, label magic 2049), drop-in compatible
with the loader used for real MNIST.

Usage: python3 tools/make_digits_idx.py [outdir]   (default: data/)
"""
import gzip
import struct
import sys
from pathlib import Path

import numpy as np
from scipy import ndimage
from sklearn.datasets import load_digits

SEED = 20240915
TRAIN_SHIFTS = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]
TEST_SHIFTS = [(0, 0), (1, 1), (-1, -1)]


def upsample(img8):
    img = ndimage.zoom(img8 / 16.0, 28 / 8, order=1)
    img = np.clip(img, 0.0, 1.0)
    return (img * 255.0 + 0.5).astype(np.uint8)


def shifted(img, dr, dc):
    out = np.zeros_like(img)
    rows = slice(max(0, dr), 28 + min(0, dr))
    cols = slice(max(0, dc), 28 + min(0, dc))
    src_rows = slice(max(0, -dr), 28 + min(0, -dr))
    src_cols = slice(max(0, -dc), 28 + min(0, -dc))
    out[rows, cols] = img[src_rows, src_cols]
    return out


def write_idx(path, images, labels):
    images = np.stack(images)
    labels = np.asarray(labels, dtype=np.uint8)
    with gzip.open(path, "wb") as f:
        f.write(struct.pack(">IIII", 2051, len(images), 28, 28))
        f.write(images.tobytes())
    lbl_path = str(path).replace("images", "labels")
    with gzip.open(lbl_path, "wb") as f:
        f.write(struct.pack(">II", 2049, len(labels)))
        f.write(labels.tobytes())
    print(f"wrote {path} / {lbl_path}: {len(images)} samples")


def main():
    outdir = Path(sys.argv[1] if len(sys.argv) > 1 else "data")
    outdir.mkdir(parents=True, exist_ok=True)
    d = load_digits()
    rng = np.random.default_rng(SEED)

    train_imgs, train_lbls, test_imgs, test_lbls = [], [], [], []
    for cls in range(10):
        idx = np.flatnonzero(d.target == cls)
        rng.shuffle(idx)
        cut = (2 * len(idx)) // 3
        for i in idx[:cut]:
            base = upsample(d.images[i])
            for dr, dc in TRAIN_SHIFTS:
                train_imgs.append(shifted(base, dr, dc))
                train_lbls.append(cls)
        for i in idx[cut:]:
            base = upsample(d.images[i])
            for dr, dc in TEST_SHIFTS:
                test_imgs.append(shifted(base, dr, dc))
                test_lbls.append(cls)

    train_order = rng.permutation(len(train_imgs))
    test_order = rng.permutation(len(test_imgs))
    write_idx(outdir / "digits-train-images.idx.gz",
              [train_imgs[i] for i in train_order], [train_lbls[i] for i in train_order])
    write_idx(outdir / "digits-test-images.idx.gz",
              [test_imgs[i] for i in test_order], [test_lbls[i] for i in test_order])


if __name__ == "__main__":
    main()
