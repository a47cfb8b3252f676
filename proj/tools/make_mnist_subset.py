#!/usr/bin/env python3
"""Write a 5,000-digit MNIST subset as IDX files.

The digits come from the ``mnist_5k.csv.gz`` table bundled with the mlxtend
wheel (500 images per class). They are shuffled with a fixed seed and split
4,000 / 1,000 into disjoint train and test files:

    train-images-idx3-ubyte  train-labels-idx1-ubyte
    t10k-images-idx3-ubyte   t10k-labels-idx1-ubyte

Usage: make_mnist_subset.py [--wheel PATH] [--out DIR]
If --wheel is omitted the wheel is fetched with ``pip download``.
"""
import argparse
import gzip
import io
import pathlib
import struct
import subprocess
import sys
import tempfile
import zipfile

import numpy as np


def find_wheel(explicit):
    if explicit:
        return pathlib.Path(explicit)
    tmp = pathlib.Path(tempfile.mkdtemp())
    subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps",
                    "mlxtend==0.24.0", "-d", str(tmp)], check=True)
    return next(tmp.glob("mlxtend-*.whl"))


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        f.write(images.astype(np.uint8).tobytes())


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--wheel")
    ap.add_argument("--out", default="data/mnist5k")
    ap.add_argument("--seed", type=int, default=20190701)
    args = ap.parse_args()

    wheel = find_wheel(args.wheel)
    with zipfile.ZipFile(wheel) as z:
        raw = gzip.decompress(z.read("mlxtend/data/data/mnist_5k.csv.gz"))
    table = np.loadtxt(io.BytesIO(raw), delimiter=",")
    images, labels = table[:, :-1], table[:, -1].astype(int)

    order = np.random.default_rng(args.seed).permutation(len(labels))
    images, labels = images[order], labels[order]

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_images(out / "train-images-idx3-ubyte", images[:4000])
    write_labels(out / "train-labels-idx1-ubyte", labels[:4000])
    write_images(out / "t10k-images-idx3-ubyte", images[4000:])
    write_labels(out / "t10k-labels-idx1-ubyte", labels[4000:])
    print(f"wrote {out}: 4000 train / 1000 test")


if __name__ == "__main__":
    main()
