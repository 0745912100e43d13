#!/usr/bin/env python3
"""Build the bundled 5k MNIST subset as gzipped IDX files.

The 5000-image subset ships inside the mlxtend wheel (mnist_5k.csv.gz, one
row per image: 784 pixel values followed by the label). This script shuffles
it with a fixed seed and writes 4000 training and 1000 test images in the
standard MNIST file layout, so the same loader reads the full dataset too.

    python3 tools/make_mnist_subset.py --wheel mlxtend-*.whl --out data/mnist5k
"""
import argparse
import gzip
import pathlib
import random
import struct
import zipfile

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def write_idx_images(path, images):
    header = struct.pack(">IIII", 0x00000803, len(images), 28, 28)
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header)
        for img in images:
            f.write(bytes(img))


def write_idx_labels(path, labels):
    header = struct.pack(">II", 0x00000801, len(labels))
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header)
        f.write(bytes(labels))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--wheel", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--train", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=20201029)
    args = ap.parse_args()

    raw = gzip.decompress(zipfile.ZipFile(args.wheel).read(MEMBER)).decode()
    rows = []
    for line in raw.strip().splitlines():
        vals = [int(float(v)) for v in line.split(",")]
        rows.append((vals[:-1], vals[-1]))
    random.Random(args.seed).shuffle(rows)

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train, test = rows[: args.train], rows[args.train :]
    write_idx_images(out / "train-images-idx3-ubyte.gz", [r[0] for r in train])
    write_idx_labels(out / "train-labels-idx1-ubyte.gz", [r[1] for r in train])
    write_idx_images(out / "t10k-images-idx3-ubyte.gz", [r[0] for r in test])
    write_idx_labels(out / "t10k-labels-idx1-ubyte.gz", [r[1] for r in test])
    print(f"wrote {len(train)} train / {len(test)} test images to {out}")


if __name__ == "__main__":
    main()
