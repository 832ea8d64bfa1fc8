#!/usr/bin/env python3
"""Build gzipped IDX files from the 10,000 MNIST digits bundled in the npm `mnist` package.

The package stores each digit class as a flat JSON array of intensities rounded to
three decimals (byte / 255). Three decimals are enough to recover the original bytes
exactly, which this script checks before writing anything.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/make_mnist_subset.py package/src/digits data/mnist-subset
"""

import argparse
import gzip
import json
import pathlib
import random
import struct

ROWS = COLS = 28


def load_digits(digits_dir):
    samples = []
    for label in range(10):
        data = json.loads((digits_dir / f"{label}.json").read_text())["data"]
        if len(data) % (ROWS * COLS):
            raise SystemExit(f"{label}.json: length {len(data)} is not a multiple of 784")
        pixels = []
        for v in data:
            b = round(v * 255)
            if round(b / 255, 3) != round(v, 3) or not 0 <= b <= 255:
                raise SystemExit(f"{label}.json: value {v} does not map back to a byte")
            pixels.append(b)
        for i in range(0, len(pixels), ROWS * COLS):
            samples.append((bytes(pixels[i:i + ROWS * COLS]), label))
    return samples


def write_idx(path_prefix, samples):
    with gzip.GzipFile(f"{path_prefix}-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, len(samples), ROWS, COLS))
        for pixels, _ in samples:
            f.write(pixels)
    with gzip.GzipFile(f"{path_prefix}-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, len(samples)))
        f.write(bytes(label for _, label in samples))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("digits_dir", type=pathlib.Path)
    ap.add_argument("out_dir", type=pathlib.Path)
    ap.add_argument("--train", type=int, default=8000)
    ap.add_argument("--seed", type=int, default=20170101)
    args = ap.parse_args()

    samples = load_digits(args.digits_dir)
    random.Random(args.seed).shuffle(samples)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_idx(args.out_dir / "train", samples[:args.train])
    write_idx(args.out_dir / "test", samples[args.train:])
    print(f"wrote {args.train} train / {len(samples) - args.train} test digits to {args.out_dir}")


if __name__ == "__main__":
    main()
