#!/usr/bin/env python3
"""Convert common handwritten-digit formats to the dataset CSV this project
ingests: one row per image, height*width pixel values in [0, 1] followed by
an integer class label.

Supported inputs:
  libsvm   "label idx:val ..." lines (the usual USPS distribution; values in
           [-1, 1] are rescaled to [0, 1], labels may be 1-based)
  idx      MNIST-style idx image/label file pair

Examples:
  ./convert_digits.py libsvm usps --classes 1,7 --out usps_train.csv
  ./convert_digits.py idx train-images-idx3-ubyte train-labels-idx1-ubyte \
      --classes 1,7 --out mnist_train.csv
"""

import argparse
import struct
import sys


def parse_classes(arg):
    if not arg:
        return None
    return [int(c) for c in arg.split(",")]


def write_csv(path, images, labels, side):
    n_pixels = side * side
    with open(path, "w") as out:
        out.write(",".join(f"p{i}" for i in range(n_pixels)) + ",label\n")
        for pixels, label in zip(images, labels):
            out.write(",".join(f"{p:.6g}" for p in pixels) + f",{label}\n")
    print(f"wrote {len(images)} examples ({side}x{side}) to {path}")


def load_libsvm(path, n_pixels):
    images, labels = [], []
    with open(path) as fh:
        for line in fh:
            fields = line.split()
            if not fields:
                continue
            label = int(float(fields[0]))
            pixels = [0.0] * n_pixels
            for item in fields[1:]:
                idx, val = item.split(":")
                # libsvm indices are 1-based; values are in [-1, 1]
                pixels[int(idx) - 1] = (float(val) + 1.0) / 2.0
            pixels = [min(1.0, max(0.0, p)) for p in pixels]
            images.append(pixels)
            labels.append(label)
    return images, labels


def load_idx(image_path, label_path):
    with open(image_path, "rb") as fh:
        magic, count, rows, cols = struct.unpack(">IIII", fh.read(16))
        if magic != 2051:
            sys.exit(f"{image_path}: not an idx3 image file")
        raw = fh.read(count * rows * cols)
    with open(label_path, "rb") as fh:
        magic, label_count = struct.unpack(">II", fh.read(8))
        if magic != 2049:
            sys.exit(f"{label_path}: not an idx1 label file")
        label_raw = fh.read(label_count)
    if count != label_count:
        sys.exit("image and label counts differ")
    if rows != cols:
        sys.exit("only square images are supported")
    images = []
    n = rows * cols
    for q in range(count):
        images.append([b / 255.0 for b in raw[q * n:(q + 1) * n]])
    return images, list(label_raw), rows


def main():
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("format", choices=["libsvm", "idx"])
    ap.add_argument("inputs", nargs="+", help="input file(s)")
    ap.add_argument("--out", required=True, help="output CSV path")
    ap.add_argument("--side", type=int, default=16,
                    help="image side length for libsvm inputs (default 16)")
    ap.add_argument("--classes", default="",
                    help="comma-separated labels to keep, remapped to 0..k-1 "
                         "in the given order (e.g. 1,7)")
    ap.add_argument("--limit", type=int, default=0,
                    help="keep at most this many examples per class (0 = all)")
    args = ap.parse_args()

    if args.format == "libsvm":
        if len(args.inputs) != 1:
            sys.exit("libsvm mode takes one input file")
        images, labels = load_libsvm(args.inputs[0], args.side * args.side)
        side = args.side
    else:
        if len(args.inputs) != 2:
            sys.exit("idx mode takes an image file and a label file")
        images, labels, side = load_idx(args.inputs[0], args.inputs[1])

    keep = parse_classes(args.classes)
    out_images, out_labels, per_class = [], [], {}
    for pixels, label in zip(images, labels):
        if keep is not None:
            if label not in keep:
                continue
            label = keep.index(label)
        if args.limit and per_class.get(label, 0) >= args.limit:
            continue
        per_class[label] = per_class.get(label, 0) + 1
        out_images.append(pixels)
        out_labels.append(label)

    write_csv(args.out, out_images, out_labels, side)


if __name__ == "__main__":
    main()
