# SPDX-License-Identifier: Apache-2.0
"""Write the first N CIFAR-10 test images as binary PPM files plus a label list."""
import argparse
import os

from cifar_source import load_test


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cifar", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--count", type=int, default=100)
    args = ap.parse_args()

    x, y = load_test(args.cifar)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "labels.txt"), "w") as labels:
        for i in range(args.count):
            name = f"test_{i:03d}.ppm"
            with open(os.path.join(args.out, name), "wb") as f:
                f.write(b"P6\n32 32\n255\n")
                f.write(x[i].transpose(1, 2, 0).tobytes())
            labels.write(f"{name} {y[i]}\n")


if __name__ == "__main__":
    main()
