# SPDX-License-Identifier: Apache-2.0
"""Reader for the PNG-packed CIFAR-10 batches shipped in the `tfjs-cifar10` npm package.

Each batch PNG is 1024 px wide and 10000 rows tall; row r holds image r as
32x32 RGB pixels in HWC order. Labels live in *_lables.json (sic).
Obtain the package with `npm pack tfjs-cifar10 && tar xzf tfjs-cifar10-*.tgz`.
"""
import json
import os

import numpy as np
from PIL import Image


def load_batch(png_path):
    img = np.asarray(Image.open(png_path).convert("RGB"), dtype=np.uint8)
    n = img.shape[0]
    return img.reshape(n, 32, 32, 3).transpose(0, 3, 1, 2).copy()  # N,C,H,W


def load_train(root):
    xs = [load_batch(os.path.join(root, f"data_batch_{i}.png")) for i in range(1, 6)]
    with open(os.path.join(root, "train_lables.json")) as f:
        ys = np.asarray(json.load(f), dtype=np.int64)
    return np.concatenate(xs), ys


def load_test(root):
    x = load_batch(os.path.join(root, "test_batch.png"))
    with open(os.path.join(root, "test_lables.json")) as f:
        y = np.asarray(json.load(f), dtype=np.int64)
    return x, y
