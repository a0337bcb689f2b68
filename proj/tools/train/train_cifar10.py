# SPDX-License-Identifier: Apache-2.0
"""Train the 9-layer CIFAR-10 reference CNN and export it as an EXAI weight file.

Conv layers carry a ReLU (matching models/cifar10_relu.json). Inputs are RGB
in [0, 1] with no mean/std normalisation, the same mapping the engine applies
to PPM images.
"""
import argparse
import struct
import time

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from cifar_source import load_test, load_train


class Cifar10Net(nn.Module):
    def __init__(self):
        super().__init__()
        self.c1 = nn.Conv2d(3, 32, 3, padding=1)
        self.c2 = nn.Conv2d(32, 32, 3, padding=1)
        self.c3 = nn.Conv2d(32, 64, 3, padding=1)
        self.c4 = nn.Conv2d(64, 64, 3, padding=1)
        self.f1 = nn.Linear(4096, 128)
        self.f2 = nn.Linear(128, 10)

    def forward(self, x):
        x = F.max_pool2d(F.relu(self.c2(F.relu(self.c1(x)))), 2)
        x = F.max_pool2d(F.relu(self.c4(F.relu(self.c3(x)))), 2)
        x = F.relu(self.f1(x.flatten(1)))
        return self.f2(x)


def export(model, path):
    layers = [model.c1, model.c2, model.c3, model.c4, model.f1, model.f2]
    with open(path, "wb") as f:
        f.write(b"EXAI")
        f.write(struct.pack("<HH", 1, len(layers)))
        for layer in layers:
            w = layer.weight.detach().cpu().numpy().astype("<f4")
            b = layer.bias.detach().cpu().numpy().astype("<f4")
            if isinstance(layer, nn.Conv2d):
                f.write(struct.pack("<B4I", 1, *w.shape))
            else:
                f.write(struct.pack("<B2I", 2, *w.shape))
            f.write(w.tobytes(order="C"))
            f.write(b.tobytes())


def evaluate(model, x, y):
    model.eval()
    correct = 0
    with torch.no_grad():
        for i in range(0, len(x), 500):
            xb = torch.from_numpy(x[i:i + 500]).float() / 255.0
            correct += (model(xb).argmax(1).numpy() == y[i:i + 500]).sum()
    return correct / len(x)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cifar", required=True, help="extracted tfjs-cifar10 package dir")
    ap.add_argument("--out", required=True)
    ap.add_argument("--epochs", type=int, default=6)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    torch.set_flush_denormal(True)
    torch.manual_seed(args.seed)
    np.random.seed(args.seed)
    xtr, ytr = load_train(args.cifar)
    xte, yte = load_test(args.cifar)

    model = Cifar10Net()
    opt = torch.optim.Adam(model.parameters(), lr=1e-3, weight_decay=1e-4)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=args.epochs)
    for epoch in range(args.epochs):
        model.train()
        perm = np.random.permutation(len(xtr))
        t0 = time.time()
        for i in range(0, len(perm), 128):
            idx = perm[i:i + 128]
            xb = torch.from_numpy(xtr[idx]).float() / 255.0
            flip = torch.rand(len(idx)) < 0.5
            xb[flip] = xb[flip].flip(3)
            loss = F.cross_entropy(model(xb), torch.from_numpy(ytr[idx]))
            opt.zero_grad()
            loss.backward()
            opt.step()
        sched.step()
        acc = evaluate(model, xte, yte)
        print(f"epoch {epoch + 1}: loss {loss.item():.3f} test acc {acc:.4f} ({time.time() - t0:.0f}s)",
              flush=True)
        export(model, args.out)


if __name__ == "__main__":
    main()
