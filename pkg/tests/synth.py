"""Synthetic ultrasound-like scans: a bright textured block on a dark noisy
background, so the segmentation stage finds one solid component to crop."""

import csv

import numpy as np

from thyrotex.images import write_pgm

TEXTURE_KINDS = ("smooth", "checker")


def textured_scan(rng, kind, size=256):
    """One synthetic scan. ``smooth`` blocks carry a diagonal gradient,
    ``checker`` blocks an 8-pixel checkerboard; both sit well above the
    background intensities so Otsu isolates them."""
    img = rng.integers(8, 32, size=(size, size), dtype=np.int64)
    block = (size * 5) // 8
    r0 = int(rng.integers(8, size - block - 7))
    c0 = int(rng.integers(8, size - block - 7))
    yy, xx = np.mgrid[0:block, 0:block]
    if kind == "smooth":
        tex = 130.0 + 90.0 * (xx + yy) / max(2 * block - 2, 1)
    elif kind == "checker":
        tex = np.where(((yy // 8) + (xx // 8)) % 2 == 0, 125.0, 225.0)
    else:
        raise ValueError("unknown texture kind %r" % (kind,))
    tex = tex + rng.normal(0.0, 6.0, size=tex.shape)
    img[r0 : r0 + block, c0 : c0 + block] = np.clip(tex, 120, 255).astype(np.int64)
    return img.astype(np.uint8)


def write_dataset(root, rng, n_benign=6, n_malignant=6, size=256):
    """Write scans plus a manifest under *root*; returns the manifest path.

    Benign entries use smooth blocks (TIRADS 2/3), malignant ones checker
    blocks (TIRADS 4a/4b/4c/5, cycling).
    """
    root.mkdir(parents=True, exist_ok=True)
    (root / "scans").mkdir(exist_ok=True)
    rows = []
    for i in range(n_benign):
        name = "scans/benign_%03d.pgm" % i
        write_pgm(root / name, textured_scan(rng, "smooth", size))
        rows.append((name, "benign", ("2", "3")[i % 2]))
    for i in range(n_malignant):
        name = "scans/malig_%03d.pgm" % i
        write_pgm(root / name, textured_scan(rng, "checker", size))
        rows.append((name, "malignant", ("4a", "4b", "4c", "5")[i % 4]))
    manifest = root / "manifest.csv"
    with open(manifest, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path", "diagnosis", "tirads"])
        writer.writerows(rows)
    return manifest
