#!/usr/bin/env python3
"""Write a 12-image 256x256 grayscale PGM suite from scikit-image's bundled data.

The images ship with scikit-image, so no network access is needed. A
manifest with SHA-256 hashes is written next to the images.

    python scripts/make_suite.py data/suite
    python scripts/make_suite.py tests/data --names camera,astronaut,coffee
"""

import argparse
import json
import os

import numpy as np

SUITE = (
    "camera", "astronaut", "coffee", "chelsea", "moon", "coins",
    "text", "page", "brick", "grass", "gravel", "rocket",
)


def load_gray(name, size=256):
    import skimage.data
    from skimage.color import rgb2gray
    from skimage.transform import resize

    img = getattr(skimage.data, name)()
    if img.ndim == 3:
        img = rgb2gray(img[..., :3]) * 255.0
    img = img.astype(np.float64)
    if img.max() <= 1.0:
        img *= 255.0
    # center square crop, then resample
    h, w = img.shape
    s = min(h, w)
    img = img[(h - s) // 2 : (h - s) // 2 + s, (w - s) // 2 : (w - s) // 2 + s]
    img = resize(img, (size, size), anti_aliasing=True, preserve_range=True)
    return np.clip(np.rint(img), 0, 255)


def main(argv=None):
    from nnk_image.imageio import file_sha256, write_pgm

    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("outdir")
    parser.add_argument("--names", default=",".join(SUITE))
    parser.add_argument("--size", type=int, default=256)
    args = parser.parse_args(argv)

    os.makedirs(args.outdir, exist_ok=True)
    manifest = {}
    for name in args.names.split(","):
        path = os.path.join(args.outdir, f"{name}.pgm")
        write_pgm(path, load_gray(name, args.size))
        manifest[name] = {"file": os.path.basename(path), "sha256": file_sha256(path)}
        print(path)
    with open(os.path.join(args.outdir, "manifest.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


if __name__ == "__main__":
    main()
