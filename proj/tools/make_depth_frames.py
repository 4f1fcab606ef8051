#!/usr/bin/env python3
"""Synthesizes the depth-camera demo sequence: a tabletop seen from above
with an ice block sliding east across the north and two fixed mountains."""
import argparse
import pathlib

import numpy as np

TABLE_MM = 1000
HEIGHTS = {"low": 30, "high": 90, "ice": 150}


def frame(w, h, blocks, rng):
    depth = np.full((h, w), TABLE_MM, dtype=np.float64)
    yy, xx = np.mgrid[0:h, 0:w]
    for cls, cx, cy, bw, bh in blocks:
        # cy is measured from the south edge; image rows run north to south.
        inside = (np.abs(xx + 0.5 - cx) <= bw / 2) & (np.abs((h - yy - 0.5) - cy) <= bh / 2)
        depth[inside] = np.minimum(depth[inside], TABLE_MM - HEIGHTS[cls])
    depth += rng.normal(0.0, 2.0, depth.shape)
    dropout = rng.random(depth.shape) < 0.005
    depth[dropout] = 0
    return np.clip(np.rint(depth), 0, 65535).astype(">u2")


def write_pgm(path, img):
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n65535\n".encode())
        f.write(img.tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--width", type=int, default=192)
    ap.add_argument("--height", type=int, default=108)
    ap.add_argument("--frames", type=int, default=6)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    w, h = args.width, args.height
    sx, sy = w / 96.0, h / 54.0  # pixels per grid cell
    for k in range(args.frames):
        x = (30 + 8 * k) * sx
        blocks = [
            ("ice", x, 42 * sy, 12 * sx, 9 * sy),
            ("high", 60 * sx, 22 * sy, 12 * sx, 9 * sy),
            ("low", 40 * sx, 14 * sy, 12 * sx, 9 * sy),
        ]
        write_pgm(out / f"frame_{k:03d}.pgm", frame(w, h, blocks, rng))


if __name__ == "__main__":
    main()
