#!/usr/bin/env python3
"""Write a synthetic lesion dataset to disk: images, truth masks, and a
flat-csv manifest whose labels are the generator shape kinds."""

import argparse
import csv
from pathlib import Path

from lesionkit.raster import encode_image_png, encode_mask_png
from lesionkit.synthetic import make_dataset


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--size", type=int, default=96)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    args.out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for sample in make_dataset(args.count, root_seed=args.seed, width=args.size, height=args.size):
        (args.out_dir / f"{sample.image_id}.png").write_bytes(encode_image_png(sample.image))
        (args.out_dir / f"{sample.image_id}_truth.png").write_bytes(encode_mask_png(sample.truth))
        rows.append((f"{sample.image_id}.png", f"{sample.image_id}_truth.png", sample.kind))
    with open(args.out_dir / "manifest.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["image", "truth", "label"])
        writer.writerows(rows)
    print(f"wrote {args.count} images to {args.out_dir}")


if __name__ == "__main__":
    main()
