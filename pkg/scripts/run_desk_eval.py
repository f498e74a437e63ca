#!/usr/bin/env python3
"""Desk-scale segmentation experiment on the bundled synthetic generator:
learn prototypes on held-out draws, then report per-type / ensemble /
best-per-image accuracy, sweeping the fusion vote threshold."""

import argparse

from lesionkit.candidates import SOURCE_ORDER
from lesionkit.cluster import learn_prototypes
from lesionkit.ensemble import EnsembleConfig, segmentation_report
from lesionkit.synthetic import make_dataset


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--images", type=int, default=200)
    ap.add_argument("--train", type=int, default=10, help="held-out draws for prototype learning")
    ap.add_argument("--size", type=int, default=96)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--votes", type=int, nargs="+", default=[2, 3, 4, 5])
    args = ap.parse_args()

    train = make_dataset(args.train, root_seed=args.seed + 1000, width=args.size, height=args.size)
    store = learn_prototypes([(s.image, s.truth) for s in train], seed=0)
    print(f"{len(store)} prototypes from {args.train} held-out draws")

    samples = make_dataset(args.images, root_seed=args.seed, width=args.size, height=args.size)
    data = [(s.image_id, s.image, s.truth) for s in samples]

    header = " | ".join(f"{s:>11s}" for s in SOURCE_ORDER)
    print(f"{'vote':>4s} | {header} | {'ensemble':>8s} | {'max/img':>8s}")
    for vote in args.votes:
        rep = segmentation_report(
            data, store, ensemble_cfg=EnsembleConfig(vote_threshold=vote), seed=1
        )
        row = " | ".join(f"{rep.per_type[s]:11.3f}" for s in SOURCE_ORDER)
        print(f"{vote:>4d} | {row} | {rep.ensemble_accuracy:8.3f} | {rep.max_per_image_accuracy:8.3f}")
        counts = ", ".join(f"{s}={rep.dominating_counts[s]}" for s in SOURCE_ORDER)
        print(f"     dominating: {counts}")


if __name__ == "__main__":
    main()
