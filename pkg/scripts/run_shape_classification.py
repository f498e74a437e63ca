#!/usr/bin/env python3
"""Structural-descriptor classification experiment: extract the full
descriptor bundle for synthetic lesions and cross-validate the shape kind
(disk / blob / annulus) with the histogram + PCA/LDA classifier."""

import argparse

from lesionkit.cluster import learn_prototypes
from lesionkit.features import cross_validate, per_type_accuracy
from lesionkit.pipeline import extract_bundle
from lesionkit.synthetic import make_dataset


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--images", type=int, default=60)
    ap.add_argument("--size", type=int, default=96)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--pca", type=int, default=16)
    ap.add_argument("--folds", type=int, default=5)
    ap.add_argument("--per-type", action="store_true")
    args = ap.parse_args()

    train = make_dataset(8, root_seed=args.seed + 500, width=args.size, height=args.size)
    store = learn_prototypes([(s.image, s.truth) for s in train], seed=0)

    samples = make_dataset(args.images, root_seed=args.seed, width=args.size, height=args.size)
    data = []
    for i, s in enumerate(samples):
        bundle, _ = extract_bundle(s.image, store, seed=args.seed)
        data.append((bundle, s.kind))
        if (i + 1) % 10 == 0:
            print(f"extracted {i + 1}/{len(samples)}")

    res = cross_validate(data, folds=args.folds, p_components=args.pca)
    print(f"\n{args.folds}-fold accuracy over {len(data)} images: {res.accuracy:.3f}")
    print("classes:", ", ".join(res.class_labels))
    print("confusion (rows true, cols predicted):")
    for lab, row in zip(res.class_labels, res.confusion):
        print(f"  {lab:>8s}: {list(row)}")

    if args.per_type:
        print("\nper-descriptor-type accuracy:")
        for name, acc in sorted(per_type_accuracy(data, args.folds, args.pca).items()):
            print(f"  {name:<24s} {acc:.3f}")


if __name__ == "__main__":
    main()
