"""Command-line driver: segment, learn-prototypes, extract, train, cv,
evaluate-seg, serve.

Exit codes: 0 ok, 1 usage error, 2 data/config error, 3 internal error.
Per-image failures are logged and the run continues; results are always
written in manifest order so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .candidates import SOURCE_ORDER
from .cluster import EmptyStoreError, PrototypeStore, learn_prototypes
from .config import ConfigError, PipelineConfig, dump_config, load_config
from .dataset import DatasetError, DatasetManifest, ingest, load_image, load_truth
from .ensemble import segment_image, segmentation_report
from .features import (
    InsufficientClassDataError,
    SchemaError,
    cross_validate,
    fit,
    per_type_accuracy,
    read_descriptor_csv,
    write_descriptor_csv,
)
from .pipeline import derive_seed, extract_bundle
from .raster import DecodeError, encode_mask_png
from .viz import bar_chart_svg, heatmap_svg

_DATA_ERRORS = (
    DatasetError,
    ConfigError,
    DecodeError,
    EmptyStoreError,
    InsufficientClassDataError,
    SchemaError,
    FileNotFoundError,
)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")


def _load_store(path: str | None) -> PrototypeStore | None:
    if not path:
        return None
    return PrototypeStore.from_json(Path(path).read_text())


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "jobs", None) is not None:
        overrides["jobs"] = args.jobs
    if getattr(args, "max_dim", None) is not None:
        overrides["max_dim"] = args.max_dim
    if overrides:
        import dataclasses

        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def _map_ordered(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


# worker functions must be module-level for process pools


def _segment_worker(task):
    entry_id, image_path, truth_path, cfg, store = task
    from .dataset import ManifestEntry

    entry = ManifestEntry(entry_id, Path(image_path), Path(truth_path) if truth_path else None)
    try:
        img = load_image(entry, cfg.max_dim)
        seed = derive_seed(cfg.seed, entry_id)
        res = segment_image(img, store, cfg.threshold, cfg.cluster, cfg.ensemble, seed=seed)
        masks = {src: encode_mask_png(res.type_maps[src].mask) for src in SOURCE_ORDER}
        return (entry_id, encode_mask_png(res.final_mask), masks, None)
    except Exception as exc:
        return (entry_id, None, None, f"{type(exc).__name__}: {exc}")


def _extract_worker(task):
    entry_id, image_path, cfg, store = task
    from .dataset import ManifestEntry

    entry = ManifestEntry(entry_id, Path(image_path))
    try:
        img = load_image(entry, cfg.max_dim)
        seed = derive_seed(cfg.seed, entry_id)
        bundle, _ = extract_bundle(
            img, store, cfg.threshold, cfg.cluster, cfg.ensemble, cfg.features, seed=seed
        )
        return (entry_id, bundle, None)
    except Exception as exc:
        return (entry_id, None, f"{type(exc).__name__}: {exc}")


def cmd_print_config(args) -> int:
    sys.stdout.write(dump_config(_config(args)))
    return 0


def cmd_learn_prototypes(args) -> int:
    cfg = _config(args)
    manifest = ingest(args.data, args.layout)
    pairs = []
    for entry in manifest.with_truth():
        img = load_image(entry, cfg.max_dim)
        truth = load_truth(entry, cfg.max_dim)
        pairs.append((img, truth))
    if not pairs:
        raise DatasetError("no (image, truth) pairs to learn from")
    store = learn_prototypes(pairs, sigma_rgb=cfg.sigma_rgb, seed=cfg.seed, k_range=cfg.cluster.k_range)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(store.to_json() + "\n")
    print(f"learned {len(store)} prototypes -> {out}")
    return 0


def cmd_segment(args) -> int:
    cfg = _config(args)
    manifest = ingest(args.data, args.layout)
    store = _load_store(args.prototypes)
    out_dir = Path(args.out_dir)
    (out_dir / "types").mkdir(parents=True, exist_ok=True)
    tasks = [
        (e.image_id, str(e.image_path), str(e.truth_path) if e.truth_path else None, cfg, store)
        for e in manifest.entries
    ]
    failures = 0
    for entry_id, final_png, type_pngs, err in _map_ordered(_segment_worker, tasks, cfg.jobs):
        if err is not None:
            print(f"[error] {entry_id}: {err}", file=sys.stderr)
            failures += 1
            continue
        (out_dir / f"{entry_id}_segmentation.png").write_bytes(final_png)
        for src, data in type_pngs.items():
            (out_dir / "types" / f"{entry_id}_{src}.png").write_bytes(data)
    print(f"segmented {len(tasks) - failures}/{len(tasks)} images -> {out_dir}")
    return 0


def cmd_evaluate_seg(args) -> int:
    cfg = _config(args)
    manifest = ingest(args.data, args.layout)
    store = _load_store(args.prototypes)
    entries = manifest.with_truth()
    if not entries:
        raise DatasetError("no images with truth masks to evaluate")
    dataset = []
    for e in entries:
        dataset.append((e.image_id, load_image(e, cfg.max_dim), load_truth(e, cfg.max_dim)))
    rep = segmentation_report(
        dataset, store, cfg.threshold, cfg.cluster, cfg.ensemble, seed=cfg.seed
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = rep.to_dict()
    _write_json(out_dir / "segmentation_report.json", payload)

    lines = ["type            accuracy", "-" * 26]
    for src in SOURCE_ORDER:
        lines.append(f"{src:<15s} {rep.per_type[src]:.4f}")
    lines.append(f"{'ensemble':<15s} {rep.ensemble_accuracy:.4f}")
    lines.append(f"{'max-per-image':<15s} {rep.max_per_image_accuracy:.4f}")
    lines.append("")
    lines.append("dominating type counts:")
    for src in SOURCE_ORDER:
        lines.append(f"{src:<15s} {rep.dominating_counts[src]}")
    (out_dir / "segmentation_report.txt").write_text("\n".join(lines) + "\n")

    labels = list(SOURCE_ORDER) + ["Ens", "Max"]
    values = [rep.per_type[s] for s in SOURCE_ORDER] + [
        rep.ensemble_accuracy,
        rep.max_per_image_accuracy,
    ]
    (out_dir / "per_type_accuracy.svg").write_text(
        bar_chart_svg(labels, values, title="Per-type segmentation accuracy")
    )
    print(f"ensemble={rep.ensemble_accuracy:.4f} max_per_image={rep.max_per_image_accuracy:.4f}")
    return 0


def cmd_extract(args) -> int:
    cfg = _config(args)
    manifest = ingest(args.data, args.layout)
    store = _load_store(args.prototypes)
    out_dir = Path(args.out_dir) / "descriptors"
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(e.image_id, str(e.image_path), cfg, store) for e in manifest.entries]
    failures = 0
    for entry_id, bundle, err in _map_ordered(_extract_worker, tasks, cfg.jobs):
        if err is not None:
            print(f"[error] {entry_id}: {err}", file=sys.stderr)
            failures += 1
            continue
        write_descriptor_csv(bundle, out_dir / f"{entry_id}.csv")
    print(f"extracted {len(tasks) - failures}/{len(tasks)} bundles -> {out_dir}")
    return 0


def _labeled_bundles(args, cfg, manifest: DatasetManifest):
    """(bundle, label) pairs, reading descriptor CSVs when available."""
    desc_dir = Path(args.descriptors) if args.descriptors else None
    store = _load_store(args.prototypes)
    out = []
    for e in manifest.labeled():
        csv_path = desc_dir / f"{e.image_id}.csv" if desc_dir else None
        if csv_path is not None and csv_path.exists():
            bundle = read_descriptor_csv(csv_path)
        else:
            img = load_image(e, cfg.max_dim)
            bundle, _ = extract_bundle(
                img, store, cfg.threshold, cfg.cluster, cfg.ensemble, cfg.features,
                seed=derive_seed(cfg.seed, e.image_id),
            )
        out.append((bundle, e.label))
    if not out:
        raise DatasetError("no labeled images")
    return out


def cmd_train(args) -> int:
    cfg = _config(args)
    manifest = ingest(args.data, args.layout)
    data = _labeled_bundles(args, cfg, manifest)
    model = fit(data, cfg.features.p_or_none)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(model.to_json() + "\n")
    print(f"trained on {len(data)} images, {len(model.class_labels)} classes -> {out}")
    return 0


def cmd_cv(args) -> int:
    cfg = _config(args)
    manifest = ingest(args.data, args.layout)
    data = _labeled_bundles(args, cfg, manifest)
    folds = args.folds if args.folds else cfg.features.folds
    res = cross_validate(data, folds=folds, p_components=cfg.features.p_or_none)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "accuracy": res.accuracy,
        "folds": folds,
        "class_labels": list(res.class_labels),
        "confusion": res.confusion.tolist(),
    }
    if args.per_type:
        payload["per_type_accuracy"] = per_type_accuracy(data, folds, cfg.features.p_or_none)
    _write_json(out_dir / "cv.json", payload)
    with open(out_dir / "confusion.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["true\\pred"] + list(res.class_labels))
        for lab, row in zip(res.class_labels, res.confusion):
            writer.writerow([lab] + [int(v) for v in row])
    (out_dir / "confusion.svg").write_text(
        heatmap_svg(res.confusion, list(res.class_labels), title="Confusion matrix")
    )
    (out_dir / "confusion_zero_diagonal.svg").write_text(
        heatmap_svg(
            res.confusion, list(res.class_labels),
            title="Confusion matrix (diagonal hidden)", zero_diagonal=True,
        )
    )
    print(f"cv accuracy: {res.accuracy:.4f} ({folds} folds, {len(data)} images)")
    return 0


def cmd_serve(args) -> int:
    from .server import run_server

    cfg = _config(args)
    manifest = ingest(args.data, args.layout)
    store = _load_store(args.prototypes)
    run_server(
        manifest,
        cfg,
        store,
        host=args.host,
        port=args.port,
        selections_path=Path(args.selections),
        frontend_dir=Path(args.frontend) if args.frontend else None,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lesionkit", description=__doc__)
    parser.add_argument("--config", help="TOML config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--print-config", action="store_true", help="dump effective config and exit")
    sub = parser.add_subparsers(dest="command")

    def add(name, func, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(func=func)
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument("--max-dim", type=int, default=None, dest="max_dim")
        p.add_argument("--layout", choices=("isic", "flat-csv"), default="flat-csv")
        return p

    p = add("learn-prototypes", cmd_learn_prototypes, help="harvest melanoma RGB prototypes")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)

    p = add("segment", cmd_segment, help="write final + per-type masks")
    p.add_argument("--data", required=True)
    p.add_argument("--prototypes")
    p.add_argument("--out-dir", required=True, dest="out_dir")

    p = add("evaluate-seg", cmd_evaluate_seg, help="per-type and ensemble accuracy report")
    p.add_argument("--data", required=True)
    p.add_argument("--prototypes")
    p.add_argument("--out-dir", required=True, dest="out_dir")

    p = add("extract", cmd_extract, help="write descriptor CSVs")
    p.add_argument("--data", required=True)
    p.add_argument("--prototypes")
    p.add_argument("--out-dir", required=True, dest="out_dir")

    p = add("train", cmd_train, help="fit the PCA+LDA model")
    p.add_argument("--data", required=True)
    p.add_argument("--prototypes")
    p.add_argument("--descriptors", help="directory of descriptor CSVs from extract")
    p.add_argument("--out", required=True)

    p = add("cv", cmd_cv, help="cross-validated accuracy + confusion matrix")
    p.add_argument("--data", required=True)
    p.add_argument("--prototypes")
    p.add_argument("--descriptors")
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--per-type", action="store_true", dest="per_type")
    p.add_argument("--out-dir", required=True, dest="out_dir")

    p = add("serve", cmd_serve, help="HTTP server for the review gallery")
    p.add_argument("--data", required=True)
    p.add_argument("--prototypes")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8754)
    p.add_argument("--selections", default="selections.json")
    p.add_argument("--frontend", help="directory with the built review UI")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if getattr(args, "print_config", False) and getattr(args, "command", None) is None:
        return cmd_print_config(args)
    if getattr(args, "command", None) is None:
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
