"""Dataset manifests: pairing images with truth masks and class labels.

Two layouts: the challenge-style layout (JPEG/PNG images, sibling
``<stem>_segmentation.png`` masks, a ground-truth CSV with one-hot class
columns) and an explicit ``manifest.csv`` with image/truth/label columns.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .raster import BinaryMask, RasterImage, decode_image, decode_mask_png, downsample


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    image_path: Path
    truth_path: Path | None = None
    label: str | None = None


@dataclass
class DatasetManifest:
    entries: list = field(default_factory=list)
    class_names: tuple = ()
    problems: list = field(default_factory=list)  # per-entry issues, non-fatal

    def labeled(self) -> list:
        return [e for e in self.entries if e.label is not None]

    def with_truth(self) -> list:
        return [e for e in self.entries if e.truth_path is not None]


_IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png")


def _read_onehot_csv(path: Path) -> tuple[dict, tuple]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or len(rows[0]) < 2:
        raise DatasetError(f"{path}: class CSV needs an id column plus class columns")
    header = rows[0]
    classes = tuple(h.strip() for h in header[1:])
    labels = {}
    for row in rows[1:]:
        if not row or not row[0].strip():
            continue
        values = [float(v) for v in row[1:]]
        labels[row[0].strip()] = classes[values.index(max(values))]
    return labels, classes


def ingest(root: str | Path, layout: str = "isic") -> DatasetManifest:
    """Build a manifest from a dataset directory.

    layout "isic": pairs IMG.jpg with IMG_segmentation.png, reads labels
    from the first CSV whose header looks one-hot. layout "flat-csv":
    reads manifest.csv (columns image[,truth][,label]) relative to root.
    """
    root = Path(root)
    if not root.exists():
        raise DatasetError(f"dataset root does not exist: {root}")
    if layout == "isic":
        return _ingest_isic(root)
    if layout == "flat-csv":
        return _ingest_flat(root)
    raise DatasetError(f"unknown layout: {layout!r}")


def _ingest_isic(root: Path) -> DatasetManifest:
    manifest = DatasetManifest()
    labels: dict = {}
    for csv_path in sorted(root.glob("*.csv")):
        try:
            labels, classes = _read_onehot_csv(csv_path)
            manifest.class_names = classes
            break
        except (DatasetError, ValueError):
            continue
    images = [
        p
        for p in sorted(root.iterdir())
        if p.suffix.lower() in _IMAGE_SUFFIXES and not p.stem.endswith("_segmentation")
    ]
    for p in images:
        truth = None
        for suffix in (".png",):
            cand = p.with_name(p.stem + "_segmentation" + suffix)
            if cand.exists():
                truth = cand
                break
        if truth is None:
            manifest.problems.append(f"{p.name}: no segmentation mask")
        manifest.entries.append(
            ManifestEntry(image_id=p.stem, image_path=p, truth_path=truth, label=labels.get(p.stem))
        )
    if not manifest.entries:
        raise DatasetError(f"no images found under {root}")
    return manifest


def _ingest_flat(root: Path) -> DatasetManifest:
    csv_path = root if root.suffix == ".csv" else root / "manifest.csv"
    if not csv_path.exists():
        raise DatasetError(f"manifest CSV not found: {csv_path}")
    base = csv_path.parent
    manifest = DatasetManifest()
    classes = []
    with open(csv_path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or "image" not in reader.fieldnames:
            raise DatasetError(f"{csv_path}: need an 'image' column")
        for row in reader:
            img = base / row["image"].strip()
            if not img.exists():
                manifest.problems.append(f"{row['image']}: image missing")
                continue
            truth = None
            if row.get("truth", "").strip():
                tp = base / row["truth"].strip()
                if tp.exists():
                    truth = tp
                else:
                    manifest.problems.append(f"{row['truth']}: truth missing")
            label = row.get("label", "").strip() or None
            if label and label not in classes:
                classes.append(label)
            manifest.entries.append(
                ManifestEntry(image_id=img.stem, image_path=img, truth_path=truth, label=label)
            )
    if not manifest.entries:
        raise DatasetError(f"empty dataset: {csv_path}")
    manifest.class_names = tuple(sorted(classes))
    return manifest


def load_image(entry: ManifestEntry, max_dim: int = 0) -> RasterImage:
    img = decode_image(entry.image_path.read_bytes())
    if max_dim:
        img = downsample(img, max_dim)
    return img


def load_truth(entry: ManifestEntry, max_dim: int = 0) -> BinaryMask:
    if entry.truth_path is None:
        raise DatasetError(f"{entry.image_id}: no truth mask")
    mask = decode_mask_png(entry.truth_path.read_bytes())
    if max_dim and max(mask.width, mask.height) > max_dim:
        import numpy as np
        from PIL import Image

        scale = max_dim / max(mask.width, mask.height)
        nw = max(1, round(mask.width * scale))
        nh = max(1, round(mask.height * scale))
        im = Image.fromarray(mask.bits.astype("uint8") * 255, mode="L").resize(
            (nw, nh), Image.NEAREST
        )
        return BinaryMask(np.asarray(im) > 127)
    return mask
