"""Histogram featurization of descriptor lists and the PCA+LDA classifier.

Every image yields a DescriptorBundle: one row matrix per descriptor type
(schema below, 280 attributes across 32 lists). Each attribute becomes a
12-bin histogram over edges learned from the training split; concatenated
histograms form the feature vector (length 3360 with every type enabled).
A PCA projection followed by a regularized linear discriminant separates
the classes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

SCHEMA_VERSION = "lesionkit-descriptors-v1"

HISTOGRAM_BINS = 12

# (type name, attribute count); order is the canonical feature layout
SCHEMA: tuple = (
    ("region-boundary", 8),
    ("region-distribution", 8),
    ("region-appearance", 9),
    ("region-sym-short", 6),
    ("region-sym-long", 6),
    ("region-sym-fork", 4),
    ("region-sym-peak", 3),
    ("contour-ridge-s1", 15),
    ("contour-ridge-s2", 15),
    ("contour-river-s1", 15),
    ("contour-river-s2", 15),
    ("contour-edge-s1", 15),
    ("contour-edge-s2", 15),
    ("group-clot", 19),
    ("group-bundle-tight", 19),
    ("group-bundle-loose", 19),
    ("dog-distribution", 8),
    ("dog-sym-short", 6),
    ("dog-sym-long", 6),
    ("dog-sym-fork", 4),
    ("dog-sym-peak", 3),
    ("edgeband-distribution", 8),
    ("edgeband-sym-short", 6),
    ("edgeband-sym-long", 6),
    ("edgeband-sym-fork", 4),
    ("edgeband-sym-peak", 3),
    ("lesion-boundary", 8),
    ("lesion-distribution", 8),
    ("lesion-sym-short", 6),
    ("lesion-sym-long", 6),
    ("lesion-sym-fork", 4),
    ("lesion-sym-peak", 3),
)

ARITY = dict(SCHEMA)
TOTAL_ATTRIBUTES = sum(a for _, a in SCHEMA)  # 280
FEATURE_LENGTH = TOTAL_ATTRIBUTES * HISTOGRAM_BINS  # 3360


class SchemaError(ValueError):
    """Raised on arity mismatches against the descriptor schema."""


class InsufficientClassDataError(ValueError):
    """Raised when a class has too few samples to fit or fold."""


@dataclass
class DescriptorBundle:
    """Per-type descriptor row matrices for one image."""

    lists: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for name, arity in SCHEMA:
            rows = self.lists.get(name)
            if rows is None:
                clean[name] = np.empty((0, arity), dtype=np.float64)
                continue
            arr = np.asarray(rows, dtype=np.float64)
            if arr.size == 0:
                arr = np.empty((0, arity))
            if arr.ndim == 1 and arr.shape[0] == arity:
                arr = arr.reshape(1, arity)
            if arr.ndim != 2 or arr.shape[1] != arity:
                raise SchemaError(f"{name}: expected arity {arity}, got shape {np.shape(rows)}")
            clean[name] = arr
        unknown = set(self.lists) - set(ARITY)
        if unknown:
            raise SchemaError(f"unknown descriptor types: {sorted(unknown)}")
        self.lists = clean

    def rows(self, name: str) -> np.ndarray:
        return self.lists[name]

    def total_rows(self) -> int:
        return sum(len(v) for v in self.lists.values())


def attribute_histogram(values, edges) -> np.ndarray:
    """12-bin histogram over explicit edges, normalized to unit sum.

    Values below the first or above the last edge land in the end bins;
    an empty value list gives the all-zero histogram.
    """
    edges = np.asarray(edges, dtype=np.float64)
    if len(edges) != HISTOGRAM_BINS + 1:
        raise ValueError(f"need {HISTOGRAM_BINS + 1} edges")
    if np.any(np.diff(edges) <= 0):
        raise ValueError("edges must be strictly increasing")
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        return np.zeros(HISTOGRAM_BINS)
    clipped = np.clip(v, edges[0], edges[-1])
    counts, _ = np.histogram(clipped, bins=edges)
    return counts / counts.sum()


def learn_edges(bundles: list[DescriptorBundle]) -> dict:
    """Per-attribute bin edges from the 1st..99th percentile of training data.

    Attributes never observed get a unit span so featurize stays defined.
    """
    edges: dict = {}
    for name, arity in SCHEMA:
        stacked = [b.rows(name) for b in bundles if len(b.rows(name))]
        pooled = np.vstack(stacked) if stacked else np.empty((0, arity))
        e = np.empty((arity, HISTOGRAM_BINS + 1))
        for a in range(arity):
            col = pooled[:, a] if len(pooled) else np.empty(0)
            if col.size == 0:
                lo, hi = 0.0, 1.0
            else:
                lo, hi = float(np.percentile(col, 1)), float(np.percentile(col, 99))
                if hi - lo < 1e-12:
                    lo, hi = lo - 0.5, hi + 0.5
            e[a] = np.linspace(lo, hi, HISTOGRAM_BINS + 1)
        edges[name] = e
    return edges


def featurize(bundle: DescriptorBundle, edges: dict, types: tuple | None = None) -> np.ndarray:
    """Concatenated per-attribute histograms in canonical schema order.

    ``types`` restricts the vector to a subset of descriptor types (used
    by the per-type accuracy analysis); None means all of them.
    """
    chosen = [t for t, _ in SCHEMA] if types is None else list(types)
    parts = []
    for name in chosen:
        if name not in ARITY:
            raise SchemaError(f"unknown descriptor type: {name}")
        rows = bundle.rows(name)
        e = edges[name]
        for a in range(ARITY[name]):
            parts.append(attribute_histogram(rows[:, a] if len(rows) else (), e[a]))
    return np.concatenate(parts)


@dataclass
class TrainedModel:
    """Bin edges + PCA basis + LDA discriminant, all from one training split."""

    edges: dict  # type -> (arity, 13) array
    types: tuple  # descriptor types included in the vector
    mean: np.ndarray  # feature mean, (D,)
    basis: np.ndarray  # (P, D) orthonormal rows
    class_labels: tuple
    class_means: np.ndarray  # (C, P) in projected space
    inv_scatter: np.ndarray  # (P, P)

    def project(self, v: np.ndarray) -> np.ndarray:
        return (v - self.mean) @ self.basis.T

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": SCHEMA_VERSION,
                "types": list(self.types),
                "edges": {k: v.tolist() for k, v in sorted(self.edges.items())},
                "mean": self.mean.tolist(),
                "basis": self.basis.tolist(),
                "class_labels": list(self.class_labels),
                "class_means": self.class_means.tolist(),
                "inv_scatter": self.inv_scatter.tolist(),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "TrainedModel":
        d = json.loads(text)
        if d.get("schema") != SCHEMA_VERSION:
            raise SchemaError(f"model schema {d.get('schema')!r} != {SCHEMA_VERSION!r}")
        return cls(
            edges={k: np.array(v) for k, v in d["edges"].items()},
            types=tuple(d["types"]),
            mean=np.array(d["mean"]),
            basis=np.array(d["basis"]),
            class_labels=tuple(d["class_labels"]),
            class_means=np.array(d["class_means"]),
            inv_scatter=np.array(d["inv_scatter"]),
        )


def _pca(x: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-p principal axes of the row-sample matrix x, deterministic signs."""
    mean = x.mean(axis=0)
    centered = x - mean
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    p = min(p, vt.shape[0])
    basis = vt[:p]
    for i in range(len(basis)):  # fix sign: largest-magnitude entry positive
        j = int(np.argmax(np.abs(basis[i])))
        if basis[i, j] < 0:
            basis[i] = -basis[i]
    return mean, basis


def fit_vectors(
    x: np.ndarray,
    labels: list[str],
    p_components: int | None = None,
    edges: dict | None = None,
    types: tuple = (),
) -> TrainedModel:
    """PCA + pooled-scatter discriminant on raw feature vectors.

    The pooled within-class scatter is normalized by the sample count, so
    duplicating every training row reproduces the identical model.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(labels)
    if len(x) == 0:
        raise InsufficientClassDataError("empty training set")
    class_labels = sorted(set(labels))
    if len(class_labels) < 2:
        raise InsufficientClassDataError("need at least 2 classes")
    thin = [lab for lab in class_labels if int((y == lab).sum()) < 2]
    if thin:
        raise InsufficientClassDataError(f"classes with fewer than 2 samples: {thin}")

    if p_components is None:
        p_components = min(64, len(x) - len(class_labels))
    p_components = max(1, min(p_components, len(x) - 1, x.shape[1]))
    mean, basis = _pca(x, p_components)
    z = (x - mean) @ basis.T
    p_eff = z.shape[1]

    class_means = np.array([z[y == lab].mean(axis=0) for lab in class_labels])
    scatter = np.zeros((p_eff, p_eff))
    for i, lab in enumerate(class_labels):
        d = z[y == lab] - class_means[i]
        scatter += d.T @ d
    scatter /= len(x)
    ridge = 1e-6 * np.trace(scatter) / p_eff if np.trace(scatter) > 0 else 1e-6
    inv_scatter = np.linalg.inv(scatter + ridge * np.eye(p_eff))
    return TrainedModel(
        edges=edges if edges is not None else {},
        types=types,
        mean=mean,
        basis=basis,
        class_labels=tuple(class_labels),
        class_means=class_means,
        inv_scatter=inv_scatter,
    )


def fit(
    train: list[tuple[DescriptorBundle, str]],
    p_components: int | None = None,
    types: tuple | None = None,
) -> TrainedModel:
    """Learn edges, PCA and the discriminant from labeled bundles."""
    if not train:
        raise InsufficientClassDataError("empty training set")
    bundles = [b for b, _ in train]
    edges = learn_edges(bundles)
    chosen = tuple(t for t, _ in SCHEMA) if types is None else tuple(types)
    x = np.array([featurize(b, edges, chosen) for b in bundles])
    return fit_vectors(x, [lab for _, lab in train], p_components, edges=edges, types=chosen)


def discriminant_scores(model: TrainedModel, v: np.ndarray) -> np.ndarray:
    """Equal-prior linear discriminant scores per class."""
    z = model.project(v)
    w = model.inv_scatter
    scores = np.empty(len(model.class_labels))
    for i, mu in enumerate(model.class_means):
        scores[i] = z @ w @ mu - 0.5 * mu @ w @ mu
    return scores


def predict(model: TrainedModel, bundle_or_vector) -> tuple[str, dict]:
    """Class label plus per-class scores; ties go to the lowest label index."""
    if isinstance(bundle_or_vector, DescriptorBundle):
        if not model.types:
            raise SchemaError("model was fitted on raw vectors, not descriptor bundles")
        v = featurize(bundle_or_vector, model.edges, model.types)
    else:
        v = np.asarray(bundle_or_vector, dtype=np.float64)
        if v.shape != model.mean.shape:
            raise SchemaError(f"expected vector of length {model.mean.shape[0]}, got {v.shape}")
    scores = discriminant_scores(model, v)
    best = int(np.argmax(scores))  # argmax returns the first (lowest) index on ties
    return model.class_labels[best], dict(zip(model.class_labels, scores.tolist()))


def stratified_folds(labels: list[str], folds: int) -> list[int]:
    """Deterministic fold index per sample: round-robin inside each class."""
    seen: dict = {}
    out = []
    for lab in labels:
        k = seen.get(lab, 0)
        out.append(k % folds)
        seen[lab] = k + 1
    return out


@dataclass
class CVResult:
    accuracy: float
    class_labels: tuple
    confusion: np.ndarray  # rows true, cols predicted

    def zero_diagonal(self) -> np.ndarray:
        c = self.confusion.copy()
        np.fill_diagonal(c, 0)
        return c


def cross_validate(
    data: list[tuple[DescriptorBundle, str]],
    folds: int = 5,
    p_components: int | None = None,
    types: tuple | None = None,
) -> CVResult:
    """Stratified k-fold accuracy with per-fold refits (edges, PCA, LDA)."""
    if not data:
        raise InsufficientClassDataError("empty dataset")
    labels = sorted({lab for _, lab in data})
    counts = {lab: sum(1 for _, l in data if l == lab) for lab in labels}
    thin = [lab for lab, c in counts.items() if c < folds]
    if thin:
        raise InsufficientClassDataError(f"classes with fewer than {folds} samples: {thin}")
    fold_of = stratified_folds([lab for _, lab in data], folds)
    confusion = np.zeros((len(labels), len(labels)), dtype=np.int64)
    idx = {lab: i for i, lab in enumerate(labels)}
    correct = 0
    for f in range(folds):
        train = [data[i] for i in range(len(data)) if fold_of[i] != f]
        test = [data[i] for i in range(len(data)) if fold_of[i] == f]
        model = fit(train, p_components, types)
        for bundle, lab in test:
            got, _ = predict(model, bundle)
            confusion[idx[lab], idx[got]] += 1
            correct += got == lab
    return CVResult(accuracy=correct / len(data), class_labels=tuple(labels), confusion=confusion)


def per_type_accuracy(
    data: list[tuple[DescriptorBundle, str]],
    folds: int = 5,
    p_components: int | None = None,
) -> dict:
    """cross_validate restricted to one descriptor type at a time."""
    return {
        name: cross_validate(data, folds, p_components, types=(name,)).accuracy
        for name, _ in SCHEMA
    }


MAX_ARITY = max(a for _, a in SCHEMA)


def write_descriptor_csv(bundle: DescriptorBundle, path) -> None:
    """One CSV per image: schema version line, then one row per descriptor."""
    import csv as _csv

    with open(path, "w", newline="") as f:
        f.write(f"# {SCHEMA_VERSION}\n")
        writer = _csv.writer(f)
        writer.writerow(["descriptor_type", "row_index"] + [f"attr_{i}" for i in range(MAX_ARITY)])
        for name, arity in SCHEMA:
            for i, row in enumerate(bundle.rows(name)):
                cells = [repr(float(v)) for v in row] + [""] * (MAX_ARITY - arity)
                writer.writerow([name, i] + cells)


def read_descriptor_csv(path) -> DescriptorBundle:
    import csv as _csv

    with open(path, newline="") as f:
        version = f.readline().strip()
        if version != f"# {SCHEMA_VERSION}":
            raise SchemaError(f"{path}: unknown descriptor schema {version!r}")
        reader = _csv.reader(f)
        header = next(reader)
        if header[:2] != ["descriptor_type", "row_index"]:
            raise SchemaError(f"{path}: malformed header")
        lists: dict = {}
        for row in reader:
            if not row:
                continue
            name = row[0]
            if name not in ARITY:
                raise SchemaError(f"{path}: unknown descriptor type {name!r}")
            arity = ARITY[name]
            values = [float(v) for v in row[2 : 2 + arity]]
            lists.setdefault(name, []).append(values)
    return DescriptorBundle(lists=lists)
