"""HTTP serve mode for the human review gallery.

Serves the per-image candidate masks (7 types + ensemble) as JSON plus
pre-composited overlay PNGs, persists the reviewer's choice per image to a
sidecar selections file, and recomputes the segmentation report honoring
those selections. Dataset files are never written, only read.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .candidates import SOURCE_ORDER
from .config import PipelineConfig
from .dataset import DatasetManifest, load_image, load_truth
from .ensemble import UndefinedMetricError, evaluate_mask, segment_image
from .pipeline import derive_seed
from .raster import BinaryMask, RasterImage, encode_image_png, encode_mask_png

CARD_TYPES = SOURCE_ORDER + ("ensemble",)

_OVERLAY_COLOR = np.array([235, 70, 45], dtype=np.float64)


def overlay_png(img: RasterImage, mask: BinaryMask) -> bytes:
    """Mask alpha-blended over the original, plus nothing else: the client
    does no image math."""
    px = img.pixels.astype(np.float64).copy()
    px[mask.bits] = 0.45 * px[mask.bits] + 0.55 * _OVERLAY_COLOR
    return encode_image_png(RasterImage(px.astype(np.uint8)))


@dataclass
class _ImageState:
    image: RasterImage
    truth: BinaryMask | None
    masks: dict  # card type -> BinaryMask
    confidences: dict  # source -> float


class ReviewState:
    """Lazily segmented dataset plus the persisted selections."""

    def __init__(self, manifest: DatasetManifest, cfg: PipelineConfig, store, selections_path: Path):
        self.manifest = manifest
        self.cfg = cfg
        self.store = store
        self.selections_path = selections_path
        self.entries = {e.image_id: e for e in manifest.entries}
        self.order = [e.image_id for e in manifest.entries]
        self._cache: dict = {}
        self._lock = threading.Lock()

    def image_state(self, image_id: str) -> _ImageState:
        with self._lock:
            if image_id in self._cache:
                return self._cache[image_id]
        entry = self.entries[image_id]
        img = load_image(entry, self.cfg.max_dim)
        truth = load_truth(entry, self.cfg.max_dim) if entry.truth_path else None
        res = segment_image(
            img,
            self.store,
            self.cfg.threshold,
            self.cfg.cluster,
            self.cfg.ensemble,
            seed=derive_seed(self.cfg.seed, image_id),
        )
        masks = {src: res.type_maps[src].mask for src in SOURCE_ORDER}
        masks["ensemble"] = res.final_mask
        confidences = {}
        for src in SOURCE_ORDER:
            mine = [c.confidence for c in res.candidates if c.source == src]
            confidences[src] = max(mine) if mine else 0.0
        state = _ImageState(image=img, truth=truth, masks=masks, confidences=confidences)
        with self._lock:
            self._cache[image_id] = state
        return state

    # selections -----------------------------------------------------------

    def read_selections(self) -> dict:
        if self.selections_path.exists():
            return json.loads(self.selections_path.read_text())
        return {}

    def write_selection(self, image_id: str, card_type: str, user: str) -> dict:
        with self._lock:
            selections = self.read_selections()
            selections[image_id] = {
                "type": card_type,
                "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                "user": user,
            }
            tmp = self.selections_path.with_suffix(".tmp")
            tmp.write_text(json.dumps(selections, sort_keys=True, indent=1) + "\n")
            tmp.replace(self.selections_path)
        return selections[image_id]

    # payloads --------------------------------------------------------------

    def images_payload(self) -> dict:
        return {
            "images": [
                {
                    "id": e.image_id,
                    "has_truth": e.truth_path is not None,
                    "label": e.label,
                }
                for e in self.manifest.entries
            ]
        }

    def candidates_payload(self, image_id: str) -> dict:
        state = self.image_state(image_id)
        selections = self.read_selections()
        cards = []
        for t in CARD_TYPES:
            mask = state.masks[t]
            available = bool(mask.bits.any())
            card = {
                "type": t,
                "available": available,
                "confidence": state.confidences.get(t),
                "mask": f"/api/images/{image_id}/mask/{t}.png",
                "overlay": f"/api/images/{image_id}/overlay/{t}.png",
            }
            if state.truth is not None:
                try:
                    card["accuracy"] = evaluate_mask(mask, state.truth)
                except UndefinedMetricError:
                    card["accuracy"] = None
            cards.append(card)
        return {
            "image": image_id,
            "original": f"/api/images/{image_id}/original.png",
            "cards": cards,
            "selected": selections.get(image_id, {}).get("type"),
        }

    def report_payload(self) -> dict:
        selections = self.read_selections()
        per_type: dict = {s: [] for s in SOURCE_ORDER}
        ens, max_pi, human = [], [], []
        dominating = {s: 0 for s in SOURCE_ORDER}
        evaluated = []
        for image_id in self.order:
            state = self.image_state(image_id)
            if state.truth is None:
                continue
            try:
                accs = {s: evaluate_mask(state.masks[s], state.truth) for s in SOURCE_ORDER}
                e = evaluate_mask(state.masks["ensemble"], state.truth)
            except UndefinedMetricError:
                continue
            for s in SOURCE_ORDER:
                per_type[s].append(accs[s])
            ens.append(e)
            max_pi.append(max(e, max(accs.values())))
            chosen = selections.get(image_id, {}).get("type")
            if chosen == "ensemble" or chosen is None:
                human.append(e)
            else:
                human.append(accs[chosen])
            best = max(SOURCE_ORDER, key=lambda s: (accs[s], -SOURCE_ORDER.index(s)))
            dominating[best] += 1
            evaluated.append(image_id)
        if not evaluated:
            return {"images": [], "note": "no truth masks available"}
        return {
            "images": evaluated,
            "per_type": {s: float(np.mean(per_type[s])) for s in SOURCE_ORDER},
            "ensemble": float(np.mean(ens)),
            "max_per_image": float(np.mean(max_pi)),
            "human_selected": float(np.mean(human)),
            "dominating_counts": dominating,
            "selections": selections,
        }


def make_handler(state: ReviewState, frontend_dir: Path | None):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):  # quiet
            pass

        def _send(self, code: int, body: bytes, content_type: str) -> None:
            self.send_response(code)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _json(self, payload, code: int = 200) -> None:
            self._send(code, json.dumps(payload, sort_keys=True).encode(), "application/json")

        def _error(self, code: int, message: str) -> None:
            self._json({"error": message}, code)

        def do_GET(self):  # noqa: N802 (stdlib casing)
            try:
                self._route_get()
            except BrokenPipeError:
                pass
            except Exception as exc:
                self._error(500, f"{type(exc).__name__}: {exc}")

        def _route_get(self):
            parts = [p for p in self.path.split("?")[0].split("/") if p]
            if parts[:2] == ["api", "images"] and len(parts) == 2:
                return self._json(state.images_payload())
            if parts[:2] == ["api", "images"] and len(parts) >= 3:
                image_id = parts[2]
                if image_id not in state.entries:
                    return self._error(404, f"unknown image {image_id}")
                if len(parts) == 4 and parts[3] == "candidates":
                    return self._json(state.candidates_payload(image_id))
                if len(parts) == 4 and parts[3] == "original.png":
                    st = state.image_state(image_id)
                    return self._send(200, encode_image_png(st.image), "image/png")
                if len(parts) == 5 and parts[3] in ("mask", "overlay"):
                    card = parts[4].removesuffix(".png")
                    st = state.image_state(image_id)
                    if card not in st.masks:
                        return self._error(404, f"unknown type {card}")
                    if parts[3] == "mask":
                        return self._send(200, encode_mask_png(st.masks[card]), "image/png")
                    return self._send(200, overlay_png(st.image, st.masks[card]), "image/png")
                return self._error(404, "not found")
            if parts == ["api", "report"]:
                return self._json(state.report_payload())
            return self._static(parts)

        def _static(self, parts):
            if frontend_dir is None:
                if not parts:
                    return self._send(200, _FALLBACK_PAGE, "text/html")
                return self._error(404, "no frontend bundled; use the JSON API")
            rel = "index.html" if not parts else "/".join(parts)
            target = (frontend_dir / rel).resolve()
            if not str(target).startswith(str(frontend_dir.resolve())) or not target.is_file():
                return self._error(404, "not found")
            types = {".html": "text/html", ".js": "text/javascript", ".css": "text/css",
                     ".map": "application/json", ".svg": "image/svg+xml"}
            return self._send(200, target.read_bytes(), types.get(target.suffix, "application/octet-stream"))

        def do_POST(self):  # noqa: N802
            try:
                parts = [p for p in self.path.split("?")[0].split("/") if p]
                if (
                    len(parts) == 4
                    and parts[:2] == ["api", "images"]
                    and parts[3] == "selection"
                ):
                    image_id = parts[2]
                    if image_id not in state.entries:
                        return self._error(404, f"unknown image {image_id}")
                    length = int(self.headers.get("Content-Length", 0))
                    body = json.loads(self.rfile.read(length) or b"{}")
                    card = body.get("type")
                    if card not in CARD_TYPES:
                        return self._error(400, f"type must be one of {list(CARD_TYPES)}")
                    entry = state.write_selection(image_id, card, body.get("user", "reviewer"))
                    return self._json({"image": image_id, "selection": entry})
                return self._error(404, "not found")
            except Exception as exc:
                self._error(500, f"{type(exc).__name__}: {exc}")

    return Handler


_FALLBACK_PAGE = (
    b"<!doctype html><title>lesionkit review</title>"
    b"<p>Review API is up. Build the frontend (see frontend/) and pass --frontend "
    b"to serve the gallery, or use the JSON endpoints under /api/.</p>"
)


def make_server(
    manifest: DatasetManifest,
    cfg: PipelineConfig,
    store,
    host: str = "127.0.0.1",
    port: int = 8754,
    selections_path: Path = Path("selections.json"),
    frontend_dir: Path | None = None,
) -> ThreadingHTTPServer:
    state = ReviewState(manifest, cfg, store, selections_path)
    return ThreadingHTTPServer((host, port), make_handler(state, frontend_dir))


def run_server(*args, **kwargs) -> None:
    server = make_server(*args, **kwargs)
    host, port = server.server_address[:2]
    print(f"review server on http://{host}:{port}/ (Ctrl-C stops)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
