import hashlib
import json
import threading
import urllib.request
from pathlib import Path

import pytest

from lesionkit.config import PipelineConfig
from lesionkit.dataset import ingest
from lesionkit.server import make_server

from test_cli import write_flat_dataset


def dir_checksum(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(p.name.encode())
            h.update(p.read_bytes())
    return h.hexdigest()


@pytest.fixture(scope="module")
def server(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("serve")
    data = tmp / "data"
    ids = write_flat_dataset(data, n=3, size=56, root_seed=8)
    selections = tmp / "selections.json"
    manifest = ingest(data, "flat-csv")
    srv = make_server(
        manifest, PipelineConfig(seed=4), None, host="127.0.0.1", port=0,
        selections_path=selections,
    )
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    host, port = srv.server_address[:2]
    yield {
        "base": f"http://{host}:{port}",
        "ids": ids,
        "data": data,
        "selections": selections,
    }
    srv.shutdown()


def get_json(url: str):
    with urllib.request.urlopen(url, timeout=60) as r:
        return json.loads(r.read())


def post_json(url: str, payload: dict):
    req = urllib.request.Request(
        url, data=json.dumps(payload).encode(), headers={"Content-Type": "application/json"}
    )
    with urllib.request.urlopen(req, timeout=60) as r:
        return r.status, json.loads(r.read())


class TestReviewApi:
    def test_images_listing(self, server):
        payload = get_json(f"{server['base']}/api/images")
        assert [im["id"] for im in payload["images"]] == server["ids"]
        assert all(im["has_truth"] for im in payload["images"])

    def test_candidates_eight_cards(self, server):
        image_id = server["ids"][0]
        payload = get_json(f"{server['base']}/api/images/{image_id}/candidates")
        assert len(payload["cards"]) == 8
        types = [c["type"] for c in payload["cards"]]
        assert types[-1] == "ensemble"
        for card in payload["cards"]:
            assert "accuracy" in card  # truth is present in this dataset
            if card["available"]:
                with urllib.request.urlopen(server["base"] + card["overlay"], timeout=60) as r:
                    assert r.read()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_selection_roundtrip_and_overwrite(self, server):
        image_id = server["ids"][0]
        status, _ = post_json(
            f"{server['base']}/api/images/{image_id}/selection", {"type": "gray"}
        )
        assert status == 200
        stored = json.loads(server["selections"].read_text())
        assert stored[image_id]["type"] == "gray"
        post_json(f"{server['base']}/api/images/{image_id}/selection", {"type": "kmeans-cra"})
        stored = json.loads(server["selections"].read_text())
        assert stored[image_id]["type"] == "kmeans-cra"
        assert list(stored) == [image_id]  # overwritten, not duplicated

    def test_invalid_selection_rejected(self, server):
        image_id = server["ids"][0]
        try:
            post_json(f"{server['base']}/api/images/{image_id}/selection", {"type": "nope"})
            raised = False
        except urllib.error.HTTPError as exc:
            raised = exc.code == 400
        assert raised

    def test_report_honors_selections(self, server):
        # select a concrete type for every image, then the report's
        # human-selected accuracy must equal the mean of those cards'
        # accuracies as computed by the mask metric
        chosen_acc = []
        for image_id in server["ids"]:
            cards = get_json(f"{server['base']}/api/images/{image_id}/candidates")["cards"]
            by_type = {c["type"]: c for c in cards}
            pick = "gray" if by_type["gray"]["available"] else "ensemble"
            post_json(f"{server['base']}/api/images/{image_id}/selection", {"type": pick})
            chosen_acc.append(by_type[pick]["accuracy"])
        report = get_json(f"{server['base']}/api/report")
        want = sum(chosen_acc) / len(chosen_acc)
        assert report["human_selected"] == pytest.approx(want, abs=1e-12)
        assert report["max_per_image"] >= report["ensemble"]

    def test_dataset_files_never_touched(self, server):
        before = dir_checksum(server["data"])
        image_id = server["ids"][1]
        get_json(f"{server['base']}/api/images/{image_id}/candidates")
        post_json(f"{server['base']}/api/images/{image_id}/selection", {"type": "blue"})
        get_json(f"{server['base']}/api/report")
        assert dir_checksum(server["data"]) == before

    def test_unknown_image_404(self, server):
        try:
            get_json(f"{server['base']}/api/images/nope/candidates")
            raised = False
        except urllib.error.HTTPError as exc:
            raised = exc.code == 404
        assert raised

    def test_fallback_page(self, server):
        with urllib.request.urlopen(f"{server['base']}/", timeout=60) as r:
            assert b"lesionkit review" in r.read()
