"""Store layout and the wire protocol, including concurrent integrity."""

import hashlib
import json
import threading
import urllib.error
import urllib.request

import pytest

from evs.container import decode
from evs.synthetic import SyntheticVideo
from evs.vsp import StoreVideoSpec, VspServer, VspStore, build_store, segment_payload


@pytest.fixture(scope="module")
def store_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("store")
    specs = [
        StoreVideoSpec(
            video=SyntheticVideo(duration=60, fps=4, seed=i, video_id=f"vid{i}",
                                 event_spans=[(20, 32)]),
            title=f"Video {i}", interval=1.0, segment_seconds=10.0,
            segment_bitrate_bps=200_000.0, declared_bitrate_bps=2_000_000.0)
        for i in range(2)
    ]
    build_store(root, specs)
    return root


@pytest.fixture(scope="module")
def server(store_root):
    with VspServer(store_root) as srv:
        yield srv


def fetch(url):
    with urllib.request.urlopen(url, timeout=10) as r:
        return r.read(), dict(r.headers), r.status


class TestStore:
    def test_catalog_sorted_and_stable(self, store_root):
        store = VspStore(store_root)
        a = store.catalog()
        b = store.catalog()
        assert a == b
        assert [v["video_id"] for v in a] == ["vid0", "vid1"]

    def test_empty_store(self, tmp_path):
        build_store(tmp_path, [])
        assert VspStore(tmp_path).catalog() == []

    def test_segment_cover_single(self, store_root):
        store = VspStore(store_root)
        blobs, covered, hits = store.segment_cover("vid0", 10.0, 20.0)
        assert len(blobs) == 1
        assert covered == (10.0, 20.0)

    def test_segment_cover_spanning_is_minimal(self, store_root):
        store = VspStore(store_root)
        blobs, covered, hits = store.segment_cover("vid0", 12.0, 35.0)
        assert len(blobs) == 3  # [10,20) [20,30) [30,40)
        assert covered == (10.0, 40.0)
        # each returned blob genuinely intersects the request
        for h in hits:
            assert h.end > 12.0 and h.start < 35.0

    def test_payloads_deterministic(self):
        assert segment_payload("x", 3, 1000) == segment_payload("x", 3, 1000)
        assert segment_payload("x", 3, 1000) != segment_payload("x", 4, 1000)
        assert segment_payload("y", 3, 1000) != segment_payload("x", 3, 1000)

    def test_reload_swaps_catalog(self, tmp_path):
        build_store(tmp_path, [StoreVideoSpec(
            video=SyntheticVideo(duration=10, fps=2, video_id="a"),
            segment_bitrate_bps=100_000)])
        store = VspStore(tmp_path)
        assert len(store.catalog()) == 1
        build_store(tmp_path, [StoreVideoSpec(
            video=SyntheticVideo(duration=10, fps=2, video_id=v),
            segment_bitrate_bps=100_000) for v in ("a", "b")])
        store.reload()
        assert len(store.catalog()) == 2


class TestHttp:
    def test_catalog_endpoint(self, server):
        body, headers, status = fetch(f"{server.address}/catalog")
        doc = json.loads(body)
        assert status == 200
        assert [v["video_id"] for v in doc["videos"]] == ["vid0", "vid1"]

    def test_container_round_trip(self, server, store_root):
        body, _, _ = fetch(f"{server.address}/videos/vid0/container")
        stored = (store_root / "videos" / "vid0" / "container.tnc").read_bytes()
        assert body == stored
        c = decode(body)
        assert c.header.video_id == "vid0"
        assert c.count == 61

    def test_container_much_smaller_than_video(self, server):
        body, _, _ = fetch(f"{server.address}/catalog")
        entry = json.loads(body)["videos"][0]
        cbytes, _, _ = fetch(f"{server.address}/videos/vid0/container")
        assert len(cbytes) < 0.1 * entry["full_video_bytes"]

    def test_unknown_video_404(self, server):
        with pytest.raises(urllib.error.HTTPError) as e:
            fetch(f"{server.address}/videos/nope/container")
        assert e.value.code == 404

    def test_segment_exact_bounds(self, server, store_root):
        body, headers, _ = fetch(f"{server.address}/videos/vid0/segment?start=10.0&end=20.0")
        stored = (store_root / "videos" / "vid0" / "segments" / "00001.bin").read_bytes()
        assert body == stored
        assert float(headers["X-Covered-Start"]) == 10.0
        assert float(headers["X-Covered-End"]) == 20.0

    def test_segment_spanning_two(self, server):
        body, headers, _ = fetch(f"{server.address}/videos/vid0/segment?start=15.0&end=25.0")
        sizes = [int(s) for s in headers["X-Segment-Sizes"].split(",")]
        assert len(sizes) == 2
        assert len(body) == sum(sizes)
        assert (float(headers["X-Covered-Start"]), float(headers["X-Covered-End"])) == (10.0, 30.0)

    def test_degenerate_range_rejected(self, server):
        with pytest.raises(urllib.error.HTTPError) as e:
            fetch(f"{server.address}/videos/vid0/segment?start=10.0&end=10.0")
        assert e.value.code == 416

    def test_out_of_range_rejected(self, server):
        with pytest.raises(urllib.error.HTTPError) as e:
            fetch(f"{server.address}/videos/vid0/segment?start=0&end=10000")
        assert e.value.code == 416

    def test_malformed_params_rejected(self, server):
        with pytest.raises(urllib.error.HTTPError) as e:
            fetch(f"{server.address}/videos/vid0/segment?start=zero&end=10")
        assert e.value.code == 400

    def test_repeated_requests_byte_identical(self, server):
        a, _, _ = fetch(f"{server.address}/videos/vid1/segment?start=0&end=30")
        b, _, _ = fetch(f"{server.address}/videos/vid1/segment?start=0&end=30")
        assert a == b

    def test_concurrent_clients_no_corruption(self, server, store_root):
        catalog = json.loads((store_root / "catalog.json").read_text())
        expected = {}
        for v in catalog["videos"]:
            expected[v["video_id"]] = v["container_sha256"]
        failures = []

        def worker(vid):
            try:
                for _ in range(3):
                    body, _, _ = fetch(f"{server.address}/videos/{vid}/container")
                    if hashlib.sha256(body).hexdigest() != expected[vid]:
                        failures.append(f"checksum mismatch for {vid}")
            except Exception as exc:
                failures.append(repr(exc))

        threads = [threading.Thread(target=worker, args=(f"vid{i % 2}",))
                   for i in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join(timeout=30)
        assert not failures
