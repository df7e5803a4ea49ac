import json
import math

import numpy as np
import pytest
from fastapi.testclient import TestClient

from puddlemap import camera as cam
from puddlemap import pipeline, terrain
from puddlemap.cli import main
from puddlemap.config import load_config
from puddlemap.service import create_app, rle_decode, rle_encode

from helpers import write_scene


@pytest.fixture(scope="module")
def scene(tmp_path_factory):
    root = tmp_path_factory.mktemp("svc_scene")
    return write_scene(root, n_frames=3)


@pytest.fixture(scope="module")
def client(scene):
    cfg = load_config(scene["config"])
    return TestClient(create_app(cfg))


def camera_json(intr, pose):
    return {
        "fx": intr.fx, "fy": intr.fy, "cx": intr.cx, "cy": intr.cy,
        "omega": pose.omega, "phi": pose.phi, "kappa": pose.kappa,
        "tx": pose.tx, "ty": pose.ty, "tz": pose.tz,
    }


class TestRle:
    def test_round_trip(self):
        rng = np.random.default_rng(0)
        arr = (rng.uniform(size=(7, 11)) > 0.5).astype(np.uint8)
        back = rle_decode(rle_encode(arr), 11, 7)
        assert np.array_equal(back, arr)

    def test_encoding_shape(self):
        assert rle_encode(np.array([[0, 0, 1, 1, 1, 0]])) == [[0, 2], [1, 3], [0, 1]]

    def test_decode_wrong_total(self):
        with pytest.raises(ValueError):
            rle_decode([[1, 5]], 2, 2)


class TestFrame:
    def test_frame_bytes(self, client, scene):
        resp = client.get("/frame/0")
        assert resp.status_code == 200
        expected = (scene["frames_dir"] / "0.ppm").read_bytes()
        assert resp.content == expected

    def test_unknown_frame_404(self, client):
        resp = client.get("/frame/nope")
        assert resp.status_code == 404
        assert resp.json()["detail"]["code"] == "frame_not_found"


class TestSegment:
    def test_matches_cli_segment_output(self, client, scene):
        assert main(["segment", "--config", str(scene["config"])]) == 0
        from puddlemap import segmenter

        cli_map = segmenter.load_labels_pgm(
            scene["root"] / "out" / "segments" / "0.pgm"
        )
        resp = client.post("/segment", json={"frame_id": "0"})
        assert resp.status_code == 200
        body = resp.json()
        assert body["segment_count"] == cli_map.segment_count
        labels = rle_decode(body["labels_rle"], body["width"], body["height"])
        assert np.array_equal(labels, cli_map.labels)


class TestClassify:
    def read_seeds(self, scene):
        lines = (scene["root"] / "seeds.csv").read_text().splitlines()[1:]
        out = []
        for line in lines:
            r, c, lab = line.split(",")
            out.append({"row": int(r), "col": int(c), "label": lab})
        return out

    def test_matches_cli_mask(self, client, scene):
        assert main(["classify", "--config", str(scene["config"])]) == 0
        cli_mask = pipeline.load_mask_pgm(scene["root"] / "out" / "masks" / "0.pgm")
        resp = client.post("/classify", json={
            "frame_id": "0", "seeds": self.read_seeds(scene),
        })
        assert resp.status_code == 200
        body = resp.json()
        wet = rle_decode(body["mask_rle"], body["width"], body["height"]) != 0
        assert np.array_equal(wet, cli_mask.wet)
        assert body["single_class_warning"] is False

    def test_conflicting_seeds_422(self, client, scene):
        seeds = self.read_seeds(scene) + [{"row": 25, "col": 100, "label": "dry"}]
        resp = client.post("/classify", json={"frame_id": "0", "seeds": seeds})
        assert resp.status_code == 422
        detail = resp.json()["detail"]
        assert detail["code"] == "seed_conflict"
        assert "segment_id" in detail

    def test_bad_label_422(self, client):
        resp = client.post("/classify", json={
            "frame_id": "0",
            "seeds": [{"row": 1, "col": 1, "label": "soggy"}],
        })
        assert resp.status_code == 422
        assert resp.json()["detail"]["code"] == "bad_seeds"

    def test_malformed_body_rejected(self, client):
        resp = client.post("/classify", json={"seeds": []})
        assert resp.status_code == 422  # validation error, no frame_id


class TestResect:
    def test_matches_cli_camera_output(self, client, scene):
        assert main(["resect", "--config", str(scene["config"])]) == 0
        cli_intr, cli_pose = cam.load_camera(scene["root"] / "camera.txt")
        gcps = cam.load_gcps(scene["root"] / "gcps.csv")
        init = cam.load_camera(scene["root"] / "camera_init.txt")
        resp = client.post("/resect", json={
            "gcps": [{"u": g.u, "v": g.v, "x": g.x, "y": g.y, "z": g.z}
                     for g in gcps],
            "init": camera_json(*init),
        })
        assert resp.status_code == 200
        body = resp.json()
        assert body["converged"]
        assert body["intrinsics"]["fx"] == cli_intr.fx
        assert body["intrinsics"]["cy"] == cli_intr.cy
        assert body["pose"]["omega"] == cli_pose.omega
        assert body["pose"]["tz"] == cli_pose.tz
        # residuals match the CLI residuals.csv field for field
        res_lines = (scene["root"] / "out" / "residuals.csv").read_text().splitlines()[1:]
        for line, pair in zip(res_lines, body["residuals"]):
            ru, rv = float(line.split(",")[5]), float(line.split(",")[6])
            assert pair == [ru, rv]

    def test_too_few_gcps_422(self, client, scene):
        gcps = cam.load_gcps(scene["root"] / "gcps.csv")[:3]
        init = cam.load_camera(scene["root"] / "camera_init.txt")
        resp = client.post("/resect", json={
            "gcps": [{"u": g.u, "v": g.v, "x": g.x, "y": g.y, "z": g.z}
                     for g in gcps],
            "init": camera_json(*init),
        })
        assert resp.status_code == 422
        assert resp.json()["detail"]["code"] == "too_few_gcps"


class TestElevation:
    def test_cell_center_exact(self, client, scene):
        dem = scene["dem"]
        x = dem.xll + 0.5 * dem.cellsize
        y = dem.yll + 0.5 * dem.cellsize
        resp = client.get("/elevation", params={"x": x, "y": y})
        assert resp.status_code == 200
        assert resp.json()["z"] == float(dem.elevations[-1, 0])

    def test_out_of_bounds_422(self, client, scene):
        resp = client.get("/elevation", params={"x": 1e6, "y": 1e6})
        assert resp.status_code == 422
        assert resp.json()["detail"]["code"] == "elevation_unavailable"


class TestGeoref:
    def test_matches_cli_geojson(self, client, scene):
        assert main(["classify", "--config", str(scene["config"])]) == 0
        assert main(["georef", "--config", str(scene["config"])]) == 0
        cli_doc = json.loads(
            (scene["root"] / "out" / "georef" / "0.geojson").read_text()
        )
        mask = pipeline.load_mask_pgm(scene["root"] / "out" / "masks" / "0.pgm")
        h, w = mask.wet.shape
        resp = client.post("/georef", json={
            "mask_rle": rle_encode(mask.wet.astype(np.uint8)),
            "width": w, "height": h,
        })
        assert resp.status_code == 200
        assert resp.json() == cli_doc

    def test_bad_rle_422(self, client):
        resp = client.post("/georef", json={
            "mask_rle": [[1, 3]], "width": 4, "height": 4,
        })
        assert resp.status_code == 422
        assert resp.json()["detail"]["code"] == "bad_rle"


class TestDeterminism:
    def test_identical_requests_identical_responses(self, client):
        a = client.post("/segment", json={"frame_id": "0"})
        b = client.post("/segment", json={"frame_id": "0"})
        assert a.content == b.content
