import math

import numpy as np
import pytest

import rangecd


def make_cloud(points, intensity=None):
    cloud = rangecd.PointCloud()
    cloud.points = [np.asarray(p, dtype=float) for p in points]
    if intensity is not None:
        cloud.intensity = list(intensity)
    return cloud


def test_transform_rotation():
    cloud = make_cloud([[1.0, 0.0, 0.0]])
    out = rangecd.transform(cloud, rangecd.rotation_z(math.pi / 2))
    assert out.points[0][1] == pytest.approx(1.0)
    assert out.points[0][0] == pytest.approx(0.0, abs=1e-12)


def test_voxel_downsample_and_nearest():
    cloud = make_cloud([[0.0, 0.0, 0.0], [0.01, 0.0, 0.0], [5.0, 0.0, 0.0]])
    down = rangecd.voxel_downsample(cloud, 0.1)
    assert len(down) == 2

    index = rangecd.SpatialIndex(make_cloud([[3.0, 4.0, 0.0]]))
    assert index.nearest(np.zeros(3)).distance == pytest.approx(5.0)


def test_projection_and_render():
    cfg = rangecd.ProjectionConfig()
    coords = rangecd.project_point(np.array([1.0, 0.0, 0.0]), cfg)
    assert coords.u == pytest.approx(cfg.width / 2)

    img = rangecd.render(make_cloud([[2.0, 0.0, 0.0]]), cfg)
    assert max(img.ranges) == pytest.approx(2.0)


def test_losses():
    scan = make_cloud([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    index = rangecd.SpatialIndex(scan)
    loss = rangecd.chamfer_loss(scan, index, [0.0, 0.0])
    assert loss.value == pytest.approx(0.0)
    assert rangecd.class_balance_loss([1.0, 0.0]).value == pytest.approx(0.5)
    assert rangecd.temporal_loss(scan, [1.0, 1.0], scan, [1.0, 1.0]) == pytest.approx(0.0)


def test_model_forward_and_checkpoint(tmp_path):
    cfg = rangecd.ModelConfig()
    cfg.height, cfg.width = 8, 16
    cfg.encoder_channels = [4, 6, 8, 10]
    model = rangecd.ChangeModel(cfg, seed=1)
    assert model.parameter_count() == rangecd.parameter_count(cfg)

    rng = np.random.default_rng(0)
    x = rng.uniform(0.0, 1.0, size=(2, 8, 16))
    logits = model.forward(x)
    assert logits.shape == (2, 8, 16)
    p = model.changed_probabilities(x)
    assert len(p) == 8 * 16
    assert all(0.0 < v < 1.0 for v in p)

    path = tmp_path / "model.ckpt"
    model.save(path)
    loaded = rangecd.ChangeModel.load(path)
    assert np.allclose(loaded.forward(x), logits)


def test_baseline_and_iou():
    map_cloud = make_cloud([[0.0, 0.0, 0.0]])
    scan = make_cloud([[0.0, 0.0, 0.0], [5.0, 0.0, 0.0]])
    labels = rangecd.nn_classify(scan, rangecd.SpatialIndex(map_cloud), rangecd.BaselineConfig())
    assert labels == [rangecd.Label.Consistent, rangecd.Label.Changed]
    truth = [rangecd.Label.Consistent, rangecd.Label.Changed]
    assert rangecd.iou(labels, truth, rangecd.Label.Changed) == pytest.approx(1.0)


def test_costmap_inflate():
    cfg = rangecd.CostMapConfig()
    cm = rangecd.inflate(make_cloud([[0.0, 0.0, 0.0]]), 0.5, cfg)
    assert sum(1 for v in cm.cells if v == 1.0) == 81


def test_generate_label_infer(tmp_path):
    spec = rangecd.SceneSpec()
    spec.ground_extent = 16.0
    spec.path = [np.array([-1.0, 0.0]), np.array([1.0, 0.0])]
    spec.frame_spacing = 0.5
    spec.projection.height = 16
    spec.projection.width = 64
    change = rangecd.ChangeObject()
    change.shape.center = np.array([0.8, 1.2, 0.3])
    change.shape.size = np.array([0.6, 0.6, 0.6])
    spec.changes = [change]

    seq = rangecd.generate_sequence(spec, 1)
    assert len(seq.frames) > 0
    frame = seq.frames[0]
    assert len(frame.truth) == len(frame.live)
    assert rangecd.reflective_label(frame.live, 0.8) == frame.truth

    out_dir = tmp_path / "seq"
    rangecd.save_sequence(seq, out_dir)
    back = rangecd.load_sequence(out_dir, spec.projection.max_range)
    assert len(back.frames) == len(seq.frames)

    cfg = rangecd.ModelConfig()
    cfg.height, cfg.width = 16, 64
    cfg.encoder_channels = [4, 6, 8, 10]
    model = rangecd.ChangeModel(cfg, seed=2)
    result = rangecd.infer_frame(model, frame, spec.projection, 0.2, 0.1)
    assert len(result.labels) == len(frame.live)
