"""LiDAR change detection for teach-and-repeat navigation."""

from ._core import (
    BaselineConfig,
    Box,
    ChangeModel,
    ChangeObject,
    CostMap,
    CostMapConfig,
    Frame,
    InferenceResult,
    Label,
    LossTerm,
    ModelConfig,
    NearestResult,
    PointCloud,
    ProjectionConfig,
    RangeImage,
    RigidTransform,
    SceneSpec,
    Sequence,
    SpatialIndex,
    VegetationSpec,
    backproject_labels,
    chamfer_loss,
    class_balance_loss,
    generate_sequence,
    infer_frame,
    inflate,
    iou,
    load_scene_spec,
    load_sequence,
    nn_classify,
    parameter_count,
    predict_labels,
    project_point,
    read_ply,
    reflective_label,
    render,
    rotation_z,
    save_sequence,
    strip_intensity,
    temporal_loss,
    transform,
    voxel_downsample,
    write_ply,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
