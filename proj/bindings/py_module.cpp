// Python bindings for the core change-detection operations.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rangecd/baseline.hpp"
#include "rangecd/costmap.hpp"
#include "rangecd/dataset.hpp"
#include "rangecd/eval.hpp"
#include "rangecd/io.hpp"
#include "rangecd/losses.hpp"
#include "rangecd/model.hpp"
#include "rangecd/studies.hpp"
#include "rangecd/trainer.hpp"

namespace py = pybind11;
using namespace rangecd;

namespace {

Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 3) throw std::invalid_argument("expected a (C,H,W) array");
  Tensor t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
           static_cast<int>(a.shape(2)));
  std::copy_n(a.data(), t.data.size(), t.data.begin());
  return t;
}

py::array_t<double> array_from_tensor(const Tensor& t) {
  py::array_t<double> a({t.c, t.h, t.w});
  std::copy_n(t.data.data(), t.data.size(), a.mutable_data());
  return a;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "LiDAR change detection core";

  py::enum_<Label>(m, "Label")
      .value("Consistent", Label::Consistent)
      .value("Changed", Label::Changed);

  py::class_<PointCloud>(m, "PointCloud")
      .def(py::init<>())
      .def_readwrite("points", &PointCloud::points)
      .def_readwrite("intensity", &PointCloud::intensity)
      .def("__len__", [](const PointCloud& c) { return c.size(); });

  py::class_<RigidTransform>(m, "RigidTransform")
      .def(py::init<>())
      .def_readwrite("rotation", &RigidTransform::rotation)
      .def_readwrite("translation", &RigidTransform::translation)
      .def("apply", &RigidTransform::apply)
      .def("compose", &RigidTransform::compose)
      .def("inverse", &RigidTransform::inverse)
      .def("is_valid", &RigidTransform::is_valid, py::arg("tol") = 1e-9);

  m.def("rotation_z", &rotation_z, py::arg("angle"));
  m.def("transform", &transform, py::arg("cloud"), py::arg("T"));
  m.def("voxel_downsample", &voxel_downsample, py::arg("cloud"), py::arg("voxel"));
  m.def("read_ply", py::overload_cast<const std::filesystem::path&>(&read_ply), py::arg("path"));
  m.def("write_ply", py::overload_cast<const PointCloud&, const std::filesystem::path&>(&write_ply),
        py::arg("cloud"), py::arg("path"));

  py::class_<SpatialIndex::Result>(m, "NearestResult")
      .def_readonly("distance", &SpatialIndex::Result::distance)
      .def_readonly("index", &SpatialIndex::Result::index);
  py::class_<SpatialIndex>(m, "SpatialIndex")
      .def(py::init<const PointCloud&>(), py::arg("cloud"))
      .def("nearest", &SpatialIndex::nearest, py::arg("query"));

  py::class_<ProjectionConfig>(m, "ProjectionConfig")
      .def(py::init<>())
      .def_readwrite("height", &ProjectionConfig::height)
      .def_readwrite("width", &ProjectionConfig::width)
      .def_readwrite("fov_deg", &ProjectionConfig::fov_deg)
      .def_readwrite("fov_down_deg", &ProjectionConfig::fov_down_deg)
      .def_readwrite("max_range", &ProjectionConfig::max_range);

  py::class_<RangeImage>(m, "RangeImage")
      .def_readonly("height", &RangeImage::height)
      .def_readonly("width", &RangeImage::width)
      .def_readonly("ranges", &RangeImage::ranges)
      .def_readonly("index_map", &RangeImage::index_map);

  py::class_<PixelCoords>(m, "PixelCoords")
      .def_readonly("u", &PixelCoords::u)
      .def_readonly("v", &PixelCoords::v)
      .def_readonly("range", &PixelCoords::range);
  m.def("project_point", &project_point, py::arg("point"), py::arg("config"));
  m.def("render", &render, py::arg("cloud"), py::arg("config"));
  m.def("backproject_labels", &backproject_labels, py::arg("pixel_labels"), py::arg("image"),
        py::arg("cloud"));

  py::class_<LossTerm>(m, "LossTerm")
      .def_readonly("value", &LossTerm::value)
      .def_readonly("gradient", &LossTerm::gradient);
  m.def(
      "chamfer_loss",
      [](const PointCloud& scan, const SpatialIndex& map_index, const ChangeProbabilities& p) {
        return chamfer_loss(scan, map_index, p);
      },
      py::arg("scan"), py::arg("map_index"), py::arg("probabilities"));
  m.def("class_balance_loss", &class_balance_loss, py::arg("probabilities"));
  m.def(
      "temporal_loss",
      [](const PointCloud& s0, const ChangeProbabilities& p0, const PointCloud& s1,
         const ChangeProbabilities& p1) { return temporal_loss(s0, p0, s1, p1).value; },
      py::arg("scan0"), py::arg("p0"), py::arg("scan1"), py::arg("p1"));

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("height", &ModelConfig::height)
      .def_readwrite("width", &ModelConfig::width)
      .def_readwrite("encoder_channels", &ModelConfig::encoder_channels)
      .def_readwrite("num_classes", &ModelConfig::num_classes);

  py::class_<ChangeModel>(m, "ChangeModel")
      .def(py::init<const ModelConfig&, std::uint64_t>(), py::arg("config"), py::arg("seed") = 0)
      .def("config", &ChangeModel::config)
      .def("parameter_count", &ChangeModel::parameter_count)
      .def(
          "forward",
          [](const ChangeModel& model, const py::array_t<double>& input) {
            return array_from_tensor(model.forward(tensor_from_array(input)));
          },
          py::arg("input"), "Logits for a (2,H,W) stacked live/map range array")
      .def(
          "changed_probabilities",
          [](const ChangeModel& model, const py::array_t<double>& input) {
            return changed_probabilities(model.forward(tensor_from_array(input)));
          },
          py::arg("input"))
      .def("save", &ChangeModel::save, py::arg("path"))
      .def_static("load", &ChangeModel::load, py::arg("path"));

  m.def("predict_labels",
        [](const py::array_t<double>& logits, double threshold) {
          return predict_labels(tensor_from_array(logits), threshold);
        },
        py::arg("logits"), py::arg("threshold") = 0.5);
  m.def("parameter_count", py::overload_cast<const ModelConfig&>(&parameter_count),
        py::arg("config"));

  py::class_<BaselineConfig>(m, "BaselineConfig")
      .def(py::init<>())
      .def_readwrite("distance_threshold", &BaselineConfig::distance_threshold);
  m.def("nn_classify", &nn_classify, py::arg("scan"), py::arg("map_index"), py::arg("config"));

  m.def("iou", &iou, py::arg("pred"), py::arg("truth"), py::arg("cls"));

  py::class_<CostMapConfig>(m, "CostMapConfig")
      .def(py::init<>())
      .def_readwrite("cell_size", &CostMapConfig::cell_size)
      .def_readwrite("half_extent", &CostMapConfig::half_extent)
      .def("cells", &CostMapConfig::cells);
  py::class_<CostMap>(m, "CostMap")
      .def_readonly("cells", &CostMap::cells)
      .def("size", &CostMap::size);
  m.def("inflate", &inflate, py::arg("changed_points"), py::arg("robot_radius"), py::arg("config"),
        py::arg("origin") = RigidTransform{});

  py::class_<VegetationSpec>(m, "VegetationSpec")
      .def(py::init<>())
      .def_readwrite("density", &VegetationSpec::density)
      .def_readwrite("jitter_sigma", &VegetationSpec::jitter_sigma)
      .def_readwrite("visibility", &VegetationSpec::visibility)
      .def_readwrite("height_max", &VegetationSpec::height_max);
  py::class_<Box>(m, "Box")
      .def(py::init<>())
      .def_readwrite("center", &Box::center)
      .def_readwrite("size", &Box::size);
  py::class_<ChangeObject>(m, "ChangeObject")
      .def(py::init<>())
      .def_readwrite("shape", &ChangeObject::shape)
      .def_readwrite("reflective", &ChangeObject::reflective);
  py::class_<SceneSpec>(m, "SceneSpec")
      .def(py::init<>())
      .def_readwrite("ground_extent", &SceneSpec::ground_extent)
      .def_readwrite("boxes", &SceneSpec::boxes)
      .def_readwrite("changes", &SceneSpec::changes)
      .def_readwrite("vegetation", &SceneSpec::vegetation)
      .def_readwrite("path", &SceneSpec::path)
      .def_readwrite("frame_spacing", &SceneSpec::frame_spacing)
      .def_readwrite("range_noise_sigma", &SceneSpec::range_noise_sigma)
      .def_readwrite("projection", &SceneSpec::projection);

  py::class_<Frame>(m, "Frame")
      .def_readonly("live", &Frame::live)
      .def_readonly("pose", &Frame::pose)
      .def_readonly("map_view", &Frame::map_view)
      .def_readonly("truth", &Frame::truth)
      .def_readonly("odometer", &Frame::odometer);
  py::class_<Sequence>(m, "Sequence")
      .def_readonly("map", &Sequence::map)
      .def_readonly("frames", &Sequence::frames)
      .def_readonly("taught_path", &Sequence::taught_path);

  m.def("generate_sequence", &generate_sequence, py::arg("spec"), py::arg("seed"));
  m.def("load_scene_spec", &load_scene_spec, py::arg("path"));
  m.def("reflective_label", &reflective_label, py::arg("cloud"), py::arg("intensity_threshold"));
  m.def("strip_intensity", &strip_intensity, py::arg("cloud"));
  m.def("save_sequence", &save_sequence, py::arg("sequence"), py::arg("dir"));
  m.def("load_sequence", &load_sequence, py::arg("dir"), py::arg("max_range") = 10.0);

  py::class_<InferenceResult>(m, "InferenceResult")
      .def_readonly("labels", &InferenceResult::labels)
      .def_readonly("probabilities", &InferenceResult::probabilities)
      .def_readonly("pixel_labels", &InferenceResult::pixel_labels);
  m.def("infer_frame", &infer_frame, py::arg("model"), py::arg("frame"), py::arg("projection"),
        py::arg("map_voxel"), py::arg("live_voxel"), py::arg("threshold") = 0.5);
}
