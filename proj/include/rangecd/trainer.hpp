#ifndef RANGECD_TRAINER_HPP
#define RANGECD_TRAINER_HPP

#include <filesystem>
#include <functional>

#include "rangecd/dataset.hpp"
#include "rangecd/losses.hpp"
#include "rangecd/model.hpp"

namespace rangecd {

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Decoupled weight decay. The change losses are linear in the predicted
  /// probabilities, so without decay the logits grow without bound and the
  /// softmax saturates; a small decay keeps the gradients alive.
  double weight_decay = 0.0;
};

struct TrainConfig {
  ModelConfig model;
  LossWeights weights;
  OptimizerConfig optimizer;
  ProjectionConfig projection;

  double map_voxel = 0.2;
  double live_voxel = 0.05;
  std::size_t pair_spacing = 1;
  std::size_t steps = 200;
  std::uint64_t seed = 0;

  // Loss-term toggles for ablation runs.
  bool use_chamfer = true;
  bool use_class = true;
  bool use_temporal = true;

  // Plateau early stop on epoch-mean total loss.
  bool early_stop = true;
  std::size_t patience_epochs = 10;
};

struct TrainLogRow {
  std::size_t step = 0;
  double chamfer = 0.0;
  double class_balance = 0.0;
  double temporal = 0.0;
  double total = 0.0;
};

struct TrainResult {
  ChangeModel model;
  std::vector<TrainLogRow> log;
};

/// Adaptive moment estimation over a flat parameter view.
class AdamOptimizer {
 public:
  AdamOptimizer(OptimizerConfig cfg, std::size_t parameter_count);
  void step(std::vector<ChangeModel::ParamRef>& params);

 private:
  OptimizerConfig cfg_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

/// Per-step callback: (step index 0-based, log row). Return false to stop.
using StepCallback = std::function<bool(std::size_t, const TrainLogRow&)>;

/// Unsupervised training over temporal batches drawn round-robin from the
/// sequences. Deterministic per seed; single-threaded.
TrainResult train(const std::vector<const Sequence*>& sequences, const TrainConfig& cfg,
                  const StepCallback& callback = {});

/// As train, but starting from an existing model with the learning rate
/// scaled by `lr_scale` (default x0.1). Throws when the checkpoint config
/// does not match cfg.model.
TrainResult finetune(const ChangeModel& checkpoint, const std::vector<const Sequence*>& sequences,
                     TrainConfig cfg, double lr_scale = 0.1, const StepCallback& callback = {});

void write_training_log(const std::vector<TrainLogRow>& log, const std::filesystem::path& path);

/// End-to-end inference on one frame: downsample, render, forward,
/// threshold, back-project, and propagate labels from voxel
/// representatives to every original live point.
struct InferenceResult {
  std::vector<Label> labels;          // per original live point
  std::vector<double> probabilities;  // per original live point
  RangeImage live_image;
  RangeImage map_image;
  std::vector<Label> pixel_labels;
};

InferenceResult infer_frame(const ChangeModel& model, const Frame& frame,
                            const ProjectionConfig& projection, double map_voxel,
                            double live_voxel, double threshold = 0.5);

}  // namespace rangecd

#endif
