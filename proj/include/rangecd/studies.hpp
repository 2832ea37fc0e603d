#ifndef RANGECD_STUDIES_HPP
#define RANGECD_STUDIES_HPP

#include <filesystem>
#include <string>

#include "rangecd/eval.hpp"
#include "rangecd/trainer.hpp"

namespace rangecd {

struct EvalConfig {
  ProjectionConfig projection;
  double map_voxel = 0.2;
  double live_voxel = 0.05;
  double threshold = 0.5;
  double corridor_width = 5.0;
  double corridor_range = 10.0;
  bool measure_runtime = false;
};

/// Evaluates the model frame-by-frame against the sequence's ground truth.
/// Corridor counts restrict both prediction and truth to the corridor mask.
EvalReport evaluate_model(const ChangeModel& model, const Sequence& seq, const EvalConfig& cfg);

/// Nearest-neighbour baseline evaluated through the same voxel pipeline:
/// representatives are classified and labels propagated to all points.
EvalReport evaluate_baseline(const Sequence& seq, double distance_threshold,
                             const EvalConfig& cfg);

/// Sweeps baseline thresholds and returns the one with the best IoU_ch.
struct BaselineSweepResult {
  double best_threshold = 0.0;
  EvalReport best_report;
  std::vector<std::pair<double, double>> sweep;  // (threshold, IoU_ch)
};
BaselineSweepResult sweep_baseline(const Sequence& seq, const std::vector<double>& thresholds,
                                   const EvalConfig& cfg);

/// A small CSV table, written in the row/column layout of the studies.
struct StudyTable {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write_csv(const std::filesystem::path& path) const;
};

/// Corridor IoU_ch over map voxel {0.1,0.2,0.3} x live voxel
/// {0.05,0.15,0.3}. One model is trained per map voxel (at the finest live
/// voxel) and evaluated across live voxels.
StudyTable voxel_sweep_study(const Sequence& train_seq, const Sequence& eval_seq,
                             const TrainConfig& base_cfg, const EvalConfig& eval_cfg);

/// IoU_ch for loss subsets {cham}, {class}, {cham,class}, {cham,class,temporal}.
StudyTable loss_ablation_study(const Sequence& train_seq, const Sequence& eval_seq,
                               const TrainConfig& base_cfg, const EvalConfig& eval_cfg);

/// Trained model vs best-threshold nearest-neighbour baseline.
StudyTable method_compare_study(const Sequence& train_seq, const Sequence& eval_seq,
                                const TrainConfig& base_cfg, const EvalConfig& eval_cfg);

}  // namespace rangecd

#endif
