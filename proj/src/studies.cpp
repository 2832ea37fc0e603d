#include "rangecd/studies.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "rangecd/baseline.hpp"

namespace rangecd {

namespace {

Corridor make_corridor(const Sequence& seq, const EvalConfig& cfg) {
  Corridor corridor;
  corridor.path = seq.taught_path;
  corridor.width = cfg.corridor_width;
  corridor.range_limit = cfg.corridor_range;
  return corridor;
}

void accumulate(EvalReport& report, const Frame& frame, const std::vector<Label>& pred,
                const Corridor& corridor) {
  report.full += confusion(pred, frame.truth);
  const PointCloud world = transform(frame.live, frame.pose);
  const std::vector<bool> mask = corridor_filter(world, frame.pose.translation, corridor);
  report.corridor += confusion_masked(pred, frame.truth, mask);
  ++report.frames;
}

void finalize(EvalReport& report) {
  report.iou_changed = iou_changed(report.full);
  report.corridor_iou_changed = iou_changed(report.corridor);
  report.miou = miou(report.full);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

EvalReport evaluate_model(const ChangeModel& model, const Sequence& seq, const EvalConfig& cfg) {
  const Corridor corridor = make_corridor(seq, cfg);
  EvalReport report;
  double sum_ms = 0.0, sum_ms2 = 0.0;
  for (const Frame& frame : seq.frames) {
    const auto start = std::chrono::steady_clock::now();
    const InferenceResult inf =
        infer_frame(model, frame, cfg.projection, cfg.map_voxel, cfg.live_voxel, cfg.threshold);
    if (cfg.measure_runtime) {
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
              .count();
      sum_ms += ms;
      sum_ms2 += ms * ms;
    }
    accumulate(report, frame, inf.labels, corridor);
  }
  finalize(report);
  if (cfg.measure_runtime && report.frames > 0) {
    const double n = static_cast<double>(report.frames);
    report.runtime_mean_ms = sum_ms / n;
    const double var = std::max(0.0, sum_ms2 / n - report.runtime_mean_ms * report.runtime_mean_ms);
    report.runtime_std_ms = std::sqrt(var);
  }
  return report;
}

EvalReport evaluate_baseline(const Sequence& seq, double distance_threshold,
                             const EvalConfig& cfg) {
  const Corridor corridor = make_corridor(seq, cfg);
  BaselineConfig bl{distance_threshold};
  EvalReport report;
  for (const Frame& frame : seq.frames) {
    std::vector<std::uint32_t> point_to_rep;
    const PointCloud live_ds =
        voxel_downsample_with_map(strip_intensity(frame.live), cfg.live_voxel, point_to_rep);
    const PointCloud map_ds = voxel_downsample(frame.map_view, cfg.map_voxel);
    const SpatialIndex map_index(map_ds);
    const std::vector<Label> rep_labels = nn_classify(live_ds, map_index, bl);
    std::vector<Label> pred(frame.live.size());
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = rep_labels[point_to_rep[i]];
    accumulate(report, frame, pred, corridor);
  }
  finalize(report);
  return report;
}

BaselineSweepResult sweep_baseline(const Sequence& seq, const std::vector<double>& thresholds,
                                   const EvalConfig& cfg) {
  if (thresholds.empty()) throw std::invalid_argument("empty threshold sweep");
  BaselineSweepResult result;
  double best = -1.0;
  for (double threshold : thresholds) {
    const EvalReport report = evaluate_baseline(seq, threshold, cfg);
    result.sweep.emplace_back(threshold, report.iou_changed);
    if (report.iou_changed > best) {
      best = report.iou_changed;
      result.best_threshold = threshold;
      result.best_report = report;
    }
  }
  return result;
}

void StudyTable::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

StudyTable voxel_sweep_study(const Sequence& train_seq, const Sequence& eval_seq,
                             const TrainConfig& base_cfg, const EvalConfig& eval_cfg) {
  const std::vector<double> map_voxels = {0.1, 0.2, 0.3};
  const std::vector<double> live_voxels = {0.05, 0.15, 0.3};

  StudyTable table;
  table.name = "voxel_sweep";
  table.header = {"live_voxel\\map_voxel"};
  for (double mv : map_voxels) table.header.push_back(fmt(mv));

  // One training per map voxel at the finest live voxel; coarser live
  // voxels are applied at evaluation time.
  std::vector<ChangeModel> models;
  for (double mv : map_voxels) {
    TrainConfig cfg = base_cfg;
    cfg.map_voxel = mv;
    cfg.live_voxel = live_voxels.front();
    models.push_back(train({&train_seq}, cfg).model);
  }
  for (double lv : live_voxels) {
    std::vector<std::string> row = {fmt(lv)};
    for (std::size_t m = 0; m < map_voxels.size(); ++m) {
      EvalConfig ec = eval_cfg;
      ec.map_voxel = map_voxels[m];
      ec.live_voxel = lv;
      row.push_back(fmt(evaluate_model(models[m], eval_seq, ec).corridor_iou_changed));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

StudyTable loss_ablation_study(const Sequence& train_seq, const Sequence& eval_seq,
                               const TrainConfig& base_cfg, const EvalConfig& eval_cfg) {
  struct Row {
    bool cham, cls, temporal;
  };
  const std::vector<Row> combos = {
      {true, false, false}, {false, true, false}, {true, true, false}, {true, true, true}};

  StudyTable table;
  table.name = "loss_ablation";
  table.header = {"chamfer", "class", "temporal", "iou_ch"};
  for (const Row& combo : combos) {
    TrainConfig cfg = base_cfg;
    cfg.use_chamfer = combo.cham;
    cfg.use_class = combo.cls;
    cfg.use_temporal = combo.temporal;
    const TrainResult result = train({&train_seq}, cfg);
    const EvalReport report = evaluate_model(result.model, eval_seq, eval_cfg);
    table.rows.push_back({combo.cham ? "yes" : "no", combo.cls ? "yes" : "no",
                          combo.temporal ? "yes" : "no", fmt(report.iou_changed)});
  }
  return table;
}

StudyTable method_compare_study(const Sequence& train_seq, const Sequence& eval_seq,
                                const TrainConfig& base_cfg, const EvalConfig& eval_cfg) {
  StudyTable table;
  table.name = "method_compare";
  table.header = {"method", "iou_ch", "corridor_iou_ch", "miou"};

  const std::vector<double> thresholds = {0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 1.0};
  const BaselineSweepResult baseline = sweep_baseline(eval_seq, thresholds, eval_cfg);
  table.rows.push_back({"nearest_neighbour(best_threshold=" + fmt(baseline.best_threshold) + ")",
                        fmt(baseline.best_report.iou_changed),
                        fmt(baseline.best_report.corridor_iou_changed),
                        fmt(baseline.best_report.miou)});

  const TrainResult result = train({&train_seq}, base_cfg);
  const EvalReport report = evaluate_model(result.model, eval_seq, eval_cfg);
  table.rows.push_back({"trained_model", fmt(report.iou_changed), fmt(report.corridor_iou_changed),
                        fmt(report.miou)});
  return table;
}

}  // namespace rangecd
