// Command-line front end: scene generation, range-image rendering, training,
// fine-tuning, inference, baseline comparison, evaluation, studies, and a
// runtime benchmark.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "rangecd/baseline.hpp"
#include "rangecd/costmap.hpp"
#include "rangecd/dataset.hpp"
#include "rangecd/io.hpp"
#include "rangecd/studies.hpp"
#include "rangecd/trainer.hpp"

namespace fs = std::filesystem;
using namespace rangecd;

namespace {

std::vector<std::uint16_t> range_to_pgm(const RangeImage& img) {
  // Fixed scale: 0..max_range maps to 0..65535; empty pixels stay 0.
  std::vector<std::uint16_t> pixels(img.ranges.size());
  for (std::size_t k = 0; k < img.ranges.size(); ++k) {
    const double t = std::clamp(img.ranges[k] / img.config.max_range, 0.0, 1.0);
    pixels[k] = static_cast<std::uint16_t>(std::lround(t * 65535.0));
  }
  return pixels;
}

std::vector<std::uint16_t> labels_to_pgm(const std::vector<Label>& labels) {
  std::vector<std::uint16_t> pixels(labels.size());
  for (std::size_t k = 0; k < labels.size(); ++k) {
    pixels[k] = labels[k] == Label::Changed ? 65535 : 0;
  }
  return pixels;
}

void write_point_labels_csv(const fs::path& path, const std::vector<Label>& labels,
                            const std::vector<double>* probabilities) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << (probabilities ? "index,label,probability\n" : "index,label\n");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << i << ',' << (labels[i] == Label::Changed ? 1 : 0);
    if (probabilities) out << ',' << (*probabilities)[i];
    out << '\n';
  }
}

void write_eval_csv(const fs::path& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "metric,value\n";
  out << "iou_changed," << report.iou_changed << '\n';
  out << "corridor_iou_changed," << report.corridor_iou_changed << '\n';
  out << "miou," << report.miou << '\n';
  out << "frames," << report.frames << '\n';
  out << "tp," << report.full.tp << "\nfp," << report.full.fp << "\nfn," << report.full.fn
      << "\ntn," << report.full.tn << '\n';
  out << "corridor_tp," << report.corridor.tp << "\ncorridor_fp," << report.corridor.fp
      << "\ncorridor_fn," << report.corridor.fn << "\ncorridor_tn," << report.corridor.tn << '\n';
  if (report.runtime_mean_ms > 0.0) {
    out << "runtime_mean_ms," << report.runtime_mean_ms << '\n';
    out << "runtime_std_ms," << report.runtime_std_ms << '\n';
  }
}

struct TrainFlags {
  std::vector<std::string> seqs;
  std::string out_ckpt;
  std::string log_csv;
  double map_voxel = 0.2;
  double live_voxel = 0.05;
  double lambda1 = 15.0;
  double lambda2 = 1.0;
  std::uint64_t seed = 0;
  std::size_t steps = 200;
  std::size_t pair_spacing = 1;
  double learning_rate = 1e-3;
  int height = 32;
  int width = 256;
  std::vector<int> channels = {16, 32, 64, 128};
  double fov = 25.0;
  double fov_down = 12.5;
  double max_range = 10.0;
  bool no_chamfer = false;
  bool no_class = false;
  bool no_temporal = false;
  bool no_early_stop = false;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--seq", f.seqs, "Sequence directories")->required()->expected(-1);
  cmd->add_option("--out", f.out_ckpt, "Output checkpoint path")->required();
  cmd->add_option("--log", f.log_csv, "Training log CSV path");
  cmd->add_option("--map-voxel", f.map_voxel, "Map voxel size, metres");
  cmd->add_option("--live-voxel", f.live_voxel, "Live-scan voxel size, metres");
  cmd->add_option("--lambda1", f.lambda1, "Class-balance weight");
  cmd->add_option("--lambda2", f.lambda2, "Temporal-consistency weight");
  cmd->add_option("--seed", f.seed, "RNG seed");
  cmd->add_option("--steps", f.steps, "Training steps");
  cmd->add_option("--pair-spacing", f.pair_spacing, "Frame index gap within a temporal pair");
  cmd->add_option("--lr", f.learning_rate, "Base learning rate");
  cmd->add_option("--height", f.height, "Range image height");
  cmd->add_option("--width", f.width, "Range image width");
  cmd->add_option("--channels", f.channels, "Encoder channels (4 values)")->expected(4);
  cmd->add_option("--fov", f.fov, "Vertical field of view, degrees");
  cmd->add_option("--fov-down", f.fov_down, "Downward field of view, degrees");
  cmd->add_option("--max-range", f.max_range, "Maximum range, metres");
  cmd->add_flag("--no-chamfer", f.no_chamfer, "Disable the chamfer term");
  cmd->add_flag("--no-class", f.no_class, "Disable the class-balance term");
  cmd->add_flag("--no-temporal", f.no_temporal, "Disable the temporal term");
  cmd->add_flag("--no-early-stop", f.no_early_stop, "Disable plateau early stopping");
}

TrainConfig to_train_config(const TrainFlags& f) {
  TrainConfig cfg;
  cfg.model.height = f.height;
  cfg.model.width = f.width;
  std::copy_n(f.channels.begin(), 4, cfg.model.encoder_channels.begin());
  cfg.projection.height = f.height;
  cfg.projection.width = f.width;
  cfg.projection.fov_deg = f.fov;
  cfg.projection.fov_down_deg = f.fov_down;
  cfg.projection.max_range = f.max_range;
  cfg.weights.lambda1 = f.lambda1;
  cfg.weights.lambda2 = f.lambda2;
  cfg.optimizer.learning_rate = f.learning_rate;
  cfg.map_voxel = f.map_voxel;
  cfg.live_voxel = f.live_voxel;
  cfg.pair_spacing = f.pair_spacing;
  cfg.steps = f.steps;
  cfg.seed = f.seed;
  cfg.use_chamfer = !f.no_chamfer;
  cfg.use_class = !f.no_class;
  cfg.use_temporal = !f.no_temporal;
  cfg.early_stop = !f.no_early_stop;
  return cfg;
}

std::vector<Sequence> load_sequences(const std::vector<std::string>& dirs, double max_range) {
  std::vector<Sequence> seqs;
  seqs.reserve(dirs.size());
  for (const auto& dir : dirs) seqs.push_back(load_sequence(dir, max_range));
  return seqs;
}

std::vector<const Sequence*> sequence_ptrs(const std::vector<Sequence>& seqs) {
  std::vector<const Sequence*> ptrs;
  for (const auto& s : seqs) ptrs.push_back(&s);
  return ptrs;
}

int run_training(const TrainFlags& flags, const std::string& init_ckpt, double lr_scale) {
  const TrainConfig cfg = to_train_config(flags);
  const std::vector<Sequence> seqs = load_sequences(flags.seqs, cfg.projection.max_range);

  const auto progress = [&](std::size_t step, const TrainLogRow& row) {
    if (step % 25 == 0 || step + 1 == cfg.steps) {
      std::printf("step %zu  chamfer %.6f  class %.6f  temporal %.6f  total %.6f\n", step,
                  row.chamfer, row.class_balance, row.temporal, row.total);
    }
    return true;
  };

  TrainResult result = init_ckpt.empty()
                           ? train(sequence_ptrs(seqs), cfg, progress)
                           : finetune(ChangeModel::load(init_ckpt), sequence_ptrs(seqs), cfg,
                                      lr_scale, progress);
  result.model.save(flags.out_ckpt);
  if (!flags.log_csv.empty()) write_training_log(result.log, flags.log_csv);
  std::printf("saved checkpoint to %s (%zu steps logged)\n", flags.out_ckpt.c_str(),
              result.log.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR change detection: synthetic data, training, and evaluation"};
  app.require_subcommand(1);

  // generate
  std::string gen_spec, gen_out;
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("generate", "Generate a synthetic teach-and-repeat sequence");
  gen->add_option("--spec", gen_spec, "Scene spec TOML file")->required();
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--out", gen_out, "Output sequence directory")->required();

  // render
  std::string ren_seq, ren_out, ren_model;
  std::size_t ren_frame = 0;
  double ren_map_voxel = 0.2, ren_live_voxel = 0.05, ren_max_range = 10.0;
  double ren_robot_radius = 0.5, ren_cell = 0.1, ren_half_extent = 12.8;
  bool ren_costmap = false;
  auto* ren = app.add_subcommand("render", "Render range images (and cost maps) as 16-bit PGM");
  ren->add_option("--seq", ren_seq, "Sequence directory")->required();
  ren->add_option("--frame", ren_frame, "Frame index");
  ren->add_option("--out", ren_out, "Output directory")->required();
  ren->add_option("--model", ren_model, "Optional checkpoint for label masks");
  ren->add_option("--map-voxel", ren_map_voxel, "Map voxel size, metres");
  ren->add_option("--live-voxel", ren_live_voxel, "Live-scan voxel size, metres");
  ren->add_option("--max-range", ren_max_range, "Maximum range, metres");
  ren->add_flag("--costmap", ren_costmap, "Also emit the inflated cost map (needs --model)");
  ren->add_option("--robot-radius", ren_robot_radius, "Inflation radius, metres");
  ren->add_option("--cell-size", ren_cell, "Cost map cell size, metres");
  ren->add_option("--half-extent", ren_half_extent, "Cost map half extent, metres");

  // train / finetune
  TrainFlags train_flags, tune_flags;
  auto* trn = app.add_subcommand("train", "Train a change-detection model from scratch");
  add_train_flags(trn, train_flags);
  auto* tune = app.add_subcommand("finetune", "Fine-tune from an existing checkpoint");
  std::string tune_init;
  double tune_lr_scale = 0.1;
  add_train_flags(tune, tune_flags);
  tune->add_option("--init", tune_init, "Checkpoint to start from")->required();
  tune->add_option("--lr-scale", tune_lr_scale, "Learning-rate scale relative to --lr");

  // infer
  std::string inf_model, inf_seq, inf_out;
  std::size_t inf_frame = 0;
  double inf_map_voxel = 0.2, inf_live_voxel = 0.05, inf_threshold = 0.5;
  auto* inf = app.add_subcommand("infer", "Label one frame with a trained model");
  inf->add_option("--model", inf_model, "Checkpoint path")->required();
  inf->add_option("--seq", inf_seq, "Sequence directory")->required();
  inf->add_option("--frame", inf_frame, "Frame index");
  inf->add_option("--out", inf_out, "Output CSV (index,label,probability)")->required();
  inf->add_option("--map-voxel", inf_map_voxel, "Map voxel size, metres");
  inf->add_option("--live-voxel", inf_live_voxel, "Live-scan voxel size, metres");
  inf->add_option("--threshold", inf_threshold, "Changed-probability threshold");

  // baseline
  std::string base_seq, base_out;
  std::size_t base_frame = 0;
  double base_threshold = 0.3, base_map_voxel = 0.2, base_live_voxel = 0.05;
  auto* base = app.add_subcommand("baseline", "Label one frame with the nearest-neighbour baseline");
  base->add_option("--seq", base_seq, "Sequence directory")->required();
  base->add_option("--frame", base_frame, "Frame index");
  base->add_option("--out", base_out, "Output CSV (index,label)")->required();
  base->add_option("--threshold", base_threshold, "NN distance threshold, metres");
  base->add_option("--map-voxel", base_map_voxel, "Map voxel size, metres");
  base->add_option("--live-voxel", base_live_voxel, "Live-scan voxel size, metres");

  // eval
  std::string eval_model, eval_seq, eval_out;
  double eval_corridor_width = 5.0, eval_range = 10.0;
  double eval_map_voxel = 0.2, eval_live_voxel = 0.05, eval_threshold = 0.5;
  bool eval_runtime = false;
  auto* evl = app.add_subcommand("eval", "Evaluate a model over a sequence");
  evl->add_option("--model", eval_model, "Checkpoint path")->required();
  evl->add_option("--seq", eval_seq, "Sequence directory")->required();
  evl->add_option("--corridor-width", eval_corridor_width, "Corridor width, metres");
  evl->add_option("--range", eval_range, "Corridor range limit, metres");
  evl->add_option("--out", eval_out, "Report CSV path");
  evl->add_option("--map-voxel", eval_map_voxel, "Map voxel size, metres");
  evl->add_option("--live-voxel", eval_live_voxel, "Live-scan voxel size, metres");
  evl->add_option("--threshold", eval_threshold, "Changed-probability threshold");
  evl->add_flag("--runtime", eval_runtime, "Measure per-frame inference runtime");

  // study
  std::string study_kind, study_train_seq, study_eval_seq, study_out;
  TrainFlags study_flags;
  study_flags.steps = 120;
  auto* study = app.add_subcommand("study", "Run a study and write its CSV table");
  study->add_option("--kind", study_kind, "voxel_sweep | loss_ablation | method_compare")
      ->required()
      ->check(CLI::IsMember({"voxel_sweep", "loss_ablation", "method_compare"}));
  study->add_option("--train-seq", study_train_seq, "Training sequence directory")->required();
  study->add_option("--eval-seq", study_eval_seq, "Evaluation sequence directory")->required();
  study->add_option("--out", study_out, "Output CSV path")->required();
  study->add_option("--steps", study_flags.steps, "Training steps per study cell");
  study->add_option("--seed", study_flags.seed, "RNG seed");
  study->add_option("--lambda1", study_flags.lambda1, "Class-balance weight");
  study->add_option("--lambda2", study_flags.lambda2, "Temporal-consistency weight");
  study->add_option("--height", study_flags.height, "Range image height");
  study->add_option("--width", study_flags.width, "Range image width");
  study->add_option("--channels", study_flags.channels, "Encoder channels (4 values)")
      ->expected(4);
  study->add_option("--map-voxel", study_flags.map_voxel, "Map voxel size, metres");
  study->add_option("--live-voxel", study_flags.live_voxel, "Live-scan voxel size, metres");
  study->add_option("--max-range", study_flags.max_range, "Maximum range, metres");

  // bench
  std::string bench_model, bench_seq;
  std::size_t bench_min_frames = 100;
  double bench_map_voxel = 0.2, bench_live_voxel = 0.05;
  auto* bench = app.add_subcommand("bench", "Measure end-to-end inference runtime");
  bench->add_option("--model", bench_model, "Checkpoint path")->required();
  bench->add_option("--seq", bench_seq, "Sequence directory")->required();
  bench->add_option("--min-frames", bench_min_frames, "Minimum frames to time");
  bench->add_option("--map-voxel", bench_map_voxel, "Map voxel size, metres");
  bench->add_option("--live-voxel", bench_live_voxel, "Live-scan voxel size, metres");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const SceneSpec spec = load_scene_spec(gen_spec);
      const Sequence seq = generate_sequence(spec, gen_seed);
      save_sequence(seq, gen_out);
      std::printf("wrote %zu frames (%zu map points) to %s\n", seq.frames.size(),
                  seq.map.size(), gen_out.c_str());
    } else if (ren->parsed()) {
      const Sequence seq = load_sequence(ren_seq, ren_max_range);
      if (ren_frame >= seq.frames.size()) throw std::invalid_argument("frame index out of range");
      const Frame& frame = seq.frames[ren_frame];
      fs::create_directories(ren_out);

      ProjectionConfig proj;
      proj.max_range = ren_max_range;
      if (!ren_model.empty()) {
        const ChangeModel model = ChangeModel::load(ren_model);
        proj.height = model.config().height;
        proj.width = model.config().width;
        const InferenceResult r =
            infer_frame(model, frame, proj, ren_map_voxel, ren_live_voxel);
        write_pgm16(range_to_pgm(r.live_image), proj.width, proj.height,
                    fs::path(ren_out) / "live.pgm");
        write_pgm16(range_to_pgm(r.map_image), proj.width, proj.height,
                    fs::path(ren_out) / "map.pgm");
        write_pgm16(labels_to_pgm(r.pixel_labels), proj.width, proj.height,
                    fs::path(ren_out) / "labels.pgm");
        if (ren_costmap) {
          PointCloud changed_world;
          const PointCloud world = transform(frame.live, frame.pose);
          for (std::size_t i = 0; i < r.labels.size(); ++i) {
            if (r.labels[i] == Label::Changed) changed_world.points.push_back(world.points[i]);
          }
          const CostMap cm =
              inflate(changed_world, ren_robot_radius, {ren_cell, ren_half_extent}, frame.pose);
          std::vector<std::uint16_t> pixels(cm.cells.size());
          for (std::size_t k = 0; k < cm.cells.size(); ++k) {
            pixels[k] = cm.cells[k] > 0.0 ? 65535 : 0;
          }
          write_pgm16(pixels, cm.size(), cm.size(), fs::path(ren_out) / "costmap.pgm");
          std::ofstream cells(fs::path(ren_out) / "costmap_cells.csv");
          cells << "row,col,x,y\n";
          for (int row = 0; row < cm.size(); ++row) {
            for (int col = 0; col < cm.size(); ++col) {
              if (cm.at(row, col) > 0.0) {
                const Eigen::Vector2d c = cm.cell_center(row, col);
                cells << row << ',' << col << ',' << c.x() << ',' << c.y() << '\n';
              }
            }
          }
        }
      } else {
        const PointCloud live = voxel_downsample(strip_intensity(frame.live), ren_live_voxel);
        const RangeImage live_img = render(live, proj);
        const RangeImage map_img =
            render(voxel_downsample(frame.map_view, ren_map_voxel), proj);
        write_pgm16(range_to_pgm(live_img), proj.width, proj.height,
                    fs::path(ren_out) / "live.pgm");
        write_pgm16(range_to_pgm(map_img), proj.width, proj.height,
                    fs::path(ren_out) / "map.pgm");
      }
      std::printf("rendered frame %zu into %s\n", ren_frame, ren_out.c_str());
    } else if (trn->parsed()) {
      return run_training(train_flags, "", 1.0);
    } else if (tune->parsed()) {
      return run_training(tune_flags, tune_init, tune_lr_scale);
    } else if (inf->parsed()) {
      const ChangeModel model = ChangeModel::load(inf_model);
      ProjectionConfig proj;
      proj.height = model.config().height;
      proj.width = model.config().width;
      const Sequence seq = load_sequence(inf_seq, proj.max_range);
      if (inf_frame >= seq.frames.size()) throw std::invalid_argument("frame index out of range");
      const InferenceResult r = infer_frame(model, seq.frames[inf_frame], proj, inf_map_voxel,
                                            inf_live_voxel, inf_threshold);
      write_point_labels_csv(inf_out, r.labels, &r.probabilities);
      std::printf("labelled %zu points -> %s\n", r.labels.size(), inf_out.c_str());
    } else if (base->parsed()) {
      const Sequence seq = load_sequence(base_seq);
      if (base_frame >= seq.frames.size()) throw std::invalid_argument("frame index out of range");
      const Frame& frame = seq.frames[base_frame];
      std::vector<std::uint32_t> point_to_rep;
      const PointCloud live =
          voxel_downsample_with_map(strip_intensity(frame.live), base_live_voxel, point_to_rep);
      const SpatialIndex map_index(voxel_downsample(frame.map_view, base_map_voxel));
      const std::vector<Label> rep_labels =
          nn_classify(live, map_index, BaselineConfig{base_threshold});
      std::vector<Label> labels(frame.live.size());
      for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = rep_labels[point_to_rep[i]];
      write_point_labels_csv(base_out, labels, nullptr);
      std::printf("labelled %zu points -> %s\n", labels.size(), base_out.c_str());
    } else if (evl->parsed()) {
      const ChangeModel model = ChangeModel::load(eval_model);
      EvalConfig cfg;
      cfg.projection.height = model.config().height;
      cfg.projection.width = model.config().width;
      cfg.map_voxel = eval_map_voxel;
      cfg.live_voxel = eval_live_voxel;
      cfg.threshold = eval_threshold;
      cfg.corridor_width = eval_corridor_width;
      cfg.corridor_range = eval_range;
      cfg.measure_runtime = eval_runtime;
      const Sequence seq = load_sequence(eval_seq, cfg.projection.max_range);
      const EvalReport report = evaluate_model(model, seq, cfg);
      std::printf("IoU_ch %.4f  corridor IoU_ch %.4f  mIoU %.4f over %llu frames\n",
                  report.iou_changed, report.corridor_iou_changed, report.miou,
                  static_cast<unsigned long long>(report.frames));
      if (eval_runtime) {
        std::printf("runtime %.2f +/- %.2f ms/frame\n", report.runtime_mean_ms,
                    report.runtime_std_ms);
      }
      if (!eval_out.empty()) write_eval_csv(eval_out, report);
    } else if (study->parsed()) {
      const TrainConfig train_cfg = to_train_config(study_flags);
      EvalConfig eval_cfg;
      eval_cfg.projection = train_cfg.projection;
      eval_cfg.map_voxel = train_cfg.map_voxel;
      eval_cfg.live_voxel = train_cfg.live_voxel;
      const Sequence train_seq = load_sequence(study_train_seq, train_cfg.projection.max_range);
      const Sequence eval_seq = load_sequence(study_eval_seq, train_cfg.projection.max_range);
      StudyTable table;
      if (study_kind == "voxel_sweep") {
        table = voxel_sweep_study(train_seq, eval_seq, train_cfg, eval_cfg);
      } else if (study_kind == "loss_ablation") {
        table = loss_ablation_study(train_seq, eval_seq, train_cfg, eval_cfg);
      } else {
        table = method_compare_study(train_seq, eval_seq, train_cfg, eval_cfg);
      }
      table.write_csv(study_out);
      std::printf("wrote %s table (%zu rows) to %s\n", table.name.c_str(), table.rows.size(),
                  study_out.c_str());
    } else if (bench->parsed()) {
      const ChangeModel model = ChangeModel::load(bench_model);
      EvalConfig cfg;
      cfg.projection.height = model.config().height;
      cfg.projection.width = model.config().width;
      cfg.map_voxel = bench_map_voxel;
      cfg.live_voxel = bench_live_voxel;
      cfg.measure_runtime = true;
      Sequence seq = load_sequence(bench_seq, cfg.projection.max_range);
      while (seq.frames.size() < bench_min_frames && !seq.frames.empty()) {
        // Repeat the sequence to reach the requested sample count.
        const std::size_t base_count = seq.frames.size();
        for (std::size_t i = 0; i < base_count && seq.frames.size() < bench_min_frames; ++i) {
          seq.frames.push_back(seq.frames[i]);
        }
      }
      const EvalReport report = evaluate_model(model, seq, cfg);
      std::printf("%llu frames at %dx%d: %.2f +/- %.2f ms/frame\n",
                  static_cast<unsigned long long>(report.frames), cfg.projection.height,
                  cfg.projection.width, report.runtime_mean_ms, report.runtime_std_ms);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
