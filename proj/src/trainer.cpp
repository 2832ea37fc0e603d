#include "rangecd/trainer.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace rangecd {

AdamOptimizer::AdamOptimizer(OptimizerConfig cfg, std::size_t parameter_count)
    : cfg_(cfg), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

void AdamOptimizer::step(std::vector<ChangeModel::ParamRef>& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  std::size_t offset = 0;
  for (auto& ref : params) {
    for (std::size_t k = 0; k < ref.count; ++k) {
      const double g = ref.grads[k];
      double& m = m_[offset + k];
      double& v = v_[offset + k];
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      ref.values[k] -= cfg_.learning_rate *
                       (mhat / (std::sqrt(vhat) + cfg_.epsilon) + cfg_.weight_decay * ref.values[k]);
    }
    offset += ref.count;
  }
  if (offset != m_.size()) throw std::logic_error("optimizer state size mismatch");
}

namespace {

// Per-frame quantities that do not depend on model parameters.
struct PreparedFrame {
  Tensor input;
  std::vector<double> chamfer_dist;  // NN distance to the downsampled map view
  // Mapping from downsampled live point to its populated raster pixel.
  std::vector<std::int64_t> point_pixel;  // -1 when outside a populated pixel
  std::size_t n = 0;
  PointCloud live_world;  // downsampled live scan in the world frame
};

PreparedFrame prepare_frame(const Frame& frame, const ProjectionConfig& projection,
                            double map_voxel, double live_voxel) {
  PreparedFrame out;
  const PointCloud live_ds = voxel_downsample(strip_intensity(frame.live), live_voxel);
  const PointCloud map_ds = voxel_downsample(frame.map_view, map_voxel);
  const RangeImage live_img = render(live_ds, projection);
  const RangeImage map_img = render(map_ds, projection);
  out.input = ChangeModel::stack_inputs(live_img, map_img, projection.max_range);
  out.n = live_ds.size();

  const SpatialIndex map_index(map_ds);
  out.chamfer_dist.resize(live_ds.size());
  out.point_pixel.assign(live_ds.size(), -1);
  for (std::size_t i = 0; i < live_ds.size(); ++i) {
    out.chamfer_dist[i] = map_index.nearest(live_ds.points[i]).distance;
    int v, u;
    if (point_pixel(live_ds.points[i], projection, v, u)) {
      const std::size_t k = static_cast<std::size_t>(v) * projection.width + u;
      if (live_img.index_map[k] != RangeImage::kNoPoint) {
        out.point_pixel[i] = static_cast<std::int64_t>(k);
      }
    }
  }
  out.live_world = transform(live_ds, frame.pose);
  out.live_world.frame_id = "world";
  return out;
}

// One training unit: two prepared frames plus the constant per-point and
// per-pixel gradients of the (linear-in-p) objective.
struct PreparedPair {
  const PreparedFrame* f0;
  const PreparedFrame* f1;
  std::vector<double> temporal_dist0, temporal_dist1;
  std::vector<double> raster_grad0, raster_grad1;
  std::vector<double> point_grad0, point_grad1;
};

std::vector<double> rasterize_gradient(const std::vector<double>& point_grad,
                                       const std::vector<std::int64_t>& point_pixel,
                                       std::size_t raster_size) {
  std::vector<double> raster(raster_size, 0.0);
  for (std::size_t i = 0; i < point_grad.size(); ++i) {
    if (point_pixel[i] >= 0) raster[static_cast<std::size_t>(point_pixel[i])] += point_grad[i];
  }
  return raster;
}

double weighted_mean(const std::vector<double>& weights, const std::vector<double>& values,
                     bool complement) {
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc += (complement ? 1.0 - weights[i] : weights[i]) * values[i];
  }
  return acc / static_cast<double>(values.size());
}

}  // namespace

TrainResult train(const std::vector<const Sequence*>& sequences, const TrainConfig& cfg,
                  const StepCallback& callback) {
  ChangeModel model(cfg.model, cfg.seed);
  return finetune(model, sequences, cfg, /*lr_scale=*/1.0, callback);
}

TrainResult finetune(const ChangeModel& checkpoint, const std::vector<const Sequence*>& sequences,
                     TrainConfig cfg, double lr_scale, const StepCallback& callback) {
  if (!(checkpoint.config() == cfg.model)) {
    throw std::invalid_argument("checkpoint configuration does not match training config");
  }
  cfg.weights.validate();
  if (sequences.empty()) throw std::invalid_argument("no training sequences");
  cfg.optimizer.learning_rate *= lr_scale;

  // Geometry-dependent constants are precomputed once; training then only
  // touches the network.
  std::vector<std::vector<PreparedFrame>> prepared;
  std::vector<PreparedPair> pairs;
  for (const Sequence* seq : sequences) {
    if (seq->frames.size() < 2) throw std::invalid_argument("sequence needs >= 2 frames");
    std::vector<PreparedFrame> frames;
    frames.reserve(seq->frames.size());
    for (const Frame& f : seq->frames) {
      frames.push_back(prepare_frame(f, cfg.projection, cfg.map_voxel, cfg.live_voxel));
    }
    prepared.push_back(std::move(frames));
  }
  const std::size_t raster_size =
      static_cast<std::size_t>(cfg.projection.height) * cfg.projection.width;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    for (const FramePair& fp : pair_frames(sequences[s]->frames.size(), cfg.pair_spacing)) {
      PreparedPair pair;
      pair.f0 = &prepared[s][fp.first];
      pair.f1 = &prepared[s][fp.second];

      const SpatialIndex idx0(pair.f0->live_world);
      const SpatialIndex idx1(pair.f1->live_world);
      pair.temporal_dist0.resize(pair.f0->n);
      pair.temporal_dist1.resize(pair.f1->n);
      for (std::size_t i = 0; i < pair.f0->n; ++i) {
        pair.temporal_dist0[i] = idx1.nearest(pair.f0->live_world.points[i]).distance;
      }
      for (std::size_t i = 0; i < pair.f1->n; ++i) {
        pair.temporal_dist1[i] = idx0.nearest(pair.f1->live_world.points[i]).distance;
      }

      // The objective is linear in every p_i, so d total / d p_i is a
      // constant assembled from NN distances and the loss weights.
      auto point_grads = [&](const PreparedFrame& f, const std::vector<double>& temporal_dist) {
        std::vector<double> g(f.n, 0.0);
        const double n = static_cast<double>(f.n);
        for (std::size_t i = 0; i < f.n; ++i) {
          if (cfg.use_chamfer) g[i] += 0.5 * (-f.chamfer_dist[i] / n);
          if (cfg.use_class) g[i] += cfg.weights.lambda1 * 0.5 / n;
          if (cfg.use_temporal) g[i] += cfg.weights.lambda2 * temporal_dist[i] / n;
        }
        return g;
      };
      pair.point_grad0 = point_grads(*pair.f0, pair.temporal_dist0);
      pair.point_grad1 = point_grads(*pair.f1, pair.temporal_dist1);
      pair.raster_grad0 = rasterize_gradient(pair.point_grad0, pair.f0->point_pixel, raster_size);
      pair.raster_grad1 = rasterize_gradient(pair.point_grad1, pair.f1->point_pixel, raster_size);
      pairs.push_back(std::move(pair));
    }
  }
  if (pairs.empty()) throw std::invalid_argument("pair spacing leaves no temporal batches");

  TrainResult result{checkpoint.clone(), {}};
  ChangeModel& model = result.model;
  AdamOptimizer optimizer(cfg.optimizer, [&] {
    std::size_t total = 0;
    for (const auto& ref : model.parameters()) total += ref.count;
    return total;
  }());
  auto params = model.parameters();

  double best_epoch_loss = std::numeric_limits<double>::infinity();
  std::size_t epochs_since_best = 0;
  double epoch_loss_acc = 0.0;
  std::size_t epoch_steps = 0;

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const PreparedPair& pair = pairs[step % pairs.size()];
    model.zero_gradients();

    auto run_half = [&](const PreparedFrame& f, const std::vector<double>& raster_grad) {
      const PixelLogits logits = model.forward_training(f.input);
      std::vector<double> p_raster = changed_probabilities(logits);
      model.backward(raster_grad);
      // Per-point probability: its populated pixel's value, else 0.
      std::vector<double> p(f.n, 0.0);
      for (std::size_t i = 0; i < f.n; ++i) {
        if (f.point_pixel[i] >= 0) p[i] = p_raster[static_cast<std::size_t>(f.point_pixel[i])];
      }
      return p;
    };
    const std::vector<double> p0 = run_half(*pair.f0, pair.raster_grad0);
    const std::vector<double> p1 = run_half(*pair.f1, pair.raster_grad1);

    TrainLogRow row;
    row.step = step;
    row.chamfer = 0.5 * (weighted_mean(p0, pair.f0->chamfer_dist, true) +
                         weighted_mean(p1, pair.f1->chamfer_dist, true));
    row.class_balance =
        0.5 * (class_balance_loss(p0).value + class_balance_loss(p1).value);
    row.temporal = weighted_mean(p0, pair.temporal_dist0, false) +
                   weighted_mean(p1, pair.temporal_dist1, false);
    row.total = (cfg.use_chamfer ? row.chamfer : 0.0) +
                (cfg.use_class ? cfg.weights.lambda1 * row.class_balance : 0.0) +
                (cfg.use_temporal ? cfg.weights.lambda2 * row.temporal : 0.0);

    optimizer.step(params);
    result.log.push_back(row);
    if (callback && !callback(step, row)) break;

    epoch_loss_acc += row.total;
    ++epoch_steps;
    if (cfg.early_stop && epoch_steps == pairs.size()) {
      const double epoch_loss = epoch_loss_acc / static_cast<double>(epoch_steps);
      if (epoch_loss < best_epoch_loss - 1e-12) {
        best_epoch_loss = epoch_loss;
        epochs_since_best = 0;
      } else if (++epochs_since_best >= cfg.patience_epochs) {
        break;
      }
      epoch_loss_acc = 0.0;
      epoch_steps = 0;
    }
  }
  return result;
}

void write_training_log(const std::vector<TrainLogRow>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "step,chamfer,class,temporal,total\n";
  out.precision(17);
  for (const auto& row : log) {
    out << row.step << "," << row.chamfer << "," << row.class_balance << "," << row.temporal
        << "," << row.total << "\n";
  }
}

InferenceResult infer_frame(const ChangeModel& model, const Frame& frame,
                            const ProjectionConfig& projection, double map_voxel,
                            double live_voxel, double threshold) {
  std::vector<std::uint32_t> point_to_rep;
  const PointCloud live_ds =
      voxel_downsample_with_map(strip_intensity(frame.live), live_voxel, point_to_rep);
  const PointCloud map_ds = voxel_downsample(frame.map_view, map_voxel);

  InferenceResult out;
  out.live_image = render(live_ds, projection);
  out.map_image = render(map_ds, projection);
  const PixelLogits logits = model.forward(out.live_image, out.map_image);
  out.pixel_labels = predict_labels(logits, threshold);
  const std::vector<double> pixel_probs = changed_probabilities(logits);

  const std::vector<Label> rep_labels = backproject_labels(out.pixel_labels, out.live_image, live_ds);
  const std::vector<double> rep_probs =
      backproject_values(pixel_probs, out.live_image, live_ds, 0.0);

  out.labels.resize(frame.live.size());
  out.probabilities.resize(frame.live.size());
  for (std::size_t i = 0; i < frame.live.size(); ++i) {
    out.labels[i] = rep_labels[point_to_rep[i]];
    out.probabilities[i] = rep_probs[point_to_rep[i]];
  }
  return out;
}

}  // namespace rangecd
