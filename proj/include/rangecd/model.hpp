#ifndef RANGECD_MODEL_HPP
#define RANGECD_MODEL_HPP

#include <array>
#include <filesystem>
#include <memory>
#include <string>

#include "rangecd/projection.hpp"
#include "rangecd/tensor.hpp"

namespace rangecd {

/// Encoder-decoder configuration. Four encoder stages; H and W must be
/// divisible by 2^(stages-1) = 8. The first and last convolutions use a
/// 1x2 kernel, interior convolutions 3x3.
struct ModelConfig {
  int height = 32;
  int width = 256;
  std::array<int, 4> encoder_channels = {16, 32, 64, 128};
  int num_classes = 2;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Per-pixel pre-softmax class scores, shape (num_classes, H, W).
using PixelLogits = Tensor;

/// Softmax Changed probability per pixel (class 1).
std::vector<double> changed_probabilities(const PixelLogits& logits);

/// Changed where p(changed) > threshold; ties resolve to Consistent.
std::vector<Label> predict_labels(const PixelLogits& logits, double threshold = 0.5);

/// Per-pixel change classifier over stacked (live, map) range images with
/// self-contained reverse-mode differentiation. forward/predict are safe
/// concurrently on a shared const model; backward requires the forward
/// state retained by the same instance.
class ChangeModel {
 public:
  explicit ChangeModel(const ModelConfig& cfg, std::uint64_t seed = 0);
  ~ChangeModel();
  ChangeModel(ChangeModel&&) noexcept;
  ChangeModel& operator=(ChangeModel&&) noexcept;
  ChangeModel(const ChangeModel&) = delete;
  ChangeModel& operator=(const ChangeModel&) = delete;

  const ModelConfig& config() const;

  /// Deep copy of configuration and parameters (forward state excluded).
  ChangeModel clone() const;

  /// Ranges are normalized by max_range; empty pixels enter as 0.
  static Tensor stack_inputs(const RangeImage& live, const RangeImage& map, double max_range);

  /// Inference-only forward pass (no state retained).
  PixelLogits forward(const Tensor& input) const;
  PixelLogits forward(const RangeImage& live, const RangeImage& map) const;

  /// Forward pass retaining activations for backward().
  PixelLogits forward_training(const Tensor& input);

  /// Backpropagates d loss / d p(changed) per pixel through softmax and the
  /// network, accumulating parameter gradients. Throws if no training
  /// forward state is held.
  void backward(const std::vector<double>& dloss_dpchanged);

  /// Named views over parameters and their gradient accumulators.
  struct ParamRef {
    std::string name;
    double* values;
    double* grads;
    std::size_t count;
  };
  std::vector<ParamRef> parameters();

  void zero_gradients();
  std::size_t parameter_count() const;

  void save(const std::filesystem::path& path) const;
  static ChangeModel load(const std::filesystem::path& path);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Parameter count implied by a configuration, without building a model.
std::size_t parameter_count(const ModelConfig& cfg);

}  // namespace rangecd

#endif
