#ifndef RANGECD_LOSSES_HPP
#define RANGECD_LOSSES_HPP

#include <vector>

#include "rangecd/geometry.hpp"

namespace rangecd {

/// Weights of the combined objective:
///   total = chamfer + lambda1 * class_balance + lambda2 * temporal
struct LossWeights {
  double lambda1 = 15.0;
  double lambda2 = 1.0;

  void validate() const {
    if (lambda1 < 0.0 || lambda2 < 0.0) throw std::invalid_argument("loss weights must be >= 0");
  }
};

/// Per-point softmax probability of the Changed class, p(l_i = 1).
using ChangeProbabilities = std::vector<double>;

struct LossTerm {
  double value = 0.0;
  std::vector<double> gradient;  // d value / d p_i
};

struct TemporalLossResult {
  double value = 0.0;
  std::vector<double> gradient0;
  std::vector<double> gradient1;
};

struct LossBreakdown {
  double chamfer = 0.0;
  double class_balance = 0.0;
  double temporal = 0.0;
  double total = 0.0;
  std::vector<double> gradient0;  // d total / d p0_i
  std::vector<double> gradient1;  // d total / d p1_i
};

/// Consistency-weighted chamfer term:
///   (1/n) * sum_i (1 - p_i) * min_j ||m_j - s_i||
/// Nearest-neighbour distances are constants w.r.t. p, so the gradient
/// entry for point i is -d_i / n.
LossTerm chamfer_loss(const PointCloud& scan, const SpatialIndex& map_index,
                      const ChangeProbabilities& p);

/// Mean Changed probability, (1/n) * sum_i p_i; gradient 1/n everywhere.
LossTerm class_balance_loss(const ChangeProbabilities& p);

/// Bidirectional chamfer between consecutive live scans, weighted by the
/// Changed probability on each side.
TemporalLossResult temporal_loss(const PointCloud& scan0, const ChangeProbabilities& p0,
                                 const PointCloud& scan1, const ChangeProbabilities& p1);

/// Combined objective over a two-pair batch. Chamfer and class terms are
/// averaged over the two pairs; the temporal term couples the pair of live
/// scans. Gradients are assembled by linearity.
LossBreakdown total_loss(const PointCloud& scan0, const SpatialIndex& map0,
                         const ChangeProbabilities& p0, const PointCloud& scan1,
                         const SpatialIndex& map1, const ChangeProbabilities& p1,
                         const LossWeights& weights);

}  // namespace rangecd

#endif
