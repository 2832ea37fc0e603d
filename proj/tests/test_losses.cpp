#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "rangecd/losses.hpp"

using namespace rangecd;

namespace {

PointCloud random_cloud(std::size_t n, std::mt19937_64& rng, double extent = 5.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  PointCloud cloud;
  for (std::size_t i = 0; i < n; ++i) cloud.points.emplace_back(u(rng), u(rng), u(rng));
  return cloud;
}

ChangeProbabilities random_probs(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ChangeProbabilities p(n);
  for (double& v : p) v = u(rng);
  return p;
}

double brute_nn(const PointCloud& cloud, const Point3& q) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : cloud.points) best = std::min(best, (m - q).norm());
  return best;
}

// Double-loop reference for the consistency-weighted chamfer term.
double brute_chamfer(const PointCloud& scan, const PointCloud& map,
                     const ChangeProbabilities& p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    acc += (1.0 - p[i]) * brute_nn(map, scan.points[i]);
  }
  return acc / static_cast<double>(scan.size());
}

double brute_temporal(const PointCloud& s0, const ChangeProbabilities& p0, const PointCloud& s1,
                      const ChangeProbabilities& p1) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s0.size(); ++i) {
    acc += p0[i] * brute_nn(s1, s0.points[i]) / static_cast<double>(s0.size());
  }
  for (std::size_t i = 0; i < s1.size(); ++i) {
    acc += p1[i] * brute_nn(s0, s1.points[i]) / static_cast<double>(s1.size());
  }
  return acc;
}

}  // namespace

TEST_CASE("chamfer is zero when the scan is a subset of the map") {
  std::mt19937_64 rng(1);
  const PointCloud map = random_cloud(50, rng);
  PointCloud scan;
  scan.points.assign(map.points.begin(), map.points.begin() + 20);
  const SpatialIndex index(map);
  const auto loss = chamfer_loss(scan, index, random_probs(20, rng));
  CHECK(loss.value == doctest::Approx(0).epsilon(1e-15));
}

TEST_CASE("chamfer is zero when every point is fully Changed") {
  std::mt19937_64 rng(2);
  const PointCloud map = random_cloud(30, rng);
  const PointCloud scan = random_cloud(15, rng);
  const SpatialIndex index(map);
  const auto loss = chamfer_loss(scan, index, ChangeProbabilities(15, 1.0));
  CHECK(loss.value == doctest::Approx(0).epsilon(1e-15));
}

TEST_CASE("chamfer matches the brute-force double loop") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const PointCloud map = random_cloud(25, rng);
    const PointCloud scan = random_cloud(20, rng);
    const auto p = random_probs(20, rng);
    const SpatialIndex index(map);
    const auto loss = chamfer_loss(scan, index, p);
    CHECK(loss.value == doctest::Approx(brute_chamfer(scan, map, p)).epsilon(1e-12));
  }
}

TEST_CASE("chamfer error paths") {
  std::mt19937_64 rng(4);
  const PointCloud scan = random_cloud(5, rng);
  const SpatialIndex empty(PointCloud{});
  CHECK_THROWS(chamfer_loss(scan, empty, ChangeProbabilities(5, 0.0)));
  const SpatialIndex index(scan);
  CHECK_THROWS_AS(chamfer_loss(scan, index, ChangeProbabilities(4, 0.0)),
                  std::invalid_argument);
}

TEST_CASE("class balance on the stated examples") {
  CHECK(class_balance_loss(ChangeProbabilities(10, 0.0)).value == doctest::Approx(0));
  CHECK(class_balance_loss(ChangeProbabilities(10, 1.0)).value == doctest::Approx(1));
  CHECK(class_balance_loss({0.25, 0.75}).value == doctest::Approx(0.5));
  CHECK_THROWS_AS(class_balance_loss({}), std::invalid_argument);
}

TEST_CASE("temporal loss is zero for identical scans or all-Consistent labels") {
  std::mt19937_64 rng(5);
  const PointCloud scan = random_cloud(30, rng);
  const auto p = random_probs(30, rng);
  CHECK(temporal_loss(scan, p, scan, p).value == doctest::Approx(0).epsilon(1e-15));

  const PointCloud other = random_cloud(25, rng);
  CHECK(temporal_loss(scan, ChangeProbabilities(30, 0.0), other, ChangeProbabilities(25, 0.0))
            .value == doctest::Approx(0).epsilon(1e-15));
}

TEST_CASE("temporal loss matches the brute-force bidirectional evaluation") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 15; ++trial) {
    const PointCloud s0 = random_cloud(18, rng);
    const PointCloud s1 = random_cloud(22, rng);
    const auto p0 = random_probs(18, rng);
    const auto p1 = random_probs(22, rng);
    const auto loss = temporal_loss(s0, p0, s1, p1);
    CHECK(loss.value == doctest::Approx(brute_temporal(s0, p0, s1, p1)).epsilon(1e-12));
  }
}

TEST_CASE("temporal loss is symmetric under swapping the scans") {
  std::mt19937_64 rng(7);
  const PointCloud s0 = random_cloud(12, rng);
  const PointCloud s1 = random_cloud(14, rng);
  const auto p0 = random_probs(12, rng);
  const auto p1 = random_probs(14, rng);
  CHECK(temporal_loss(s0, p0, s1, p1).value ==
        doctest::Approx(temporal_loss(s1, p1, s0, p0).value).epsilon(1e-12));
}

TEST_CASE("degenerate weights reduce the total to the chamfer term") {
  std::mt19937_64 rng(8);
  const PointCloud m0 = random_cloud(20, rng), m1 = random_cloud(20, rng);
  const PointCloud s0 = random_cloud(15, rng), s1 = random_cloud(15, rng);
  const auto p0 = random_probs(15, rng), p1 = random_probs(15, rng);
  const SpatialIndex i0(m0), i1(m1);
  const auto breakdown = total_loss(s0, i0, p0, s1, i1, p1, LossWeights{0.0, 0.0});
  CHECK(breakdown.total == doctest::Approx(breakdown.chamfer).epsilon(1e-15));
}

TEST_CASE("all-zero probabilities on map-subset scans give zero total") {
  std::mt19937_64 rng(9);
  const PointCloud map = random_cloud(40, rng);
  PointCloud scan;
  scan.points.assign(map.points.begin(), map.points.begin() + 20);
  const SpatialIndex index(map);
  const ChangeProbabilities p(20, 0.0);
  const auto breakdown = total_loss(scan, index, p, scan, index, p, LossWeights{});
  CHECK(breakdown.total == doctest::Approx(0).epsilon(1e-15));
}

TEST_CASE("total recombines the three component oracles with the given weights") {
  std::mt19937_64 rng(10);
  const PointCloud m0 = random_cloud(25, rng), m1 = random_cloud(25, rng);
  const PointCloud s0 = random_cloud(20, rng), s1 = random_cloud(18, rng);
  const auto p0 = random_probs(20, rng), p1 = random_probs(18, rng);
  const SpatialIndex i0(m0), i1(m1);
  const LossWeights w{15.0, 1.0};
  const auto breakdown = total_loss(s0, i0, p0, s1, i1, p1, w);

  const double cham = 0.5 * (brute_chamfer(s0, m0, p0) + brute_chamfer(s1, m1, p1));
  const double cls = 0.5 * (class_balance_loss(p0).value + class_balance_loss(p1).value);
  const double temporal = brute_temporal(s0, p0, s1, p1);
  CHECK(breakdown.total == doctest::Approx(cham + 15.0 * cls + 1.0 * temporal).epsilon(1e-12));
  CHECK(breakdown.total ==
        doctest::Approx(breakdown.chamfer + w.lambda1 * breakdown.class_balance +
                        w.lambda2 * breakdown.temporal)
            .epsilon(1e-9));
  CHECK(breakdown.chamfer >= 0.0);
  CHECK(breakdown.class_balance >= 0.0);
  CHECK(breakdown.temporal >= 0.0);
}

TEST_CASE("analytic gradients match central finite differences") {
  std::mt19937_64 rng(11);
  const PointCloud m0 = random_cloud(20, rng), m1 = random_cloud(20, rng);
  const PointCloud s0 = random_cloud(12, rng), s1 = random_cloud(10, rng);
  auto p0 = random_probs(12, rng);
  auto p1 = random_probs(10, rng);
  const SpatialIndex i0(m0), i1(m1);
  const LossWeights w{15.0, 1.0};
  const auto breakdown = total_loss(s0, i0, p0, s1, i1, p1, w);

  const double h = 1e-5;
  for (std::size_t i = 0; i < p0.size(); ++i) {
    auto plus = p0, minus = p0;
    plus[i] += h;
    minus[i] -= h;
    const double fplus = total_loss(s0, i0, plus, s1, i1, p1, w).total;
    const double fminus = total_loss(s0, i0, minus, s1, i1, p1, w).total;
    const double fd = (fplus - fminus) / (2 * h);
    CHECK(breakdown.gradient0[i] == doctest::Approx(fd).epsilon(1e-4));
  }
  for (std::size_t i = 0; i < p1.size(); ++i) {
    auto plus = p1, minus = p1;
    plus[i] += h;
    minus[i] -= h;
    const double fplus = total_loss(s0, i0, p0, s1, i1, plus, w).total;
    const double fminus = total_loss(s0, i0, p0, s1, i1, minus, w).total;
    CHECK(breakdown.gradient1[i] == doctest::Approx((fplus - fminus) / (2 * h)).epsilon(1e-4));
  }
}

TEST_CASE("opposing pressures: chamfer non-increasing, class non-decreasing in p") {
  std::mt19937_64 rng(12);
  const PointCloud map = random_cloud(20, rng);
  const PointCloud scan = random_cloud(10, rng);
  const SpatialIndex index(map);
  const auto cham = chamfer_loss(scan, index, random_probs(10, rng));
  for (double g : cham.gradient) CHECK(g <= 0.0);
  const auto cls = class_balance_loss(random_probs(10, rng));
  for (double g : cls.gradient) CHECK(g >= 0.0);
}
