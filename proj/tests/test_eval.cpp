#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "rangecd/eval.hpp"

using namespace rangecd;

namespace {

std::vector<Label> labels_of(std::initializer_list<int> bits) {
  std::vector<Label> out;
  for (int b : bits) out.push_back(b ? Label::Changed : Label::Consistent);
  return out;
}

double brute_polyline_distance(const Eigen::Vector2d& p,
                               const std::vector<Eigen::Vector2d>& poly) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    const Eigen::Vector2d a = poly[i], b = poly[i + 1];
    const Eigen::Vector2d ab = b - a;
    const double t = std::clamp(ab.squaredNorm() > 0 ? (p - a).dot(ab) / ab.squaredNorm() : 0.0,
                                0.0, 1.0);
    best = std::min(best, (p - (a + t * ab)).norm());
  }
  return best;
}

}  // namespace

TEST_CASE("IoU on the stated constructions") {
  const auto a = labels_of({1, 0, 1, 0});
  CHECK(iou(a, a, Label::Changed) == doctest::Approx(1.0));
  CHECK(iou(a, a, Label::Consistent) == doctest::Approx(1.0));

  // Disjoint non-empty Changed sets.
  CHECK(iou(labels_of({1, 0}), labels_of({0, 1}), Label::Changed) == doctest::Approx(0.0));

  // |intersection| = 1, |union| = 3.
  CHECK(iou(labels_of({1, 1, 0}), labels_of({1, 0, 1}), Label::Changed) ==
        doctest::Approx(1.0 / 3.0));
}

TEST_CASE("IoU of an empty class on both sides is 1") {
  const auto none = labels_of({0, 0, 0});
  CHECK(iou(none, none, Label::Changed) == doctest::Approx(1.0));
  const auto all = labels_of({1, 1});
  CHECK(iou(all, all, Label::Consistent) == doctest::Approx(1.0));
}

TEST_CASE("IoU rejects length mismatch") {
  CHECK_THROWS_AS(iou(labels_of({1}), labels_of({1, 0}), Label::Changed),
                  std::invalid_argument);
}

TEST_CASE("confusion counts and count-based IoU agree with the label-based form") {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution coin(0.4);
  std::vector<Label> pred, truth;
  for (int i = 0; i < 500; ++i) {
    pred.push_back(coin(rng) ? Label::Changed : Label::Consistent);
    truth.push_back(coin(rng) ? Label::Changed : Label::Consistent);
  }
  const ConfusionCounts c = confusion(pred, truth);
  CHECK(c.tp + c.fp + c.fn + c.tn == 500);
  CHECK(iou_changed(c) == doctest::Approx(iou(pred, truth, Label::Changed)));
  CHECK(iou_consistent(c) == doctest::Approx(iou(pred, truth, Label::Consistent)));
}

TEST_CASE("mIoU is the arithmetic mean of the per-class IoUs") {
  ConfusionCounts c{3, 2, 1, 10};
  CHECK(miou(c) == doctest::Approx(0.5 * (iou_changed(c) + iou_consistent(c))));
  // Degenerate: nothing Changed anywhere.
  ConfusionCounts none{0, 0, 0, 7};
  CHECK(iou_changed(none) == doctest::Approx(1.0));
  CHECK(miou(none) == doctest::Approx(1.0));
}

TEST_CASE("masked confusion counts only selected points") {
  const auto pred = labels_of({1, 1, 0, 0});
  const auto truth = labels_of({1, 0, 0, 1});
  const ConfusionCounts c = confusion_masked(pred, truth, {true, false, true, false});
  CHECK(c.tp == 1);
  CHECK(c.fp == 0);
  CHECK(c.fn == 0);
  CHECK(c.tn == 1);
  CHECK_THROWS_AS(confusion_masked(pred, truth, {true}), std::invalid_argument);
}

TEST_CASE("point-to-polyline distance on constructed cases") {
  const std::vector<Eigen::Vector2d> path = {{0, 0}, {10, 0}, {10, 10}};
  CHECK(point_polyline_distance({5, 0}, path) == doctest::Approx(0.0));
  CHECK(point_polyline_distance({5, 3}, path) == doctest::Approx(3.0));
  CHECK(point_polyline_distance({-4, 3}, path) == doctest::Approx(5.0));  // beyond the first vertex
  CHECK(point_polyline_distance({13, 4}, path) == doctest::Approx(3.0));  // second segment
}

TEST_CASE("polyline distance matches the brute-force segment oracle") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-12.0, 12.0);
  std::vector<Eigen::Vector2d> path;
  for (int i = 0; i < 8; ++i) path.push_back({u(rng), u(rng)});
  for (int k = 0; k < 200; ++k) {
    const Eigen::Vector2d p(u(rng), u(rng));
    CHECK(point_polyline_distance(p, path) ==
          doctest::Approx(brute_polyline_distance(p, path)).epsilon(1e-12));
  }
}

TEST_CASE("corridor filter on the stated examples") {
  Corridor corridor;
  corridor.path = {{0, 0}, {20, 0}};
  corridor.width = 5.0;
  corridor.range_limit = 10.0;

  PointCloud pts;
  pts.points.emplace_back(3, 0, 0);    // on the path
  pts.points.emplace_back(3, 10, 0);   // 10 m lateral, excluded
  pts.points.emplace_back(3, 2.4, 0);  // inside the half-width
  pts.points.emplace_back(3, 2.6, 0);  // just outside the half-width
  pts.points.emplace_back(15, 0, 0);   // on the path but beyond the range limit
  const auto mask = corridor_filter(pts, Point3(0, 0, 0), corridor);
  CHECK(mask == std::vector<bool>{true, false, true, false, false});
}

TEST_CASE("corridor filter matches a brute-force evaluation") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-15.0, 15.0);
  Corridor corridor;
  for (int i = 0; i < 5; ++i) corridor.path.push_back({u(rng), u(rng)});
  corridor.width = 4.0;
  corridor.range_limit = 9.0;
  const Point3 sensor(1.0, -2.0, 0.5);

  PointCloud pts;
  for (int i = 0; i < 300; ++i) pts.points.emplace_back(u(rng), u(rng), u(rng) * 0.1);
  const auto mask = corridor_filter(pts, sensor, corridor);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const bool lateral =
        brute_polyline_distance({pts.points[i].x(), pts.points[i].y()}, corridor.path) <=
        corridor.width / 2.0;
    const bool in_range = (pts.points[i] - sensor).norm() <= corridor.range_limit;
    CHECK(mask[i] == (lateral && in_range));
  }
}

TEST_CASE("corridor confusion equals plain confusion when the corridor is unbounded") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  std::bernoulli_distribution coin(0.3);
  PointCloud pts;
  std::vector<Label> pred, truth;
  for (int i = 0; i < 200; ++i) {
    pts.points.emplace_back(u(rng), u(rng), 0.0);
    pred.push_back(coin(rng) ? Label::Changed : Label::Consistent);
    truth.push_back(coin(rng) ? Label::Changed : Label::Consistent);
  }
  Corridor wide;
  wide.path = {{-100, 0}, {100, 0}};
  wide.width = 1e9;
  wide.range_limit = 1e9;
  const auto mask = corridor_filter(pts, Point3(0, 0, 0), wide);
  const ConfusionCounts masked = confusion_masked(pred, truth, mask);
  const ConfusionCounts plain = confusion(pred, truth);
  CHECK(masked.tp == plain.tp);
  CHECK(masked.fp == plain.fp);
  CHECK(masked.fn == plain.fn);
  CHECK(masked.tn == plain.tn);
}

TEST_CASE("false positives outside the corridor raise corridor IoU above plain IoU") {
  Corridor corridor;
  corridor.path = {{0, 0}, {10, 0}};
  corridor.width = 5.0;
  corridor.range_limit = 10.0;

  PointCloud pts;
  std::vector<Label> pred, truth;
  // A true change inside the corridor, predicted correctly.
  pts.points.emplace_back(4, 0, 0);
  pred.push_back(Label::Changed);
  truth.push_back(Label::Changed);
  // False positives well outside the corridor.
  for (int i = 0; i < 5; ++i) {
    pts.points.emplace_back(4, 8.0 + i, 0);
    pred.push_back(Label::Changed);
    truth.push_back(Label::Consistent);
  }
  const auto mask = corridor_filter(pts, Point3(0, 0, 0), corridor);
  const double plain = iou_changed(confusion(pred, truth));
  const double in_corridor = iou_changed(confusion_masked(pred, truth, mask));
  CHECK(in_corridor > plain);
  CHECK(in_corridor == doctest::Approx(1.0));
}

TEST_CASE("corridor validation") {
  Corridor c;
  c.path = {{0, 0}, {1, 0}};
  c.width = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.width = 5.0;
  c.path = {{0, 0}};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
