#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "narrmap/error.hpp"
#include "narrmap/projection.hpp"

using namespace narrmap;

namespace {

LabelVector unlabeled(std::size_t n) { return build_label_vector(n, {}); }

ProjectionSpace blobs(std::size_t per_blob, double separation, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.1);
  ProjectionSpace s;
  s.coords.resize(Eigen::Index(2 * per_blob), 2);
  for (std::size_t i = 0; i < 2 * per_blob; ++i) {
    const double cx = i < per_blob ? 0.0 : separation;
    s.coords(Eigen::Index(i), 0) = cx + noise(rng);
    s.coords(Eigen::Index(i), 1) = noise(rng);
  }
  return s;
}

}  // namespace

TEST_CASE("projection is deterministic for a fixed seed") {
  const auto c = fixtures::synthetic(50);
  const auto a = project(*c, unlabeled(50), 1);
  const auto b = project(*c, unlabeled(50), 1);
  CHECK(a.coords == b.coords);
  CHECK(a.coords.rows() == 50);
  CHECK_FALSE(a.supervised);
  CHECK(project(*c, unlabeled(50), 2).coords != a.coords);
}

TEST_CASE("labeled documents move closer together") {
  const auto c = fixtures::synthetic(40);
  const auto base = project(*c, unlabeled(40), 3);
  const auto labels = build_label_vector(40, {{0, {4, 31}}});
  const auto sup = project(*c, labels, 3);
  CHECK(sup.supervised);
  const double before = (base.coords.row(4) - base.coords.row(31)).norm();
  const double after = (sup.coords.row(4) - sup.coords.row(31)).norm();
  CHECK(after < before);
}

TEST_CASE("single document projection") {
  const auto c = fixtures::corpus_of({fixtures::doc(0, {0.2, 0.4, 0.1, 0.3, 0.5, 0.6})});
  const auto s = project(c, unlabeled(1), 1);
  CHECK(s.coords.rows() == 1);
  CHECK_THROWS_AS(project(c, unlabeled(1), 1, ProjectionOptions{.dimensions = 7}), ParameterError);
}

TEST_CASE("soft clustering separates two blobs") {
  const auto space = blobs(30, 10.0, 5);
  const auto model = soft_cluster(space, 5, 1);
  REQUIRE(model.cluster_count == 2);
  // Nearest-centroid oracle from the known blob assignment.
  Eigen::Index blob_a_cluster;
  model.membership.row(0).maxCoeff(&blob_a_cluster);
  for (Eigen::Index i = 0; i < 60; ++i) {
    Eigen::Index arg;
    model.membership.row(i).maxCoeff(&arg);
    const Eigen::RowVector2d left(0.0, 0.0), right(10.0, 0.0);
    const bool nearer_left = (space.coords.row(i) - left).norm() < (space.coords.row(i) - right).norm();
    CHECK((arg == blob_a_cluster) == nearer_left);
  }
}

TEST_CASE("identical points form one cluster") {
  ProjectionSpace s;
  s.coords = Eigen::MatrixXd::Ones(20, 3);
  const auto model = soft_cluster(s, 5, 1);
  CHECK(model.cluster_count == 1);
  CHECK(model.membership.isApprox(Eigen::MatrixXd::Ones(20, 1)));
}

TEST_CASE("membership rows sum to one") {
  ProjectionSpace s;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  s.coords.resize(80, 4);
  for (Eigen::Index i = 0; i < s.coords.size(); ++i) s.coords.data()[i] = u(rng);
  const auto model = soft_cluster(s, default_min_cluster_size(80), 2);
  for (Eigen::Index i = 0; i < model.membership.rows(); ++i) {
    CHECK(model.membership.row(i).sum() == doctest::Approx(1.0));
    CHECK(model.membership.row(i).minCoeff() >= 0.0);
  }
}

TEST_CASE("label vectors") {
  const auto v = build_label_vector(5, {{0, {1, 3}}});
  CHECK(v.labels == std::vector<int>{-1, 0, -1, 0, -1});
  CHECK(v.cluster_count == 1);
  CHECK(build_label_vector(3, {}).labels == std::vector<int>{-1, -1, -1});
  CHECK_THROWS_AS(build_label_vector(3, {{0, {1}}, {1, {1}}}), ContradictionError);
}

TEST_CASE("default minimum cluster size") {
  CHECK(default_min_cluster_size(100) == 5);
  CHECK(default_min_cluster_size(500) == 10);
}
