#include <doctest.h>

#include <cmath>

#include "../common/oracles.hpp"
#include "fixtures.hpp"
#include "narrmap/coherence.hpp"
#include "narrmap/error.hpp"

using namespace narrmap;

TEST_CASE("content similarity maps cosine onto [0, 1]") {
  const std::vector<double> a{0.3, -1.2, 2.0};
  const std::vector<double> neg{-0.3, 1.2, -2.0};
  CHECK(content_similarity(a, a) == doctest::Approx(1.0));
  CHECK(content_similarity(a, neg) == doctest::Approx(0.0));
  CHECK(content_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == doctest::Approx(0.5));

  bool zero = false;
  CHECK(content_similarity(std::vector<double>{0, 0}, std::vector<double>{0, 1}, &zero) == doctest::Approx(0.5));
  CHECK(zero);
}

TEST_CASE("topical similarity is one minus base-2 JSD") {
  CHECK(topical_similarity(std::vector<double>{0.2, 0.8}, std::vector<double>{0.2, 0.8}) == doctest::Approx(1.0));
  CHECK(topical_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == doctest::Approx(0.0).epsilon(1e-12));
  const double expected = 1.0 - oracles::jsd_bits({0.5, 0.5}, {1.0, 0.0});
  CHECK(expected == doctest::Approx(0.6887).epsilon(1e-4));
  CHECK(topical_similarity(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 0}) == doctest::Approx(expected));
  CHECK_THROWS_AS(topical_similarity(std::vector<double>{0.5, 0.4}, std::vector<double>{1, 0}), ParameterError);
  CHECK_THROWS_AS(topical_similarity(std::vector<double>{1.5, -0.5}, std::vector<double>{1, 0}), ParameterError);
}

TEST_CASE("temporal decay") {
  CHECK(temporal_decay(0, 30) == doctest::Approx(1.0));
  CHECK(temporal_decay(30, 30) == doctest::Approx(std::exp(-1.0)));
  CHECK(temporal_decay(30, 30) == doctest::Approx(0.3679).epsilon(1e-4));
  CHECK(temporal_decay(60, 30) == doctest::Approx(0.1353).epsilon(1e-4));
  CHECK_THROWS_AS(temporal_decay(1, 0), ParameterError);
  CHECK_THROWS_AS(temporal_decay(-1, 30), ParameterError);
}

TEST_CASE("coherence combines decay with the geometric mean of the similarities") {
  CHECK(coherence_value(0, 30, 1.0, 1.0) == doctest::Approx(1.0));
  const double oracle = std::exp(-30.0 / 30.0) * std::sqrt(0.64 * 0.25);
  CHECK(coherence_value(30, 30, 0.64, 0.25) == doctest::Approx(oracle));
  CHECK(std::abs(coherence_value(30, 30, 0.64, 0.25) - 0.1472) < 1e-4);
  CHECK(coherence_value(5, 30, 0.0, 0.0) == 0.0);
}

TEST_CASE("coherence table stores only chronological pairs") {
  const auto corpus = fixtures::corpus_of(
      {fixtures::doc(0, {1, 0}), fixtures::doc(0, {1, 0}), fixtures::doc(30, {0, 1})});
  ProjectionSpace space;
  space.coords = Eigen::MatrixXd(3, 2);
  space.coords << 1, 0, 1, 0, 0, 1;
  ClusterModel clusters;
  clusters.cluster_count = 1;
  clusters.membership = Eigen::MatrixXd::Ones(3, 1);
  const auto table = coherence_table(space, clusters, corpus, 30.0);
  CHECK(table.packed().size() == 3);
  CHECK(table.at(0, 1) == doctest::Approx(1.0));
  CHECK(table.at(0, 2) == doctest::Approx(std::exp(-1.0) * std::sqrt(0.5)));
  CHECK_THROWS(table.at(1, 0));
  CHECK_THROWS(table.at(1, 1));
}

TEST_CASE("pair_index enumerates the upper triangle row by row") {
  const std::size_t n = 6;
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) CHECK(pair_index(n, i, j) == k++);
}

TEST_CASE("edge membership is the elementwise minimum") {
  Eigen::MatrixXd m(4, 2);
  m << 1, 0, 1, 0, 0, 1, 0.3, 0.7;
  Eigen::MatrixXd first(2, 2);
  first << 0.6, 0.4, 0.3, 0.7;
  ClusterModel clusters{2, m};
  const auto t = edge_membership(clusters);
  CHECK(t.at(0, 1, 0) == doctest::Approx(1.0));
  CHECK(t.at(1, 2, 0) == doctest::Approx(0.0));
  CHECK(t.at(1, 2, 1) == doctest::Approx(0.0));

  const MembershipTensor soft(first);
  CHECK(soft.at(0, 1, 0) == doctest::Approx(0.3));
  CHECK(soft.at(0, 1, 1) == doctest::Approx(0.4));
}
