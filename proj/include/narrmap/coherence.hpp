// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "narrmap/corpus.hpp"
#include "narrmap/projection.hpp"

namespace narrmap {

/// (1 + cos) / 2. A zero vector yields 0.5 and sets `*zero_vector` when given.
double content_similarity(std::span<const double> a, std::span<const double> b, bool* zero_vector = nullptr);

/// 1 minus the base-2 Jensen-Shannon divergence.
double topical_similarity(std::span<const double> p, std::span<const double> q);

double temporal_decay(double delta_t, double sigma_t);

double coherence_value(double delta_t, double sigma_t, double content, double topical);

/// Index of pair (i, j), i < j, in row-major packed upper-triangular storage.
inline std::size_t pair_index(std::size_t n, std::size_t i, std::size_t j) noexcept {
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

class CoherenceTable {
 public:
  CoherenceTable() = default;
  CoherenceTable(std::size_t n, double sigma_t, std::vector<double> packed, std::size_t zero_vectors = 0);

  std::size_t size() const noexcept { return n_; }
  double sigma_t() const noexcept { return sigma_t_; }
  /// Requires i < j < n.
  double at(std::size_t i, std::size_t j) const;
  const std::vector<double>& packed() const noexcept { return values_; }
  /// Number of pairs whose content similarity fell back to 0.5.
  std::size_t zero_vector_pairs() const noexcept { return zero_vectors_; }

 private:
  std::size_t n_ = 0;
  double sigma_t_ = 30.0;
  std::vector<double> values_;
  std::size_t zero_vectors_ = 0;
};

CoherenceTable coherence_table(const ProjectionSpace& space, const ClusterModel& clusters, const Corpus& corpus,
                               double sigma_t);

/// Edge-to-cluster membership: min of the endpoint memberships.
class MembershipTensor {
 public:
  MembershipTensor() = default;
  explicit MembershipTensor(Eigen::MatrixXd node_membership) : node_(std::move(node_membership)) {}

  std::size_t size() const noexcept { return std::size_t(node_.rows()); }
  std::size_t cluster_count() const noexcept { return std::size_t(node_.cols()); }
  double at(std::size_t i, std::size_t j, std::size_t k) const;
  /// Membership of document i in cluster k.
  double node(std::size_t i, std::size_t k) const { return node_(Eigen::Index(i), Eigen::Index(k)); }
  /// Largest membership any edge can have in cluster k.
  double max_possible(std::size_t k) const;

 private:
  Eigen::MatrixXd node_;
};

MembershipTensor edge_membership(const ClusterModel& clusters);

}  // namespace narrmap
