// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "narrmap/corpus.hpp"

namespace narrmap {

struct ProjectionSpace {
  Eigen::MatrixXd coords;  // n x p
  std::uint64_t seed = 0;
  bool supervised = false;
};

struct ClusterModel {
  std::size_t cluster_count = 1;
  Eigen::MatrixXd membership;  // n x cluster_count, rows sum to one
};

struct LabelVector {
  std::vector<int> labels;  // -1 means unlabeled
  std::size_t cluster_count = 0;
};

struct ProjectionOptions {
  std::size_t dimensions = 5;
  double attraction = 0.5;  // fraction of the way a labeled point moves to its cluster centroid
  double jitter = 0.05;     // per-document noise, relative to the rms coordinate spread
};

/// Principal-component projection with seeded per-document jitter, followed by a
/// single attraction pass for labeled documents.
ProjectionSpace project(const Corpus& corpus, const LabelVector& labels, std::uint64_t seed,
                        const ProjectionOptions& options = {});

struct ClusterOptions {
  double temperature = 1.0;
  std::size_t restarts = 8;
  std::size_t max_k = 10;
};

/// Default minimum cluster size, max(5, n/50).
std::size_t default_min_cluster_size(std::size_t n);

/// k-means with k picked by silhouette; membership is a softmax over negative
/// squared centroid distances.
ClusterModel soft_cluster(const ProjectionSpace& space, std::size_t min_cluster_size,
                          std::uint64_t seed, const ClusterOptions& options = {});

LabelVector build_label_vector(std::size_t n, const std::map<int, std::set<std::size_t>>& clusters);

/// SplitMix64 finalizer, used to key randomness on document ids.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace narrmap
