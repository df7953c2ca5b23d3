// SPDX-License-Identifier: Apache-2.0
#include "narrmap/coherence.hpp"

#include <algorithm>
#include <cmath>

#include "narrmap/error.hpp"

namespace narrmap {

double content_similarity(std::span<const double> a, std::span<const double> b, bool* zero_vector) {
  if (a.size() != b.size()) throw ParameterError("content_similarity: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 || nb == 0.0) {
    if (zero_vector) *zero_vector = true;
    return 0.5;
  }
  const double cosine = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
  return (1.0 + cosine) / 2.0;
}

double topical_similarity(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ParameterError("topical_similarity: length mismatch");
  double sp = 0.0, sq = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] < 0.0 || q[k] < 0.0) throw ParameterError("topical_similarity: negative probability");
    sp += p[k];
    sq += q[k];
  }
  if (std::abs(sp - 1.0) > 1e-6 || std::abs(sq - 1.0) > 1e-6)
    throw ParameterError("topical_similarity: distributions must sum to 1");
  double js = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double m = 0.5 * (p[k] + q[k]);
    if (p[k] > 0.0) js += 0.5 * p[k] * std::log2(p[k] / m);
    if (q[k] > 0.0) js += 0.5 * q[k] * std::log2(q[k] / m);
  }
  return std::clamp(1.0 - js, 0.0, 1.0);
}

double temporal_decay(double delta_t, double sigma_t) {
  if (!(sigma_t > 0.0)) throw ParameterError("sigma_t must be positive");
  if (delta_t < 0.0) throw ParameterError("delta_t must be non-negative");
  return std::exp(-delta_t / sigma_t);
}

double coherence_value(double delta_t, double sigma_t, double content, double topical) {
  const double product = content * topical;
  return temporal_decay(delta_t, sigma_t) * (product > 0.0 ? std::sqrt(product) : 0.0);
}

CoherenceTable::CoherenceTable(std::size_t n, double sigma_t, std::vector<double> packed, std::size_t zero_vectors)
    : n_(n), sigma_t_(sigma_t), values_(std::move(packed)), zero_vectors_(zero_vectors) {
  if (values_.size() != (n_ < 2 ? 0 : n_ * (n_ - 1) / 2))
    throw ParameterError("coherence table size mismatch");
}

double CoherenceTable::at(std::size_t i, std::size_t j) const {
  if (!(i < j && j < n_)) throw ParameterError("coherence is defined only for i < j < n");
  return values_[pair_index(n_, i, j)];
}

CoherenceTable coherence_table(const ProjectionSpace& space, const ClusterModel& clusters, const Corpus& corpus,
                               double sigma_t) {
  const std::size_t n = corpus.size();
  if (std::size_t(space.coords.rows()) != n || std::size_t(clusters.membership.rows()) != n)
    throw ParameterError("coherence_table: inconsistent document counts");
  if (!(sigma_t > 0.0)) throw ParameterError("sigma_t must be positive");
  const auto p = std::size_t(space.coords.cols());
  const auto c = std::size_t(clusters.membership.cols());
  // Row-major copies so that rows can be viewed as spans.
  std::vector<double> coords(n * p), mem(n * c);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < p; ++k) coords[i * p + k] = space.coords(Eigen::Index(i), Eigen::Index(k));
    for (std::size_t k = 0; k < c; ++k) mem[i * c + k] = clusters.membership(Eigen::Index(i), Eigen::Index(k));
  }
  std::vector<double> packed(n < 2 ? 0 : n * (n - 1) / 2);
  std::size_t zero_pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::span<const double> xi(coords.data() + i * p, p), pi(mem.data() + i * c, c);
    for (std::size_t j = i + 1; j < n; ++j) {
      bool zero = false;
      const double content = content_similarity(xi, {coords.data() + j * p, p}, &zero);
      if (zero) ++zero_pairs;
      const double topical = topical_similarity(pi, {mem.data() + j * c, c});
      const double dt = std::max(0.0, corpus.documents[j].timestamp - corpus.documents[i].timestamp);
      packed[pair_index(n, i, j)] = coherence_value(dt, sigma_t, content, topical);
    }
  }
  return CoherenceTable(n, sigma_t, std::move(packed), zero_pairs);
}

double MembershipTensor::at(std::size_t i, std::size_t j, std::size_t k) const {
  if (!(i < j && j < size()) || k >= cluster_count()) throw ParameterError("membership index out of range");
  return std::min(node_(Eigen::Index(i), Eigen::Index(k)), node_(Eigen::Index(j), Eigen::Index(k)));
}

double MembershipTensor::max_possible(std::size_t k) const {
  const auto n = size();
  if (n < 2) return 0.0;
  // The largest min over pairs is the second largest entry of the column.
  double first = 0.0, second = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = node_(Eigen::Index(i), Eigen::Index(k));
    if (v > first) {
      second = first;
      first = v;
    } else if (v > second) {
      second = v;
    }
  }
  return second;
}

MembershipTensor edge_membership(const ClusterModel& clusters) { return MembershipTensor(clusters.membership); }

}  // namespace narrmap
