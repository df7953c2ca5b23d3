// SPDX-License-Identifier: Apache-2.0
#include "narrmap/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "narrmap/error.hpp"

namespace narrmap {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

ProjectionSpace project(const Corpus& corpus, const LabelVector& labels, std::uint64_t seed,
                        const ProjectionOptions& options) {
  const std::size_t n = corpus.size();
  const std::size_t d = corpus.embedding_dim;
  const std::size_t p = options.dimensions;
  if (labels.labels.size() != n) throw ParameterError("label vector length does not match corpus");
  if (p < 1 || p > d) throw ParameterError("projection dimension must lie in [1, embedding_dim]");
  for (int l : labels.labels)
    if (l < -1 || (l >= 0 && std::size_t(l) >= labels.cluster_count))
      throw ParameterError("label references a nonexistent cluster");

  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) x(Eigen::Index(i), Eigen::Index(k)) = corpus.documents[i].embedding[k];
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;

  const Eigen::MatrixXd cov = (x.transpose() * x) / double(std::max<std::size_t>(n, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  Eigen::MatrixXd basis(d, p);
  for (std::size_t c = 0; c < p; ++c) {
    Eigen::VectorXd v = eig.eigenvectors().col(Eigen::Index(d - 1 - c));
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    basis.col(Eigen::Index(c)) = v;
  }

  ProjectionSpace out;
  out.seed = seed;
  out.coords = x * basis;
  const double rms = n ? std::sqrt(out.coords.squaredNorm() / double(n * p)) : 0.0;
  const double sd = options.jitter * rms;
  if (sd > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      std::mt19937_64 rng(mix64(seed ^ mix64(i + 1)));
      std::normal_distribution<double> g(0.0, sd);
      for (std::size_t c = 0; c < p; ++c) out.coords(Eigen::Index(i), Eigen::Index(c)) += g(rng);
    }
  }

  if (labels.cluster_count > 0 &&
      std::any_of(labels.labels.begin(), labels.labels.end(), [](int l) { return l >= 0; })) {
    out.supervised = true;
    Eigen::MatrixXd centroid = Eigen::MatrixXd::Zero(Eigen::Index(labels.cluster_count), Eigen::Index(p));
    std::vector<std::size_t> counts(labels.cluster_count, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (labels.labels[i] < 0) continue;
      centroid.row(labels.labels[i]) += out.coords.row(Eigen::Index(i));
      ++counts[std::size_t(labels.labels[i])];
    }
    for (std::size_t k = 0; k < labels.cluster_count; ++k)
      if (counts[k]) centroid.row(Eigen::Index(k)) /= double(counts[k]);
    for (std::size_t i = 0; i < n; ++i) {
      const int l = labels.labels[i];
      if (l < 0) continue;
      const Eigen::RowVectorXd row = out.coords.row(Eigen::Index(i));
      out.coords.row(Eigen::Index(i)) = row + options.attraction * (centroid.row(l) - row);
    }
  }
  return out;
}

std::size_t default_min_cluster_size(std::size_t n) { return std::max<std::size_t>(5, n / 50); }

namespace {

struct KMeansResult {
  Eigen::MatrixXd centroids;
  std::vector<std::size_t> assign;
  double inertia = 0.0;
};

KMeansResult kmeans(const Eigen::MatrixXd& x, std::size_t k, std::mt19937_64& rng) {
  const auto n = std::size_t(x.rows());
  KMeansResult r;
  r.centroids.resize(Eigen::Index(k), x.cols());
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  r.centroids.row(0) = x.row(Eigen::Index(first(rng)));
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], (x.row(Eigen::Index(i)) - r.centroids.row(Eigen::Index(c - 1))).squaredNorm());
      total += dist[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (std::size_t i = 0; i < n; ++i) {
        u -= dist[i];
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    r.centroids.row(Eigen::Index(c)) = x.row(Eigen::Index(pick));
  }

  r.assign.assign(n, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dd = (x.row(Eigen::Index(i)) - r.centroids.row(Eigen::Index(c))).squaredNorm();
        if (dd < bd) {
          bd = dd;
          best = c;
        }
      }
      if (iter == 0 || r.assign[i] != best) changed = true;
      r.assign[i] = best;
    }
    if (!changed) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(Eigen::Index(k), x.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(Eigen::Index(r.assign[i])) += x.row(Eigen::Index(i));
      ++counts[r.assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (counts[c]) r.centroids.row(Eigen::Index(c)) = sums.row(Eigen::Index(c)) / double(counts[c]);
  }
  r.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    r.inertia += (x.row(Eigen::Index(i)) - r.centroids.row(Eigen::Index(r.assign[i]))).squaredNorm();
  return r;
}

double silhouette(const Eigen::MatrixXd& dist, const std::vector<std::size_t>& assign, std::size_t k) {
  const auto n = assign.size();
  std::vector<std::size_t> size(k, 0);
  for (auto a : assign) ++size[a];
  double total = 0.0;
  std::vector<double> sum(k);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) sum[assign[j]] += dist(Eigen::Index(i), Eigen::Index(j));
    const auto own = assign[i];
    if (size[own] <= 1) continue;
    const double a = sum[own] / double(size[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c)
      if (c != own && size[c] > 0) b = std::min(b, sum[c] / double(size[c]));
    const double m = std::max(a, b);
    if (m > 0.0 && std::isfinite(b)) total += (b - a) / m;
  }
  return total / double(n);
}

}  // namespace

ClusterModel soft_cluster(const ProjectionSpace& space, std::size_t min_cluster_size, std::uint64_t seed,
                          const ClusterOptions& options) {
  const auto& x = space.coords;
  const auto n = std::size_t(x.rows());
  if (n == 0) throw ParameterError("cannot cluster an empty projection");
  if (n < min_cluster_size) throw ParameterError("fewer points than the minimum cluster size");
  if (!(options.temperature > 0.0)) throw ParameterError("softmax temperature must be positive");

  Eigen::MatrixXd best_centroids = x.colwise().mean();
  std::size_t best_k = 1;
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const double spread = (x.rowwise() - mean).squaredNorm();

  const std::size_t k_max = std::min(options.max_k, n / 5);
  if (spread > 1e-24 && k_max >= 2) {
    Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        dist(Eigen::Index(i), Eigen::Index(j)) = (x.row(Eigen::Index(i)) - x.row(Eigen::Index(j))).norm();
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 2; k <= k_max; ++k) {
      std::mt19937_64 rng(mix64(seed * 131 + k));
      KMeansResult best;
      best.inertia = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < std::max<std::size_t>(1, options.restarts); ++r) {
        auto km = kmeans(x, k, rng);
        if (km.inertia < best.inertia) best = std::move(km);
      }
      std::vector<std::size_t> size(k, 0);
      for (auto a : best.assign) ++size[a];
      if (*std::min_element(size.begin(), size.end()) < std::max<std::size_t>(min_cluster_size, 1)) continue;
      const double score = silhouette(dist, best.assign, k);
      if (score > best_score + 1e-12) {
        best_score = score;
        best_k = k;
        best_centroids = best.centroids;
      }
    }
  }

  ClusterModel m;
  m.cluster_count = best_k;
  m.membership.resize(Eigen::Index(n), Eigen::Index(best_k));
  std::vector<double> logits(best_k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < best_k; ++c)
      logits[c] = -(x.row(Eigen::Index(i)) - best_centroids.row(Eigen::Index(c))).squaredNorm() / options.temperature;
    const double top = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (auto& l : logits) z += (l = std::exp(l - top));
    for (std::size_t c = 0; c < best_k; ++c) m.membership(Eigen::Index(i), Eigen::Index(c)) = logits[c] / z;
  }
  return m;
}

LabelVector build_label_vector(std::size_t n, const std::map<int, std::set<std::size_t>>& clusters) {
  LabelVector lv;
  lv.labels.assign(n, -1);
  for (const auto& [cid, members] : clusters) {
    if (cid < 0) throw ParameterError("cluster ids must be non-negative");
    lv.cluster_count = std::max(lv.cluster_count, std::size_t(cid) + 1);
    for (auto id : members) {
      if (id >= n) throw ParameterError("cluster member " + std::to_string(id) + " out of range");
      if (lv.labels[id] != -1)
        throw ContradictionError("document " + std::to_string(id) + " belongs to more than one cluster");
      lv.labels[id] = cid;
    }
  }
  return lv;
}

}  // namespace narrmap
