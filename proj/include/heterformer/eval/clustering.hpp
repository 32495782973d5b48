#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <vector>

#include "heterformer/numcore/random.hpp"

namespace heterformer::eval {

struct KMeansResult {
  std::vector<std::size_t> assignment;
  double inertia = 0.0;
  std::vector<double> inertia_trace;  // per Lloyd iteration of the winning restart
};

namespace detail {

inline double sq_dist(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

inline KMeansResult lloyd(const numcore::Tensor& x, std::size_t k, numcore::Rng& rng, std::size_t max_iter) {
  const auto n = x.rows(), d = x.cols();
  const double* X = x.data().data();
  std::vector<double> centers(k * d);
  // k-means++ seeding
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::copy_n(X + first(rng) * d, d, centers.begin());
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], sq_dist(X + i * d, &centers[(c - 1) * d], d));
      total += nearest[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick + 1 < n; ++pick) {
        r -= nearest[pick];
        if (r < 0.0) break;
      }
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    std::copy_n(X + pick * d, d, centers.begin() + static_cast<std::ptrdiff_t>(c * d));
  }

  KMeansResult res;
  res.assignment.assign(n, 0);
  std::vector<double> dist(n);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    double inertia = 0.0;
    bool changed = iter == 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dd = sq_dist(X + i * d, &centers[c * d], d);
        if (dd < bd) {
          bd = dd;
          best = c;
        }
      }
      if (res.assignment[i] != best) changed = true;
      res.assignment[i] = best;
      dist[i] = bd;
      inertia += bd;
    }
    res.inertia = inertia;
    res.inertia_trace.push_back(inertia);
    if (!changed) break;
    std::vector<double> sums(k * d, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[res.assignment[i]];
      for (std::size_t j = 0; j < d; ++j) sums[res.assignment[i] * d + j] += X[i * d + j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Empty cluster: move it to the point farthest from its center.
        std::size_t far = 0;
        for (std::size_t i = 1; i < n; ++i)
          if (dist[i] > dist[far]) far = i;
        std::copy_n(X + far * d, d, centers.begin() + static_cast<std::ptrdiff_t>(c * d));
        dist[far] = 0.0;
        continue;
      }
      for (std::size_t j = 0; j < d; ++j) centers[c * d + j] = sums[c * d + j] / static_cast<double>(counts[c]);
    }
  }
  return res;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding; best of `restarts` by inertia.
inline KMeansResult kmeans(const numcore::Tensor& x, std::size_t k, std::uint64_t seed, std::size_t restarts = 10,
                           std::size_t max_iter = 300) {
  if (x.rank() != 2) throw DimensionError("kmeans expects an [n x d] matrix");
  if (k == 0) throw ContractError("kmeans: K must be positive");
  if (x.rows() < k) {
    throw ContractError("kmeans: " + std::to_string(x.rows()) + " points cannot form " + std::to_string(k) +
                        " clusters");
  }
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
    numcore::Rng rng(numcore::derive_seed(seed, {0x6b3eaULL, r}));
    auto res = detail::lloyd(x, k, rng, max_iter);
    if (res.inertia < best.inertia) best = std::move(res);
  }
  return best;
}

struct ClusterMetrics {
  double nmi = 0.0;
  double ari = 0.0;
};

/// NMI with arithmetic-mean normalization and the pair-counting ARI.
inline ClusterMetrics cluster_metrics(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth) {
  if (pred.size() != truth.size()) throw DimensionError("cluster_metrics: label lists differ in length");
  ClusterMetrics m;
  const auto n = static_cast<double>(pred.size());
  if (pred.empty()) return m;
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> a, b;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    joint[{pred[i], truth[i]}] += 1.0;
    a[pred[i]] += 1.0;
    b[truth[i]] += 1.0;
  }
  auto entropy = [n](const std::map<std::size_t, double>& counts) {
    double h = 0.0;
    for (const auto& [_, c] : counts) h -= (c / n) * std::log(c / n);
    return h;
  };
  const double ha = entropy(a), hb = entropy(b);
  double mi = 0.0;
  for (const auto& [key, c] : joint) mi += (c / n) * std::log(c * n / (a[key.first] * b[key.second]));
  if (b.size() <= 1) {
    m.nmi = 0.0;
  } else {
    const double denom = 0.5 * (ha + hb);
    m.nmi = denom > 0.0 ? std::max(0.0, mi) / denom : 0.0;
  }

  auto comb2 = [](double v) { return v * (v - 1.0) / 2.0; };
  double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [_, c] : joint) sum_joint += comb2(c);
  for (const auto& [_, c] : a) sum_a += comb2(c);
  for (const auto& [_, c] : b) sum_b += comb2(c);
  const double total = comb2(n);
  const double expected = total > 0.0 ? sum_a * sum_b / total : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  m.ari = max_index == expected ? (sum_joint == expected ? 1.0 : 0.0) : (sum_joint - expected) / (max_index - expected);
  return m;
}

}  // namespace heterformer::eval
