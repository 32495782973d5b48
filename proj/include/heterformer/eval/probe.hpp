#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "heterformer/eval/ranking.hpp"
#include "heterformer/numcore/random.hpp"
#include "heterformer/train/adam.hpp"

namespace heterformer::eval {

struct ProbeConfig {
  std::size_t hidden = 200;
  std::size_t hidden_layers = 2;  // weight layers = hidden_layers + 1
  double lr = 1e-3;               // 1e-2 is the usual choice for textless nodes
  std::size_t patience = 10;
  std::size_t max_epochs = 200;
  std::size_t batch_size = 64;
  std::uint64_t seed = 7;

  void validate() const {
    if (hidden == 0 || batch_size == 0) throw ContractError("probe: widths and batch size must be positive");
    if (!(lr > 0.0)) throw ContractError("probe: learning rate must be positive");
  }
};

struct LabeledSet {
  Tensor x;  // [n x d]
  std::vector<std::size_t> y;
};

struct ProbeResult {
  double prec = 0.0;  // top-1 accuracy on the test set
  double ndcg = 0.0;  // over the ranked label list, one relevant label
  double dev_prec = 0.0;
  std::size_t epochs = 0;
  std::vector<std::size_t> missing_train_labels;
};

/// MLP classifier on frozen embeddings.
class Probe {
 public:
  Probe(std::size_t in, std::size_t classes, const ProbeConfig& cfg) : classes_(classes) {
    cfg.validate();
    numcore::Rng rng(numcore::derive_seed(cfg.seed, {0x960beULL}));
    std::size_t width = in;
    for (std::size_t l = 0; l <= cfg.hidden_layers; ++l) {
      const std::size_t out = l == cfg.hidden_layers ? classes : cfg.hidden;
      // He-style scale for ReLU layers.
      weights_.push_back(numcore::gaussian({out, width}, std::sqrt(2.0 / static_cast<double>(width)), rng));
      biases_.push_back(Tensor::zeros({out}));
      width = out;
    }
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      weights_[l].set_tracked(true);
      biases_[l].set_tracked(true);
      params_.push_back({"probe.w" + std::to_string(l), weights_[l], true, false});
      params_.push_back({"probe.b" + std::to_string(l), biases_[l], false, false});
    }
  }

  Tensor logits(const Tensor& x) const {
    Tensor h = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      h = numcore::linear(h, weights_[l], biases_[l]);
      if (l + 1 < weights_.size()) h = numcore::relu(h);
    }
    return h;
  }

  std::vector<model::NamedParameter>& parameters() { return params_; }
  std::size_t classes() const { return classes_; }

 private:
  std::size_t classes_;
  std::vector<Tensor> weights_, biases_;
  std::vector<model::NamedParameter> params_;
};

/// 1-based rank of the true label among class scores, ties counted against it.
inline RankingResult rank_labels(const Tensor& logits, const std::vector<std::size_t>& truth) {
  RankingResult r;
  r.candidates = logits.cols();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double t = logits.at(i, truth[i]);
    std::size_t rank = 1;
    for (std::size_t c = 0; c < logits.cols(); ++c)
      if (c != truth[i] && logits.at(i, c) >= t) ++rank;
    r.ranks.push_back(rank);
  }
  return r;
}

/// Trains on `train`, early-stops on dev top-1 accuracy, reports on `test`.
inline ProbeResult linear_probe(const LabeledSet& train, const LabeledSet& dev, const LabeledSet& test,
                                std::size_t classes, const ProbeConfig& cfg,
                                const std::function<void(const std::string&)>& warn = {}) {
  cfg.validate();
  if (train.y.empty()) throw ContractError("probe: empty training set");
  for (const auto* s : {&train, &dev, &test}) {
    if (!s->y.empty() && s->x.rows() != s->y.size()) throw DimensionError("probe: embedding/label count mismatch");
    for (auto y : s->y)
      if (y >= classes) throw ContractError("probe: label " + std::to_string(y) + " out of range");
  }
  ProbeResult result;
  std::set<std::size_t> seen(train.y.begin(), train.y.end());
  for (std::size_t c = 0; c < classes; ++c) {
    if (!seen.count(c)) {
      result.missing_train_labels.push_back(c);
      if (warn) warn("warning: label " + std::to_string(c) + " has no training example");
    }
  }
  Probe probe(train.x.cols(), classes, cfg);
  auto& params = probe.parameters();
  auto opt = train::OptimizerState::for_parameters(params);
  train::AdamConfig adam;
  adam.lr = cfg.lr;
  adam.weight_decay = 0.0;
  std::vector<std::vector<double>> best;
  auto snapshot = [&] {
    best.clear();
    for (auto& p : params) best.push_back(p.tensor.values());
  };
  snapshot();
  double best_dev = -1.0;
  std::size_t stale = 0;
  numcore::Rng rng(numcore::derive_seed(cfg.seed, {0x5ba7cULL}));
  std::vector<std::size_t> order(train.y.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const LabeledSet& select = dev.y.empty() ? train : dev;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto end = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<std::size_t> y;
      for (auto i : idx) y.push_back(train.y[i]);
      for (auto& p : params) p.tensor.zero_grad();
      numcore::Tape tape;
      {
        numcore::TapeScope scope(tape);
        const Tensor loss = numcore::cross_entropy(probe.logits(numcore::gather_rows(train.x, idx)), y);
        tape.backward(loss);
      }
      train::adam_step(params, opt, adam);
    }
    result.epochs = epoch;
    numcore::NoTapeScope no_tape;
    const double acc = metrics(rank_labels(probe.logits(select.x), select.y)).prec;
    if (acc > best_dev) {
      best_dev = acc;
      stale = 0;
      snapshot();
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].tensor.mutable_data();
    std::copy(best[i].begin(), best[i].end(), dst.begin());
  }
  result.dev_prec = best_dev;
  if (!test.y.empty()) {
    numcore::NoTapeScope no_tape;
    const auto m = metrics(rank_labels(probe.logits(test.x), test.y));
    result.prec = m.prec;
    result.ndcg = m.ndcg;
  }
  return result;
}

/// Seeded 7:1:2-style split of item indices.
struct IndexSplit {
  std::vector<std::size_t> train, dev, test;
};

inline IndexSplit split_indices(std::size_t n, double f_train, double f_dev, std::uint64_t seed) {
  if (f_train < 0 || f_dev < 0 || f_train + f_dev > 1.0 + 1e-12) throw ContractError("split_indices: bad fractions");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  numcore::Rng rng(numcore::derive_seed(seed, {0x1d5ULL}));
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(f_train * static_cast<double>(n)));
  const auto n_dev = std::min(n - n_train, static_cast<std::size_t>(std::llround(f_dev * static_cast<double>(n))));
  IndexSplit s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.dev.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
               idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev), idx.end());
  return s;
}

inline LabeledSet take(const Tensor& x, const std::vector<std::size_t>& y, const std::vector<std::size_t>& idx) {
  LabeledSet s;
  if (idx.empty()) return s;
  numcore::NoTapeScope no_tape;
  s.x = numcore::gather_rows(x, idx);
  for (auto i : idx) s.y.push_back(y[i]);
  return s;
}

}  // namespace heterformer::eval
