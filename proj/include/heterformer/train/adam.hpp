#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "heterformer/model/params.hpp"

namespace heterformer::train {

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-3;
};

/// First and second moments per parameter, keyed by position in the
/// parameter list the optimizer was built for.
struct OptimizerState {
  std::vector<std::string> names;
  std::vector<std::vector<double>> m, v;
  std::uint64_t step = 0;

  static OptimizerState for_parameters(const std::vector<model::NamedParameter>& params) {
    OptimizerState s;
    for (const auto& p : params) {
      s.names.push_back(p.name);
      s.m.emplace_back(p.tensor.size(), 0.0);
      s.v.emplace_back(p.tensor.size(), 0.0);
    }
    return s;
  }
};

/// One AdamW update with bias correction. Weight decay is decoupled and
/// skipped for parameters flagged without it. Parameters that received no
/// gradient this step are still decayed and their moments still advance.
inline void adam_step(std::vector<model::NamedParameter>& params, OptimizerState& state, const AdamConfig& cfg) {
  if (state.names.size() != params.size()) {
    throw ContractError("adam_step: optimizer state tracks " + std::to_string(state.names.size()) +
                        " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.names[i] != params[i].name || state.m[i].size() != params[i].tensor.size()) {
      throw ContractError("adam_step: optimizer state does not match parameter '" + params[i].name + "'");
    }
    for (double g : params[i].tensor.grad_view()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter '" + params[i].name + "'");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    auto w = p.tensor.mutable_data();
    const auto g = p.tensor.grad_view();
    auto& m = state.m[i];
    auto& v = state.v[i];
    const double decay = p.weight_decay ? cfg.lr * cfg.weight_decay : 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = g.empty() ? 0.0 : g[j];
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * gj;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * gj * gj;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      w[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps) + decay * w[j];
    }
  }
}

}  // namespace heterformer::train
