#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "heterformer/numcore/ops.hpp"

namespace heterformer::numcore {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  bool pass = false;
};

struct GradCheckOptions {
  double h = 1e-5;
  double tol = 1e-4;
  // Differences below this are treated as agreement; relative error is
  // meaningless when both sides are at round-off level.
  double abs_floor = 1e-8;
  // 0 checks every coordinate, otherwise a seeded random subset of this size.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

/// Compares the tape gradient of the scalar f() with respect to `x` against
/// central differences. `f` must read `x` through its handle so that in-place
/// perturbations are seen.
inline GradCheckReport grad_check(const std::function<Tensor()>& f, Tensor x, const GradCheckOptions& opt = {}) {
  const bool was_tracked = x.tracked();
  x.set_tracked(true);
  x.zero_grad();
  {
    Tape tape;
    Tensor loss;
    {
      TapeScope scope(tape);
      loss = f();
    }
    if (!std::isfinite(loss.item())) throw NumericError("grad_check: f(x) is not finite");
    tape.backward(loss);
  }
  const std::vector<double> analytic = x.grad();
  x.zero_grad();
  x.set_tracked(was_tracked);

  std::vector<std::size_t> coords(x.size());
  for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  if (opt.max_coords != 0 && opt.max_coords < coords.size()) {
    std::mt19937_64 rng(opt.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(opt.max_coords);
    std::sort(coords.begin(), coords.end());
  }

  GradCheckReport report;
  NoTapeScope no_tape;
  auto values = x.mutable_data();
  for (std::size_t i : coords) {
    const double saved = values[i];
    values[i] = saved + opt.h;
    const double up = f().item();
    values[i] = saved - opt.h;
    const double down = f().item();
    values[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("grad_check: non-finite f value while perturbing coordinate " + std::to_string(i));
    }
    const double numeric = (up - down) / (2.0 * opt.h);
    const double diff = std::abs(numeric - analytic[i]);
    double rel = 0.0;
    if (diff > opt.abs_floor) rel = diff / std::max(std::abs(numeric), std::abs(analytic[i]));
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_index = i;
    }
    ++report.checked;
  }
  report.pass = report.max_rel_err < opt.tol;
  return report;
}

/// Single-argument form: f receives x.
inline GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double h, double tol) {
  GradCheckOptions opt;
  opt.h = h;
  opt.tol = tol;
  return grad_check([&f, x]() { return f(x); }, x, opt);
}

}  // namespace heterformer::numcore
