#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "heterformer/numcore/ops.hpp"
#include "heterformer/numcore/random.hpp"

namespace heterformer::testing {

using numcore::Tensor;

inline Tensor random_tensor(numcore::Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.mutable_data()) v = u(rng);
  return t;
}

inline Tensor tracked(Tensor t) {
  t.set_tracked(true);
  return t;
}

/// Fresh empty directory under the system temp dir.
inline std::string scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("heterformer_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace heterformer::testing
