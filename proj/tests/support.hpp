#pragma once

// Independent oracles shared by the unit and acceptance tests. Nothing here
// calls into the jet code: derivatives come from central differences of
// plain forward evaluations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dhpm/network.hpp"

namespace dhpm::testing {

inline double central_first(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double central_second(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

/// |a - b| relative to max(|a|, |b|, floor).
inline double rel_diff(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Random MLP with `in` inputs, 1..3 hidden layers of width <= max_width,
/// and parameters scaled so tanh units are neither saturated nor linear.
inline NetworkParams random_mlp(std::mt19937_64& rng, Index in, Index max_width) {
  std::uniform_int_distribution<int> layers(1, 3);
  std::uniform_int_distribution<Index> width(2, max_width);
  std::vector<Index> sizes{in};
  const int n = layers(rng);
  for (int i = 0; i < n; ++i) sizes.push_back(width(rng));
  sizes.push_back(1);
  NetworkParams p = init_glorot(sizes, rng());
  std::normal_distribution<double> noise(0.0, 0.1);
  for (auto& b : p.biases) {
    for (Index i = 0; i < b.size(); ++i) b(i) = noise(rng);
  }
  return p;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("dhpm_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

}  // namespace dhpm::testing
