#pragma once

// Central finite differences against Tape::backward().

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "graphaug/autodiff.hpp"

namespace gradcheck {

using graphaug::DenseMatrix;
namespace ad = graphaug::ad;

/// Builds a scalar loss from parameter leaves, one per input.
using Builder = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

struct Report {
  double max_relative = 0.0;  ///< over entries whose magnitude exceeds the floor
  double max_absolute = 0.0;
  std::size_t checked = 0;
  bool ok(double rel = 1e-4) const { return max_relative < rel; }
};

inline double evaluate(const std::vector<DenseMatrix>& inputs, const Builder& f) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& m : inputs) vars.push_back(tape.parameter(m));
  return f(tape, vars).value().item();
}

inline Report check(std::vector<DenseMatrix> inputs, const Builder& f, double step = 1e-5,
                    double magnitude_floor = 1e-6) {
  std::vector<DenseMatrix> analytic;
  {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& m : inputs) vars.push_back(tape.parameter(m));
    const auto grads = tape.backward(f(tape, vars));
    for (const auto& v : vars) analytic.push_back(grads[v]);
  }
  Report r;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t k = 0; k < inputs[i].size(); ++k) {
      const double x = inputs[i].values()[k];
      inputs[i].values()[k] = x + step;
      const double up = evaluate(inputs, f);
      inputs[i].values()[k] = x - step;
      const double down = evaluate(inputs, f);
      inputs[i].values()[k] = x;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[i].values()[k];
      const double diff = std::abs(a - numeric);
      r.max_absolute = std::max(r.max_absolute, diff);
      const double scale = std::max(std::abs(a), std::abs(numeric));
      if (scale > magnitude_floor) r.max_relative = std::max(r.max_relative, diff / scale);
      ++r.checked;
    }
  }
  return r;
}

inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                                 double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

}  // namespace gradcheck
